import pytest
from hypothesis import given, strategies as st

from hmtsinr.config import ExperimentConfig, load_config, parse_config
from hmtsinr.errors import ConfigError
from hmtsinr import figures


def test_defaults_round_trip():
    cfg = ExperimentConfig()
    assert parse_config(cfg.to_text()) == cfg


@given(st.integers(0, 2**64 - 1), st.integers(1, 10**6), st.sampled_from(["paper", "physical"]),
       st.lists(st.floats(0.01, 0.99), min_size=1, max_size=5))
def test_round_trip_arbitrary(seed, trials, mode, thetas):
    cfg = (ExperimentConfig().updated("simulation", seed=seed, trials=trials, mode=mode)
           .updated("fig5", thetas=tuple(thetas)))
    assert parse_config(cfg.to_text()) == cfg


def test_partial_config_keeps_defaults():
    cfg = parse_config("[simulation]\ntrials = 12\n; comment\n# another\n")
    assert cfg.simulation.trials == 12
    assert cfg.system == ExperimentConfig().system


@pytest.mark.parametrize("text, line, fragment", [
    ("[simulation]\ntrials = 5\n\n[bogus]\n", 4, "unknown section"),
    ("[simulation]\nnoise = 3\n", 2, "unknown key"),
    ("[simulation]\ntrials = 5\ntrials = 6\n", 3, "duplicate key"),
    ("[simulation]\ntrials = many\n", 2, "trials"),
    ("[simulation]\nmode = loud\n", 2, "must be one of"),
    ("[channel]\nsplit = diagonal\n", 2, "must be one of"),
    ("trials = 5\n", 1, "outside"),
    ("[simulation\n", 1, "malformed"),
    ("[simulation]\ntrials\n", 2, "key = value"),
    ("[simulation]\nexclude_coset2_origin = maybe\n", 2, "boolean"),
])
def test_errors_carry_line_numbers(text, line, fragment):
    with pytest.raises(ConfigError) as info:
        parse_config(text, "exp.ini")
    assert info.value.line == line
    assert fragment in str(info.value)
    assert f"exp.ini:{line}:" in str(info.value)


@pytest.mark.parametrize("text", [
    "[simulation]\ntrials = 0\n",
    "[simulation]\nseed = -1\n",
    "[fig5]\nthetas = 0.1, 1.2\n",
    "[channel]\ntau_max_ratio = 2\n",
    "[system]\nT = -1\n",
    "[channel]\nsplit = fixed_delay\n",
])
def test_semantic_validation(text):
    with pytest.raises(ConfigError):
        parse_config(text)


def test_load_config_missing_file(tmp_path):
    with pytest.raises(ConfigError, match="cannot read"):
        load_config(tmp_path / "nope.ini")


def test_csv_header_is_a_config():
    cfg = ExperimentConfig().updated("simulation", trials=50, seed=9, workers=3)
    text = figures.to_csv(cfg, figures.run_fig2(cfg))
    back = parse_config(text)
    assert back.simulation.seed == 9 and back.simulation.trials == 50
    assert back.run.figure == "fig2"
    # runtime-only settings stay out of the header
    assert "workers" not in text
    assert back.simulation.workers == 1


def test_auto_sigma():
    lat = ExperimentConfig().system.lattice
    assert lat.sigma == pytest.approx(1e-4 / (3 ** 0.5 * 25e3))
    assert parse_config("[system]\nsigma = 2e-9\n").system.lattice.sigma == 2e-9
