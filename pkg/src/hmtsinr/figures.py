"""Figure reproductions as tables, plus CSV rendering with a self-describing header."""

from __future__ import annotations

import io
import math
from dataclasses import dataclass, field, replace

import numpy as np

from . import analysis
from .config import ExperimentConfig
from .montecarlo import TrialConfig, report_from_energies, resolve_dt, sweep, trial_energies
from .pulse import eval_pulse

# Flags that only annotate a row; anything else counts as a numerical failure.
INFO_FLAGS = frozenset({"dt_fallback"})


@dataclass
class Table:
    figure: str
    columns: list
    rows: list = field(default_factory=list)
    notes: list = field(default_factory=list)

    def column(self, name):
        i = self.columns.index(name)
        return [r[i] for r in self.rows]

    @property
    def failures(self) -> list:
        if "status" not in self.columns:
            return []
        out = []
        for s in self.column("status"):
            if s != "ok":
                out.extend(f for f in s.split(";") if f.split(":")[0] not in INFO_FLAGS)
        return out


def theta_tag(theta: float) -> str:
    return f"{theta:.2f}".replace(".", "p")


def ratio_tag(r: float) -> str:
    return f"{r:.2f}".replace(".", "p")


def _status(*flag_sets) -> str:
    flags = []
    for fs in flag_sets:
        for f in fs:
            if f not in flags:
                flags.append(f)
    return ";".join(flags) if flags else "ok"


def _trial_config(cfg: ExperimentConfig, scattering, snr_db: float = 20.0) -> TrialConfig:
    sim = cfg.simulation
    base = TrialConfig(
        params=cfg.system.lattice, scattering=scattering, sigma_c2=sim.sigma_c2,
        path_count=cfg.channel.path_count, trials=sim.trials, master_seed=sim.seed,
        window=(sim.window_m, sim.window_n), mode=sim.mode,
        exclude_coset2_origin=sim.exclude_coset2_origin, eq26=sim.eq26, workers=sim.workers)
    return base.with_snr(snr_db)


def _scattering(cfg: ExperimentConfig, theta: float):
    lat = cfg.system.lattice
    return cfg.channel.csf_split(lat).scattering(theta, lat.sigma)


def _other_mode(mode: str) -> str:
    return "paper" if mode == "physical" else "physical"


def header_notes(cfg: ExperimentConfig) -> list:
    ch, sim = cfg.channel, cfg.simulation
    split_desc = {
        "fixed_doppler": f"f_d fixed at {ch.f_d!r} Hz, tau_rms = vartheta / ({ch.tau_max_ratio!r} f_d)",
        "fixed_delay": f"tau_rms fixed at {ch.tau_rms!r} s, f_d = vartheta / ({ch.tau_max_ratio!r} tau_rms)",
        "matched": "tau_rms and f_d chosen so that sigma = alpha tau_rms / f_d",
    }[ch.split]
    return [
        f"assumption: tau_max = {ch.tau_max_ratio!r} x tau_rms; channel spread factor vartheta = tau_max * f_d",
        f"assumption: vartheta split: {ch.split} ({split_desc})",
        f"flags: mode={sim.mode} eq26={sim.eq26} exclude_coset2_origin={str(sim.exclude_coset2_origin).lower()}",
        f"seed: {sim.seed}",
    ]


# ---------------------------------------------------------------------------
# figures
# ---------------------------------------------------------------------------

def run_fig2(cfg: ExperimentConfig) -> Table:
    """Receiver prototype pulses: TPR g(t) and Max-SINR g(t - dt) per spread factor."""
    sysc = cfg.system
    lat = sysc.lattice
    t = (np.arange(sysc.pulse_length) - sysc.pulse_length // 2) * sysc.sample_interval
    cols = ["t_s", "tpr_pulse"]
    data = [t, eval_pulse(lat.pulse, t)]
    notes = []
    for theta in cfg.fig2.thetas:
        sc = _scattering(cfg, theta)
        sol = analysis.closed_form_dt(lat.sigma, sc.tau_rms, cfg.simulation.eq26)
        cols.append(f"maxsinr_pulse_theta_{theta_tag(theta)}")
        data.append(eval_pulse(lat.pulse, t - sol.dt))
        notes.append(f"dt[vartheta={theta!r}] = {float(sol.dt)!r} s ({sol.method}); tau_rms = {float(sc.tau_rms)!r} s")
    rows = [list(r) for r in zip(*data)]
    return Table("fig2", cols, rows, notes)


def run_fig3(cfg: ExperimentConfig) -> Table:
    """SINR versus SNR for TPR, Max-SINR and the upper bound at each spread factor."""
    mode = cfg.simulation.mode
    alt = _other_mode(mode)
    cols = ["vartheta", "snr_db", "tpr_theory_db", "maxsinr_theory_db", "ub_db",
            "tpr_emp_db", "maxsinr_emp_db", "ci_db",
            f"tpr_theory_{alt}_db", f"maxsinr_theory_{alt}_db", f"ub_{alt}_db",
            "dt_maxsinr_s", "dt_ub_s", "status"]
    table = Table("fig3", cols)
    for theta in cfg.fig3.thetas:
        sc = _scattering(cfg, theta)
        base = _trial_config(cfg, sc)
        dt_m, flags_m = resolve_dt(replace(base, dt_mode="maxsinr"))
        S, I = trial_energies(base, [0.0, dt_m])
        kw = base.theory_kwargs()
        for snr in cfg.fig3.snr_db:
            tc = base.with_snr(snr)
            ub = analysis.sinr_upper_bound(tc.operating_point(), mode, **kw)
            ub_alt = analysis.sinr_upper_bound(tc.operating_point(), alt, **kw)
            r_t = report_from_energies(tc, 0.0, S[0], I[0], (), ub.sinr_db)
            r_m = report_from_energies(tc, dt_m, S[1], I[1], flags_m, ub.sinr_db)
            t_alt = analysis.theoretical_sinr(tc.operating_point(0.0), alt, **kw).sinr_db
            m_alt = analysis.theoretical_sinr(tc.operating_point(dt_m), alt, **kw).sinr_db
            table.rows.append([
                theta, snr, r_t.theoretical_sinr_db, r_m.theoretical_sinr_db, ub.sinr_db,
                r_t.empirical_sinr_db, r_m.empirical_sinr_db, max(r_t.ci_halfwidth_db, r_m.ci_halfwidth_db),
                t_alt, m_alt, ub_alt.sinr_db, dt_m, ub.dt_star, _status(flags_m, ub.flags, ub_alt.flags)])
    return table


def run_fig4(cfg: ExperimentConfig) -> Table:
    """Max-SINR receiver with a mis-estimated tau_rms, one column per estimate ratio."""
    f4 = cfg.fig4
    sc = _scattering(cfg, f4.theta)
    base = _trial_config(cfg, sc)
    dts, flags = [], []
    for r in f4.ratios:
        dt, fl = resolve_dt(replace(base, dt_mode="maxsinr", rms_error_ratio=r))
        dts.append(dt)
        flags.append(fl)
    S, I = trial_energies(base, dts)
    cols = ["vartheta", "snr_db"]
    cols += [f"ratio_{ratio_tag(r)}_db" for r in f4.ratios]
    cols += [f"ratio_{ratio_tag(r)}_emp_db" for r in f4.ratios]
    cols += ["ci_db", "status"]
    table = Table("fig4", cols, notes=[f"dt[ratio={r!r}] = {float(d)!r} s" for r, d in zip(f4.ratios, dts)])
    for snr in f4.snr_db:
        tc = base.with_snr(snr)
        reps = [report_from_energies(tc, d, S[k], I[k], flags[k], float("nan")) for k, d in enumerate(dts)]
        table.rows.append([f4.theta, snr] + [r.theoretical_sinr_db for r in reps]
                          + [r.empirical_sinr_db for r in reps]
                          + [max(r.ci_halfwidth_db for r in reps), _status(*flags)])
    return table


def run_fig5(cfg: ExperimentConfig) -> Table:
    """SINR versus channel spread factor at a fixed SNR."""
    snr = cfg.fig5.snr_db
    mode = cfg.simulation.mode
    cols = ["vartheta", "tpr_db", "maxsinr_db", "ub_db", "tpr_emp_db", "maxsinr_emp_db", "ci_db",
            "gap_db", "dt_maxsinr_s", "dt_ub_s", "tau_rms_s", "f_d_hz", "status"]
    table = Table("fig5", cols)
    for theta in cfg.fig5.thetas:
        sc = _scattering(cfg, theta)
        tc = _trial_config(cfg, sc, snr)
        dt_m, flags_m = resolve_dt(replace(tc, dt_mode="maxsinr"))
        ub = analysis.sinr_upper_bound(tc.operating_point(), mode, **tc.theory_kwargs())
        S, I = trial_energies(tc, [0.0, dt_m])
        r_t = report_from_energies(tc, 0.0, S[0], I[0], (), ub.sinr_db)
        r_m = report_from_energies(tc, dt_m, S[1], I[1], flags_m, ub.sinr_db)
        table.rows.append([theta, r_t.theoretical_sinr_db, r_m.theoretical_sinr_db, ub.sinr_db,
                           r_t.empirical_sinr_db, r_m.empirical_sinr_db,
                           max(r_t.ci_halfwidth_db, r_m.ci_halfwidth_db),
                           r_m.theoretical_sinr_db - r_t.theoretical_sinr_db, dt_m, ub.dt_star,
                           sc.tau_rms, sc.f_d, _status(flags_m, ub.flags)])
    return table


def run_sweep(cfg: ExperimentConfig) -> Table:
    sw = cfg.sweep
    lat = cfg.system.lattice
    split = cfg.channel.csf_split(lat)
    template = _trial_config(cfg, split.scattering(sw.theta, lat.sigma), sw.snr_db)
    rows = sweep(template, sw.axis, sw.values, sw.receivers, split)
    cols = [sw.axis, "receiver", "empirical_db", "theory_db", "ub_db", "ci_db", "dt_s", "trials", "status"]
    table = Table("sweep", cols)
    for value, rx, rep in rows:
        table.rows.append([value, rx, rep.empirical_sinr_db, rep.theoretical_sinr_db, rep.upper_bound_db,
                           rep.ci_halfwidth_db, rep.dt_used, rep.trials,
                           _status(f.replace(",", " ") for f in rep.flags)])
    return table


FIGURES = {"fig2": run_fig2, "fig3": run_fig3, "fig4": run_fig4, "fig5": run_fig5, "sweep": run_sweep}


# ---------------------------------------------------------------------------
# CSV
# ---------------------------------------------------------------------------

def _cell(v) -> str:
    if isinstance(v, str):
        return v
    if isinstance(v, (int, np.integer)) and not isinstance(v, bool):
        return str(int(v))
    v = float(v)
    if math.isnan(v):
        return "nan"
    return f"{v:.12g}"


def to_csv(cfg: ExperimentConfig, table: Table) -> str:
    cfg = cfg.updated("run", figure=table.figure)
    buf = io.StringIO()
    buf.write(f"## hmtsinr {table.figure}\n")
    for note in header_notes(cfg) + table.notes:
        buf.write(f"## {note}\n")
    for line in cfg.to_text(include_runtime=False).splitlines():
        buf.write(f"# {line}\n")
    buf.write(",".join(table.columns) + "\n")
    for row in table.rows:
        buf.write(",".join(_cell(v) for v in row) + "\n")
    return buf.getvalue()


def read_csv_table(text: str) -> tuple[list, list]:
    """Columns and rows (as strings) of a CSV written by ``to_csv``."""
    lines = [ln for ln in text.splitlines() if not ln.startswith("#")]
    cols = lines[0].split(",")
    return cols, [ln.split(",") for ln in lines[1:]]
