"""The acceptance criteria behind the `verify` subcommand.

Each criterion is evaluated against the reference scenario (cosine data with
amplitudes 0.1, unit constants, N = 256, dt = 1e-4, t_end = 50) and its
refinements, all derived from the reference config. Tolerances are fixed
here; observed extrema and moment suprema are additionally compared against
regression pins (pins.json) within +-5% when the pins file is present.

Refinement-ratio checks (energy-drift halving, budget-defect decrease) are
measured on the [0, 10] window, where both quantities have saturated, so the
comparison runs stay affordable; the absolute envelopes are checked on the
full run.

Criterion 5 is expected to report FAIL in double precision: the reference
scenario decays at rate ~1.0 per unit time, so by t = 14 the H1 deviation
has fallen onto its numerical floor (the backward-Euler energy-drift offset,
~6e-6; with a drift-corrected reference, the accumulated roundoff texture of
the volume field, ~3e-11) and the fit window [25, 50] contains no decaying
signal at all. The rate and r^2 thresholds are evaluated faithfully anyway;
the decay itself is demonstrated on the resolvable window by the
trajectory-level tests (about twelve clean orders of magnitude).
"""

from __future__ import annotations

import json
import tempfile
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from importlib import resources
from pathlib import Path

import numpy as np

from . import analysis, cli, solver
from .core import InitialSpec, build_grid, make_initial_data
from .errors import InsufficientDataError

MASS_TOL = 1e-11
ENERGY_TOL = 1e-4
BUDGET_TOL = 5e-3
CORRIDOR_TOL = 0.01
BOUND_LO = 0.2
BOUND_HI = 5.0
PIN_REL = 0.05
DECAY_WINDOW = (25.0, 50.0)
R2_MIN = 0.99
RATE_STABILITY = 0.10
REPR_TOL = 1e-3
REPR_RATIO_MIN = 3.5
LOG_Y_TOL = 0.01
MMS_ORDER_MIN = 1.9
MMS_LEVELS = (64, 128, 256)
MOMENT_ENVELOPE = 10.0
FIRST_ORDER_RATIO_MIN = 1.6
RATIO_WINDOW_END = 10.0
SWEEP_BETAS = (0.5, 1.5, 2.5)


@dataclass
class CriterionResult:
    number: int
    name: str
    passed: bool
    detail: str


def _reduce(traj: solver.Trajectory) -> dict:
    recs = traj.records
    out = {
        "t": np.array([r.t for r in recs]),
        "mass": np.array([r.mass for r in recs]),
        "energy": np.array([r.total_energy for r in recs]),
        "entropy": np.array([r.entropy_E for r in recs]),
        "int_v": np.array([r.int_V_dt for r in recs]),
        "mean_theta": np.array([r.mean_theta for r in recs]),
        "min_v": np.array([r.min_v for r in recs]),
        "max_v": np.array([r.max_v for r in recs]),
        "min_theta": np.array([r.min_theta for r in recs]),
        "max_theta": np.array([r.max_theta for r in recs]),
        "h1": np.array([r.h1_dev for r in recs]),
        "repr": np.array(traj.repr_errors),
        "log_y": np.array(traj.log_damping),
        "lp": {q: np.array([r.lp_moments[q] for r in recs])
               for q in recs[0].lp_moments},
    }
    return out


def _acceptance_worker(args):
    tag, cfg_text, out_dir = args
    cfg = cli.parse_config(cfg_text)
    if out_dir is not None:
        _, traj = cli._run_with_outputs(cfg, out_dir)
    else:
        traj, _, _ = cli._execute(cfg)
    return tag, _reduce(traj)


def _budget_defect(run: dict, t_max: float | None = None) -> float:
    q = run["entropy"] + run["int_v"]
    mask = np.ones(len(q), dtype=bool) if t_max is None else run["t"] <= t_max + 1e-9
    return float(np.max(np.abs(q[mask] - q[0])))


def _pin_ok(observed: float, pin: float) -> bool:
    lo, hi = sorted((pin * (1.0 - PIN_REL), pin * (1.0 + PIN_REL)))
    return lo <= observed <= hi


def _load_reference(config_dir):
    if config_dir is None:
        base = resources.files("lagrangas").joinpath("configs")
        cfg_text = base.joinpath("reference.cfg").read_text(encoding="utf-8")
        pins_file = base.joinpath("pins.json")
        pins = json.loads(pins_file.read_text(encoding="utf-8")) if pins_file.is_file() else None
        return cfg_text, pins
    base = Path(config_dir)
    ref = base / "reference.cfg"
    if not ref.is_file():
        raise FileNotFoundError(f"reference config not found: {ref}")
    pins_path = base / "pins.json"
    pins = json.loads(pins_path.read_text(encoding="utf-8")) if pins_path.is_file() else None
    return ref.read_text(encoding="utf-8"), pins


def run_acceptance(config_dir=None, out_dir=None, workers=None, echo=print):
    """Run every criterion; echo one pass/fail line each; return the results.

    Returns (results, observed): the per-criterion outcomes and the observed
    values that regression pins are generated from.
    """
    cfg_text, pins = _load_reference(config_dir)
    cfg = cli.parse_config(cfg_text)
    out = Path(out_dir) if out_dir is not None else Path(tempfile.mkdtemp(prefix="lagrangas-verify-"))
    out.mkdir(parents=True, exist_ok=True)

    def variant(**changes):
        params = changes.pop("params", cfg.params)
        return replace(cfg, params=params, **changes)

    jobs = [
        ("ref", cli.serialize_config(cfg), str(out / "ref")),
        ("rerun", cli.serialize_config(cfg), str(out / "rerun")),
        ("dt_half", cli.serialize_config(variant(dt=cfg.dt / 2, t_end=RATIO_WINDOW_END)), None),
        ("n512", cli.serialize_config(variant(n_cells=2 * cfg.n_cells)), None),
        ("refined", cli.serialize_config(variant(n_cells=2 * cfg.n_cells, dt=cfg.dt / 2,
                                                 t_end=RATIO_WINDOW_END)), None),
        ("repr512", cli.serialize_config(variant(n_cells=2 * cfg.n_cells, dt=cfg.dt / 4,
                                                 t_end=1.0)), None),
    ]
    for beta in SWEEP_BETAS:
        jobs.append((f"beta_{beta:g}",
                     cli.serialize_config(variant(params=replace(cfg.params, beta=beta))),
                     None))

    if workers is None:
        import os
        workers = min(2, os.cpu_count() or 1)
    runs = {}
    if workers > 1:
        try:
            with ProcessPoolExecutor(max_workers=workers) as pool:
                for tag, reduced in pool.map(_acceptance_worker, jobs):
                    runs[tag] = reduced
        except (OSError, RuntimeError):
            runs = {}
    if not runs:
        for job in jobs:
            tag, reduced = _acceptance_worker(job)
            runs[tag] = reduced

    mms_errors = {n: cli.mms_error(cfg, n) for n in MMS_LEVELS}

    results = []
    observed = {"bounds": {}, "lp_sup": {}}

    def add(number, name, passed, detail):
        result = CriterionResult(number, name, bool(passed), detail)
        results.append(result)
        echo(f"{'PASS' if result.passed else 'FAIL'} {number:>2} {name}: {detail}")

    ref = runs["ref"]

    # 1: conservation of mass exactly, of total energy at first order in dt
    mass_dev = float(np.max(np.abs(ref["mass"] - 1.0)))
    energy_dev = float(np.max(np.abs(ref["energy"] - 1.0)))
    win = ref["t"] <= RATIO_WINDOW_END + 1e-9
    energy_dev_10 = float(np.max(np.abs(ref["energy"][win] - 1.0)))
    energy_dev_half = float(np.max(np.abs(runs["dt_half"]["energy"] - 1.0)))
    ratio = energy_dev_10 / max(energy_dev_half, 1e-300)
    add(1, "conservation", mass_dev <= MASS_TOL and energy_dev <= ENERGY_TOL
        and ratio >= FIRST_ORDER_RATIO_MIN,
        f"|mass-1| {mass_dev:.2e} (tol {MASS_TOL}), |energy-1| {energy_dev:.2e} "
        f"(tol {ENERGY_TOL}), drift ratio under dt/2 {ratio:.2f} "
        f"(>= {FIRST_ORDER_RATIO_MIN})")

    # 2: entropy budget defect small, nonincreasing, and refining at >= first order
    defect = _budget_defect(ref)
    q = ref["entropy"] + ref["int_v"]
    max_increment = float(np.max(np.diff(q), initial=0.0))
    defect_10 = _budget_defect(ref, RATIO_WINDOW_END)
    defect_fine = _budget_defect(runs["refined"])
    ratio2 = defect_10 / max(defect_fine, 1e-300)
    add(2, "entropy budget", defect <= BUDGET_TOL and max_increment <= BUDGET_TOL
        and ratio2 >= FIRST_ORDER_RATIO_MIN,
        f"sup defect {defect:.2e} (tol {BUDGET_TOL}), max increment "
        f"{max_increment:.2e}, refinement ratio {ratio2:.2f} "
        f"(>= {FIRST_ORDER_RATIO_MIN})")

    # 3: mean temperature stays in the corridor [alpha1 - tol, 1 + tol]
    e0 = float(ref["entropy"][0])
    alpha1, _ = analysis.entropy_roots(e0)
    th_lo = float(np.min(ref["mean_theta"]))
    th_hi = float(np.max(ref["mean_theta"]))
    add(3, "mean-temperature corridor",
        th_lo >= alpha1 - CORRIDOR_TOL and th_hi <= 1.0 + CORRIDOR_TOL,
        f"mean theta in [{th_lo:.4f}, {th_hi:.4f}], corridor "
        f"[{alpha1 - CORRIDOR_TOL:.4f}, {1.0 + CORRIDOR_TOL:.4f}] (E0 {e0:.4f})")

    # 4: uniform bounds on v and theta over the reference run and the beta sweep
    ok4 = True
    details4 = []
    for tag, beta in [("ref", 1.0)] + [(f"beta_{b:g}", b) for b in SWEEP_BETAS]:
        run = runs[tag]
        b = {"inf_v": float(np.min(run["min_v"])), "sup_v": float(np.max(run["max_v"])),
             "inf_theta": float(np.min(run["min_theta"])),
             "sup_theta": float(np.max(run["max_theta"]))}
        observed["bounds"][f"{beta:g}"] = b
        ok4 &= (b["inf_v"] >= BOUND_LO and b["inf_theta"] >= BOUND_LO
                and b["sup_v"] <= BOUND_HI and b["sup_theta"] <= BOUND_HI)
        if pins is not None:
            pinned = pins["bounds"][f"{beta:g}"]
            ok4 &= all(_pin_ok(b[k], pinned[k]) for k in b)
        details4.append(f"beta {beta:g}: v [{b['inf_v']:.3f},{b['sup_v']:.3f}] "
                        f"theta [{b['inf_theta']:.3f},{b['sup_theta']:.3f}]")
    pin_note = "pins +-5%" if pins is not None else "no pins file"
    add(4, "uniform bounds", ok4,
        f"envelope [{BOUND_LO}, {BOUND_HI}], {pin_note}; " + "; ".join(details4))

    # 5: exponential decay of the H1 deviation, grid-stable rate
    in_window = (ref["t"] >= DECAY_WINDOW[0]) & (ref["t"] <= DECAY_WINDOW[1])
    h1_window = ref["h1"][in_window]
    try:
        fit = analysis.fit_decay_rate(ref["t"], ref["h1"], DECAY_WINDOW)
        fit512 = analysis.fit_decay_rate(runs["n512"]["t"], runs["n512"]["h1"],
                                         DECAY_WINDOW)
        rate_shift = abs(fit512.rate - fit.rate) / fit.rate
        observed["eta0"] = fit.rate
        observed["eta0_n512"] = fit512.rate
        detail5 = (f"rate {fit.rate:.4f}, r^2 {fit.r_squared:.5f} (>= {R2_MIN}), "
                   f"rate at 2N {fit512.rate:.4f} (shift {100 * rate_shift:.1f}% "
                   f"<= {100 * RATE_STABILITY:.0f}%)")
        ok5 = (fit.rate > 0.0 and fit.r_squared >= R2_MIN
               and rate_shift <= RATE_STABILITY)
    except InsufficientDataError as exc:
        detail5 = f"fit impossible: {exc}"
        ok5 = False
    add(5, "exponential stability", ok5,
        detail5 + f"; h1 spans [{h1_window.min():.2e}, {h1_window.max():.2e}] "
        f"in the window")

    # 6: volume reconstruction accuracy on [0, 1] and second-order refinement
    early = (ref["t"] > 0.0) & (ref["t"] <= 1.0 + 1e-9)
    repr_ref = float(np.max(ref["repr"][early]))
    r512 = runs["repr512"]
    early512 = (r512["t"] > 0.0) & (r512["t"] <= 1.0 + 1e-9)
    repr_fine = float(np.max(r512["repr"][early512]))
    ratio6 = repr_ref / max(repr_fine, 1e-300)
    observed["repr_err_t1"] = repr_ref
    add(6, "volume reconstruction", repr_ref <= REPR_TOL and ratio6 >= REPR_RATIO_MIN,
        f"max rel err {repr_ref:.2e} (tol {REPR_TOL}), refinement ratio "
        f"{ratio6:.2f} (>= {REPR_RATIO_MIN})")

    # 7: damping factor stays between exp(-2t) and exp(-t) on normalized runs
    t_pos = ref["t"] > 0.0
    t7 = ref["t"][t_pos]
    ly = ref["log_y"][t_pos]
    lower_ok = np.all(ly >= -2.0 * t7 - LOG_Y_TOL)
    upper_ok = np.all(ly <= -t7 + LOG_Y_TOL * t7)
    margin_lo = float(np.min(ly + 2.0 * t7)) if len(t7) else 0.0
    margin_hi = float(np.min(-t7 + LOG_Y_TOL * t7 - ly)) if len(t7) else 0.0
    add(7, "damping-factor bounds", bool(lower_ok and upper_ok),
        f"log Y within [-2t - {LOG_Y_TOL}, -t + {LOG_Y_TOL}t]; "
        f"margins {margin_lo:.3f} / {margin_hi:.3f}")

    # 8: forced-problem spatial order, and an exactly stationary equilibrium
    orders = {}
    for i, field_name in enumerate(("v", "u", "theta")):
        pairs = [(1.0 / n, mms_errors[n][i]) for n in MMS_LEVELS]
        orders[field_name] = analysis.convergence_order(pairs)
    grid_eq = build_grid(64)
    eq = make_initial_data(InitialSpec(kind="equilibrium"), grid_eq, c_v=cfg.params.c_v)
    td = solver.spatial_rhs(eq, cfg.params, grid_eq)
    eq_resid = max(float(np.max(np.abs(td.dv))), float(np.max(np.abs(td.du))),
                   float(np.max(np.abs(td.dtheta))))
    add(8, "forced-problem convergence",
        all(o >= MMS_ORDER_MIN for o in orders.values()) and eq_resid == 0.0,
        f"orders v {orders['v']:.2f}, u {orders['u']:.2f}, theta "
        f"{orders['theta']:.2f} (>= {MMS_ORDER_MIN}); equilibrium residual {eq_resid}")

    # 9: inverse-temperature moments stay bounded
    ok9 = True
    parts9 = []
    for q_exp, series in sorted(ref["lp"].items()):
        sup = float(np.max(series))
        observed["lp_sup"][f"{q_exp:g}"] = sup
        ok9 &= sup <= MOMENT_ENVELOPE
        if pins is not None:
            ok9 &= _pin_ok(sup, pins["lp_sup"][f"{q_exp:g}"])
        parts9.append(f"p={q_exp:g}: {sup:.4f}")
    add(9, "moment boundedness", ok9,
        f"sup of theta^(1-p) totals (envelope {MOMENT_ENVELOPE}, {pin_note}): "
        + ", ".join(parts9))

    # 10: byte-identical time series for identical config and seed
    csv_a = (out / "ref" / "timeseries.csv").read_bytes()
    csv_b = (out / "rerun" / "timeseries.csv").read_bytes()
    add(10, "determinism", csv_a == csv_b,
        f"timeseries.csv {'identical' if csv_a == csv_b else 'differs'} "
        f"across reruns ({len(csv_a)} bytes)")

    return results, observed
