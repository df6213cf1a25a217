"""Verification checks run against the trajectories of a scenario.

Every check takes the scenario, the list of runs (one per initial condition)
and its options from the scenario file, and returns a :class:`CheckResult`
with verdict ``pass``, ``fail`` or ``insufficient-coverage``.  A run with
fewer than two samples makes every check ``insufficient-coverage``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Callable

import numpy as np
from scipy import signal as sps

from densitylab.adaptive import filter_matrix_hurwitz
from densitylab.analysis import (FAIL, INSUFFICIENT, PASS, LyapunovForm, RegionSpec, attraction_metric,
                                 classify_density, distance_to_circle, distance_to_signal,
                                 vdot_bound_check)
from densitylab.density import rho_many, singular_distance_many
from densitylab.dyncore.trajectory import COMPLETED
from densitylab.errors import ConfigError

#: stop reasons that mean the run touched a singular or forbidden set
BARRIER_STOPS = ("forbidden-entry", "singular-approach", "controller-fault")


@dataclass
class CheckResult:
    name: str
    check: str
    verdict: str
    margin: float | None = None
    details: dict[str, Any] = field(default_factory=dict)

    def to_dict(self) -> dict[str, Any]:
        margin = self.margin
        if margin is not None and not math.isfinite(margin):
            margin = None
        return {"name": self.name, "check": self.check, "verdict": self.verdict,
                "margin": margin, "details": _jsonable(self.details)}


def _jsonable(value):
    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, (np.bool_, bool)):
        return bool(value)
    if isinstance(value, (np.integer,)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        v = float(value)
        return v if math.isfinite(v) else None
    return value


def _verdict(ok: bool) -> str:
    return PASS if ok else FAIL


def _output(scenario, traj) -> np.ndarray:
    """States the density acts on: the output ``y`` for the adaptive loop, else the full state."""
    return traj.states[:, :1] if scenario.adaptive else traj.states


def comparison_weight(scenario) -> Callable[[np.ndarray, np.ndarray], np.ndarray]:
    """``W(states, times)`` such that the certified derivative bound reads ``Vdot <= rho * W``.

    Example 1: ``-mu x^2``; the planar families: ``-mu |x|^2`` (``-mu x1^2``
    when the density enters the first equation only); adaptive loop:
    ``tau mu y``.
    """
    mu = scenario.regions.mu
    if scenario.adaptive:
        tau = scenario.controller.tau
        return lambda s, t: tau * mu * s[:, 0]
    if scenario.family == "scalar-ex1":
        return lambda s, t: -mu * s[:, 0] ** 2
    if scenario.family in ("planar-ex2", "planar-ex3"):
        if scenario.rho2 == "zero":
            return lambda s, t: -mu * s[:, 0] ** 2
        return lambda s, t: -mu * (s[:, 0] ** 2 + s[:, 1] ** 2)
    raise ConfigError("checks", f"no derivative bound is defined for family {scenario.family!r}")


def _region(scenario, which: str) -> RegionSpec:
    if scenario.regions.case is None:
        raise ConfigError("regions.case", "required by region-based checks")
    return RegionSpec(which, scenario.regions.case, scenario.region_params())


# ---------------------------------------------------------------------------
# individual checks


def check_must_complete(scenario, runs, opts) -> CheckResult:
    stops = [r.trajectory.stop_reason for r in runs]
    bad = [i for i, s in enumerate(stops) if s != COMPLETED]
    return CheckResult("", "", _verdict(not bad), float(-len(bad)), {"stops": stops, "failed_runs": bad})


def check_stop_reason(scenario, runs, opts) -> CheckResult:
    expect = opts.get("expect", list(scenario.expected_stop))
    expect = [expect] if isinstance(expect, str) else list(expect)
    stops = [r.trajectory.stop_reason for r in runs]
    bad = [i for i, s in enumerate(stops) if s not in expect]
    return CheckResult("", "", _verdict(not bad), float(-len(bad)),
                       {"stops": stops, "expected": expect, "failed_runs": bad,
                        "stop_times": [r.trajectory.stop_time for r in runs]})


def check_forbidden_never(scenario, runs, opts) -> CheckResult:
    """No run truncates at a barrier and every stored sample is admissible."""
    rho = scenario.density
    bad_stop = [i for i, r in enumerate(runs) if r.trajectory.stop_reason in BARRIER_STOPS]
    worst = math.inf
    inadmissible = 0
    for r in runs:
        tr = r.trajectory
        xs = _output(scenario, tr)
        with np.errstate(invalid="ignore"):
            vals = rho_many(rho, xs, tr.times)
        inadmissible += int(np.count_nonzero(np.isnan(vals)))
        if rho.has_singular_set:
            worst = min(worst, float(np.min(singular_distance_many(rho, xs, tr.times, cap=0.05))))
    ok = not bad_stop and inadmissible == 0
    return CheckResult("", "", _verdict(ok), worst,
                       {"barrier_stops": bad_stop, "inadmissible_samples": inadmissible,
                        "min_singular_distance_lower_bound": worst})


def _tube_gap(scenario, xs, ts) -> np.ndarray:
    rho = scenario.density
    x = xs[:, 0]
    if rho.kind in ("funnel", "log_sym"):
        return rho.signals["b"].evaluate(ts) - np.abs(x)
    if rho.kind in ("log_ratio", "log_tube"):
        return np.minimum(rho.signals["b_upper"].evaluate(ts) - x, x - rho.signals["b_lower"].evaluate(ts))
    if rho.kind == "log_surface":
        return x - rho.signals["b"].evaluate(ts)
    raise ConfigError("checks", f"tube check needs a tube-shaped density, not {rho.kind!r}")


def check_tube(scenario, runs, opts) -> CheckResult:
    """Strict tube inequality on every sample (or every sample after first entry)."""
    after_entry = bool(opts.get("after_entry", False))
    worst, violations, checked, entries = math.inf, 0, 0, []
    for r in runs:
        tr = r.trajectory
        gap = _tube_gap(scenario, _output(scenario, tr), tr.times)
        start = 0
        if after_entry:
            inside = np.flatnonzero(gap > 0)
            if not len(inside):
                entries.append(None)
                continue
            start = int(inside[0])
            entries.append(float(tr.times[start]))
        g = gap[start:]
        checked += len(g)
        violations += int(np.count_nonzero(g <= 0))
        worst = min(worst, float(np.min(g)))
    if checked == 0:
        return CheckResult("", "", INSUFFICIENT, None, {"entry_times": entries})
    return CheckResult("", "", _verdict(violations == 0), worst,
                       {"violations": violations, "samples": checked, "entry_times": entries})


def check_obstacle_clearance(scenario, runs, opts) -> CheckResult:
    """``|x1 - c1i|^qi + |x2 - c2i|^qi - bi > 0`` for every sample and obstacle."""
    rho = scenario.density
    if rho.kind != "obstacle_log":
        raise ConfigError("checks", "obstacle-clearance needs an obstacle_log density")
    per = [math.inf] * len(rho.obstacles)
    for r in runs:
        s = r.trajectory.states
        for i, ob in enumerate(rho.obstacles):
            lvl = (np.abs(s[:, 0] - ob.center[0]) ** ob.q + np.abs(s[:, 1] - ob.center[1]) ** ob.q - ob.b)
            per[i] = min(per[i], float(np.min(lvl)))
    worst = min(per)
    return CheckResult("", "", _verdict(worst > 0), worst, {"per_obstacle_min": per})


def check_ultimate_bound(scenario, runs, opts) -> CheckResult:
    after = float(opts.get("after", 0.0))
    bound = float(opts["bound"])
    peak, count = -math.inf, 0
    for r in runs:
        tr = r.trajectory
        sel = tr.times >= after - 1e-12
        if not np.any(sel):
            continue
        xs = _output(scenario, tr)[sel]
        peak = max(peak, float(np.max(np.linalg.norm(xs, axis=1))))
        count += int(np.count_nonzero(sel))
    if count == 0:
        return CheckResult("", "", INSUFFICIENT, None, {"after": after})
    return CheckResult("", "", _verdict(peak <= bound), bound - peak,
                       {"after": after, "bound": bound, "max_norm": peak, "samples": count})


def check_vdot_bound(scenario, runs, opts) -> CheckResult:
    which = opts.get("region", "DS")
    if which not in ("DS", "DU"):
        raise ConfigError("checks.region", "must be DS or DU")
    side = "upper" if which == "DS" else "lower"
    tol = float(opts.get("tol", 1e-3))
    region = _region(scenario, which)
    W = comparison_weight(scenario)
    samples, violations, worst, slack, verdicts = 0, 0, math.inf, math.inf, []
    for r in runs:
        tr = r.trajectory
        bound = tr.rho * W(tr.states, tr.times)
        rep = vdot_bound_check(tr, bound, side, region, tol, name="vdot-bound")
        verdicts.append(rep.verdict)
        samples += rep.samples
        violations += rep.violations
        if math.isfinite(rep.worst_margin):
            worst = min(worst, rep.worst_margin)
            slack = min(slack, rep.worst_slack)
    if samples < int(opts.get("min_samples", 3)):
        return CheckResult("", "", INSUFFICIENT, None, {"region": which, "samples": samples})
    return CheckResult("", "", _verdict(violations == 0), slack,
                       {"region": which, "side": side, "tol": tol, "samples": samples, "raw_margin": worst,
                        "violations": violations, "per_run": verdicts})


def check_min_radius(scenario, runs, opts) -> CheckResult:
    """Stay outside the disk of ``radius`` and never get closer than the initial sample."""
    radius = float(opts.get("radius", 1.0))
    tol = float(opts.get("tol", 1e-3))
    worst, ok = math.inf, True
    approach = []
    for r in runs:
        rad = np.hypot(r.trajectory.states[:, 0], r.trajectory.states[:, 1])
        worst = min(worst, float(np.min(rad)) - radius)
        drop = float(rad[0] - np.min(rad))
        approach.append(drop)
        ok &= bool(np.all(rad > radius)) and drop <= tol
    return CheckResult("", "", _verdict(ok), worst,
                       {"radius": radius, "tol": tol, "max_inward_excursion": approach})


def _target(scenario, opts) -> Callable:
    target = opts.get("target", "g")
    if target == "g":
        return distance_to_signal(scenario.controller.g)
    if target in ("z", "b"):
        return distance_to_signal(scenario.density.signals[target])
    if target == "origin":
        return lambda s, t: np.linalg.norm(s[:, :2] if s.shape[1] >= 2 else s, axis=1)
    if target == "circle":
        return distance_to_circle(float(opts.get("radius", 1.0)))
    raise ConfigError("checks.target", f"unknown target {target!r}")


def check_tail_distance(scenario, runs, opts) -> CheckResult:
    bound = float(opts["bound"])
    frac = float(opts.get("tail_fraction", 0.2))
    target = _target(scenario, opts)
    worst = -math.inf
    per = []
    for r in runs:
        res = attraction_metric(r.trajectory, target, frac)
        per.append(res.limsup_distance)
        worst = max(worst, res.limsup_distance)
    return CheckResult("", "", _verdict(worst <= bound), bound - worst,
                       {"bound": bound, "tail_fraction": frac, "limsup_distance": per})


def check_monotone_tail(scenario, runs, opts) -> CheckResult:
    frac = float(opts.get("tail_fraction", 0.5))
    windows = int(opts.get("windows", 4))
    target = _target(scenario, opts)
    mode = opts.get("mode", "approach")
    flags, maxima = [], []
    for r in runs:
        res = attraction_metric(r.trajectory, target, frac, windows)
        flags.append(res.monotone if mode == "approach" else res.nondecreasing)
        maxima.append(res.window_max if mode == "approach" else res.window_min)
    return CheckResult("", "", _verdict(all(flags)), None,
                       {"mode": mode, "flags": flags, "windows": maxima})


_BLOCKS = ("c", "u", "Vy", "Vu", "x")


def check_bounded(scenario, runs, opts) -> CheckResult:
    """Peak magnitudes of the declared signals stay below the preset ceilings."""
    ceilings = {k: v for k, v in scenario.ceilings.items() if k in _BLOCKS}
    if not ceilings:
        raise ConfigError("ceilings", "the bounded check needs at least one ceiling")
    peaks: dict[str, float] = {k: 0.0 for k in ceilings}
    for r in runs:
        tr = r.trajectory
        for key in ceilings:
            if key == "u":
                vals = tr.u if tr.u is not None else np.zeros(1)
            elif key == "x":
                vals = r.loop.block("xp") if r.loop is not None else tr.states
            else:
                if r.loop is None:
                    raise ConfigError("ceilings", f"{key!r} only exists for the adaptive family")
                vals = r.loop.block(key)
            if np.size(vals):
                peaks[key] = max(peaks[key], float(np.nanmax(np.abs(vals))))
    margin = min(ceilings[k] - peaks[k] for k in ceilings)
    ok = all(math.isfinite(peaks[k]) and peaks[k] < ceilings[k] for k in ceilings)
    return CheckResult("", "", _verdict(ok), margin, {"peaks": peaks, "ceilings": ceilings})


def check_sign_hypothesis(scenario, runs, opts) -> CheckResult:
    """Sign pattern of ``rho(y, t)(y - g)`` on the reachable output range."""
    cfg = scenario.controller
    ys = np.concatenate([r.trajectory.states[:, 0] for r in runs])
    lo, hi = float(np.min(ys)), float(np.max(ys))
    pad = float(opts.get("pad", 0.1)) * max(hi - lo, 1.0)
    y_grid = np.linspace(lo - pad, hi + pad, int(opts.get("y_points", 401)))
    t_grid = np.linspace(runs[0].trajectory.t0, runs[0].trajectory.times[-1], int(opts.get("t_points", 401)))
    ok, bad, checked = cfg.sign_hypothesis(y_grid, t_grid)
    if checked == 0:
        return CheckResult("", "", INSUFFICIENT, None, {"checked": 0})
    return CheckResult("", "", _verdict(ok), float(-bad),
                       {"violations": bad, "checked": checked, "y_range": [lo - pad, hi + pad]})


def check_filter_hurwitz(scenario, runs, opts) -> CheckResult:
    dec = runs[0].loop.decomposition
    ok = filter_matrix_hurwitz(scenario.controller, dec)
    eig = np.linalg.eigvals(scenario.controller.F + np.outer(scenario.controller.b, dec.c0u))
    return CheckResult("", "", _verdict(ok), float(-np.max(eig.real)) if len(eig) else None,
                       {"eigenvalues_real": sorted(eig.real.tolist())})


def emergent_residual(scenario, run) -> tuple[np.ndarray, np.ndarray]:
    """``(times, residual)`` of ``ydot - u + c0^T w`` against ``(1/R_m)[d]``.

    Along the closed loop ``R_m(p) (ydot - u + c0^T w) = d`` up to terms that
    decay with the roots of ``R_m``.  ``ydot`` is evaluated from the plant
    realization at each sample, the filtered disturbance by linear simulation
    from rest, and the decaying terms (the free responses of ``1/R_m``) are
    removed by least squares, so what remains is numerical error.
    """
    tr, loop = run.trajectory, run.loop
    real = loop.realization
    ts = tr.times
    d = scenario.disturbances[0].evaluate(ts)
    xp = loop.block("xp")
    ydot = xp @ (real.C @ real.A) + (real.C @ real.Bu) * tr.u / scenario.plant.k + (real.C @ real.Bd) * d
    e = ydot - tr.u + loop.regressor() @ loop.decomposition.c0
    rel = ts - ts[0]
    rm = scenario.controller.Rm
    sys = sps.StateSpace(*sps.tf2ss(np.array([1.0]), np.array(rm.coeffs[::-1], dtype=float)))
    _, dhat, _ = sps.lsim(sys, d, rel)
    free = np.column_stack([sps.lsim(sys, np.zeros_like(rel), rel, X0=x0)[1]
                            for x0 in np.eye(sys.A.shape[0])])
    res = e - dhat
    ok = np.isfinite(res)
    coef, *_ = np.linalg.lstsq(free[ok], res[ok], rcond=None)
    return ts, res - free @ coef


def check_emergent_dynamics(scenario, runs, opts) -> CheckResult:
    """Reconstructed disturbance term matches the filtered disturbance.

    The limit ``tol_factor * h^2 * max(1, dbar)`` reflects the piecewise-linear
    interpolation of ``d`` between samples ``h`` apart in the linear simulation.
    """
    start = float(opts.get("tail_start", 0.0))
    tol_factor = float(opts.get("tol_factor", 10.0))
    worst, limit = 0.0, math.inf
    for r in runs:
        ts, res = emergent_residual(scenario, r)
        sel = (ts >= ts[0] + start * (ts[-1] - ts[0])) & np.isfinite(res)
        if not np.any(sel):
            return CheckResult("", "", INSUFFICIENT, None, {})
        scale = max(1.0, scenario.disturbances[0].sup_bound())
        limit = tol_factor * r.trajectory.h ** 2 * scale
        worst = max(worst, float(np.max(np.abs(res[sel]))))
    return CheckResult("", "", _verdict(worst <= limit), limit - worst,
                       {"max_residual": worst, "limit": limit, "tail_start": start})


def check_classify(scenario, runs, opts) -> CheckResult:
    expect = opts.get("expect", "strict-density")
    W = comparison_weight(scenario)
    DS = _region(scenario, "DS") if opts.get("DS", True) else None
    DU = _region(scenario, "DU") if opts.get("DU", False) else None
    lyap = LyapunovForm.identity(scenario.state_dim)
    res = classify_density([r.trajectory for r in runs], scenario.density, lyap, W if DS else None, W if DU else None,
                           DS, DU, float(opts.get("tol", 1e-3)), int(opts.get("min_samples", 100)))
    if res.verdict == INSUFFICIENT:
        return CheckResult("", "", INSUFFICIENT, None, {"samples": res.samples})
    return CheckResult("", "", _verdict(res.verdict == expect), res.margin,
                       {"verdict": res.verdict, "expected": expect, "witnessed": list(res.witnessed),
                        "samples": res.samples})


CHECKS: dict[str, Callable] = {
    "must-complete": check_must_complete,
    "stop-reason": check_stop_reason,
    "forbidden-entry-never": check_forbidden_never,
    "tube": check_tube,
    "obstacle-clearance": check_obstacle_clearance,
    "ultimate-bound": check_ultimate_bound,
    "vdot-bound": check_vdot_bound,
    "min-radius": check_min_radius,
    "tail-distance": check_tail_distance,
    "monotone-tail": check_monotone_tail,
    "bounded": check_bounded,
    "sign-hypothesis": check_sign_hypothesis,
    "filter-hurwitz": check_filter_hurwitz,
    "emergent-dynamics": check_emergent_dynamics,
    "classify": check_classify,
}

_ADAPTIVE_ONLY = ("sign-hypothesis", "filter-hurwitz", "emergent-dynamics")


def run_check(spec, scenario, runs) -> CheckResult:
    """Dispatch one :class:`~densitylab.harness.scenario.CheckSpec`."""
    if spec.check in _ADAPTIVE_ONLY and not scenario.adaptive:
        raise ConfigError("checks", f"{spec.check} applies to the adaptive family only")
    if not runs or any(len(r.trajectory) < 2 for r in runs):
        res = CheckResult("", "", INSUFFICIENT, None, {"reason": "empty or single-sample trajectory"})
    else:
        res = CHECKS[spec.check](scenario, runs, spec.options)
    res.name = spec.label
    res.check = spec.check
    return res
