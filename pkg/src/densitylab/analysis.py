"""Lyapunov checks, closed-form stable/unstable regions and attraction metrics."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from densitylab.density import DensityField, rho_many
from densitylab.dyncore.signals import TimeSignal
from densitylab.dyncore.trajectory import Trajectory
from densitylab.errors import ConfigError, DimensionError

PASS = "pass"
FAIL = "fail"
INSUFFICIENT = "insufficient-coverage"

IN_DS = "in-D_S"
IN_DU = "in-D_U"
NEITHER = "neither"
FORBIDDEN = "forbidden"

CODE_NEITHER, CODE_DS, CODE_DU, CODE_FORBIDDEN = 0, 1, 2, 3
_CODE_LABELS = {CODE_NEITHER: NEITHER, CODE_DS: IN_DS, CODE_DU: IN_DU, CODE_FORBIDDEN: FORBIDDEN}


# ---------------------------------------------------------------------------
# Lyapunov functions


@dataclass(frozen=True)
class LyapunovForm:
    """``V = 0.5 x^T P x + (1 / (2 beta)) |c - c0|^2``.

    ``index`` selects the state components entering the quadratic part and
    ``c_slice``/``c0`` the parameter block of a stacked closed-loop state.
    """

    P: np.ndarray
    beta: float | None = None
    index: tuple[int, ...] | None = None
    c_slice: tuple[int, int] | None = None
    c0: np.ndarray | None = field(default=None, compare=False)

    def __post_init__(self) -> None:
        P = np.atleast_2d(np.asarray(self.P, dtype=float))
        if P.shape[0] != P.shape[1]:
            raise DimensionError("P must be square")
        if not np.allclose(P, P.T):
            raise ConfigError("P", "must be symmetric")
        minors = [np.linalg.det(P[:k, :k]) for k in range(1, P.shape[0] + 1)]
        if any(m <= 0 for m in minors):
            raise ConfigError("P", "must be positive definite (leading principal minors > 0)")
        if self.beta is not None and not self.beta > 0:
            raise ConfigError("beta", "must be > 0")
        object.__setattr__(self, "P", P)

    @classmethod
    def identity(cls, n: int) -> LyapunovForm:
        return cls(np.eye(n))

    @classmethod
    def adaptive(cls, n: int, beta: float, c0) -> LyapunovForm:
        """Augmented ``0.5 y^2 + |c - c0|^2 / (2 beta)`` over the stacked closed-loop state."""
        start = n + 2 * (n - 1)
        return cls(np.eye(1), beta=beta, index=(0,), c_slice=(start, start + 2 * n - 1),
                   c0=np.asarray(c0, dtype=float))

    def along(self, states: np.ndarray) -> np.ndarray:
        """``V`` at every row of a stacked-state array."""
        states = np.atleast_2d(states)
        xs = states[:, list(self.index)] if self.index is not None else states
        if xs.shape[1] != self.P.shape[0]:
            raise DimensionError(f"state dimension {xs.shape[1]} does not match P {self.P.shape}")
        v = 0.5 * np.einsum("ij,jk,ik->i", xs, self.P, xs)
        if self.c_slice is not None:
            err = states[:, self.c_slice[0]:self.c_slice[1]] - self.c0
            v = v + 0.5 * np.einsum("ij,ij->i", err, err) / self.beta
        return v


def v_eval(V: LyapunovForm, x, c_err=None) -> float:
    """Value of the quadratic form at ``x``, plus the parameter-error term if ``c_err`` is given."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if x.shape[0] != V.P.shape[0]:
        raise DimensionError(f"x has dimension {x.shape[0]}, P is {V.P.shape}")
    val = 0.5 * float(x @ V.P @ x)
    if c_err is not None:
        if V.beta is None:
            raise ConfigError("beta", "parameter-error term needs beta")
        e = np.asarray(c_err, dtype=float)
        val += 0.5 * float(e @ e) / V.beta
    return val


# ---------------------------------------------------------------------------
# eta


@dataclass(frozen=True)
class EtaParams:
    mu: float
    tau: float
    dbar: float
    gamma: float
    beta: float
    c0bar: float

    def __post_init__(self) -> None:
        if not 0 < self.mu < 1:
            raise ConfigError("mu", "must lie in (0, 1)")
        for name in ("tau", "gamma", "beta"):
            if not getattr(self, name) > 0:
                raise ConfigError(name, "must be > 0")
        for name in ("dbar", "c0bar"):
            if not getattr(self, name) >= 0:
                raise ConfigError(name, "must be >= 0")


def eta(p: EtaParams) -> float:
    """Disturbance-plus-parameter level ``(dbar + gamma c0bar^2 / (2 beta)) / ((1 - mu) tau)``."""
    return (p.dbar + p.gamma / (2.0 * p.beta) * p.c0bar ** 2) / ((1.0 - p.mu) * p.tau)


# ---------------------------------------------------------------------------
# regions

CASE_IDS = ("1.1", "1.2", "1.3", "1.4", "2.1.1", "2.1.2", "2.2", "3.1", "3.2", "3.3", "3.4",
            "theorem1", "adaptive-1", "adaptive-2", "adaptive-3", "adaptive-4", "adaptive-5")


@dataclass(frozen=True)
class RegionParams:
    """Inputs of the closed-form region inequalities.

    ``dbar`` holds one bound per disturbance channel; ``eta`` is used by the
    adaptive cases.
    """

    field: DensityField
    mu: float = 0.5
    dbar: tuple[float, ...] = (0.0,)
    eta: float = 0.0

    def __post_init__(self) -> None:
        if not 0 < self.mu < 1:
            raise ConfigError("regions.mu", "must lie in (0, 1)")
        object.__setattr__(self, "dbar", tuple(float(v) for v in np.atleast_1d(self.dbar)))

    @property
    def alpha(self) -> float:
        return self.field.params.get("alpha", 1.0)

    def d(self, i: int) -> float:
        return self.dbar[i] if i < len(self.dbar) else 0.0


def _sig(field: DensityField, name: str, ts: np.ndarray) -> np.ndarray:
    return field.signals[name].evaluate(ts)


def region_codes(case: str, states, times, params: RegionParams) -> np.ndarray:
    """Vectorized :func:`region_membership`; returns integer codes (see ``CODE_*``)."""
    if case not in CASE_IDS:
        raise ConfigError("regions.case", f"unknown case id {case!r}")
    xs = np.atleast_2d(np.asarray(states, dtype=float))
    ts = np.atleast_1d(np.asarray(times, dtype=float))
    if xs.shape[0] != ts.shape[0]:
        xs = xs.reshape(ts.shape[0], -1)
    f = params.field
    mu, a = params.mu, params.alpha
    x = xs[:, 0]
    n = len(ts)
    ds = np.zeros(n, bool)
    du = np.zeros(n, bool)
    forb = np.zeros(n, bool)
    k = 1.0 / (1.0 - mu)

    if case == "1.1":
        ds = np.abs(x) > params.d(0) / (a * (1.0 - mu))
    elif case == "1.2":
        b = _sig(f, "b", ts)
        forb = np.abs(x) >= b
        th = params.d(0) * b / (params.d(0) + a * (1.0 - mu))
        ds = (np.abs(x) > th) & ~forb
    elif case == "1.3":
        z = _sig(f, "z", ts)
        s = math.sqrt(params.d(0) / ((1.0 - mu) * a))
        pos, neg = z > 0, z < 0
        ds = np.where(pos, (x < -s) | (x > z + s),
                      np.where(neg, (x < z - s) | (x > s), np.abs(x) > s))
        # sufficient form of the lower estimate: |x - z| |x| > s^2 with x between 0 and z
        gap = np.abs(x - z) * np.abs(x) > s * s
        du = np.where(pos, (x > s) & (x < z) & gap, np.where(neg, (x > z + s) & (x < -s) & gap, False))
    elif case == "1.4":
        hi, lo = _sig(f, "b_upper", ts), _sig(f, "b_lower", ts)
        forb = (x <= lo) | (x >= hi)
        z = 0.5 * (hi + lo)
        s = np.sqrt((hi - lo) * params.d(0) / (4.0 * (1.0 - mu) * a))
        ds = (x > z + s) & (x < hi)
        du = (x > lo) & (x < z - s)
    elif case in ("2.1.1", "2.1.2", "2.2", "3.1", "3.2", "3.3", "3.4"):
        with np.errstate(invalid="ignore"):
            rho = rho_many(f, xs, ts)
        forb = ~np.isfinite(rho) & np.isnan(rho)
        r = np.where(forb, 0.0, rho)
        if case in ("2.1.1", "2.1.2"):
            c1 = np.abs(r) * np.abs(xs[:, 0]) > params.d(0) * k
            c2 = np.abs(r) * np.abs(xs[:, 1]) > params.d(1) * k
            cond = c1 & c2
        elif case == "2.2":
            cond = np.abs(r) * np.abs(xs[:, 0]) > params.d(0) * k
        else:
            dn = math.hypot(params.d(0), params.d(1))
            cond = np.abs(r) * np.hypot(xs[:, 0], xs[:, 1]) > dn * k
        ds = (r > 0) & cond & ~forb
        du = (r < 0) & cond & ~forb
    elif case == "theorem1":
        with np.errstate(invalid="ignore"):
            rho = rho_many(f, xs[:, :1], ts)
        forb = np.isnan(rho)
        r = np.where(forb, 0.0, rho)
        big = np.abs(r) > params.eta
        ds = (r * x < 0) & big & ~forb
        du = (r * x > 0) & big & ~forb
    else:
        kk = params.eta / a
        if case == "adaptive-1":
            ds = np.abs(x) > kk
        elif case == "adaptive-2":
            b = _sig(f, "b", ts)
            forb = np.abs(x) >= b
            lo = b * (math.exp(kk) - 1.0) / (1.0 + math.exp(kk))
            ds = (np.abs(x) > lo) & ~forb
        elif case == "adaptive-3":
            hi, lo = _sig(f, "b_upper", ts), _sig(f, "b_lower", ts)
            forb = (x <= lo) | (x >= hi)
            e = math.exp(kk)
            y_hi = (hi * e + lo) / (1.0 + e)
            y_lo = (lo * e + hi) / (1.0 + e)
            ds = ((x > 0) & (x > y_hi) & (x < hi)) | ((x < 0) & (x > lo) & (x < y_lo))
            du = ((x > 0) & (x > lo) & (x < y_lo)) | ((x < 0) & (x > y_hi) & (x < hi))
        elif case == "adaptive-4":
            z = _sig(f, "z", ts)
            ds = ((x > 0) & (x > z + kk)) | ((x < 0) & (x < z - kk))
            du = ((x > 0) & (x < z - kk)) | ((x < 0) & (x > z + kk))
        elif case == "adaptive-5":
            b = _sig(f, "b", ts)
            forb = x <= b
            ds = ((x > 0) & (x > b + math.exp(kk))) | ((x < 0) & (x > b) & (x < b + math.exp(-kk)))
            du = ((x > 0) & (x > b) & (x < b + math.exp(-kk))) | ((x < 0) & (x > b + math.exp(kk)))
    codes = np.where(ds, CODE_DS, CODE_NEITHER)
    codes = np.where(du, CODE_DU, codes)
    codes = np.where(forb, CODE_FORBIDDEN, codes)
    return codes.astype(np.int8)


def region_membership(case: str, x, t: float, params: RegionParams) -> str:
    """Return ``in-D_S``, ``in-D_U``, ``neither`` or ``forbidden`` for a single point."""
    code = region_codes(case, np.atleast_2d(np.asarray(x, dtype=float)), np.array([float(t)]), params)[0]
    return _CODE_LABELS[int(code)]


@dataclass(frozen=True)
class RegionSpec:
    """One region (``D+``, ``D-``, ``DS``, ``DU`` or ``forbidden``) of a case."""

    which: str
    case: str
    params: RegionParams

    _WHICH = ("D+", "D-", "DS", "DU", "forbidden")

    def __post_init__(self) -> None:
        if self.which not in self._WHICH:
            raise ConfigError("region", f"must be one of {self._WHICH}")

    def mask(self, states, times) -> np.ndarray:
        times = np.atleast_1d(times)
        if self.which in ("D+", "D-"):
            with np.errstate(invalid="ignore"):
                rho = rho_many(self.params.field, np.atleast_2d(states).reshape(len(times), -1), times)
            return rho > 0 if self.which == "D+" else rho < 0
        codes = region_codes(self.case, states, times, self.params)
        target = {"DS": CODE_DS, "DU": CODE_DU, "forbidden": CODE_FORBIDDEN}[self.which]
        return codes == target

    def contains(self, x, t) -> bool:
        return bool(self.mask(np.atleast_2d(np.asarray(x, dtype=float)), np.array([float(t)]))[0])


# ---------------------------------------------------------------------------
# derivative bound checks


@dataclass
class BoundReport:
    check: str
    region: str
    samples: int
    violations: int
    worst_margin: float
    verdict: str
    indices: list[int] = field(default_factory=list)
    worst_slack: float = math.nan  # worst margin after tol and discretization allowance

    def to_dict(self) -> dict:
        def num(v):
            return None if not math.isfinite(v) else v
        return {"check": self.check, "region": self.region, "samples": self.samples,
                "violations": self.violations, "worst_margin": num(self.worst_margin),
                "worst_slack": num(self.worst_slack), "verdict": self.verdict}


def discretization_allowance(vdot: np.ndarray) -> np.ndarray:
    """Per-sample allowance ``10 * h * |d(Vdot)/dt|`` from neighbouring differences."""
    allow = np.zeros_like(vdot)
    d = np.abs(np.diff(vdot))
    d = np.where(np.isfinite(d), d, 0.0)
    if len(d):
        allow[:-1] = d
        allow[1:] = np.maximum(allow[1:], d)
    return 10.0 * allow


def vdot_bound_check(traj: Trajectory, bound, side: str, region, tol: float,
                     name: str = "vdot-bound", min_samples: int = 3) -> BoundReport:
    """Compare the central-difference ``Vdot`` with ``bound`` on in-region interior samples.

    ``bound`` is an array of ``rho * W`` values per sample (or a callable of
    ``(states, times)``); ``side='upper'`` checks ``Vdot <= bound`` and
    ``side='lower'`` checks ``Vdot >= bound``. ``region`` is a boolean mask or a
    :class:`RegionSpec`.
    """
    if side not in ("upper", "lower"):
        raise ValueError("side must be 'upper' or 'lower'")
    n = len(traj)
    times = traj.times
    mask = region.mask(traj.states, times) if isinstance(region, RegionSpec) else np.asarray(region, bool)
    label = region.which if isinstance(region, RegionSpec) else "mask"
    bvals = bound(traj.states, times) if callable(bound) else np.asarray(bound, dtype=float)
    vdot = traj.vdot
    interior = np.zeros(n, bool)
    if n >= 3:
        interior[1:-1] = True
    sel = mask & interior & np.isfinite(vdot) & np.isfinite(bvals)
    idx = np.flatnonzero(sel)
    if len(idx) < min_samples:
        return BoundReport(name, label, int(len(idx)), 0, math.nan, INSUFFICIENT)
    allow = discretization_allowance(vdot)
    margin = (bvals - vdot) if side == "upper" else (vdot - bvals)
    slack = margin[idx] + tol + allow[idx]
    bad = idx[slack < 0]
    return BoundReport(name, label, int(len(idx)), int(len(bad)), float(np.min(margin[idx])),
                       FAIL if len(bad) else PASS, bad[:50].tolist(), float(np.min(slack)))


# ---------------------------------------------------------------------------
# density classification

NOT_DENSITY = "not-density"
WEAK_DENSITY = "weak-density"
DENSITY = "density"
STRICT_DENSITY = "strict-density"


@dataclass
class DensityClassification:
    verdict: str
    witnessed: tuple[str, ...]
    margin: float
    samples: dict[str, int]


def classify_density(trajs: Sequence[Trajectory], rho: DensityField, V: LyapunovForm,
                     W1: Callable | None, W2: Callable | None,
                     DS: RegionSpec | None, DU: RegionSpec | None, tol: float,
                     min_samples: int = 100) -> DensityClassification:
    """Decide weak / density / strict-density from sampled derivative bounds.

    ``W1(states, times)`` and ``W2(states, times)`` return the comparison
    functions; the bound checked in ``D_S`` is ``Vdot <= rho * W1 <= 0`` and in
    ``D_U`` ``Vdot >= rho * W2 >= 0``.
    """
    regions = [(lab, reg, W, side) for lab, reg, W, side in
               (("DS", DS, W1, "upper"), ("DU", DU, W2, "lower")) if reg is not None and W is not None]
    counts: dict[str, int] = {}
    weak_ok, nonzero_W, strict_ok, any_nonzero = True, True, True, False
    worst = math.inf
    for lab, reg, W, side in regions:
        total = 0
        for tr in trajs:
            if len(tr) < 3:
                continue
            ts = tr.times
            m = reg.mask(tr.states, ts)
            m[0] = m[-1] = False
            vd = Trajectory(tr.t0, tr.h, tr.states, V=V.along(tr.states)).vdot
            m &= np.isfinite(vd)
            if not m.any():
                continue
            with np.errstate(invalid="ignore"):
                r = rho_many(rho, tr.states[:, : max(rho.dim, 1)] if rho.dim else tr.states, ts)
            w = W(tr.states, ts)
            bound = r * w
            allow = discretization_allowance(vd)
            margin = (bound - vd) if side == "upper" else (vd - bound)
            sel = np.flatnonzero(m)
            total += len(sel)
            worst = min(worst, float(np.min(margin[sel])))
            if np.any(margin[sel] + tol + allow[sel] < 0):
                weak_ok = False
            signed = bound[sel] if side == "upper" else -bound[sel]
            if np.any(signed > tol):
                weak_ok = False
            if np.any(w[sel] == 0):
                nonzero_W = False
            if np.any(signed >= 0):
                strict_ok = False
            if np.any(bound[sel] != 0):
                any_nonzero = True
        counts[lab] = total
    witnessed = tuple(lab for lab, *_ in regions)
    if not regions or any(counts[lab] < min_samples for lab in counts):
        return DensityClassification(INSUFFICIENT, witnessed, worst, counts)
    if not weak_ok or not any_nonzero:
        return DensityClassification(NOT_DENSITY, witnessed, worst, counts)
    if nonzero_W and strict_ok:
        return DensityClassification(STRICT_DENSITY, witnessed, worst, counts)
    if nonzero_W:
        return DensityClassification(DENSITY, witnessed, worst, counts)
    return DensityClassification(WEAK_DENSITY, witnessed, worst, counts)


# ---------------------------------------------------------------------------
# attraction


@dataclass
class AttractionResult:
    limsup_distance: float
    monotone: bool
    nondecreasing: bool
    window_max: list[float]
    window_min: list[float]
    truncated: bool


def distance_to_signal(sig: TimeSignal, component: int = 0) -> Callable:
    def dist(states, times):
        return np.abs(states[:, component] - sig.evaluate(times))
    return dist


def distance_to_circle(radius: float = 1.0) -> Callable:
    def dist(states, times):
        return np.abs(np.hypot(states[:, 0], states[:, 1]) - radius)
    return dist


def attraction_metric(traj: Trajectory, target: Callable, tail_fraction: float = 0.2,
                      windows: int = 4, tol: float = 1e-9) -> AttractionResult:
    """Distance envelope to a target set over the tail of a trajectory.

    The tail (last ``tail_fraction`` of the samples) is split into ``windows``
    equal windows; ``monotone`` reports a non-increasing window maximum,
    ``nondecreasing`` a non-decreasing window minimum.
    """
    if not 0 < tail_fraction <= 1:
        raise ValueError("tail_fraction must lie in (0, 1]")
    truncated = traj.stop_reason != "completed"
    n = len(traj)
    if n == 0:
        return AttractionResult(math.nan, False, False, [], [], True)
    dist = target(traj.states, traj.times)
    start = min(int(math.floor(n * (1.0 - tail_fraction))), n - 1)
    tail = dist[start:]
    parts = [p for p in np.array_split(tail, max(1, min(windows, len(tail)))) if len(p)]
    wmax = [float(np.max(p)) for p in parts]
    wmin = [float(np.min(p)) for p in parts]
    mono = all(b <= a + tol for a, b in zip(wmax, wmax[1:]))
    nondec = all(b >= a - tol for a, b in zip(wmin, wmin[1:]))
    return AttractionResult(float(np.max(tail)), mono, nondec, wmax, wmin, truncated)


def proposition_gap(case: str, params: RegionParams, lyap: LyapunovForm,
                    box: Sequence[tuple[float, float]], times: Sequence[float],
                    points_per_axis: int = 201) -> float:
    """``inf V`` over sampled ``D_S`` minus ``sup V`` over sampled ``D_U`` on a box.

    A positive value is the sampled proxy for the hypothesis that states in the
    stable region have larger ``V`` than states in the unstable region.
    """
    axes = [np.linspace(lo, hi, points_per_axis) for lo, hi in box]
    grid = np.stack([g.ravel() for g in np.meshgrid(*axes, indexing="ij")], axis=1)
    v = lyap.along(grid)
    inf_s, sup_u = math.inf, -math.inf
    for t in times:
        codes = region_codes(case, grid, np.full(len(grid), float(t)), params)
        if np.any(codes == CODE_DS):
            inf_s = min(inf_s, float(np.min(v[codes == CODE_DS])))
        if np.any(codes == CODE_DU):
            sup_u = max(sup_u, float(np.max(v[codes == CODE_DU])))
    return inf_s - sup_u
