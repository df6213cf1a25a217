"""Catalog of density functions rho(x, t) with sign regions and singular sets."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Mapping

import numpy as np

from densitylab import _kernels as K
from densitylab.dyncore.signals import TimeSignal
from densitylab.errors import ConfigError, SingularEvaluation

POSITIVE = "positive"
NEGATIVE = "negative"
ZERO = "zero"
SINGULAR = "singular"

# kind -> (kernel code, state dimension or 0 for any, numeric params, signal params)
_CATALOG: dict[str, tuple[int, int, tuple[str, ...], tuple[str, ...]]] = {
    "constant": (K.D_CONSTANT, 0, ("alpha",), ()),
    "funnel": (K.D_FUNNEL, 1, ("alpha",), ("b",)),
    "sign_shift": (K.D_SIGN_SHIFT, 1, ("alpha",), ("z",)),
    "log_ratio": (K.D_LOG_RATIO, 1, ("alpha",), ("b_upper", "b_lower")),
    "log_tube": (K.D_LOG_TUBE, 1, ("alpha",), ("b_upper", "b_lower")),
    "log_sym": (K.D_LOG_SYM, 1, ("alpha",), ("b",)),
    "linear": (K.D_LINEAR, 1, ("alpha",), ()),
    "linear_track": (K.D_LINEAR_TRACK, 1, ("alpha",), ("z",)),
    "log_surface": (K.D_LOG_SURFACE, 1, ("alpha",), ("b",)),
    "annulus_log": (K.D_ANNULUS_LOG, 2, ("q",), ("b_upper", "b_lower")),
    "obstacle_log": (K.D_OBSTACLE_LOG, 2, (), ()),
    "norm_log": (K.D_NORM_LOG, 2, ("alpha", "q"), ()),
    "exp_barrier": (K.D_EXP_BARRIER, 2, ("sign", "e"), ()),
    "disk_log": (K.D_DISK_LOG, 2, ("sign",), ()),
}

DENSITY_KINDS = tuple(_CATALOG)

_SINGULAR_SETS = {
    "constant": "empty",
    "funnel": "{|x| >= b(t)}",
    "sign_shift": "empty",
    "log_ratio": "{x <= b_lower(t)} u {x >= b_upper(t)}",
    "log_tube": "{x <= b_lower(t)} u {x >= b_upper(t)}",
    "log_sym": "{|y| >= b(t)}",
    "linear": "empty",
    "linear_track": "empty",
    "log_surface": "{y <= b(t)}",
    "annulus_log": "{|x1|^q+|x2|^q <= b_lower(t)} u {|x1|^q+|x2|^q >= b_upper(t)}",
    "obstacle_log": "union_i {|x1-c1i|^qi+|x2-c2i|^qi <= b_i}",
    "norm_log": "{|x1|^q+|x2|^q <= 1}",
    "exp_barrier": "{x1^2+x2^2 <= 1}",
    "disk_log": "{x1^2+x2^2 <= 1}",
}


@dataclass(frozen=True)
class Obstacle:
    center: tuple[float, float]
    q: float
    b: float


@dataclass(frozen=True)
class DensityField:
    """A catalog density ``rho(x, t)``.

    Numeric parameters live in ``params`` (``alpha``, ``q``, ``sign``, ``e``);
    time-varying parameters (``b``, ``z``, ``b_upper``, ``b_lower``) are
    :class:`TimeSignal` instances in ``signals``; ``obstacle_log`` carries its
    terms in ``obstacles``.
    """

    kind: str
    params: Mapping[str, float] = field(default_factory=dict)
    signals: Mapping[str, TimeSignal] = field(default_factory=dict)
    obstacles: tuple[Obstacle, ...] = ()

    def __post_init__(self) -> None:
        if self.kind not in _CATALOG:
            raise ConfigError("rho.kind", f"unknown density kind {self.kind!r}")
        _, _, pnames, snames = _CATALOG[self.kind]
        params = dict(self.params)
        if self.kind == "exp_barrier":
            params.setdefault("e", 0.98)
        for name in pnames:
            if name not in params:
                raise ConfigError(f"rho.{name}", f"required for kind {self.kind!r}")
            if not math.isfinite(float(params[name])):
                raise ConfigError(f"rho.{name}", "must be finite")
            params[name] = float(params[name])
        extra = set(params) - set(pnames)
        if extra:
            raise ConfigError(f"rho.{sorted(extra)[0]}", f"unknown parameter for kind {self.kind!r}")
        for name in snames:
            if name not in self.signals:
                raise ConfigError(f"rho.{name}", f"signal required for kind {self.kind!r}")
        extra = set(self.signals) - set(snames)
        if extra:
            raise ConfigError(f"rho.{sorted(extra)[0]}", f"unknown signal for kind {self.kind!r}")
        if "sign" in params and params["sign"] not in (1.0, -1.0):
            raise ConfigError("rho.sign", "must be +1 or -1")
        if "q" in params and params["q"] <= 0:
            raise ConfigError("rho.q", "must be > 0")
        if self.kind == "obstacle_log":
            if not 1 <= len(self.obstacles) <= K.MAX_OBSTACLES:
                raise ConfigError("rho.terms", f"between 1 and {K.MAX_OBSTACLES} obstacles")
            for i, ob in enumerate(self.obstacles):
                if ob.b < 0:
                    raise ConfigError(f"rho.terms[{i}].b", "offset must be >= 0")
                if ob.q <= 0:
                    raise ConfigError(f"rho.terms[{i}].q", "exponent must be > 0")
        elif self.obstacles:
            raise ConfigError("rho.terms", "only obstacle_log takes terms")
        object.__setattr__(self, "params", params)
        object.__setattr__(self, "_enc", self._encode())

    # ---- constructors ---------------------------------------------------

    @classmethod
    def constant(cls, alpha):
        return cls("constant", {"alpha": alpha})

    @classmethod
    def funnel(cls, alpha, b: TimeSignal):
        return cls("funnel", {"alpha": alpha}, {"b": b})

    @classmethod
    def sign_shift(cls, alpha, z: TimeSignal):
        return cls("sign_shift", {"alpha": alpha}, {"z": z})

    @classmethod
    def log_ratio(cls, alpha, b_upper: TimeSignal, b_lower: TimeSignal):
        return cls("log_ratio", {"alpha": alpha}, {"b_upper": b_upper, "b_lower": b_lower})

    @classmethod
    def log_tube(cls, alpha, b_upper: TimeSignal, b_lower: TimeSignal):
        return cls("log_tube", {"alpha": alpha}, {"b_upper": b_upper, "b_lower": b_lower})

    @classmethod
    def log_sym(cls, alpha, b: TimeSignal):
        return cls("log_sym", {"alpha": alpha}, {"b": b})

    @classmethod
    def linear(cls, alpha):
        return cls("linear", {"alpha": alpha})

    @classmethod
    def linear_track(cls, alpha, z: TimeSignal):
        return cls("linear_track", {"alpha": alpha}, {"z": z})

    @classmethod
    def log_surface(cls, alpha, b: TimeSignal):
        return cls("log_surface", {"alpha": alpha}, {"b": b})

    @classmethod
    def annulus_log(cls, q, b_upper: TimeSignal, b_lower: TimeSignal):
        return cls("annulus_log", {"q": q}, {"b_upper": b_upper, "b_lower": b_lower})

    @classmethod
    def obstacle_log(cls, terms):
        def one(t):
            if isinstance(t, Obstacle):
                return t
            if isinstance(t, Mapping):
                return Obstacle(tuple(map(float, t["center"])), float(t["q"]), float(t["b"]))
            return Obstacle(tuple(map(float, t[0])), float(t[1]), float(t[2]))
        obs = tuple(one(t) for t in terms)
        return cls("obstacle_log", obstacles=obs)

    @classmethod
    def norm_log(cls, alpha, q):
        return cls("norm_log", {"alpha": alpha, "q": q})

    @classmethod
    def exp_barrier(cls, sign, e=0.98):
        return cls("exp_barrier", {"sign": sign, "e": e})

    @classmethod
    def disk_log(cls, sign):
        return cls("disk_log", {"sign": sign})

    # ---- (de)serialization ----------------------------------------------

    @classmethod
    def from_dict(cls, data: Mapping[str, Any], where: str = "rho") -> DensityField:
        if not isinstance(data, Mapping):
            raise ConfigError(where, "expected an object with a 'kind' field")
        if "kind" not in data:
            raise ConfigError(f"{where}.kind", "missing")
        kind = data["kind"]
        if kind not in _CATALOG:
            raise ConfigError(f"{where}.kind", f"unknown density kind {kind!r}")
        _, _, pnames, snames = _CATALOG[kind]
        params, signals, obstacles = {}, {}, ()
        for key, value in data.items():
            if key == "kind":
                continue
            if key in snames:
                signals[key] = TimeSignal.from_dict(value, f"{where}.{key}")
            elif key == "terms" and kind == "obstacle_log":
                try:
                    obstacles = tuple(Obstacle(tuple(map(float, t["center"])), float(t["q"]), float(t["b"]))
                                      for t in value)
                except (KeyError, TypeError, ValueError):
                    raise ConfigError(f"{where}.terms", "each term needs center [x1, x2], q and b") from None
            else:
                params[key] = value
        try:
            return cls(kind, params, signals, obstacles)
        except ConfigError as exc:
            raise ConfigError(exc.field.replace("rho", where, 1), exc.rule) from None

    def to_dict(self) -> dict[str, Any]:
        out: dict[str, Any] = {"kind": self.kind, **self.params}
        for name, sig in self.signals.items():
            out[name] = sig.to_dict()
        if self.kind == "obstacle_log":
            out["terms"] = [{"center": list(o.center), "q": o.q, "b": o.b} for o in self.obstacles]
        return out

    # ---- kernel encoding -------------------------------------------------

    def _encode(self):
        code, _, pnames, snames = _CATALOG[self.kind]
        par = np.zeros(K.PAR_WIDTH)
        if self.kind == "obstacle_log":
            par[0] = len(self.obstacles)
            for i, ob in enumerate(self.obstacles):
                par[1 + 4 * i:5 + 4 * i] = [ob.center[0], ob.center[1], ob.q, ob.b]
        else:
            for i, name in enumerate(pnames):
                par[i] = self.params[name]
        sigs = np.zeros((K.N_SIGS, K.SIG_WIDTH))
        for i, name in enumerate(snames):
            sigs[i] = self.signals[name].code
        return code, par, sigs

    @property
    def encoded(self):
        """``(kind code, parameter array, signal matrix)`` for the kernels."""
        return self._enc  # type: ignore[attr-defined]

    @property
    def dim(self) -> int:
        """State dimension the field acts on (0 = any)."""
        return _CATALOG[self.kind][1]

    @property
    def singular_set(self) -> str:
        return _SINGULAR_SETS[self.kind]

    @property
    def has_singular_set(self) -> bool:
        return self.singular_set != "empty"

    def signal(self, name: str) -> TimeSignal:
        return self.signals[name]

    def __call__(self, x, t):
        return rho_eval(self, x, t)


def _vec(x) -> np.ndarray:
    return np.atleast_1d(np.asarray(x, dtype=float))


def rho_eval(rho: DensityField, x, t: float, clamp: float | None = None) -> float:
    """Exact value of ``rho(x, t)``; optionally clamped to ``[-clamp, clamp]``.

    Raises :class:`SingularEvaluation` when ``(x, t)`` is in the singular set.
    """
    code, par, sigs = rho.encoded
    xv = _vec(x)
    val, ok = K.rho_value(code, par, sigs, xv, float(t))
    if not ok:
        raise SingularEvaluation(rho.kind, rho.singular_set, tuple(xv), t)
    if clamp is not None:
        val = min(max(val, -clamp), clamp)
    return float(val)


def rho_many(rho: DensityField, xs, ts) -> np.ndarray:
    """Vectorized evaluation; ``nan`` marks samples in the singular set."""
    code, par, sigs = rho.encoded
    xs = np.ascontiguousarray(np.asarray(xs, dtype=float).reshape(len(ts), -1))
    return K.rho_many(code, par, sigs, xs, np.ascontiguousarray(ts, dtype=float))


def singular_distance(rho: DensityField, x, t: float) -> float:
    """Euclidean distance from ``x`` to the singular set at time ``t`` (``inf`` if empty)."""
    code, par, sigs = rho.encoded
    return float(K.singular_distance_value(code, par, sigs, _vec(x), float(t)))


def singular_distance_many(rho: DensityField, xs, ts, cap: float = math.inf) -> np.ndarray:
    """Vectorized :func:`singular_distance`.

    With a finite ``cap``, distances at or above ``cap`` may be replaced by a
    cheaper lower bound (still ``>= cap``); values below ``cap`` are exact.
    """
    code, par, sigs = rho.encoded
    xs = np.ascontiguousarray(np.asarray(xs, dtype=float).reshape(len(ts), -1))
    return K.singular_distance_many(code, par, sigs, xs, np.ascontiguousarray(ts, dtype=float), float(cap))


def _cmp(a: float, b: float) -> int:
    return int(a > b) - int(a < b)


def _label(sign: int) -> str:
    return POSITIVE if sign > 0 else NEGATIVE if sign < 0 else ZERO


def _sgn(v: float) -> int:
    return _cmp(v, 0.0)


def sign_region(rho: DensityField, x, t: float) -> str:
    """Classify ``(x, t)`` as positive, negative, zero or singular from closed-form inequalities."""
    xv = _vec(x)
    p = rho.params
    kind = rho.kind
    sig = {name: s.evaluate(float(t)) for name, s in rho.signals.items()}
    a = _sgn(p.get("alpha", 1.0))
    if kind == "constant":
        return _label(a)
    y = xv[0]
    if kind == "funnel":
        if abs(y) >= sig["b"]:
            return SINGULAR
        return _label(a)
    if kind == "sign_shift":
        return _label(a * _cmp(y, sig["z"]) * _sgn(y))
    if kind in ("log_ratio", "log_tube"):
        num, den = sig["b_upper"] - y, y - sig["b_lower"]
        if num <= 0 or den <= 0:
            return SINGULAR
        s = _cmp(num, den)
        return _label(-a * s if kind == "log_ratio" else a * s)
    if kind == "log_sym":
        b = sig["b"]
        if abs(y) >= b:
            return SINGULAR
        return _label(a * _cmp(b - y, b + y))
    if kind == "linear":
        return _label(-a * _sgn(y))
    if kind == "linear_track":
        return _label(-a * _cmp(y, sig["z"]))
    if kind == "log_surface":
        arg = y - sig["b"]
        if arg <= 0:
            return SINGULAR
        return _label(-a * _cmp(arg, 1.0))
    if kind == "annulus_log":
        q = p["q"]
        s = abs(xv[0]) ** q + abs(xv[1]) ** q
        num, den = sig["b_upper"] - s, s - sig["b_lower"]
        if num <= 0 or den <= 0:
            return SINGULAR
        return _label(_cmp(num, den))
    if kind == "obstacle_log":
        prod = 1.0
        for ob in rho.obstacles:
            v = abs(xv[0] - ob.center[0]) ** ob.q + abs(xv[1] - ob.center[1]) ** ob.q - ob.b
            if v <= 0:
                return SINGULAR
            prod *= v
        return _label(_cmp(prod, 1.0))
    if kind == "norm_log":
        q = p["q"]
        s = abs(xv[0]) ** q + abs(xv[1]) ** q
        if s <= 1.0:
            return SINGULAR
        return _label(a * _cmp(s - 1.0, 1.0))
    r2 = xv[0] * xv[0] + xv[1] * xv[1]
    if r2 - 1.0 <= 0:
        return SINGULAR
    if kind == "exp_barrier":
        return _label(int(p["sign"]))
    if kind == "disk_log":
        return _label(int(p["sign"]) * _cmp(r2 - 1.0, 1.0))
    raise AssertionError(kind)


def is_forbidden(rho: DensityField, x, t: float) -> bool:
    code, par, sigs = rho.encoded
    return not K.rho_value(code, par, sigs, _vec(x), float(t))[1]
