"""Catalog of scalar time signals: disturbances, bounds and targets."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Mapping

import numpy as np

from densitylab import _kernels as K
from densitylab.errors import ConfigError, UnboundedSignalError

SIGNAL_KINDS = {
    "zero": K.S_ZERO,
    "constant": K.S_CONSTANT,
    "sinusoid-sum": K.S_SINUSOID_SUM,
    "atan-chatter": K.S_ATAN_CHATTER,
    "exp-decay-mix": K.S_EXP_DECAY_MIX,
    "exp-plus-sin": K.S_EXP_PLUS_SIN,
    "piecewise-linear": K.S_PIECEWISE_LINEAR,
    "atan-square-mix": K.S_ATAN_SQUARE_MIX,
}

# required and optional (default) parameters per kind
_SCHEMA: dict[str, tuple[tuple[str, ...], dict[str, Any]]] = {
    "zero": ((), {}),
    "constant": (("value",), {}),
    "sinusoid-sum": (("terms",), {"offset": 0.0}),
    "atan-chatter": (("a", "k", "omega"), {}),
    "exp-decay-mix": (("a", "lam"), {"c": 0.0, "offset": 0.0, "omega": 1.0, "phase": 0.0}),
    "exp-plus-sin": (("a", "lam"), {"b": 0.0, "omega": 1.0, "offset": 0.0, "phase": 0.0}),
    "piecewise-linear": (("pieces",), {}),
    "atan-square-mix": (("k", "omega"), {"offset": 0.0}),
}

_GRID_SAFETY = 1e-6


@dataclass(frozen=True)
class TimeSignal:
    """A catalog signal ``s(t)``, defined for ``t >= 0``.

    ``params`` holds plain numbers, except ``terms`` for ``sinusoid-sum``
    (``[a, omega]`` or ``[a, omega, phase]`` triples) and ``pieces`` for
    ``piecewise-linear`` (``[until, slope, intercept]``; a piece covers
    ``t <= until`` and the last piece must use ``until = None``).
    """

    kind: str
    params: Mapping[str, Any] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.kind not in _SCHEMA:
            raise ConfigError("signal.kind", f"unknown signal kind {self.kind!r}")
        required, optional = _SCHEMA[self.kind]
        missing = [k for k in required if k not in self.params]
        if missing:
            raise ConfigError(f"signal.{missing[0]}", f"required for kind {self.kind!r}")
        extra = set(self.params) - set(required) - set(optional)
        if extra:
            raise ConfigError(f"signal.{sorted(extra)[0]}", f"unknown parameter for kind {self.kind!r}")
        merged = dict(optional)
        merged.update(self.params)
        object.__setattr__(self, "params", merged)
        object.__setattr__(self, "_code", self._encode())

    # ---- constructors -------------------------------------------------

    @classmethod
    def zero(cls) -> TimeSignal:
        return cls("zero")

    @classmethod
    def constant(cls, value: float) -> TimeSignal:
        return cls("constant", {"value": value})

    @classmethod
    def sinusoid_sum(cls, offset: float, terms) -> TimeSignal:
        return cls("sinusoid-sum", {"offset": offset, "terms": [list(t) for t in terms]})

    @classmethod
    def atan_chatter(cls, a: float, k: float, omega: float) -> TimeSignal:
        return cls("atan-chatter", {"a": a, "k": k, "omega": omega})

    @classmethod
    def exp_decay_mix(cls, a, lam, c=0.0, offset=0.0, omega=1.0, phase=0.0) -> TimeSignal:
        return cls("exp-decay-mix", {"a": a, "lam": lam, "c": c, "offset": offset,
                                     "omega": omega, "phase": phase})

    @classmethod
    def exp_plus_sin(cls, a, lam, b=0.0, omega=1.0, offset=0.0, phase=0.0) -> TimeSignal:
        return cls("exp-plus-sin", {"a": a, "lam": lam, "b": b, "omega": omega,
                                    "offset": offset, "phase": phase})

    @classmethod
    def piecewise_linear(cls, pieces) -> TimeSignal:
        return cls("piecewise-linear", {"pieces": [list(p) for p in pieces]})

    @classmethod
    def atan_square_mix(cls, offset: float, k: float, omega: float) -> TimeSignal:
        return cls("atan-square-mix", {"offset": offset, "k": k, "omega": omega})

    @classmethod
    def from_dict(cls, data: Mapping[str, Any], where: str = "signal") -> TimeSignal:
        if not isinstance(data, Mapping):
            raise ConfigError(where, "expected an object with a 'kind' field")
        if "kind" not in data:
            raise ConfigError(f"{where}.kind", "missing")
        params = {k: v for k, v in data.items() if k != "kind"}
        try:
            return cls(data["kind"], params)
        except ConfigError as exc:
            raise ConfigError(exc.field.replace("signal", where, 1), exc.rule) from None

    def to_dict(self) -> dict[str, Any]:
        return {"kind": self.kind, **self.params}

    # ---- encoding -----------------------------------------------------

    def _encode(self) -> np.ndarray:
        p = self.params
        code = np.zeros(K.SIG_WIDTH)
        code[0] = SIGNAL_KINDS[self.kind]
        try:
            if self.kind == "constant":
                code[1] = float(p["value"])
            elif self.kind == "sinusoid-sum":
                terms = p["terms"]
                if len(terms) > K.MAX_TERMS:
                    raise ConfigError("signal.terms", f"at most {K.MAX_TERMS} terms")
                code[1] = float(p["offset"])
                code[2] = len(terms)
                for i, term in enumerate(terms):
                    if len(term) not in (2, 3):
                        raise ConfigError("signal.terms", "each term is [a, omega] or [a, omega, phase]")
                    code[3 + 3 * i] = float(term[0])
                    code[4 + 3 * i] = float(term[1])
                    code[5 + 3 * i] = float(term[2]) if len(term) == 3 else 0.0
            elif self.kind == "atan-chatter":
                code[1:4] = [float(p["a"]), float(p["k"]), float(p["omega"])]
            elif self.kind == "exp-decay-mix":
                code[1:7] = [float(p[k]) for k in ("a", "lam", "c", "offset", "omega", "phase")]
            elif self.kind == "exp-plus-sin":
                code[1:7] = [float(p[k]) for k in ("a", "lam", "b", "omega", "offset", "phase")]
            elif self.kind == "piecewise-linear":
                pieces = p["pieces"]
                if not pieces or len(pieces) > K.MAX_TERMS:
                    raise ConfigError("signal.pieces", f"between 1 and {K.MAX_TERMS} pieces")
                code[1] = len(pieces)
                last = -math.inf
                for i, piece in enumerate(pieces):
                    if len(piece) != 3:
                        raise ConfigError("signal.pieces", "each piece is [until, slope, intercept]")
                    until = piece[0]
                    if i == len(pieces) - 1:
                        if until is not None:
                            raise ConfigError("signal.pieces", "last piece must have until = null")
                        until = math.inf
                    elif until is None or float(until) <= last:
                        raise ConfigError("signal.pieces", "breakpoints must be increasing")
                    last = float(until)
                    code[2 + 3 * i] = last
                    code[3 + 3 * i] = float(piece[1])
                    code[4 + 3 * i] = float(piece[2])
            elif self.kind == "atan-square-mix":
                code[1:4] = [float(p["offset"]), float(p["k"]), float(p["omega"])]
        except ConfigError:
            raise
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"signal({self.kind})", f"non-numeric parameter: {exc}") from None
        if not np.all(np.isfinite(code) | (code == math.inf)):
            raise ConfigError(f"signal({self.kind})", "parameters must be finite")
        return code

    @property
    def code(self) -> np.ndarray:
        return self._code  # type: ignore[attr-defined]

    # ---- evaluation ---------------------------------------------------

    def __call__(self, t):
        return self.evaluate(t)

    def evaluate(self, t):
        """Value at time ``t`` (scalar or array)."""
        if np.ndim(t) == 0:
            return float(K.signal_value(self.code, float(t)))
        ts = np.ascontiguousarray(t, dtype=float)
        return K.signal_many(self.code, ts.ravel()).reshape(ts.shape)

    def _grid_sup(self, ts: np.ndarray, curvature: float) -> float:
        """Rigorous ``max |s|`` over ``[ts[0], ts[-1]]`` from samples.

        An interior maximum of ``|s|`` is a critical point, so the nearest
        sample lies within half a spacing and falls short by at most
        ``spacing^2 / 8 * sup |s''|``.
        """
        spacing = float(ts[1] - ts[0]) if len(ts) > 1 else 0.0
        return float(np.max(np.abs(self.evaluate(ts)))) + spacing * spacing / 8.0 * curvature

    def sup_bound(self) -> float:
        """Upper bound on ``sup_{t>=0} |s(t)|``."""
        p = self.params
        kind = self.kind
        if kind == "zero":
            return 0.0
        if kind == "constant":
            return abs(float(p["value"]))
        if kind == "sinusoid-sum":
            return abs(float(p["offset"])) + sum(abs(float(term[0])) for term in p["terms"])
        if kind == "atan-chatter":
            return abs(float(p["a"])) * math.atan(abs(float(p["k"])))
        if kind == "piecewise-linear":
            pieces = self.code
            m = int(pieces[1])
            if pieces[3 + 3 * (m - 1)] != 0.0:
                raise UnboundedSignalError("unbounded signal: piecewise-linear tail has nonzero slope")
            best = abs(self.evaluate(0.0))
            for i in range(m):
                slope, icpt = pieces[3 + 3 * i], pieces[4 + 3 * i]
                lo = 0.0 if i == 0 else max(pieces[2 + 3 * (i - 1)], 0.0)
                hi = pieces[2 + 3 * i]
                if hi < 0.0:
                    continue
                ends = [lo] if not math.isfinite(hi) else [lo, hi]
                best = max(best, *(abs(slope * e + icpt) for e in ends))
            return best * (1.0 + _GRID_SAFETY)
        if kind == "exp-decay-mix":
            a, lam, omega = float(p["a"]), float(p["lam"]), float(p["omega"])
            if lam < 0.0 and a != 0.0:
                raise UnboundedSignalError("unbounded signal: exp-decay-mix with negative decay")
            period = 2.0 * math.pi / abs(omega) if omega != 0.0 else 1.0
            ts = np.linspace(0.0, period, 200001)
            amp = abs(a) * (abs(float(p["c"])) + 1.0)
            curv = amp * lam * lam + 2.0 * abs(a) * abs(lam) * abs(omega) + abs(a) * omega * omega
            return max(self._grid_sup(ts, curv), abs(float(p["offset"]))) * (1.0 + _GRID_SAFETY)
        if kind == "exp-plus-sin":
            a, lam, b = float(p["a"]), float(p["lam"]), float(p["b"])
            omega, offset = float(p["omega"]), float(p["offset"])
            if lam < 0.0 and a != 0.0:
                raise UnboundedSignalError("unbounded signal: exp-plus-sin with negative decay")
            if lam == 0.0 or a == 0.0:
                return (abs(offset + (a if lam == 0.0 else 0.0)) + abs(b)) * (1.0 + _GRID_SAFETY)
            period = 2.0 * math.pi / abs(omega) if (omega != 0.0 and b != 0.0) else 0.0
            window = period + math.log(1e12) / lam
            npts = max(200001, int(200 * window / period) + 1 if period else 200001)
            ts = np.linspace(0.0, window, npts)
            tail = abs(offset) + abs(b) + abs(a) * math.exp(-lam * window)
            curv = abs(a) * lam * lam + abs(b) * omega * omega
            return max(self._grid_sup(ts, curv), tail) * (1.0 + _GRID_SAFETY)
        if kind == "atan-square-mix":
            omega = abs(float(p["omega"]))
            frac = Fraction(omega).limit_denominator(1000)
            if frac.numerator and abs(float(frac) - omega) < 1e-12:
                horizon = 2.0 * math.pi * frac.denominator
            else:
                horizon = 200.0 * math.pi
            npts = max(1_000_001, int(horizon / 5e-5))
            k = abs(float(p["k"]))
            # |d2/dt2 atan(k sin wt)| <= k w^2 + max_u 2|u|/(1+u^2)^2 * k^2 w^2, the max being 3^1.5/8
            curv = 1.0 + k * omega ** 2 + 3.0 ** 1.5 / 8.0 * (k * omega) ** 2
            analytic = abs(float(p["offset"])) + 1.0 + math.atan(k)
            return min(analytic, self._grid_sup(np.linspace(0.0, horizon, npts), curv) * (1.0 + _GRID_SAFETY))
        raise AssertionError(kind)


def signal_eval(s: TimeSignal, t: float) -> float:
    if t < 0:
        raise ValueError("signals are defined for t >= 0")
    return s.evaluate(t)


def signal_sup_bound(s: TimeSignal) -> float:
    return s.sup_bound()
