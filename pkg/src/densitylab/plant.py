"""SISO polynomial plants ``Q(p) y = k R(p) u + d``: validation, realization, decomposition."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Any, Iterable, Mapping, Sequence

import numpy as np
from numpy.polynomial import polynomial as P

from densitylab.errors import ConfigError, DimensionError, NotHurwitz, RescaleInputFirst


@dataclass(frozen=True)
class Polynomial:
    """Real polynomial with ascending coefficients ``coeffs[i]`` of ``lambda**i``."""

    coeffs: tuple[float, ...]

    def __post_init__(self) -> None:
        c = tuple(float(v) for v in self.coeffs)
        if not c:
            raise ValueError("polynomial needs at least one coefficient")
        if any(not math.isfinite(v) for v in c):
            raise ValueError("polynomial coefficients must be finite")
        if c[-1] == 0.0 and len(c) > 1:
            raise ValueError("leading coefficient must be nonzero")
        object.__setattr__(self, "coeffs", c)

    @classmethod
    def from_roots(cls, roots: Iterable[float]) -> Polynomial:
        return cls(tuple(np.real(P.polyfromroots(list(roots)))))

    @classmethod
    def trimmed(cls, coeffs: Sequence[float], tol: float = 0.0) -> Polynomial:
        """Build from coefficients, dropping (near-)zero leading terms."""
        c = list(coeffs)
        while len(c) > 1 and abs(c[-1]) <= tol:
            c.pop()
        return cls(tuple(c) if c else (0.0,))

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    @property
    def monic(self) -> bool:
        return self.coeffs[-1] == 1.0

    @property
    def is_zero(self) -> bool:
        return self.coeffs == (0.0,)

    def padded(self, n: int) -> np.ndarray:
        """Ascending coefficients padded with zeros to length ``n``."""
        if self.degree >= n and not self.is_zero:
            raise DimensionError(f"degree {self.degree} does not fit in {n} coefficients")
        out = np.zeros(n)
        m = min(n, len(self.coeffs))
        out[:m] = self.coeffs[:m]
        return out

    def __call__(self, lam):
        return P.polyval(lam, self.coeffs)

    def __add__(self, other: Polynomial) -> Polynomial:
        return Polynomial.trimmed(P.polyadd(self.coeffs, other.coeffs))

    def __sub__(self, other: Polynomial) -> Polynomial:
        return Polynomial.trimmed(P.polysub(self.coeffs, other.coeffs))

    def __mul__(self, other) -> Polynomial:
        if isinstance(other, Polynomial):
            return Polynomial.trimmed(P.polymul(self.coeffs, other.coeffs))
        return Polynomial.trimmed(np.asarray(self.coeffs) * float(other))

    __rmul__ = __mul__

    def shift(self) -> Polynomial:
        """Multiply by ``lambda``."""
        if self.is_zero:
            return self
        return Polynomial((0.0, *self.coeffs))

    def roots(self) -> np.ndarray:
        return P.polyroots(self.coeffs) if self.degree > 0 else np.array([])

    def is_hurwitz(self) -> bool:
        return routh_hurwitz(self)


LAMBDA = Polynomial((0.0, 1.0))


def routh_hurwitz(p: Polynomial) -> bool:
    """True iff all roots of ``p`` lie in the open left half-plane (Routh array test)."""
    a = np.asarray(p.coeffs[::-1], dtype=float)  # descending
    if a[0] < 0:
        a = -a
    n = len(a) - 1
    if n == 0:
        return True
    if np.any(a <= 0):
        return False
    rows = [a[0::2].copy(), a[1::2].copy()]
    width = len(rows[0])
    rows = [np.pad(r, (0, width - len(r))) for r in rows]
    for _ in range(n - 1):
        r0, r1 = rows[-2], rows[-1]
        if r1[0] <= 0:
            return False
        nxt = np.zeros(width)
        for j in range(width - 1):
            nxt[j] = (r1[0] * r0[j + 1] - r0[0] * r1[j + 1]) / r1[0]
        rows.append(nxt)
    return bool(all(r[0] > 0 for r in rows[: n + 1]))


def companion(rm: Polynomial) -> tuple[np.ndarray, np.ndarray]:
    """Frobenius matrix with characteristic polynomial ``rm`` (monic) and input ``b = e_last``."""
    if not rm.monic:
        raise ConfigError("Rm", "must be monic")
    m = rm.degree
    F = np.zeros((m, m))
    if m:
        F[:-1, 1:] = np.eye(m - 1)
        F[-1, :] = -np.asarray(rm.coeffs[:-1])
    b = np.zeros(m)
    if m:
        b[-1] = 1.0
    return F, b


@dataclass(frozen=True)
class PolyPlant:
    """``Q(p) y = k R(p) u + d`` with relative degree one and Hurwitz ``R``.

    ``y_derivs`` holds ``(y(0), y'(0), ..., y^(n-1)(0))``; missing entries are zero.
    """

    Q: Polynomial
    R: Polynomial
    k: float = 1.0
    y_derivs: tuple[float, ...] = ()

    def __post_init__(self) -> None:
        if not self.Q.monic:
            raise ConfigError("plant.Q", "must be monic")
        if not self.R.monic:
            raise ConfigError("plant.R", "must be monic")
        if self.Q.degree < 1:
            raise ConfigError("plant.Q", "degree must be >= 1")
        if self.Q.degree - self.R.degree != 1:
            raise ConfigError("plant.R", "relative degree deg Q - deg R must equal 1")
        if not routh_hurwitz(self.R):
            raise ConfigError("plant.R", "must be Hurwitz")
        if not (self.k > 0 and math.isfinite(self.k)):
            raise ConfigError("plant.k", "must be > 0")
        ic = tuple(float(v) for v in self.y_derivs)
        if len(ic) > self.n:
            raise ConfigError("plant.y_derivs", f"at most n = {self.n} initial derivatives")
        object.__setattr__(self, "y_derivs", ic + (0.0,) * (self.n - len(ic)))

    @property
    def n(self) -> int:
        return self.Q.degree

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> PolyPlant:
        for key in ("Q", "R"):
            if key not in data:
                raise ConfigError(f"plant.{key}", "missing ascending coefficient list")
        try:
            return cls(Polynomial(tuple(data["Q"])), Polynomial(tuple(data["R"])),
                       float(data.get("k", 1.0)), tuple(data.get("y_derivs", ())))
        except (TypeError, ValueError) as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigError("plant", str(exc)) from None

    def to_dict(self) -> dict[str, Any]:
        return {"Q": list(self.Q.coeffs), "R": list(self.R.coeffs), "k": self.k,
                "y_derivs": list(self.y_derivs)}


@dataclass(frozen=True)
class Decomposition:
    """``Q = lambda R_m + k0y R_m + dQt`` and ``R = R_m + dR``; ``c0 = (c0y, c0u, k0y)``.

    ``c0u`` is the negated coefficient vector of ``dR`` so that the output obeys
    ``y' = u - c0^T w + dhat`` with ``w = (V_y, V_u, y)``.
    """

    Rm: Polynomial
    Qm: Polynomial
    dQ: Polynomial
    dR: Polynomial
    k0y: float
    dQt: Polynomial
    c0: np.ndarray = field(compare=False)

    @property
    def n(self) -> int:
        return self.Rm.degree + 1

    @property
    def c0y(self) -> np.ndarray:
        return self.c0[: self.n - 1]

    @property
    def c0u(self) -> np.ndarray:
        return self.c0[self.n - 1: 2 * self.n - 2]

    def reconstruct(self) -> tuple[Polynomial, Polynomial]:
        Q = self.Rm.shift() + self.Rm * self.k0y + self.dQt
        return Q, self.Rm + self.dR


def _decompose_coeffs(q: np.ndarray, r: np.ndarray, rm: Polynomial):
    n = len(q) - 1
    Q = Polynomial.trimmed(q)
    R = Polynomial.trimmed(r)
    Qm = rm.shift()
    dQ = Q - Qm
    k0y = float(dQ.coeffs[n - 1]) if dQ.degree == n - 1 and not dQ.is_zero else 0.0
    dQt = dQ - rm * k0y
    if not dQt.is_zero and dQt.degree > n - 2:
        # cancel round-off in the leading coefficient
        dQt = Polynomial.trimmed(dQt.coeffs[: n - 1] if n > 1 else (0.0,))
    dR = R - rm
    c0y = dQt.padded(n - 1) if n > 1 else np.zeros(0)
    c0u = 0.0 - dR.padded(n - 1) if n > 1 else np.zeros(0)
    c0 = np.concatenate([c0y, c0u, [k0y]])
    return Qm, dQ, dR, k0y, dQt, c0


def decompose(plant: PolyPlant, Rm: Polynomial) -> Decomposition:
    """Split the plant against the model polynomial ``Rm`` (monic Hurwitz, degree n-1)."""
    if plant.k != 1.0:
        raise RescaleInputFirst(plant.k)
    n = plant.n
    if Rm.degree != n - 1:
        raise DimensionError(f"R_m must have degree n-1 = {n - 1}, got {Rm.degree}")
    if not Rm.monic:
        raise ConfigError("Rm", "must be monic")
    if not routh_hurwitz(Rm):
        raise NotHurwitz("R_m must be Hurwitz")
    Qm, dQ, dR, k0y, dQt, c0 = _decompose_coeffs(np.array(plant.Q.coeffs), np.array(plant.R.coeffs), Rm)
    return Decomposition(Rm=Rm, Qm=Qm, dQ=dQ, dR=dR, k0y=k0y, dQt=dQt, c0=c0)


@dataclass(frozen=True)
class StateSpaceRealization:
    """Observable canonical form; ``y = C x`` equals the first state."""

    A: np.ndarray
    Bu: np.ndarray
    Bd: np.ndarray
    C: np.ndarray
    x0: np.ndarray

    def markov(self, count: int, channel: str = "u") -> np.ndarray:
        B = self.Bu if channel == "u" else self.Bd
        out, v = [], B.copy()
        for _ in range(count):
            out.append(float(self.C @ v))
            v = self.A @ v
        return np.array(out)

    def rhs(self, u_fn=None, d_fn=None):
        """Open-loop right-hand side ``x' = A x + Bu u(t) + Bd d(t)``."""
        def f(x, t):
            u = u_fn(t) if u_fn is not None else 0.0
            d = d_fn(t) if d_fn is not None else 0.0
            return self.A @ x + self.Bu * u + self.Bd * d
        return f


def realize(plant: PolyPlant) -> StateSpaceRealization:
    """Observable canonical realization with initial state matching ``plant.y_derivs``."""
    n = plant.n
    q = np.asarray(plant.Q.coeffs)
    A = np.zeros((n, n))
    A[:, 0] = -q[n - 1::-1]
    A[:-1, 1:] = np.eye(n - 1)
    r = plant.R.padded(n)
    Bu = plant.k * r[n - 1::-1]
    Bd = np.zeros(n)
    Bd[-1] = 1.0
    C = np.zeros(n)
    C[0] = 1.0
    O = np.empty((n, n))
    row = C.copy()
    for i in range(n):
        O[i] = row
        row = row @ A
    # O is unit lower-triangular in observable canonical form
    assert np.allclose(np.diag(O), 1.0) and np.allclose(np.triu(O, 1), 0.0)
    x0 = np.linalg.solve(O, np.asarray(plant.y_derivs))
    return StateSpaceRealization(A=A, Bu=Bu, Bd=Bd, C=C, x0=x0)


@dataclass(frozen=True)
class CoefficientBox:
    """Interval box of plant coefficients (ascending, monic leading terms excluded)."""

    q_lo: tuple[float, ...]
    q_hi: tuple[float, ...]
    r_lo: tuple[float, ...]
    r_hi: tuple[float, ...]

    def vertices(self):
        lo = list(self.q_lo) + list(self.r_lo)
        hi = list(self.q_hi) + list(self.r_hi)
        nq = len(self.q_lo)
        for choice in itertools.product(*[(a, b) if a != b else (a,) for a, b in zip(lo, hi)]):
            yield np.array(list(choice[:nq]) + [1.0]), np.array(list(choice[nq:]) + [1.0])


def c0_norm_bound(plants, Rm: Polynomial) -> float:
    """Largest ``|c0|`` over a list of plants or the vertices of a :class:`CoefficientBox`.

    ``c0`` is affine in the plant coefficients and the Euclidean norm is convex,
    so the maximum over a box is attained at a vertex.
    """
    if isinstance(plants, CoefficientBox):
        pairs = list(plants.vertices())
    else:
        plants = list(plants)
        pairs = []
        for pl in plants:
            if pl.k != 1.0:
                raise RescaleInputFirst(pl.k)
            pairs.append((np.array(pl.Q.coeffs), np.array(pl.R.coeffs)))
    if not pairs:
        raise ValueError("c0_norm_bound needs a non-empty plant set")
    best = 0.0
    for q, r in pairs:
        if len(q) - 1 != Rm.degree + 1:
            raise DimensionError("plant order does not match R_m")
        c0 = _decompose_coeffs(q, r, Rm)[-1]
        best = max(best, float(np.linalg.norm(c0)))
    return best
