"""Deterministic fixed-step explicit integration."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import Any, Callable, Mapping

import numpy as np

from densitylab.dyncore import trajectory as T
from densitylab.errors import ConfigError, SingularEvaluation

METHODS = ("rk4", "euler")


@dataclass(frozen=True)
class IntegratorConfig:
    """Fixed step ``step`` for ``duration`` seconds, recording every ``record_every`` steps.

    ``clamp`` bounds ``|rho|`` on the integration path; a state closer than
    ``eps_sing`` to the singular set of the density field stops integration.
    """

    step: float
    duration: float
    method: str = "rk4"
    clamp: float = 1e6
    eps_sing: float = 1e-6
    record_every: int = 1

    def __post_init__(self) -> None:
        if not (self.step > 0 and math.isfinite(self.step)):
            raise ConfigError("integrator.step", "must be > 0")
        if not (self.duration >= 0 and math.isfinite(self.duration)):
            raise ConfigError("integrator.duration", "must be >= 0")
        if self.method not in METHODS:
            raise ConfigError("integrator.method", f"must be one of {METHODS}")
        if not self.clamp >= 1:
            raise ConfigError("integrator.clamp", "must be >= 1")
        if not 0 < self.eps_sing < 1:
            raise ConfigError("integrator.eps_sing", "must lie in (0, 1)")
        if int(self.record_every) != self.record_every or self.record_every < 1:
            raise ConfigError("integrator.record_every", "must be a positive integer")

    @property
    def nsteps(self) -> int:
        return int(round(self.duration / self.step))

    @property
    def sample_spacing(self) -> float:
        return self.step * self.record_every

    def replace(self, **changes) -> IntegratorConfig:
        data = asdict(self)
        data.update({k: v for k, v in changes.items() if v is not None})
        return IntegratorConfig(**data)

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> IntegratorConfig:
        known = {"step", "duration", "method", "clamp", "eps_sing", "record_every"}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"integrator.{sorted(unknown)[0]}", "unknown field")
        for key in ("step", "duration"):
            if key not in data:
                raise ConfigError(f"integrator.{key}", "missing")
        return cls(**data)


def rk4_step(rhs: Callable, x: np.ndarray, t: float, h: float) -> np.ndarray:
    k1 = rhs(x, t)
    k2 = rhs(x + 0.5 * h * k1, t + 0.5 * h)
    k3 = rhs(x + 0.5 * h * k2, t + 0.5 * h)
    k4 = rhs(x + h * k3, t + h)
    return x + h * (k1 + 2.0 * k2 + 2.0 * k3 + k4) / 6.0


def euler_step(rhs: Callable, x: np.ndarray, t: float, h: float) -> np.ndarray:
    return x + h * rhs(x, t)


def integrate(rhs: Callable, x0, cfg: IntegratorConfig, *, t0: float = 0.0,
              forbidden: Callable | None = None,
              singular_distance: Callable | None = None,
              lyapunov: Callable | None = None) -> T.Trajectory:
    """Integrate ``x' = rhs(x, t)`` from ``x0`` with a fixed step.

    ``forbidden(x, t)`` and ``singular_distance(x, t)`` describe the singular
    set of the problem, if any. Integration stops at the last valid sample on
    a non-finite state, on entry into the forbidden set, or when the distance
    to the singular set drops below ``cfg.eps_sing``. ``lyapunov(x)`` fills the
    ``V`` column (default ``0.5*|x|^2``).
    """
    step = euler_step if cfg.method == "euler" else rk4_step
    x = np.atleast_1d(np.asarray(x0, dtype=float)).copy()
    if forbidden is not None and forbidden(x, t0):
        raise ValueError("initial state lies in the forbidden set")
    h = cfg.step
    samples = [x.copy()]
    stop = T.COMPLETED
    stop_time = t0 + cfg.nsteps * h
    for k in range(cfg.nsteps):
        t = t0 + k * h
        with np.errstate(all="ignore"):
            try:
                xn = np.asarray(step(rhs, x, t, h), dtype=float)
            except SingularEvaluation:
                stop, stop_time = T.FORBIDDEN_ENTRY, t + h
                break
            except (ArithmeticError, ValueError):
                xn = np.full_like(x, math.nan)
        tn = t0 + (k + 1) * h
        if not np.all(np.isfinite(xn)):
            stop, stop_time = T.NUMERICAL_BLOWUP, tn
            break
        if forbidden is not None and forbidden(xn, tn):
            stop, stop_time = T.FORBIDDEN_ENTRY, tn
            break
        if singular_distance is not None and singular_distance(xn, tn) < cfg.eps_sing:
            stop, stop_time = T.SINGULAR_APPROACH, tn
            break
        x = xn
        if (k + 1) % cfg.record_every == 0:
            samples.append(x.copy())
    states = np.array(samples)
    vfun = lyapunov or (lambda s: 0.5 * float(s @ s))
    with np.errstate(over="ignore"):
        V = np.array([vfun(s) for s in states])
    return T.Trajectory(t0=t0, h=cfg.sample_spacing, states=states, V=V,
                        stop_reason=stop, stop_time=stop_time)
