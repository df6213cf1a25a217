"""Density-based adaptive output controller for relative-degree-one SISO plants.

Filters ``V_y' = F V_y + b y`` and ``V_u' = F V_u + b u`` build the regressor
``w = (V_y, V_u, y)``; the control is ``u = c^T w + tau rho(y, t)`` and the
parameters follow ``c' = -beta y w - gamma c |y| sign(rho(y, t) y)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Any, Mapping

import numpy as np

from densitylab import _kernels as K
from densitylab.analysis import LyapunovForm
from densitylab.density import DensityField, rho_eval, rho_many
from densitylab.dyncore.integrate import IntegratorConfig, rk4_step
from densitylab.dyncore.signals import TimeSignal
from densitylab.dyncore.systems import signal_matrix, stop_name
from densitylab.dyncore.trajectory import Trajectory
from densitylab.errors import ConfigError, ControllerFault, SingularEvaluation
from densitylab.plant import (Decomposition, PolyPlant, Polynomial, StateSpaceRealization, companion,
                              decompose, realize, routh_hurwitz)


def _sign(v: float) -> float:
    return 1.0 if v > 0 else -1.0 if v < 0 else 0.0


@dataclass(frozen=True)
class ControllerConfig:
    """Gains, model polynomial ``Rm`` (defines ``F``), density ``rho`` and target locus ``g``."""

    tau: float
    beta: float
    gamma: float
    Rm: Polynomial
    rho: DensityField
    g: TimeSignal = field(default_factory=TimeSignal.zero)
    c_init: tuple[float, ...] | None = None

    def __post_init__(self) -> None:
        for name in ("tau", "beta", "gamma"):
            v = getattr(self, name)
            if not (v > 0 and math.isfinite(v)):
                raise ConfigError(f"controller.{name}", "must be > 0")
        if not self.Rm.monic:
            raise ConfigError("controller.Rm", "must be monic")
        if not routh_hurwitz(self.Rm):
            raise ConfigError("controller.Rm", "must be Hurwitz")
        if self.rho.dim != 1:
            raise ConfigError("controller.rho", f"density {self.rho.kind!r} is not a scalar-output density")
        if self.c_init is not None:
            if len(self.c_init) != 2 * self.n - 1:
                raise ConfigError("controller.c0_init", f"needs {2 * self.n - 1} entries")
            object.__setattr__(self, "c_init", tuple(float(v) for v in self.c_init))

    @property
    def n(self) -> int:
        return self.Rm.degree + 1

    @property
    def F(self) -> np.ndarray:
        return companion(self.Rm)[0]

    @property
    def b(self) -> np.ndarray:
        return companion(self.Rm)[1]

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> ControllerConfig:
        for key in ("tau", "beta", "gamma", "Rm", "rho"):
            if key not in data:
                raise ConfigError(f"controller.{key}", "missing")
        unknown = set(data) - {"tau", "beta", "gamma", "Rm", "rho", "g", "c0_init"}
        if unknown:
            raise ConfigError(f"controller.{sorted(unknown)[0]}", "unknown field")
        g = TimeSignal.from_dict(data["g"], "controller.g") if "g" in data else TimeSignal.zero()
        return cls(float(data["tau"]), float(data["beta"]), float(data["gamma"]),
                   Polynomial(tuple(data["Rm"])), DensityField.from_dict(data["rho"], "controller.rho"),
                   g, tuple(data["c0_init"]) if data.get("c0_init") is not None else None)

    def to_dict(self) -> dict[str, Any]:
        out = {"tau": self.tau, "beta": self.beta, "gamma": self.gamma, "Rm": list(self.Rm.coeffs),
               "rho": self.rho.to_dict(), "g": self.g.to_dict()}
        if self.c_init is not None:
            out["c0_init"] = list(self.c_init)
        return out

    def sign_hypothesis(self, y_grid, t_grid, band: float = 1e-9) -> tuple[bool, int, int]:
        """Check ``rho(y, t) (y - g(t)) < 0`` for admissible ``y != g`` on a grid.

        Returns ``(ok, violations, checked)``; points within ``band`` of ``g`` and
        points in the singular set are skipped.
        """
        ys, ts = np.meshgrid(np.asarray(y_grid, float), np.asarray(t_grid, float), indexing="ij")
        ys, ts = ys.ravel(), ts.ravel()
        with np.errstate(invalid="ignore"):
            r = rho_many(self.rho, ys[:, None], ts)
        gap = ys - self.g.evaluate(ts)
        sel = np.isfinite(r) & (np.abs(gap) > band * np.maximum(1.0, np.abs(ys)))
        bad = int(np.count_nonzero(r[sel] * gap[sel] >= 0))
        return bad == 0, bad, int(np.count_nonzero(sel))


@dataclass
class ControllerState:
    c: np.ndarray
    Vy: np.ndarray
    Vu: np.ndarray

    def __post_init__(self) -> None:
        self.c = np.asarray(self.c, dtype=float)
        self.Vy = np.asarray(self.Vy, dtype=float)
        self.Vu = np.asarray(self.Vu, dtype=float)
        m = self.Vy.shape[0]
        if self.Vu.shape[0] != m or self.c.shape[0] != 2 * m + 1:
            raise ConfigError("controller_state", "dimensions must be Vy, Vu in R^(n-1) and c in R^(2n-1)")

    @classmethod
    def zeros(cls, n: int) -> ControllerState:
        return cls(np.zeros(2 * n - 1), np.zeros(n - 1), np.zeros(n - 1))

    def regressor(self, y: float) -> np.ndarray:
        return np.concatenate([self.Vy, self.Vu, [y]])


@dataclass
class ClosedLoopState:
    xp: np.ndarray
    ctrl: ControllerState

    @property
    def y(self) -> float:
        # observable canonical form: the output is the first plant state
        return float(self.xp[0])

    def stacked(self) -> np.ndarray:
        return np.concatenate([self.xp, self.ctrl.Vy, self.ctrl.Vu, self.ctrl.c])

    @classmethod
    def from_stacked(cls, z: np.ndarray, n: int) -> ClosedLoopState:
        m = n - 1
        return cls(z[:n].copy(), ControllerState(z[n + 2 * m:].copy(), z[n:n + m].copy(), z[n + m:n + 2 * m].copy()))


def filter_derivatives(state: ControllerState, y: float, u: float, cfg: ControllerConfig):
    F, b = cfg.F, cfg.b
    return F @ state.Vy + b * y, F @ state.Vu + b * u


def _rho(cfg: ControllerConfig, y: float, t: float, clamp: float | None) -> float:
    try:
        return rho_eval(cfg.rho, [y], t, clamp)
    except SingularEvaluation as exc:
        raise ControllerFault(f"controller-fault: density singular at y={y}, t={t}") from exc


def control(state: ControllerState, y: float, t: float, cfg: ControllerConfig,
            clamp: float | None = None) -> float:
    return float(state.c @ state.regressor(y)) + cfg.tau * _rho(cfg, y, t, clamp)


def adapt_derivative(state: ControllerState, y: float, t: float, cfg: ControllerConfig,
                     clamp: float | None = None) -> np.ndarray:
    r = _rho(cfg, y, t, clamp)
    w = state.regressor(y)
    return -cfg.beta * y * w - cfg.gamma * state.c * abs(y) * _sign(r * y)


def closed_loop_rhs(z: np.ndarray, t: float, real: StateSpaceRealization, d: TimeSignal,
                    cfg: ControllerConfig, k: float = 1.0, clamp: float | None = None) -> np.ndarray:
    n = cfg.n
    cl = ClosedLoopState.from_stacked(z, n)
    y = cl.y
    u = control(cl.ctrl, y, t, cfg, clamp)
    dxp = real.A @ cl.xp + real.Bu * (u / k) + real.Bd * d.evaluate(t)
    dvy, dvu = filter_derivatives(cl.ctrl, y, u, cfg)
    dc = adapt_derivative(cl.ctrl, y, t, cfg, clamp)
    return np.concatenate([dxp, dvy, dvu, dc])


def closed_loop_step(cls: ClosedLoopState, t: float, h: float, real: StateSpaceRealization,
                     d: TimeSignal, cfg: ControllerConfig, k: float = 1.0,
                     clamp: float | None = None) -> ClosedLoopState:
    """One joint RK4 step of plant, filters and parameters (control re-evaluated per stage)."""
    z = rk4_step(lambda s, tt: closed_loop_rhs(s, tt, real, d, cfg, k, clamp), cls.stacked(), t, h)
    return ClosedLoopState.from_stacked(z, cfg.n)


@dataclass
class ClosedLoopRun:
    trajectory: Trajectory
    decomposition: Decomposition
    realization: StateSpaceRealization

    @property
    def n(self) -> int:
        return self.decomposition.n

    def block(self, name: str) -> np.ndarray:
        n, m = self.n, self.n - 1
        s = self.trajectory.states
        return {"xp": s[:, :n], "Vy": s[:, n:n + m], "Vu": s[:, n + m:n + 2 * m],
                "c": s[:, n + 2 * m:], "y": s[:, 0]}[name]

    def regressor(self) -> np.ndarray:
        return np.concatenate([self.block("Vy"), self.block("Vu"), self.block("y")[:, None]], axis=1)


def simulate(plant: PolyPlant, cfg: ControllerConfig, d: TimeSignal, integ: IntegratorConfig,
             t0: float = 0.0) -> ClosedLoopRun:
    """Integrate the closed loop with the compiled kernel.

    The commanded input is divided by the known gain ``k`` before it enters the
    plant, so the loop sees a unit-gain plant; ``V`` is the augmented Lyapunov
    function with the true ``c0`` of that plant.
    """
    if plant.n != cfg.n:
        raise ConfigError("controller.Rm", f"degree must be n-1 = {plant.n - 1}")
    real = realize(plant)
    dec = decompose(replace(plant, k=1.0), cfg.Rm)
    n, m = plant.n, plant.n - 1
    c_init = np.asarray(cfg.c_init, float) if cfg.c_init is not None else np.zeros(2 * n - 1)
    z0 = np.concatenate([real.x0, np.zeros(2 * m), c_init])
    code, par, sigs = cfg.rho.encoded
    states, us, rhos, nvalid, stop, stop_time = K.integrate_kernel(
        K.F_ADAPTIVE, z0, float(t0), integ.step, integ.nsteps, integ.record_every,
        integ.method == "euler", integ.clamp, integ.eps_sing, code, par, sigs, 0,
        signal_matrix([d]), np.zeros(1), n, real.A, real.Bu, real.Bd, real.C,
        cfg.F, cfg.b, cfg.tau, cfg.beta, cfg.gamma, 1.0 / plant.k)
    lyap = LyapunovForm.adaptive(n, cfg.beta, dec.c0)
    traj = Trajectory(t0=float(t0), h=integ.sample_spacing, states=states, u=us, rho=rhos,
                      V=lyap.along(states), stop_reason=stop_name(stop), stop_time=float(stop_time))
    return ClosedLoopRun(traj, dec, real)


def filter_matrix_hurwitz(cfg: ControllerConfig, dec: Decomposition) -> bool:
    """Routh test on the characteristic polynomial of ``F + b c0u^T``."""
    M = cfg.F + np.outer(cfg.b, dec.c0u)
    if M.shape[0] == 0:
        return True
    coeffs = np.real(np.poly(M))[::-1]
    return routh_hurwitz(Polynomial(tuple(coeffs)))
