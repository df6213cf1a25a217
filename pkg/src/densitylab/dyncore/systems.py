"""Perturbed density systems driven by the compiled integration kernel."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from densitylab import _kernels as K
from densitylab.density import DensityField, rho_eval
from densitylab.dyncore.integrate import IntegratorConfig
from densitylab.dyncore.signals import TimeSignal
from densitylab.dyncore.trajectory import STOP_REASONS, Trajectory
from densitylab.errors import ConfigError

FAMILY_CODES = {
    "scalar-ex1": K.F_SCALAR,
    "planar-ex2": K.F_PLANAR,
    "planar-ex3": K.F_PLANAR,
    "pendulum": K.F_PENDULUM,
}
FAMILY_DIMS = {"scalar-ex1": 1, "planar-ex2": 2, "planar-ex3": 2, "pendulum": 2}

_STOP_NAMES = {
    K.STOP_COMPLETED: STOP_REASONS[0],
    K.STOP_BLOWUP: "numerical-blowup",
    K.STOP_FORBIDDEN: "forbidden-entry",
    K.STOP_SINGULAR_APPROACH: "singular-approach",
    K.STOP_CONTROLLER_FAULT: "controller-fault",
}


def stop_name(code: int) -> str:
    return _STOP_NAMES[int(code)]


def signal_matrix(signals) -> np.ndarray:
    out = np.zeros((max(len(signals), 2), K.SIG_WIDTH))
    for i, s in enumerate(signals):
        out[i] = s.code
    return out


def dummy_plant():
    """Placeholder plant arrays for the non-adaptive kernel families."""
    return (1, np.zeros((1, 1)), np.zeros(1), np.zeros(1), np.zeros(1), np.zeros((0, 0)), np.zeros(0))


@dataclass(frozen=True)
class DensitySystem:
    """``x' = -rho x + d`` (scalar), the planar rotation family, or a damped pendulum.

    Planar: ``x1' = x2 - rho1 x1 + d1``, ``x2' = -x1 - rho2 x2 + d2`` with
    ``rho2 = rho`` (``rho2='same'``) or ``rho2 = 0`` (``rho2='zero'``).
    Pendulum: ``x1' = x2 + d1``, ``x2' = -(g/l) sin x1 - rho x2 + d2``.
    """

    family: str
    rho: DensityField
    disturbances: tuple[TimeSignal, ...]
    rho2: str = "same"
    g_over_l: float = 1.0

    def __post_init__(self) -> None:
        if self.family not in FAMILY_CODES:
            raise ConfigError("family", f"unknown family {self.family!r}")
        dim = FAMILY_DIMS[self.family]
        if self.rho.dim not in (0, dim) and not (self.family == "pendulum" and self.rho.dim == 0):
            raise ConfigError("rho", f"{self.rho.kind} acts on dimension {self.rho.dim}, family needs {dim}")
        if len(self.disturbances) != dim:
            raise ConfigError("disturbances", f"family {self.family} needs {dim} disturbance signal(s)")
        if self.rho2 not in ("same", "zero"):
            raise ConfigError("rho2", "must be 'same' or 'zero'")

    @property
    def dim(self) -> int:
        return FAMILY_DIMS[self.family]

    def lyapunov(self, states: np.ndarray) -> np.ndarray:
        states = np.atleast_2d(states)
        if self.family == "pendulum":
            return self.g_over_l * (1.0 - np.cos(states[:, 0])) + 0.5 * states[:, 1] ** 2
        return 0.5 * np.einsum("ij,ij->i", states, states)

    def rhs(self, x, t, clamp: float | None = None) -> np.ndarray:
        """Right-hand side evaluated through the Python API (raises on singular states)."""
        x = np.asarray(x, dtype=float)
        r = rho_eval(self.rho, x, t, clamp)
        d = [s.evaluate(t) for s in self.disturbances]
        if self.family == "scalar-ex1":
            return np.array([-r * x[0] + d[0]])
        if self.family == "pendulum":
            return np.array([x[1] + d[0], -self.g_over_l * math.sin(x[0]) - r * x[1] + d[1]])
        r2 = r if self.rho2 == "same" else 0.0
        return np.array([x[1] - r * x[0] + d[0], -x[0] - r2 * x[1] + d[1]])

    def simulate(self, x0, cfg: IntegratorConfig, t0: float = 0.0) -> Trajectory:
        x0 = np.atleast_1d(np.asarray(x0, dtype=float))
        if x0.shape != (self.dim,):
            raise ConfigError("initial_conditions", f"expected {self.dim} components, got {x0.shape[0]}")
        code, par, sigs = self.rho.encoded
        n, A, Bu, Bd, C, F, bvec = dummy_plant()
        states, _, rhos, nvalid, stop, stop_time = K.integrate_kernel(
            FAMILY_CODES[self.family], x0, float(t0), cfg.step, cfg.nsteps, cfg.record_every,
            cfg.method == "euler", cfg.clamp, cfg.eps_sing, code, par, sigs,
            0 if self.rho2 == "same" else 1, signal_matrix(self.disturbances),
            np.array([self.g_over_l]), n, A, Bu, Bd, C, F, bvec, 0.0, 0.0, 0.0, 1.0)
        return Trajectory(t0=float(t0), h=cfg.sample_spacing, states=states, rho=rhos,
                          V=self.lyapunov(states), stop_reason=stop_name(stop),
                          stop_time=float(stop_time))
