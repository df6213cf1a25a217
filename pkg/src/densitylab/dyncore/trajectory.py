"""Uniformly sampled trajectories and their CSV exchange format."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

COMPLETED = "completed"
NUMERICAL_BLOWUP = "numerical-blowup"
FORBIDDEN_ENTRY = "forbidden-entry"
SINGULAR_APPROACH = "singular-approach"
CONTROLLER_FAULT = "controller-fault"

STOP_REASONS = (COMPLETED, NUMERICAL_BLOWUP, FORBIDDEN_ENTRY, SINGULAR_APPROACH, CONTROLLER_FAULT)


def _fmt(v: float) -> str:
    return f"{v:.9g}"


@dataclass
class Trajectory:
    """Samples ``x_i`` at ``t0 + i*h`` together with per-sample diagnostics.

    ``V`` and the flag arrays are optional; the ``vdot`` estimate is derived
    from ``V`` by central differences (``nan`` at both ends).
    """

    t0: float
    h: float
    states: np.ndarray
    u: np.ndarray | None = None
    rho: np.ndarray | None = None
    V: np.ndarray | None = None
    in_DS: np.ndarray | None = None
    in_DU: np.ndarray | None = None
    in_forbidden: np.ndarray | None = None
    stop_reason: str = COMPLETED
    stop_time: float | None = None
    aux: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        self.states = np.atleast_2d(np.asarray(self.states, dtype=float))
        if self.states.shape[0] == 1 and self.states.shape[1] == 0:
            self.states = self.states.reshape(0, 0)
        if self.h <= 0:
            raise ValueError("sample spacing h must be positive")
        if self.stop_reason not in STOP_REASONS:
            raise ValueError(f"unknown stop reason {self.stop_reason!r}")
        if not np.all(np.isfinite(self.states)):
            raise ValueError("trajectory states must be finite")
        n = len(self)
        for name in ("u", "rho", "V", "in_DS", "in_DU", "in_forbidden"):
            arr = getattr(self, name)
            if arr is not None and len(arr) != n:
                raise ValueError(f"{name} has {len(arr)} samples, expected {n}")

    def __len__(self) -> int:
        return self.states.shape[0]

    @property
    def dim(self) -> int:
        return self.states.shape[1]

    @property
    def times(self) -> np.ndarray:
        return self.t0 + self.h * np.arange(len(self))

    @property
    def vdot(self) -> np.ndarray:
        """Central-difference estimate ``(V[i+1] - V[i-1]) / (2h)``."""
        out = np.full(len(self), math.nan)
        if self.V is not None and len(self) >= 3:
            out[1:-1] = (self.V[2:] - self.V[:-2]) / (2.0 * self.h)
        return out

    # ---- CSV ----------------------------------------------------------

    def to_csv(self, path=None) -> str:
        """Serialize; write to ``path`` if given and return the text."""
        n = self.dim
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["t", *[f"x{i + 1}" for i in range(n)], "u", "rho", "V", "Vdot",
                         "in_DS", "in_DU", "in_forbidden", "stop_reason"])
        times = self.times
        vdot = self.vdot
        last = len(self) - 1

        def col(arr, i, flag=False):
            if arr is None:
                return ""
            v = arr[i]
            if flag:
                return "1" if v else "0"
            return "" if not math.isfinite(v) else _fmt(v)

        for i in range(len(self)):
            writer.writerow([
                _fmt(times[i]), *[_fmt(v) for v in self.states[i]],
                col(self.u, i), col(self.rho, i), col(self.V, i),
                "" if not math.isfinite(vdot[i]) else _fmt(vdot[i]),
                col(self.in_DS, i, True), col(self.in_DU, i, True), col(self.in_forbidden, i, True),
                self.stop_reason if i == last else "",
            ])
        text = buf.getvalue()
        if path is not None:
            Path(path).write_text(text)
        return text

    @classmethod
    def from_csv(cls, source) -> Trajectory:
        """Parse CSV text or a path produced by :meth:`to_csv`."""
        text = source if isinstance(source, str) and "\n" in source else Path(source).read_text()
        rows = list(csv.reader(io.StringIO(text)))
        header, body = rows[0], rows[1:]
        if header[0] != "t" or header[-1] != "stop_reason":
            raise ValueError("not a trajectory CSV")
        n = sum(1 for h in header if h.startswith("x") and h[1:].isdigit())
        idx = {name: j for j, name in enumerate(header)}
        t = np.array([float(r[0]) for r in body])
        states = np.array([[float(v) for v in r[1:1 + n]] for r in body]).reshape(len(body), n)

        def num(name):
            vals = [r[idx[name]] for r in body]
            if not body or all(v == "" for v in vals):
                return None
            return np.array([float(v) if v != "" else math.nan for v in vals])

        def flag(name):
            vals = [r[idx[name]] for r in body]
            if not body or all(v == "" for v in vals):
                return None
            return np.array([v == "1" for v in vals])

        h = float((t[-1] - t[0]) / (len(t) - 1)) if len(t) > 1 else 1.0
        stop = body[-1][-1] if body else COMPLETED
        return cls(t0=float(t[0]) if len(t) else 0.0, h=h, states=states, u=num("u"),
                   rho=num("rho"), V=num("V"), in_DS=flag("in_DS"), in_DU=flag("in_DU"),
                   in_forbidden=flag("in_forbidden"), stop_reason=stop or COMPLETED)
