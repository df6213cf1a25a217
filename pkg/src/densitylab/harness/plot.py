"""SVG rendering of time series and phase portraits.

Forbidden sets of planar densities are polygonized with ``contourpy`` on a
grid of spacing ``res`` (1e-2 by default, coarsened for very wide windows) from the closed-form level
functions of each density kind; matplotlib draws the result.  Output is
byte-deterministic: the SVG date stamp is dropped and element ids use a fixed
hash salt.
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Sequence

import contourpy
import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
from matplotlib.patches import PathPatch  # noqa: E402
from matplotlib.path import Path as MplPath  # noqa: E402
import numpy as np  # noqa: E402

from densitylab.density import DensityField  # noqa: E402
from densitylab.dyncore.trajectory import Trajectory  # noqa: E402
from densitylab.errors import ConfigError  # noqa: E402

SERIES = "series"
PHASE = "phase"
PLOT_SPECS = (SERIES, PHASE)

_CODE_MOVETO = 1


@dataclass(frozen=True)
class LevelSet:
    """``f(x1, x2) = level``; the forbidden side is ``below`` (``f <= level``) or above."""

    f: Callable[[np.ndarray, np.ndarray], np.ndarray]
    level: float
    below: bool


def level_sets(field: DensityField, t: float) -> list[LevelSet]:
    """Closed-form boundaries of the singular set of a planar density at time ``t``."""
    kind, p = field.kind, field.params
    if kind == "annulus_log":
        q = p["q"]

        def lq(a, b):
            return np.abs(a) ** q + np.abs(b) ** q
        return [LevelSet(lq, field.signal("b_lower").evaluate(t), True),
                LevelSet(lq, field.signal("b_upper").evaluate(t), False)]
    if kind == "norm_log":
        q = p["q"]
        return [LevelSet(lambda a, b: np.abs(a) ** q + np.abs(b) ** q, 1.0, True)]
    if kind in ("exp_barrier", "disk_log"):
        return [LevelSet(lambda a, b: a * a + b * b, 1.0, True)]
    if kind == "obstacle_log":
        out = []
        for ob in field.obstacles:
            (c1, c2), q = ob.center, ob.q
            out.append(LevelSet(lambda a, b, c1=c1, c2=c2, q=q: np.abs(a - c1) ** q + np.abs(b - c2) ** q,
                                ob.b, True))
        return out
    return []


_MAX_GRID = 2001


def _grid(xlim, ylim, res: float):
    """Contouring grid of spacing ``res``, coarsened so no axis exceeds ``_MAX_GRID`` points."""
    nx = min(max(int(math.ceil((xlim[1] - xlim[0]) / res)) + 1, 2), _MAX_GRID)
    ny = min(max(int(math.ceil((ylim[1] - ylim[0]) / res)) + 1, 2), _MAX_GRID)
    xs = np.linspace(xlim[0], xlim[1], nx)
    ys = np.linspace(ylim[0], ylim[1], ny)
    return np.meshgrid(xs, ys)


def forbidden_polygons(field: DensityField, t: float, xlim, ylim,
                       res: float = 1e-2) -> list[tuple[np.ndarray, np.ndarray]]:
    """Filled forbidden regions as ``(points, codes)`` paths (holes included)."""
    X, Y = _grid(xlim, ylim, res)
    out = []
    for ls in level_sets(field, t):
        Z = ls.f(X, Y)
        lo, hi = (-np.inf, ls.level) if ls.below else (ls.level, np.inf)
        gen = contourpy.contour_generator(X, Y, Z, fill_type=contourpy.FillType.OuterCode)
        pts, codes = gen.filled(lo, hi)
        out.extend(zip(pts, codes))
    return out


def boundary_curves(field: DensityField, t: float, xlim, ylim, res: float = 1e-2) -> list[np.ndarray]:
    """Dashed boundary polylines of the singular set."""
    X, Y = _grid(xlim, ylim, res)
    out = []
    for ls in level_sets(field, t):
        gen = contourpy.contour_generator(X, Y, ls.f(X, Y))
        out.extend(gen.lines(ls.level))
    return out


def polygon_area(points: np.ndarray, codes: np.ndarray) -> float:
    """Net area of a filled path: outer rings minus holes (shoelace per ring)."""
    starts = np.flatnonzero(codes == _CODE_MOVETO).tolist() + [len(points)]
    total = 0.0
    for a, b in zip(starts[:-1], starts[1:]):
        ring = points[a:b]
        x, y = ring[:, 0], ring[:, 1]
        total += 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1)))
    return abs(total)


def _series_bounds(scenario, ts: np.ndarray) -> list[tuple[str, np.ndarray]]:
    """Time-varying bound curves declared by the scenario's density (and target ``g``)."""
    if scenario is None or len(ts) == 0:
        return []
    field = scenario.density
    kind = field.kind
    out: list[tuple[str, np.ndarray]] = []
    if kind in ("funnel", "log_sym"):
        b = field.signal("b").evaluate(ts)
        out += [("b", b), ("-b", -b)]
    elif kind in ("log_ratio", "log_tube"):
        out += [("b_upper", field.signal("b_upper").evaluate(ts)),
                ("b_lower", field.signal("b_lower").evaluate(ts))]
    elif kind == "log_surface":
        out.append(("b", field.signal("b").evaluate(ts)))
    elif kind in ("sign_shift", "linear_track"):
        out.append(("z", field.signal("z").evaluate(ts)))
    if scenario.adaptive and scenario.controller.g.kind != "zero" and kind != "linear_track":
        out.append(("g", scenario.controller.g.evaluate(ts)))
    return out


def _new_axes():
    fig, ax = plt.subplots(figsize=(6.4, 4.8), dpi=100)
    ax.grid(True, linewidth=0.3, color="#dddddd")
    return fig, ax


def _to_svg(fig) -> str:
    buf = io.StringIO()
    with matplotlib.rc_context({"svg.hashsalt": "densitylab", "svg.fonttype": "none"}):
        fig.savefig(buf, format="svg", metadata={"Date": None, "Creator": None})
    plt.close(fig)
    return buf.getvalue()


def render_series(trajs: Sequence[Trajectory], scenario=None) -> str:
    fig, ax = _new_axes()
    ax.set_xlabel("t")
    ax.set_ylabel("y" if scenario is not None and scenario.adaptive else "x")
    longest = None
    for tr in trajs:
        if len(tr) == 0:
            continue
        cols = tr.states[:, :1] if (scenario is not None and scenario.adaptive) else tr.states
        for j in range(cols.shape[1]):
            ax.plot(tr.times, cols[:, j], linewidth=1.0)
        if longest is None or len(tr) > len(longest):
            longest = tr
    if longest is not None:
        for label, curve in _series_bounds(scenario, longest.times):
            ax.plot(longest.times, curve, linestyle="--", color="black", linewidth=0.8, label=label)
    return _to_svg(fig)


def _phase_window(trajs: Sequence[Trajectory], pad: float = 0.1):
    pts = [tr.states for tr in trajs if len(tr)]
    if not pts:
        return (-1.0, 1.0), (-1.0, 1.0)
    allp = np.concatenate(pts)
    lo, hi = allp.min(axis=0), allp.max(axis=0)
    span = np.maximum(hi - lo, 1.0)
    lo, hi = lo - pad * span, hi + pad * span
    return (float(lo[0]), float(hi[0])), (float(lo[1]), float(hi[1]))


def render_phase(trajs: Sequence[Trajectory], scenario=None, res: float = 1e-2,
                 xlim=None, ylim=None) -> str:
    for tr in trajs:
        if len(tr) and tr.dim != 2:
            raise ConfigError("plot.spec", f"phase plot needs a 2-dimensional state, got {tr.dim}")
    if scenario is not None and scenario.state_dim != 2:
        raise ConfigError("plot.spec", f"phase plot needs a 2-dimensional state, got {scenario.state_dim}")
    wx, wy = _phase_window(trajs)
    xlim, ylim = xlim or wx, ylim or wy
    fig, ax = _new_axes()
    ax.set_xlabel("x1")
    ax.set_ylabel("x2")
    if scenario is not None and scenario.density is not None:
        t0 = next((tr.t0 for tr in trajs if len(tr)), 0.0)
        for pts, codes in forbidden_polygons(scenario.density, t0, xlim, ylim, res):
            ax.add_patch(PathPatch(MplPath(pts, codes), facecolor="#bbbbbb", edgecolor="none"))
        for line in boundary_curves(scenario.density, t0, xlim, ylim, res):
            ax.plot(line[:, 0], line[:, 1], linestyle="--", color="black", linewidth=0.8)
    for tr in trajs:
        if len(tr):
            ax.plot(tr.states[:, 0], tr.states[:, 1], linewidth=1.0)
    ax.set_xlim(*xlim)
    ax.set_ylim(*ylim)
    ax.set_aspect("equal", adjustable="box")
    return _to_svg(fig)


def render_plot(trajs: Sequence[Trajectory], spec: str, scenario=None, res: float = 1e-2) -> str:
    """Return an SVG document for ``spec`` in ``{"series", "phase"}``."""
    if spec == SERIES:
        return render_series(trajs, scenario)
    if spec == PHASE:
        return render_phase(trajs, scenario, res)
    raise ConfigError("plot.spec", f"must be one of {PLOT_SPECS}")


def write_plot(trajs: Sequence[Trajectory], spec: str, out: str | Path, scenario=None) -> Path:
    out = Path(out)
    out.write_text(render_plot(trajs, spec, scenario))
    return out
