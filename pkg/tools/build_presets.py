"""Regenerate the preset bank under src/densitylab/harness/presets/.

Each preset is written as JSON with a frozen ``content_hash``.  Run after
editing a definition below:

    python3 tools/build_presets.py
"""

from __future__ import annotations

import json
import math
from pathlib import Path

from densitylab.harness.scenario import SCHEMA_VERSION, freeze, scenario_from_dict

OUT = Path(__file__).resolve().parents[1] / "src" / "densitylab" / "harness" / "presets"
HALF_PI = math.pi / 2

CHATTER = {"kind": "atan-chatter", "a": 0.5, "k": 100.0, "omega": 0.8}
EX2_D1 = {"kind": "sinusoid-sum", "offset": 0.0, "terms": [[0.1, 1.0]]}
EX2_D2 = {"kind": "sinusoid-sum", "offset": 0.0, "terms": [[0.1, 1.0, HALF_PI]]}
EX3_D1 = {"kind": "sinusoid-sum", "offset": 0.0, "terms": [[1.0, 1.0]]}
EX3_D2 = {"kind": "sinusoid-sum", "offset": 0.0, "terms": [[0.8, 1.0, HALF_PI]]}
PLANT = {"Q": [-1.0, 3.0, -3.0, 1.0], "R": [1.0, 2.0, 1.0], "k": 1.0, "y_derivs": [4.0, 0.0, 0.0]}
RM = [1.0, 2.0, 1.0]
ADAPTIVE_INTEG = {"step": 1e-5, "duration": 10.0, "record_every": 10}


def cos_signal(amplitude: float, offset: float, omega: float = 1.0) -> dict:
    return {"kind": "sinusoid-sum", "offset": offset, "terms": [[amplitude, omega, HALF_PI]]}


def circle(radius: float, count: int, phase: float = 0.0) -> list[list[float]]:
    return [[round(radius * math.cos(phase + 2 * math.pi * i / count), 12),
             round(radius * math.sin(phase + 2 * math.pi * i / count), 12)] for i in range(count)]


def controller(rho: dict, g: dict | None = None) -> dict:
    out = {"tau": 1.0, "beta": 0.1, "gamma": 0.01, "Rm": RM, "rho": rho}
    if g is not None:
        out["g"] = g
    return out


PRESETS: list[dict] = [
    # ---------------------------------------------------------------- Example 1
    {
        "name": "ex1-case1-constant",
        "figure": "Fig. 1 left",
        "description": "Constant density alpha=10 under atan chatter: ultimate bound d/alpha",
        "header": ["Case 1.1: rho = alpha = 10 (solid lines of Fig. 1 left).",
                   "d(t) = 0.5 atan(100 sin(0.8 t)); V = x^2/2; D_S = {|x| > dbar/(alpha(1-mu))}.",
                   "x0 = 2 as in the figure; four extra initial conditions widen the ensemble."],
        "family": "scalar-ex1",
        "rho": {"kind": "constant", "alpha": 10.0},
        "disturbances": [CHATTER],
        "initial_conditions": [[2.0], [-2.0], [1.0], [-1.0], [0.5]],
        "integrator": {"step": 1e-4, "duration": 5.0},
        "regions": {"case": "1.1", "mu": 0.5},
        "checks": [
            {"check": "must-complete"},
            {"check": "ultimate-bound", "after": 2.0, "bound": 0.1},
            {"check": "vdot-bound", "name": "vdot-DS", "region": "DS", "tol": 1e-3},
            {"check": "classify", "expect": "strict-density", "DS": True, "DU": False},
        ],
    },
    {
        "name": "ex1-case1-alpha1",
        "figure": "Fig. 1 left",
        "description": "Unit constant density (the undensified system): ultimate bound dbar",
        "header": ["Case 1.1 reference: rho = 1 reproduces x' = -x + d (dotted lines of Fig. 1 left).",
                   "d(t) = 0.5 atan(100 sin(0.8 t)); ultimate bound dbar = 0.5 atan(100) ~ 0.7804."],
        "family": "scalar-ex1",
        "rho": {"kind": "constant", "alpha": 1.0},
        "disturbances": [CHATTER],
        "initial_conditions": [[2.0], [-2.0]],
        "integrator": {"step": 1e-4, "duration": 12.0},
        "regions": {"case": "1.1", "mu": 0.5},
        "checks": [
            {"check": "must-complete"},
            {"check": "ultimate-bound", "after": 8.0, "bound": 0.8},
            {"check": "vdot-bound", "name": "vdot-DS", "region": "DS", "tol": 1e-3},
        ],
    },
    {
        "name": "ex1-case2-funnel",
        "figure": "Fig. 1 right",
        "description": "Funnel density alpha/(b(t)-|x|) keeps x inside the shrinking funnel b(t)",
        "header": ["Case 1.2: rho = alpha/(b(t) - |x|), alpha = 1, b(t) = 2 e^{-t} + 0.1.",
                   "d(t) = 0.5 atan(100 sin(0.8 t)); initial conditions 1.5 and -1.0."],
        "family": "scalar-ex1",
        "rho": {"kind": "funnel", "alpha": 1.0,
                "b": {"kind": "exp-plus-sin", "a": 2.0, "lam": 1.0, "offset": 0.1}},
        "disturbances": [CHATTER],
        "initial_conditions": [[1.5], [-1.0]],
        "integrator": {"step": 1e-4, "duration": 10.0},
        "regions": {"case": "1.2", "mu": 0.5},
        "checks": [
            {"check": "must-complete"},
            {"check": "tube", "name": "inside-funnel"},
            {"check": "forbidden-entry-never"},
            {"check": "vdot-bound", "name": "vdot-DS", "region": "DS", "tol": 1e-3},
        ],
    },
    {
        "name": "ex1-case3-sign-shift",
        "figure": "Fig. 2 left",
        "description": "Sign-shift density (x - z(t)) sign(x): stable and unstable bands around z",
        "header": ["Case 1.3: rho = alpha (x - z(t)) sign(x), alpha = 1.",
                   "z(t) = 0.3 + cos(0.5 t); the alternative reading z(t) = 2 e^{-t} + 0.1 is not used",
                   "(that z settles at 0.1 within a few seconds, leaving the bands static).",
                   "d(t) = 0.5 atan(100 sin(0.8 t)); initial conditions chosen on both sides of 0 and z.",
                   "The certified D_U needs |x - z||x| > dbar/((1-mu) alpha) ~ 1.56 > z^2/4, so it is empty here."],
        "family": "scalar-ex1",
        "rho": {"kind": "sign_shift", "alpha": 1.0, "z": cos_signal(1.0, 0.3, 0.5)},
        "disturbances": [CHATTER],
        "initial_conditions": [[2.0], [1.0], [0.5], [-0.5], [-1.5]],
        "integrator": {"step": 1e-4, "duration": 20.0},
        "regions": {"case": "1.3", "mu": 0.5},
        "checks": [
            {"check": "must-complete"},
            {"check": "vdot-bound", "name": "vdot-DS", "region": "DS", "tol": 1e-3},
        ],
    },
    {
        "name": "ex1-case4-log-ratio",
        "figure": "Fig. 2 right",
        "description": "Log-ratio density keeps x inside the moving tube (b_lower, b_upper)",
        "header": ["Case 1.4: rho = -alpha ln((b_upper - x)/(x - b_lower)), alpha = 1.",
                   "Tube: b_upper = 2 e^{-0.1t}(2 + sin t) + 0.3,",
                   "b_lower = e^{-0.1t}(2 + sin t) + 0.2 (with a factor 1 on both the tube is too narrow for D_S).",
                   "d(t) = 0.5 atan(100 sin(0.8 t)); initial conditions inside the t = 0 tube (2.2, 4.3),",
                   "two of them near the walls so that D_S and D_U are sampled."],
        "family": "scalar-ex1",
        "rho": {"kind": "log_ratio", "alpha": 1.0,
                "b_upper": {"kind": "exp-decay-mix", "a": 2.0, "lam": 0.1, "c": 2.0, "offset": 0.3},
                "b_lower": {"kind": "exp-decay-mix", "a": 1.0, "lam": 0.1, "c": 2.0, "offset": 0.2}},
        "disturbances": [CHATTER],
        "initial_conditions": [[2.25], [2.5], [3.5], [4.0], [4.25]],
        "integrator": {"step": 1e-4, "duration": 20.0},
        "regions": {"case": "1.4", "mu": 0.5},
        "checks": [
            {"check": "must-complete"},
            {"check": "tube", "name": "inside-tube"},
            {"check": "forbidden-entry-never"},
            {"check": "vdot-bound", "name": "vdot-DS", "region": "DS", "tol": 1e-3},
            {"check": "vdot-bound", "name": "vdot-DU", "region": "DU", "tol": 1e-3},
            {"check": "classify", "expect": "strict-density", "DS": True, "DU": True,
             "min_samples": 50},
        ],
    },
    {
        "name": "ex1-remark-wall-jump",
        "figure": "Fig. 1 right",
        "description": "Illustrative only: a funnel bound that jumps down makes the state hit the wall",
        "header": ["Piecewise-continuous bound ('hitting the wall'): funnel density with",
                   "alpha = 0.1, b(t) = 2 for t <= 0.1 and b(t) = 1 afterwards; x0 = 1.9 close to the wall.",
                   "At the jump the state is outside the new funnel, so integration truncates.",
                   "Illustrative only: attraction is not certified across the discontinuity."],
        "family": "scalar-ex1",
        "rho": {"kind": "funnel", "alpha": 0.1,
                "b": {"kind": "piecewise-linear", "pieces": [[0.1, 0.0, 2.0], [None, 0.0, 1.0]]}},
        "disturbances": [{"kind": "zero"}],
        "initial_conditions": [[1.9]],
        "integrator": {"step": 1e-4, "duration": 2.0},
        "expected_stop": ["forbidden-entry", "singular-approach"],
        "checks": [{"check": "stop-reason", "name": "hits-the-wall"}],
    },
    # ---------------------------------------------------------------- Example 2
    {
        "name": "ex2-case211-annulus",
        "figure": "Fig. 4 left",
        "description": "Annulus log density (q=1, 2 < |x1|+|x2| < 3): trajectories absorbed by the walls",
        "header": ["Case 2.1.1: rho = ln((b_upper - |x1|^q - |x2|^q)/(|x1|^q + |x2|^q - b_lower)),",
                   "q = 1, b_upper = 3, b_lower = 2, x(0) = (0, 2.5).",
                   "Disturbances are not stated for this case: d1 = 0.1 sin t, d2 = 0.1 cos t (documented choice).",
                   "The density diverges to +inf at the inner wall, so the state is absorbed by the",
                   "barrier in finite time; eps_sing = 1e-3 truncates with singular-approach."],
        "family": "planar-ex2",
        "rho": {"kind": "annulus_log", "q": 1.0, "b_upper": {"kind": "constant", "value": 3.0},
                "b_lower": {"kind": "constant", "value": 2.0}},
        "disturbances": [EX2_D1, EX2_D2],
        "initial_conditions": [[0.0, 2.5]],
        "integrator": {"step": 1e-4, "duration": 20.0, "eps_sing": 1e-3},
        "regions": {"case": "2.1.1", "mu": 0.5},
        "expected_stop": ["singular-approach", "forbidden-entry"],
        "checks": [
            {"check": "stop-reason", "name": "absorbed-by-barrier"},
            {"check": "vdot-bound", "name": "vdot-DU", "region": "DU", "tol": 1e-3},
        ],
    },
    {
        "name": "ex2-case211-annulus-q06",
        "figure": "Fig. 4 right",
        "description": "Annulus log density with q=0.6, b_upper=3^0.6, b_lower=1",
        "header": ["Case 2.1.1 (right panel): q = 0.6, b_upper = 3^0.6, b_lower = 1, x(0) = (0, 2.5).",
                   "Disturbances d1 = 0.1 sin t, d2 = 0.1 cos t (documented choice); eps_sing = 1e-3."],
        "family": "planar-ex2",
        "rho": {"kind": "annulus_log", "q": 0.6, "b_upper": {"kind": "constant", "value": 3.0 ** 0.6},
                "b_lower": {"kind": "constant", "value": 1.0}},
        "disturbances": [EX2_D1, EX2_D2],
        "initial_conditions": [[0.0, 2.5]],
        "integrator": {"step": 1e-4, "duration": 20.0, "eps_sing": 1e-3},
        "regions": {"case": "2.1.1", "mu": 0.5},
        "expected_stop": ["singular-approach", "forbidden-entry"],
        "checks": [{"check": "stop-reason", "name": "absorbed-by-barrier"}],
    },
    {
        "name": "ex2-case212-obstacles",
        "figure": "Fig. 4a",
        "description": "Four logarithmic obstacles (q = 0.5, 1, 2, 4): trajectories go around them",
        "header": ["Case 2.1.2: rho = sum_i ln(|x1 - x1i|^qi + |x2 - x2i|^qi - bi), q = (0.5, 1, 2, 4).",
                   "geometry: reconstructed. Centers and offsets are not stated; the chosen obstacles",
                   "block the straight segment from (0, 2.5) to the origin and the constant-density path.",
                   "Disturbances d1 = 0.1 sin t, d2 = 0.1 cos t (documented choice)."],
        "family": "planar-ex2",
        "rho": {"kind": "obstacle_log", "terms": [
            {"center": [0.0, 1.9], "q": 0.5, "b": 0.5},
            {"center": [0.9, 1.3], "q": 1.0, "b": 0.3},
            {"center": [1.0, 0.3], "q": 2.0, "b": 0.06},
            {"center": [-0.8, 1.2], "q": 4.0, "b": 0.02}]},
        "disturbances": [EX2_D1, EX2_D2],
        "initial_conditions": [[0.0, 2.5], [-0.3, 2.6], [0.5, 2.4]],
        "integrator": {"step": 1e-4, "duration": 20.0},
        "regions": {"case": "2.1.2", "mu": 0.5},
        "checks": [
            {"check": "must-complete"},
            {"check": "forbidden-entry-never"},
            {"check": "obstacle-clearance"},
            {"check": "tail-distance", "name": "reaches-origin-neighbourhood", "target": "origin",
             "bound": 0.25},
        ],
    },
    {
        "name": "ex2-case212-constant-reference",
        "figure": "Fig. 4a",
        "description": "Constant density rho=1 reference: the path crosses the obstacle regions",
        "header": ["Case 2.1.2 reference (dashed curves): rho1 = rho2 = 1 from the same initial",
                   "conditions; no barrier is present, so the path cuts through the grey regions."],
        "family": "planar-ex2",
        "rho": {"kind": "constant", "alpha": 1.0},
        "disturbances": [EX2_D1, EX2_D2],
        "initial_conditions": [[0.0, 2.5], [-0.3, 2.6], [0.5, 2.4]],
        "integrator": {"step": 1e-4, "duration": 20.0},
        "checks": [
            {"check": "must-complete"},
            {"check": "tail-distance", "name": "reaches-origin-neighbourhood", "target": "origin",
             "bound": 0.25},
        ],
    },
    {
        "name": "ex2-case22-norm-log",
        "figure": "Fig. 6 left",
        "description": "Density alpha ln(|x1|^q + |x2|^q - 1) in the first equation only (q=1)",
        "header": ["Case 2.2: rho1 = alpha ln(|x1|^q + |x2|^q - 1), rho2 = 0, d2 = 0; alpha = 5, q = 1.",
                   "d1 = 0.1 sin t (documented choice; the amplitude is not stated)."],
        "family": "planar-ex2",
        "rho": {"kind": "norm_log", "alpha": 5.0, "q": 1.0},
        "rho2": "zero",
        "disturbances": [EX2_D1, {"kind": "zero"}],
        "initial_conditions": [[0.0, 2.5], [2.0, 2.0], [-1.5, 0.5]],
        "integrator": {"step": 1e-4, "duration": 20.0},
        "regions": {"case": "2.2", "mu": 0.5},
        "checks": [
            {"check": "must-complete"},
            {"check": "forbidden-entry-never"},
            {"check": "vdot-bound", "name": "vdot-DS", "region": "DS", "tol": 1e-3},
        ],
    },
    {
        "name": "ex2-case22-norm-log-q05",
        "figure": "Fig. 6 right",
        "description": "Density alpha ln(|x1|^q + |x2|^q - 1) in the first equation only (q=0.5)",
        "header": ["Case 2.2 (right panel): alpha = 5, q = 0.5, rho2 = 0, d2 = 0, d1 = 0.1 sin t."],
        "family": "planar-ex2",
        "rho": {"kind": "norm_log", "alpha": 5.0, "q": 0.5},
        "rho2": "zero",
        "disturbances": [EX2_D1, {"kind": "zero"}],
        "initial_conditions": [[0.0, 2.5], [2.0, 2.0]],
        "integrator": {"step": 1e-4, "duration": 20.0},
        "regions": {"case": "2.2", "mu": 0.5},
        "checks": [
            {"check": "must-complete"},
            {"check": "forbidden-entry-never"},
            {"check": "vdot-bound", "name": "vdot-DS", "region": "DS", "tol": 1e-3},
        ],
    },
    # ---------------------------------------------------------------- Example 3
    {
        "name": "ex3-case31-exp-barrier",
        "figure": "Fig. bh left",
        "description": "Absolutely stable unit disk: exp((|x|^2-1)^-0.98) pulls trajectories in",
        "header": ["Case 3.1: rho = exp((x1^2 + x2^2 - 1)^{-0.98}), D_bh = unit disk.",
                   "d1 = 4 sin(t) e^{-0.09 t}, d2 = 4 cos(t) e^{-0.1 t}; initial conditions on |x| = 2.5.",
                   "The disk attracts in finite time: runs end at the barrier (eps_sing = 1e-3)."],
        "family": "planar-ex3",
        "rho": {"kind": "exp_barrier", "sign": 1.0, "e": 0.98},
        "disturbances": [{"kind": "exp-decay-mix", "a": 4.0, "lam": 0.09, "c": 0.0},
                         {"kind": "exp-decay-mix", "a": 4.0, "lam": 0.1, "c": 0.0, "phase": HALF_PI}],
        "initial_conditions": circle(2.5, 4),
        "integrator": {"step": 1e-4, "duration": 20.0, "eps_sing": 1e-3},
        "regions": {"case": "3.1", "mu": 0.5},
        "expected_stop": ["forbidden-entry", "singular-approach"],
        "checks": [
            {"check": "stop-reason", "name": "absorbed-by-disk"},
            {"check": "vdot-bound", "name": "vdot-DS", "region": "DS", "tol": 1e-3},
        ],
    },
    {
        "name": "ex3-case32-disk-log",
        "figure": "Fig. bh right",
        "description": "Density -ln(|x|^2-1): absorption into the disk from D- or escape from D+",
        "header": ["Case 3.2: rho = -ln(x1^2 + x2^2 - 1); d1 = sin t, d2 = 0.8 cos t.",
                   "Initial conditions on |x| = 1.3 (inside D-) and |x| = 1.5 (inside D+); T = 2.5 keeps",
                   "the escaping runs finite. Expected stops: completed or absorbed by the disk."],
        "family": "planar-ex3",
        "rho": {"kind": "disk_log", "sign": -1.0},
        "disturbances": [EX3_D1, EX3_D2],
        "initial_conditions": circle(1.3, 4) + circle(1.5, 4),
        "integrator": {"step": 1e-4, "duration": 2.5, "eps_sing": 1e-3},
        "regions": {"case": "3.2", "mu": 0.5},
        "expected_stop": ["completed", "singular-approach", "forbidden-entry"],
        "checks": [
            {"check": "stop-reason"},
            {"check": "vdot-bound", "name": "vdot-DS", "region": "DS", "tol": 1e-3},
            {"check": "vdot-bound", "name": "vdot-DU", "region": "DU", "tol": 1e-3},
        ],
    },
    {
        "name": "ex3-case33-repulsion",
        "figure": "Fig. wh left",
        "description": "Absolutely unstable unit disk: -exp((|x|^2-1)^-0.98) repels all trajectories",
        "header": ["Case 3.3: rho = -exp((x1^2 + x2^2 - 1)^{-0.98}), D_wh = unit disk.",
                   "Eight initial conditions on the circle of radius 1.2; d1 = sin t, d2 = 0.8 cos t; T = 20."],
        "family": "planar-ex3",
        "rho": {"kind": "exp_barrier", "sign": -1.0, "e": 0.98},
        "disturbances": [EX3_D1, EX3_D2],
        "initial_conditions": circle(1.2, 8),
        "integrator": {"step": 1e-4, "duration": 20.0},
        "regions": {"case": "3.3", "mu": 0.5},
        "checks": [
            {"check": "must-complete"},
            {"check": "forbidden-entry-never"},
            {"check": "min-radius", "name": "never-enters-unit-disk", "radius": 1.0, "tol": 1e-3},
            {"check": "monotone-tail", "name": "recedes-from-disk", "target": "circle", "radius": 1.0,
             "mode": "recede", "tail_fraction": 0.5},
        ],
    },
    {
        "name": "ex3-case34-disk-log",
        "figure": "Fig. wh right",
        "description": "Density ln(|x|^2-1): trajectories settle near the circle |x|^2 = 2",
        "header": ["Case 3.4: rho = ln(x1^2 + x2^2 - 1); D+ = {|x|^2 > 2}, D- = {1 < |x|^2 < 2}.",
                   "Disturbances as in Case 3.3 (d1 = sin t, d2 = 0.8 cos t; not restated for this case).",
                   "Initial conditions on |x| = 2.5 and |x| = 1.1."],
        "family": "planar-ex3",
        "rho": {"kind": "disk_log", "sign": 1.0},
        "disturbances": [EX3_D1, EX3_D2],
        "initial_conditions": circle(2.5, 4) + circle(1.1, 2),
        "integrator": {"step": 1e-4, "duration": 20.0, "eps_sing": 1e-3},
        "regions": {"case": "3.4", "mu": 0.5},
        "checks": [
            {"check": "must-complete"},
            {"check": "forbidden-entry-never"},
            {"check": "tail-distance", "name": "settles-near-separation", "target": "circle",
             "radius": math.sqrt(2.0), "bound": 0.5},
        ],
    },
    {
        "name": "pendulum-smoke",
        "figure": "none (smoke test)",
        "description": "Damped pendulum with constant density as damping: energy decays to rest",
        "header": ["Smoke test: x1' = x2, x2' = -(g/l) sin x1 - rho x2 with rho = 0.5, g/l = 1, no disturbance."],
        "family": "pendulum",
        "rho": {"kind": "constant", "alpha": 0.5},
        "g_over_l": 1.0,
        "disturbances": [{"kind": "zero"}, {"kind": "zero"}],
        "initial_conditions": [[2.0, 0.0], [-1.0, 1.0]],
        "integrator": {"step": 1e-4, "duration": 20.0},
        "checks": [
            {"check": "must-complete"},
            {"check": "tail-distance", "name": "comes-to-rest", "target": "origin", "bound": 0.05},
        ],
    },
    # ---------------------------------------------------------------- adaptive
    {
        "name": "adaptive-case1-linear",
        "figure": "Fig. 7 left",
        "description": "Adaptive loop with linear density -alpha y (the curve crossing the grey area)",
        "header": ["Adaptive case 1: rho = -alpha y, alpha = 4; plant Q = (p-1)^3, R = (p+1)^2, k = 1,",
                   "y(0) = 4; R_m = (p+1)^2, beta = 0.1, gamma = 0.01, tau = 1; d(t) = 5 + 10 sin(7t)."],
        "family": "adaptive-ex3",
        "plant": PLANT,
        "controller": controller({"kind": "linear", "alpha": 4.0}),
        "disturbances": [{"kind": "sinusoid-sum", "offset": 5.0, "terms": [[10.0, 7.0]]}],
        "integrator": ADAPTIVE_INTEG,
        "regions": {"case": "adaptive-1", "mu": 0.5},
        "ceilings": {"c": 10.0, "u": 100.0, "Vy": 50.0, "Vu": 50.0, "x": 100.0},
        "checks": [
            {"check": "must-complete"},
            {"check": "bounded"},
            {"check": "sign-hypothesis"},
            {"check": "filter-hurwitz"},
            {"check": "emergent-dynamics"},
        ],
    },
    {
        "name": "adaptive-case2-sym-tube",
        "figure": "Fig. 7 left",
        "description": "Adaptive loop with symmetric log tube alpha ln((b-y)/(b+y)), piecewise b(t)",
        "header": ["Adaptive case 2: rho = alpha ln((b - y)/(b + y)), alpha = 4,",
                   "b(t) = 1 (t <= 0.5), -9t + 9.5 (0.5 < t <= 1), 0.5 (t > 1); d(t) = 5 + 10 sin(7t).",
                   "y(0) = 0.8 instead of 4: the tube starts at b(0) = 1, so y(0) = 4 is inadmissible.",
                   "With eta = 48.5, D_S = {|y| > b tanh(eta/(2 alpha))} is a sliver of width ~1e-5 b at",
                   "the wall; the derivative-bound check accepts an empty sample set (min_samples 0)."],
        "family": "adaptive-ex3",
        "plant": {**PLANT, "y_derivs": [0.8, 0.0, 0.0]},
        "controller": controller({"kind": "log_sym", "alpha": 4.0, "b": {
            "kind": "piecewise-linear", "pieces": [[0.5, 0.0, 1.0], [1.0, -9.0, 9.5], [None, 0.0, 0.5]]}}),
        "disturbances": [{"kind": "sinusoid-sum", "offset": 5.0, "terms": [[10.0, 7.0]]}],
        "integrator": ADAPTIVE_INTEG,
        "regions": {"case": "adaptive-2", "mu": 0.5},
        "ceilings": {"c": 10.0, "u": 100.0, "Vy": 50.0, "Vu": 50.0, "x": 100.0},
        "checks": [
            {"check": "must-complete"},
            {"check": "tube", "name": "inside-tube"},
            {"check": "forbidden-entry-never"},
            {"check": "bounded"},
            {"check": "sign-hypothesis"},
            {"check": "filter-hurwitz"},
            {"check": "emergent-dynamics"},
            {"check": "vdot-bound", "name": "vdot-DS", "region": "DS", "tol": 1e-2, "min_samples": 0},
        ],
    },
    {
        "name": "adaptive-case3-asym-tube",
        "figure": "Fig. 7 right",
        "description": "Adaptive loop with asymmetric log tube alpha ln((b_upper-y)/(y-b_lower))",
        "header": ["Adaptive case 3: rho = alpha ln((b_upper - y)/(y - b_lower)), alpha = 4,",
                   "b_upper = 4 cos t + 1.5, b_lower = 4 cos t - 0.5, d(t) = -2 + 10 sin(7t), y(0) = 4.",
                   "g = (b_upper + b_lower)/2 = 4 cos t + 0.5 is the locus where rho vanishes.",
                   "With eta = 48.5 the certified D_S/D_U are slivers at the walls; the derivative-bound",
                   "checks accept an empty sample set (min_samples 0)."],
        "family": "adaptive-ex3",
        "plant": PLANT,
        "controller": controller({"kind": "log_tube", "alpha": 4.0, "b_upper": cos_signal(4.0, 1.5),
                                  "b_lower": cos_signal(4.0, -0.5)}, cos_signal(4.0, 0.5)),
        "disturbances": [{"kind": "sinusoid-sum", "offset": -2.0, "terms": [[10.0, 7.0]]}],
        "integrator": ADAPTIVE_INTEG,
        "regions": {"case": "adaptive-3", "mu": 0.5},
        "ceilings": {"c": 20.0, "u": 200.0, "Vy": 50.0, "Vu": 100.0, "x": 100.0},
        "checks": [
            {"check": "must-complete"},
            {"check": "tube", "name": "inside-tube-after-entry", "after_entry": True},
            {"check": "forbidden-entry-never", "name": "no-controller-fault"},
            {"check": "bounded"},
            {"check": "sign-hypothesis"},
            {"check": "filter-hurwitz"},
            {"check": "emergent-dynamics"},
            {"check": "vdot-bound", "name": "vdot-DS", "region": "DS", "tol": 1e-2, "min_samples": 0},
            {"check": "vdot-bound", "name": "vdot-DU", "region": "DU", "tol": 1e-2, "min_samples": 0},
        ],
    },
    {
        "name": "adaptive-case4-tracking",
        "figure": "Fig. 8 left",
        "description": "Adaptive tracking with -alpha (y - z), z with atan square-wave jumps",
        "header": ["Adaptive case 4: rho = -alpha (y - z), alpha = 100, z = 1 + sin t + atan(1000 sin(1.3 t)),",
                   "d(t) = 5 + 10 sin(3t), y(0) = 4, T = 20. Tail bound 0.6 = eta/alpha (0.485) + margin."],
        "family": "adaptive-ex3",
        "plant": PLANT,
        "controller": controller({"kind": "linear_track", "alpha": 100.0, "z": {
            "kind": "atan-square-mix", "offset": 1.0, "k": 1000.0, "omega": 1.3}},
            {"kind": "atan-square-mix", "offset": 1.0, "k": 1000.0, "omega": 1.3}),
        "disturbances": [{"kind": "sinusoid-sum", "offset": 5.0, "terms": [[10.0, 3.0]]}],
        "integrator": {**ADAPTIVE_INTEG, "duration": 20.0},
        "regions": {"case": "adaptive-4", "mu": 0.5},
        "ceilings": {"c": 50.0, "u": 1000.0, "Vy": 50.0, "Vu": 500.0, "x": 100.0},
        "checks": [
            {"check": "must-complete"},
            {"check": "bounded"},
            {"check": "sign-hypothesis"},
            {"check": "filter-hurwitz"},
            {"check": "vdot-bound", "name": "vdot-DS", "region": "DS", "tol": 1e-2},
            {"check": "vdot-bound", "name": "vdot-DU", "region": "DU", "tol": 1e-2},
            {"check": "tail-distance", "name": "tracking-tail", "target": "g", "bound": 0.6,
             "tail_fraction": 0.2},
        ],
    },
    {
        "name": "adaptive-case5-sliding",
        "figure": "Fig. 8 right",
        "description": "Adaptive sliding along a surface with rho = -alpha ln(y - b)",
        "header": ["Adaptive case 5: rho = -alpha ln(y - b), alpha = 10, b = 2 e^{-0.1t} + 0.5 sin(0.5t) - 0.5,",
                   "d(t) = 5 + 5 sin(7t), y(0) = 4; rho vanishes on g = b + 1."],
        "family": "adaptive-ex3",
        "plant": PLANT,
        "controller": controller({"kind": "log_surface", "alpha": 10.0, "b": {
            "kind": "exp-plus-sin", "a": 2.0, "lam": 0.1, "b": 0.5, "omega": 0.5, "offset": -0.5}},
            {"kind": "exp-plus-sin", "a": 2.0, "lam": 0.1, "b": 0.5, "omega": 0.5, "offset": 0.5}),
        "disturbances": [{"kind": "sinusoid-sum", "offset": 5.0, "terms": [[5.0, 7.0]]}],
        "integrator": ADAPTIVE_INTEG,
        "regions": {"case": "adaptive-5", "mu": 0.5},
        "ceilings": {"c": 20.0, "u": 200.0, "Vy": 50.0, "Vu": 100.0, "x": 100.0},
        "checks": [
            {"check": "must-complete"},
            {"check": "tube", "name": "above-surface"},
            {"check": "forbidden-entry-never", "name": "no-controller-fault"},
            {"check": "bounded"},
            {"check": "sign-hypothesis"},
            {"check": "filter-hurwitz"},
            {"check": "emergent-dynamics"},
            {"check": "tail-distance", "name": "slides-near-g", "target": "g", "bound": 1.0},
        ],
    },
]


def main() -> None:
    OUT.mkdir(parents=True, exist_ok=True)
    names = set()
    for spec in PRESETS:
        doc = freeze({"schema_version": SCHEMA_VERSION, **spec})
        scenario_from_dict(doc)  # validate before writing
        (OUT / f"{spec['name']}.json").write_text(json.dumps(doc, indent=2) + "\n")
        names.add(spec["name"])
    for stale in OUT.glob("*.json"):
        if stale.stem not in names:
            stale.unlink()
    print(f"wrote {len(names)} presets to {OUT}")


if __name__ == "__main__":
    main()
