"""Execute scenarios: integrate every initial condition, run the checks, write outputs."""

from __future__ import annotations

import json
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from densitylab import adaptive
from densitylab.adaptive import ClosedLoopRun
from densitylab.analysis import (CODE_DS, CODE_DU, CODE_FORBIDDEN, FAIL, INSUFFICIENT, PASS,
                                 region_codes)
from densitylab.dyncore.trajectory import Trajectory
from densitylab.harness.checks import CheckResult, run_check
from densitylab.harness.scenario import Scenario, load_scenario


@dataclass
class RunItem:
    """One integrated initial condition; ``loop`` is set for the adaptive family."""

    initial_condition: tuple[float, ...]
    trajectory: Trajectory
    loop: ClosedLoopRun | None = None


@dataclass
class RunReport:
    scenario: str
    checks: list[CheckResult]
    trajectories: list[str] = field(default_factory=list)
    stops: list[str] = field(default_factory=list)
    wall_time: float = 0.0
    runs: list[RunItem] = field(default_factory=list, repr=False)

    @property
    def verdict(self) -> str:
        """``fail`` iff any check fails; ``insufficient-coverage`` if any check lacks data."""
        verdicts = [c.verdict for c in self.checks]
        if FAIL in verdicts:
            return FAIL
        if INSUFFICIENT in verdicts:
            return INSUFFICIENT
        return PASS

    @property
    def passed(self) -> bool:
        return self.verdict == PASS

    def check(self, name: str) -> CheckResult:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)

    def to_dict(self, include_timing: bool = False) -> dict[str, Any]:
        out: dict[str, Any] = {"scenario": self.scenario, "verdict": self.verdict,
                               "checks": [c.to_dict() for c in self.checks],
                               "trajectories": list(self.trajectories), "stops": list(self.stops)}
        if include_timing:
            out["wall_time"] = self.wall_time
        return out

    def to_json(self, include_timing: bool = False) -> str:
        return json.dumps(self.to_dict(include_timing), indent=2, sort_keys=True) + "\n"


def _empty(scenario: Scenario) -> Trajectory:
    return Trajectory(t0=0.0, h=scenario.integrator.sample_spacing,
                      states=np.zeros((0, scenario.state_dim)), stop_reason="completed", stop_time=0.0)


def _flag_regions(scenario: Scenario, traj: Trajectory) -> Trajectory:
    if scenario.regions.case is None or len(traj) == 0:
        return traj
    codes = region_codes(scenario.regions.case, traj.states, traj.times, scenario.region_params())
    return replace(traj, in_DS=codes == CODE_DS, in_DU=codes == CODE_DU,
                   in_forbidden=codes == CODE_FORBIDDEN)


def simulate(scenario: Scenario) -> list[RunItem]:
    """Integrate every initial condition of ``scenario`` (in declaration order)."""
    items = []
    for ic in scenario.initial_conditions:
        if scenario.integrator.nsteps == 0:
            items.append(RunItem(ic, _empty(scenario)))
            continue
        if scenario.adaptive:
            plant = replace(scenario.plant, y_derivs=ic)
            loop = adaptive.simulate(plant, scenario.controller, scenario.disturbances[0], scenario.integrator)
            items.append(RunItem(ic, _flag_regions(scenario, loop.trajectory), loop))
        else:
            traj = scenario.system().simulate(ic, scenario.integrator)
            items.append(RunItem(ic, _flag_regions(scenario, traj)))
    return items


def evaluate(scenario: Scenario, runs: Sequence[RunItem]) -> list[CheckResult]:
    return [run_check(spec, scenario, list(runs)) for spec in scenario.checks]


def write_trajectory(traj: Trajectory, path: Path, fmt: str = "csv") -> None:
    if fmt == "csv":
        traj.to_csv(path)
        return
    if fmt != "json":
        raise ValueError("format must be csv or json")

    def arr(a):
        return None if a is None else [None if not math.isfinite(float(v)) else float(v) for v in a]

    doc = {"t0": traj.t0, "h": traj.h, "dim": traj.dim, "stop_reason": traj.stop_reason, "stop_time": traj.stop_time,
           "t": arr(traj.times), "x": traj.states.tolist(), "u": arr(traj.u), "rho": arr(traj.rho),
           "V": arr(traj.V), "Vdot": arr(traj.vdot),
           "in_DS": None if traj.in_DS is None else traj.in_DS.astype(int).tolist(),
           "in_DU": None if traj.in_DU is None else traj.in_DU.astype(int).tolist(),
           "in_forbidden": None if traj.in_forbidden is None else traj.in_forbidden.astype(int).tolist()}
    path.write_text(json.dumps(doc, separators=(",", ":")) + "\n")


def read_trajectory(path: str | Path) -> Trajectory:
    """Load a file written by :func:`write_trajectory` (format chosen by suffix)."""
    path = Path(path)
    if path.suffix.lower() != ".json":
        return Trajectory.from_csv(path)
    doc = json.loads(path.read_text())

    def arr(key):
        v = doc.get(key)
        return None if v is None else np.array([math.nan if a is None else a for a in v], dtype=float)

    def flags(key):
        v = doc.get(key)
        return None if v is None else np.asarray(v, dtype=bool)

    return Trajectory(t0=doc["t0"], h=doc["h"], states=np.asarray(doc["x"], dtype=float).reshape(len(doc["t"]), doc["dim"]),
                      u=arr("u"), rho=arr("rho"), V=arr("V"), in_DS=flags("in_DS"), in_DU=flags("in_DU"),
                      in_forbidden=flags("in_forbidden"), stop_reason=doc["stop_reason"],
                      stop_time=doc.get("stop_time"))


def run(scenario: Scenario | str | Path, out: str | Path | None = None, fmt: str = "csv") -> RunReport:
    """Integrate, verify and (when ``out`` is given) write ``<out>/<name>/``.

    The output directory receives one trajectory file per initial condition
    and ``report.json``; wall-clock time is kept on the report object but not
    written, so repeated runs produce identical files.
    """
    if not isinstance(scenario, Scenario):
        scenario = load_scenario(scenario)
    start = time.perf_counter()
    runs = simulate(scenario)
    checks = evaluate(scenario, runs)
    names = [f"traj_{i:02d}.{fmt}" for i in range(len(runs))]
    report = RunReport(scenario.name, checks, names, [r.trajectory.stop_reason for r in runs], runs=runs)
    if out is not None:
        target = Path(out) / scenario.name
        target.mkdir(parents=True, exist_ok=True)
        for name, item in zip(names, runs):
            write_trajectory(item.trajectory, target / name, fmt)
        (target / "report.json").write_text(report.to_json())
    report.wall_time = time.perf_counter() - start
    return report


def run_batch(scenarios: Sequence[Scenario | str | Path], out: str | Path | None = None,
              fmt: str = "csv", workers: int = 1) -> list[RunReport]:
    """Run several scenarios; results come back in submission order."""
    if workers <= 1:
        return [run(s, out, fmt) for s in scenarios]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(lambda s: run(s, out, fmt), scenarios))
