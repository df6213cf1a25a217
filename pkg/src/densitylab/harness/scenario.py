"""Scenario files: a versioned JSON description of one experiment.

A scenario names a system family, its density field and disturbances (or, for
the adaptive family, a plant and a controller), one or more initial
conditions, an integrator configuration, the region parameters used by the
analytic region formulas, and the list of checks to run.

Preset files carry a ``content_hash``: the SHA-256 of the canonical JSON
encoding (sorted keys, compact separators) of every other field.  The hash is
verified whenever it is present, so an edited preset is rejected until it is
re-frozen with :func:`freeze`.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field, replace
from importlib import resources
from pathlib import Path
from typing import Any, Mapping

from densitylab.adaptive import ControllerConfig
from densitylab.analysis import CASE_IDS, EtaParams, RegionParams, eta
from densitylab.density import DensityField
from densitylab.dyncore.integrate import IntegratorConfig
from densitylab.dyncore.signals import TimeSignal
from densitylab.dyncore.systems import FAMILY_DIMS, DensitySystem
from densitylab.dyncore.trajectory import STOP_REASONS
from densitylab.errors import ConfigError, UnboundedSignalError
from densitylab.plant import PolyPlant, c0_norm_bound

SCHEMA_VERSION = 1
FAMILIES = ("scalar-ex1", "planar-ex2", "planar-ex3", "adaptive-ex3", "pendulum")
ADAPTIVE = "adaptive-ex3"

_TOP_FIELDS = {"schema_version", "name", "figure", "description", "header", "family", "rho",
               "rho2", "g_over_l", "disturbances", "plant", "controller", "initial_conditions",
               "integrator", "regions", "checks", "ceilings", "expected_stop", "content_hash"}
_REQUIRED = ("schema_version", "name", "family", "integrator")


def canonical_json(data: Mapping[str, Any]) -> str:
    return json.dumps(data, sort_keys=True, separators=(",", ":"), allow_nan=False)


def content_hash(data: Mapping[str, Any]) -> str:
    """SHA-256 of the canonical encoding of ``data`` without its ``content_hash`` field."""
    body = {k: v for k, v in data.items() if k != "content_hash"}
    return hashlib.sha256(canonical_json(body).encode()).hexdigest()


def freeze(data: Mapping[str, Any]) -> dict[str, Any]:
    """Return a copy of ``data`` with a fresh ``content_hash``."""
    out = {k: v for k, v in data.items() if k != "content_hash"}
    out["content_hash"] = content_hash(out)
    return out


@dataclass(frozen=True)
class RegionSettings:
    """Declared region parameters; ``dbar`` and ``eta`` are derived when omitted."""

    case: str | None = None
    mu: float = 0.5
    dbar: tuple[float, ...] | None = None
    eta: float | None = None

    @classmethod
    def from_dict(cls, data: Mapping[str, Any] | None) -> RegionSettings:
        if data is None:
            return cls()
        unknown = set(data) - {"case", "mu", "dbar", "eta"}
        if unknown:
            raise ConfigError(f"regions.{sorted(unknown)[0]}", "unknown field")
        case = data.get("case")
        if case is not None and case not in CASE_IDS:
            raise ConfigError("regions.case", f"unknown case id {case!r}")
        mu = float(data.get("mu", 0.5))
        if not 0 < mu < 1:
            raise ConfigError("regions.mu", "must lie in (0, 1)")
        dbar = data.get("dbar")
        if dbar is not None:
            dbar = tuple(float(v) for v in (dbar if isinstance(dbar, list) else [dbar]))
            if any(v < 0 for v in dbar):
                raise ConfigError("regions.dbar", "must be >= 0")
        eta_v = data.get("eta")
        return cls(case, mu, dbar, None if eta_v is None else float(eta_v))

    def to_dict(self) -> dict[str, Any]:
        out: dict[str, Any] = {"mu": self.mu}
        if self.case is not None:
            out["case"] = self.case
        if self.dbar is not None:
            out["dbar"] = list(self.dbar)
        if self.eta is not None:
            out["eta"] = self.eta
        return out


@dataclass(frozen=True)
class CheckSpec:
    """One entry of the verification list: a check name plus its options."""

    check: str
    options: Mapping[str, Any] = field(default_factory=dict)

    @property
    def label(self) -> str:
        return str(self.options.get("name", self.check))

    @classmethod
    def from_dict(cls, data: Mapping[str, Any], where: str) -> CheckSpec:
        if not isinstance(data, Mapping) or "check" not in data:
            raise ConfigError(f"{where}.check", "missing")
        return cls(str(data["check"]), {k: v for k, v in data.items() if k != "check"})

    def to_dict(self) -> dict[str, Any]:
        return {"check": self.check, **self.options}


@dataclass(frozen=True)
class Scenario:
    name: str
    family: str
    integrator: IntegratorConfig
    initial_conditions: tuple[tuple[float, ...], ...]
    rho: DensityField | None = None
    disturbances: tuple[TimeSignal, ...] = ()
    plant: PolyPlant | None = None
    controller: ControllerConfig | None = None
    rho2: str = "same"
    g_over_l: float = 1.0
    regions: RegionSettings = field(default_factory=RegionSettings)
    checks: tuple[CheckSpec, ...] = ()
    ceilings: Mapping[str, float] = field(default_factory=dict)
    expected_stop: tuple[str, ...] = ("completed",)
    figure: str = ""
    description: str = ""
    header: tuple[str, ...] = ()
    content_hash: str | None = None

    @property
    def adaptive(self) -> bool:
        return self.family == ADAPTIVE

    @property
    def density(self) -> DensityField:
        """The density field driving the run (the controller's for the adaptive family)."""
        return self.controller.rho if self.adaptive else self.rho  # type: ignore[union-attr,return-value]

    @property
    def state_dim(self) -> int:
        if self.adaptive:
            n = self.plant.n  # type: ignore[union-attr]
            return n + 2 * (n - 1) + 2 * n - 1
        return FAMILY_DIMS[self.family]

    def system(self) -> DensitySystem:
        if self.adaptive:
            raise ConfigError("family", "the adaptive family has no open-loop density system")
        return DensitySystem(self.family, self.rho, self.disturbances, self.rho2, self.g_over_l)

    def dbar(self) -> tuple[float, ...]:
        """Per-channel disturbance bounds: declared, or ``sup_bound`` of each signal."""
        if self.regions.dbar is not None:
            return self.regions.dbar
        return tuple(s.sup_bound() for s in self.disturbances)

    def eta(self) -> float:
        """Declared ``eta`` or, for the adaptive family, the value from the true plant's ``c0``."""
        if self.regions.eta is not None:
            return self.regions.eta
        if not self.adaptive:
            return 0.0
        cfg = self.controller
        c0bar = c0_norm_bound([replace(self.plant, k=1.0)], cfg.Rm)  # type: ignore[arg-type]
        return eta(EtaParams(self.regions.mu, cfg.tau, self.dbar()[0], cfg.gamma, cfg.beta, c0bar))

    def region_params(self) -> RegionParams:
        return RegionParams(self.density, self.regions.mu, self.dbar() or (0.0,), self.eta())

    def with_integrator(self, step: float | None = None, duration: float | None = None) -> Scenario:
        integ = self.integrator
        if step is not None:
            # keep the sample spacing fixed when the step is overridden
            spacing = integ.sample_spacing
            every = max(1, int(round(spacing / step)))
            integ = integ.replace(step=step, record_every=every)
        if duration is not None:
            integ = integ.replace(duration=duration)
        return replace(self, integrator=integ, content_hash=None)

    def to_dict(self) -> dict[str, Any]:
        out: dict[str, Any] = {
            "schema_version": SCHEMA_VERSION, "name": self.name, "family": self.family,
            "figure": self.figure, "description": self.description, "header": list(self.header),
            "initial_conditions": [list(ic) for ic in self.initial_conditions],
            "integrator": self.integrator.to_dict(), "regions": self.regions.to_dict(),
            "checks": [c.to_dict() for c in self.checks], "ceilings": dict(self.ceilings),
            "expected_stop": list(self.expected_stop),
        }
        if self.adaptive:
            out["plant"] = self.plant.to_dict()  # type: ignore[union-attr]
            out["controller"] = self.controller.to_dict()  # type: ignore[union-attr]
        else:
            out["rho"] = self.rho.to_dict()  # type: ignore[union-attr]
            out["rho2"] = self.rho2
            if self.family == "pendulum":
                out["g_over_l"] = self.g_over_l
        out["disturbances"] = [s.to_dict() for s in self.disturbances]
        return out


# ---------------------------------------------------------------------------
# validation


def _number_list(value: Any, where: str) -> tuple[float, ...]:
    if not isinstance(value, list) or not value:
        raise ConfigError(where, "expected a non-empty list of numbers")
    try:
        out = tuple(float(v) for v in value)
    except (TypeError, ValueError):
        raise ConfigError(where, "expected numbers") from None
    if not all(math.isfinite(v) for v in out):
        raise ConfigError(where, "must be finite")
    return out


def _check_signal_constraints(rho: DensityField, horizon: float, where: str) -> None:
    """Variant constraints on time-varying parameters, sampled over the horizon."""
    import numpy as np

    ts = np.linspace(0.0, max(horizon, 1e-9), 2001)
    if rho.kind in ("funnel", "log_sym") and np.any(rho.signals["b"].evaluate(ts) <= 0):
        raise ConfigError(f"{where}.b", "b(t) must stay > 0")
    if rho.kind in ("log_ratio", "log_tube", "annulus_log"):
        hi = rho.signals["b_upper"].evaluate(ts)
        lo = rho.signals["b_lower"].evaluate(ts)
        if np.any(hi <= lo):
            raise ConfigError(f"{where}.b_upper", "b_upper(t) must exceed b_lower(t)")
        if rho.kind == "annulus_log" and np.any(lo <= 0):
            raise ConfigError(f"{where}.b_lower", "b_lower(t) must stay > 0")


def scenario_from_dict(data: Mapping[str, Any], *, verify_hash: bool = True) -> Scenario:
    """Validate a parsed scenario document eagerly and build a :class:`Scenario`."""
    if not isinstance(data, Mapping):
        raise ConfigError("scenario", "top level must be a JSON object")
    for key in _REQUIRED:
        if key not in data:
            raise ConfigError(key, "missing")
    unknown = set(data) - _TOP_FIELDS
    if unknown:
        raise ConfigError(sorted(unknown)[0], "unknown field")
    if data["schema_version"] != SCHEMA_VERSION:
        raise ConfigError("schema_version", f"expected {SCHEMA_VERSION}, got {data['schema_version']!r}")
    if verify_hash and "content_hash" in data and data["content_hash"] != content_hash(data):
        raise ConfigError("content_hash", "does not match the file contents (preset edited without re-freezing)")
    family = data["family"]
    if family not in FAMILIES:
        raise ConfigError("family", f"must be one of {FAMILIES}")
    integ = IntegratorConfig.from_dict(data["integrator"])

    dist = data.get("disturbances", [])
    if not isinstance(dist, list):
        raise ConfigError("disturbances", "expected a list of signals")
    disturbances = tuple(TimeSignal.from_dict(d, f"disturbances[{i}]") for i, d in enumerate(dist))
    for i, s in enumerate(disturbances):
        try:
            s.sup_bound()
        except UnboundedSignalError as exc:
            raise ConfigError(f"disturbances[{i}]", str(exc)) from None

    kwargs: dict[str, Any] = {}
    if family == ADAPTIVE:
        for key in ("plant", "controller"):
            if key not in data:
                raise ConfigError(key, f"required for family {family!r}")
        if "rho" in data:
            raise ConfigError("rho", "the adaptive family declares its density under controller.rho")
        plant = PolyPlant.from_dict(data["plant"])
        ctrl = ControllerConfig.from_dict(data["controller"])
        if plant.n != ctrl.n:
            raise ConfigError("controller.Rm", f"degree must be n-1 = {plant.n - 1}")
        if len(disturbances) != 1:
            raise ConfigError("disturbances", "the adaptive family takes exactly one disturbance")
        _check_signal_constraints(ctrl.rho, integ.duration, "controller.rho")
        ics = data.get("initial_conditions")
        if ics is None:
            ics_t: tuple[tuple[float, ...], ...] = (plant.y_derivs,)
        else:
            if not isinstance(ics, list) or not ics:
                raise ConfigError("initial_conditions", "expected a non-empty list")
            ics_t = tuple(_number_list(ic, f"initial_conditions[{i}]") for i, ic in enumerate(ics))
            for i, ic in enumerate(ics_t):
                if len(ic) > plant.n:
                    raise ConfigError(f"initial_conditions[{i}]", f"at most n = {plant.n} output derivatives")
        kwargs.update(plant=plant, controller=ctrl)
    else:
        if "rho" not in data:
            raise ConfigError("rho", f"required for family {family!r}")
        if "plant" in data or "controller" in data:
            raise ConfigError("plant" if "plant" in data else "controller",
                              "only the adaptive family takes a plant and controller")
        rho = DensityField.from_dict(data["rho"], "rho")
        _check_signal_constraints(rho, integ.duration, "rho")
        dim = FAMILY_DIMS[family]
        if "initial_conditions" not in data:
            raise ConfigError("initial_conditions", "missing")
        ics = data["initial_conditions"]
        if not isinstance(ics, list) or not ics:
            raise ConfigError("initial_conditions", "expected a non-empty list")
        ics_t = tuple(_number_list(ic, f"initial_conditions[{i}]") for i, ic in enumerate(ics))
        for i, ic in enumerate(ics_t):
            if len(ic) != dim:
                raise ConfigError(f"initial_conditions[{i}]", f"family {family} needs {dim} components")
        rho2 = data.get("rho2", "same")
        kwargs.update(rho=rho, rho2=rho2, g_over_l=float(data.get("g_over_l", 1.0)))
        # family-consistency checks (dimension, disturbance count, rho2)
        DensitySystem(family, rho, disturbances, rho2, kwargs["g_over_l"])

    regions = RegionSettings.from_dict(data.get("regions"))
    checks_raw = data.get("checks", [])
    if not isinstance(checks_raw, list):
        raise ConfigError("checks", "expected a list")
    checks = tuple(CheckSpec.from_dict(c, f"checks[{i}]") for i, c in enumerate(checks_raw))
    from densitylab.harness.checks import CHECKS  # local import: checks depend on scenarios

    for i, c in enumerate(checks):
        if c.check not in CHECKS:
            raise ConfigError(f"checks[{i}].check", f"unknown check {c.check!r}")
    ceilings = data.get("ceilings", {})
    if not isinstance(ceilings, Mapping) or not all(
            isinstance(v, (int, float)) and v > 0 for v in ceilings.values()):
        raise ConfigError("ceilings", "expected an object of positive numbers")
    stops = data.get("expected_stop", ["completed"])
    stops = tuple([stops] if isinstance(stops, str) else stops)
    for s in stops:
        if s not in STOP_REASONS:
            raise ConfigError("expected_stop", f"unknown stop reason {s!r}")
    header = data.get("header", [])
    header = tuple([header] if isinstance(header, str) else header)
    return Scenario(name=str(data["name"]), family=family, integrator=integ,
                    initial_conditions=ics_t, disturbances=disturbances, regions=regions,
                    checks=checks, ceilings={k: float(v) for k, v in ceilings.items()},
                    expected_stop=stops, figure=str(data.get("figure", "")),
                    description=str(data.get("description", "")), header=header,
                    content_hash=data.get("content_hash"), **kwargs)


# ---------------------------------------------------------------------------
# loading


def _parse(text: str, source: str) -> dict[str, Any]:
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{source}:{exc.lineno}:{exc.colno}", f"JSON parse error: {exc.msg}") from None


def preset_names() -> list[str]:
    base = resources.files("densitylab.harness") / "presets"
    return sorted(p.name[:-5] for p in base.iterdir() if p.name.endswith(".json"))


def preset_document(name: str) -> dict[str, Any]:
    """Raw JSON document of the preset ``name`` (exact name or unique prefix)."""
    names = preset_names()
    if name not in names:
        matches = [n for n in names if n.startswith(name)]
        if not matches:
            raise ConfigError("scenario", f"no preset or file named {name!r}")
        if len(matches) > 1:
            raise ConfigError("scenario", f"preset prefix {name!r} is ambiguous: {', '.join(matches)}")
        name = matches[0]
    text = (resources.files("densitylab.harness") / "presets" / f"{name}.json").read_text()
    return _parse(text, f"{name}.json")


def load_scenario(ref: str | Path) -> Scenario:
    """Load a scenario from a JSON file path or a preset name (unique prefixes accepted)."""
    path = Path(ref)
    if path.suffix == ".json" or path.exists():
        if not path.is_file():
            raise ConfigError("scenario", f"no such file {str(path)!r}")
        return scenario_from_dict(_parse(path.read_text(), str(path)))
    return scenario_from_dict(preset_document(str(ref)))


def list_presets() -> list[dict[str, str]]:
    """Static table of presets: name, figure and one-line description."""
    rows = []
    for name in preset_names():
        doc = preset_document(name)
        rows.append({"name": name, "figure": doc.get("figure", ""),
                     "description": doc.get("description", "")})
    return rows
