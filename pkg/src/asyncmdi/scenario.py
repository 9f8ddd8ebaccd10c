"""Full scenario description and the JSON scenario file format.

A scenario file is a JSON object with the sections ``source_a``,
``source_b``, ``channel``, ``matching``, ``drift``, ``security``,
``optimizer`` and ``run``. Every section is optional apart from the two
sources; unknown keys are rejected. See ``scenarios/`` for complete
examples.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Any

import jsonschema

from asyncmdi.channel import ChannelConfig, SourceConfig
from asyncmdi.drift import TECHNIQUES, DriftConfig
from asyncmdi.exceptions import ParameterError
from asyncmdi.keyrate import SecurityConfig
from asyncmdi.matching import MODES, MatchingConfig

#: Seed used when neither the file nor the command line provides one.
DEFAULT_SEED = 20240601


class ConfigError(ParameterError):
    """A scenario file is malformed or inconsistent."""


@dataclass(frozen=True)
class Scenario:
    """Everything :func:`asyncmdi.keyrate.evaluate` needs for one point."""

    source_a: SourceConfig
    source_b: SourceConfig
    channel: ChannelConfig
    matching: MatchingConfig = field(default_factory=MatchingConfig)
    drift: DriftConfig = field(default_factory=DriftConfig)
    security: SecurityConfig = field(default_factory=SecurityConfig)
    N: float = 1e12

    def at_distance(self, distance_km: float, asymmetry_km: float = 0.0) -> Scenario:
        """Copy with total length ``distance_km``; Alice's arm is longer by ``asymmetry_km``."""
        if asymmetry_km < 0 or asymmetry_km > distance_km:
            raise ParameterError("asymmetry must lie in [0, distance]")
        l_a = (distance_km + asymmetry_km) / 2
        return replace(self, channel=self.channel.with_lengths(l_a, distance_km - l_a))

    def with_sources(self, source_a: SourceConfig, source_b: SourceConfig) -> Scenario:
        return replace(self, source_a=source_a, source_b=source_b)


@dataclass(frozen=True)
class OptimizerSettings:
    """Search ranges and budget of the evolutionary optimizer."""

    enabled: bool = True
    population: int = 64
    generations: int = 200
    mu_bounds: tuple[float, float] = (0.02, 1.0)
    nu_bounds: tuple[float, float] = (0.001, 0.5)
    logit_bounds: tuple[float, float] = (-6.0, 6.0)
    repair_tries: int = 5
    warm_start: bool = True


@dataclass(frozen=True)
class RunSettings:
    seed: int = DEFAULT_SEED
    distance_start: float = 100.0
    distance_stop: float = 400.0
    distance_step: float = 10.0
    asymmetry_km: float = 0.0
    N_sim: float = 1e6
    workers: int = 1

    def distances(self) -> list[float]:
        """Inclusive grid from start to stop; empty when stop < start."""
        if self.distance_step <= 0:
            raise ConfigError("distance step must be positive")
        if self.distance_stop < self.distance_start:
            return []
        count = int((self.distance_stop - self.distance_start) / self.distance_step + 1e-9) + 1
        return [round(self.distance_start + i * self.distance_step, 9) for i in range(count)]


@dataclass(frozen=True)
class ScenarioFile:
    scenario: Scenario
    optimizer: OptimizerSettings = field(default_factory=OptimizerSettings)
    run: RunSettings = field(default_factory=RunSettings)


_NUM = {"type": "number"}
_POS = {"type": "number", "exclusiveMinimum": 0}
_PROB = {"type": "number", "minimum": 0, "maximum": 1}
_PAIR = {"type": "array", "items": _NUM, "minItems": 2, "maxItems": 2}


def _obj(props: dict, required: tuple = ()) -> dict:
    return {"type": "object", "properties": props, "required": list(required), "additionalProperties": False}


_SOURCE = _obj({"mu": _POS, "nu": _POS, "p_mu": _PROB, "p_nu": _PROB, "p_o": _PROB, "p_ohat": _PROB},
               ("mu", "nu", "p_mu", "p_nu", "p_o", "p_ohat"))

SCHEMA: dict[str, Any] = _obj(
    {
        "source_a": _SOURCE,
        "source_b": _SOURCE,
        "channel": _obj({"l_a": _NUM, "l_b": _NUM, "alpha": _NUM, "eta_d": _PROB, "p_d": _PROB}),
        "matching": _obj({
            "mode": {"enum": list(MODES)},
            "F": _POS,
            "T_c": _POS,
            "M": {"type": "integer", "minimum": 2},
            "sigma": _NUM,
            "Lambda": {"type": "integer", "minimum": 0},
            "quad_nodes": {"type": "integer", "minimum": 8},
        }),
        "drift": _obj({
            "technique": {"enum": list(TECHNIQUES)},
            "delta_v": _NUM,
            "fiber_drift_rate": _NUM,
            "v": _POS,
            "s_fiber": _POS,
            "tau": _POS,
        }),
        "security": _obj({"epsilon": _POS, "f": _NUM, "epsilon_cor": _POS,
                          "literal_vacuum_gain": {"type": "boolean"}}),
        "optimizer": _obj({
            "enabled": {"type": "boolean"},
            "population": {"type": "integer", "minimum": 4},
            "generations": {"type": "integer", "minimum": 1},
            "mu_bounds": _PAIR,
            "nu_bounds": _PAIR,
            "logit_bounds": _PAIR,
            "repair_tries": {"type": "integer", "minimum": 0},
            "warm_start": {"type": "boolean"},
        }),
        "run": _obj({
            "N": _POS,
            "seed": {"type": "integer", "minimum": 0},
            "distance": _obj({"start": _NUM, "stop": _NUM, "step": _POS}, ("start", "stop", "step")),
            "asymmetry_km": _NUM,
            "N_sim": _POS,
            "workers": {"type": "integer", "minimum": 1},
        }),
    },
    ("source_a", "source_b"),
)


def parse_scenario(doc: dict[str, Any]) -> ScenarioFile:
    """Validate a decoded scenario document and build the configuration.

    Raises:
        ConfigError: on schema violations or inconsistent values.
    """
    try:
        jsonschema.validate(doc, SCHEMA)
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ConfigError(f"{where}: {exc.message}") from None
    run = dict(doc.get("run", {}))
    dist = run.pop("distance", None)
    N = run.pop("N", 1e12)
    if dist is not None:
        run.update(distance_start=dist["start"], distance_stop=dist["stop"], distance_step=dist["step"])
    opt = {k: tuple(v) if isinstance(v, list) else v for k, v in doc.get("optimizer", {}).items()}
    ch = {"l_a": 0.0, "l_b": 0.0, **doc.get("channel", {})}
    try:
        scenario = Scenario(
            source_a=SourceConfig(**doc["source_a"]),
            source_b=SourceConfig(**doc["source_b"]),
            channel=ChannelConfig(**ch),
            matching=MatchingConfig(**doc.get("matching", {})),
            drift=DriftConfig(**doc.get("drift", {})),
            security=SecurityConfig(**doc.get("security", {})),
            N=float(N),
        )
        settings = OptimizerSettings(**opt)
        for lo, hi in (settings.mu_bounds, settings.nu_bounds, settings.logit_bounds):
            if lo > hi:
                raise ParameterError("optimizer bounds must satisfy lo <= hi")
        return ScenarioFile(scenario, settings, RunSettings(**run))
    except ParameterError as exc:
        raise ConfigError(str(exc)) from None


def load_scenario(path: str | Path) -> ScenarioFile:
    """Read and validate a scenario file."""
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc.strerror}") from None
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc.msg} at line {exc.lineno})") from None
    return parse_scenario(doc)


def scenario_to_dict(sf: ScenarioFile) -> dict[str, Any]:
    """Inverse of :func:`parse_scenario` (round-trips through JSON)."""
    s = sf.scenario
    sec = asdict(s.security)
    if sec["epsilon_cor"] is None:
        del sec["epsilon_cor"]
    run = asdict(sf.run)
    run_doc = {
        "N": s.N,
        "seed": run["seed"],
        "distance": {"start": run["distance_start"], "stop": run["distance_stop"], "step": run["distance_step"]},
        "asymmetry_km": run["asymmetry_km"],
        "N_sim": run["N_sim"],
        "workers": run["workers"],
    }
    opt = {k: list(v) if isinstance(v, tuple) else v for k, v in asdict(sf.optimizer).items()}
    return {
        "source_a": s.source_a.as_dict(),
        "source_b": s.source_b.as_dict(),
        "channel": asdict(s.channel),
        "matching": asdict(s.matching),
        "drift": asdict(s.drift),
        "security": sec,
        "optimizer": opt,
        "run": run_doc,
    }
