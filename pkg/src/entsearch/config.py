"""JSON experiment configuration: parsing, validation, re-serialization.

A config file is a single JSON object naming the sensors (discrete rows,
Gaussian parameters, or costed mode lists), the cost discount, the horizon
and replication budget, the seed and schedule, and optionally a
piecewise-constant prior and solver tolerances.  Parsing is strict: every
probability row goes through the channel invariants before any computation
runs, and re-serializing a parsed config reproduces the same values.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .belief import PiecewiseDensity
from .channel import DiscreteChannel, GaussianBooleanChannel
from .policy import PrecisionMode, PrecisionModeSet, SensorSuite
from .sim import ExperimentConfig


class ConfigError(ValueError):
    """A config file failed validation."""


@dataclass
class Tolerances:
    capacity_tol: float = 1e-10
    capacity_max_iters: int = 100_000

    def to_dict(self) -> dict:
        return {"capacity_tol": self.capacity_tol,
                "capacity_max_iters": self.capacity_max_iters}


@dataclass(eq=False)
class RunConfig:
    """Validated in-memory form of a JSON experiment file."""

    sensor_names: list[str]
    sensors: list
    gamma: float
    stages: int
    replications: int
    seed: int
    schedule: str
    prior: PiecewiseDensity | None = None
    tolerances: Tolerances = field(default_factory=Tolerances)

    def __eq__(self, other):
        if not isinstance(other, RunConfig):
            return NotImplemented
        return self.to_dict() == other.to_dict() and all(
            a == b for a, b in zip(self.sensors, other.sensors))

    def suite(self) -> SensorSuite:
        return SensorSuite(sensors=tuple(self.sensors), gamma=self.gamma)

    def sensor(self, name: str):
        try:
            return self.sensors[self.sensor_names.index(name)]
        except ValueError:
            raise ConfigError(
                f"no sensor named {name!r}; have {self.sensor_names}") from None

    def experiment(self, *, seed=None, schedule=None, replications=None,
                   stages=None) -> ExperimentConfig:
        """Build the simulation config, with optional field overrides."""
        try:
            return ExperimentConfig(
                suite=self.suite(),
                stages=self.stages if stages is None else stages,
                replications=(self.replications if replications is None
                              else replications),
                seed=self.seed if seed is None else seed,
                schedule=self.schedule if schedule is None else schedule,
                prior=self.prior)
        except ValueError as err:
            raise ConfigError(str(err)) from err

    def to_dict(self) -> dict:
        doc = {"sensors": [_sensor_to_dict(name, s) for name, s in
                           zip(self.sensor_names, self.sensors)],
               "gamma": self.gamma,
               "stages": self.stages,
               "replications": self.replications,
               "seed": self.seed,
               "schedule": self.schedule}
        if self.prior is not None:
            doc["prior"] = {"breakpoints": list(map(float, self.prior.breakpoints)),
                            "values": list(map(float, self.prior.values))}
        doc["tolerances"] = self.tolerances.to_dict()
        return doc


def _require(doc: dict, key: str, kind, where: str):
    if key not in doc:
        raise ConfigError(f"{where}: missing required key {key!r}")
    value = doc[key]
    if kind is float and isinstance(value, int) and not isinstance(value, bool):
        value = float(value)
    if not isinstance(value, kind) or isinstance(value, bool):
        raise ConfigError(f"{where}: key {key!r} must be of type {kind.__name__}")
    return value


def _probability_row(entry: dict, key: str, where: str) -> list[float]:
    row = _require(entry, key, list, where)
    try:
        return [float(v) for v in row]
    except (TypeError, ValueError):
        raise ConfigError(f"{where}: {key} must be a list of numbers") from None


def _parse_sensor(entry, index: int):
    where = f"sensors[{index}]"
    if not isinstance(entry, dict):
        raise ConfigError(f"{where}: must be an object")
    name = _require(entry, "name", str, where)
    kind = _require(entry, "type", str, where)
    where = f"sensor {name!r}"
    try:
        if kind == "discrete":
            f0 = _probability_row(entry, "f0", where)
            f1 = _probability_row(entry, "f1", where)
            return name, DiscreteChannel(np.array([f0, f1]))
        if kind == "gaussian":
            return name, GaussianBooleanChannel(
                mean0=_require(entry, "mean0", float, where),
                mean1=_require(entry, "mean1", float, where),
                sigma=_require(entry, "sigma", float, where))
        if kind == "modes":
            modes = _require(entry, "modes", list, where)
            parsed = []
            for j, mode in enumerate(modes):
                mwhere = f"{where} mode {j}"
                if not isinstance(mode, dict):
                    raise ConfigError(f"{mwhere}: must be an object")
                parsed.append(PrecisionMode(
                    channel=DiscreteChannel(np.array(
                        [_probability_row(mode, "f0", mwhere),
                         _probability_row(mode, "f1", mwhere)])),
                    cost=_require(mode, "cost", float, mwhere)))
            return name, PrecisionModeSet(modes=tuple(parsed))
    except ValueError as err:
        raise ConfigError(f"{where}: {err}") from err
    raise ConfigError(f"{where}: unknown sensor type {kind!r}")


def _sensor_to_dict(name: str, sensor) -> dict:
    if isinstance(sensor, DiscreteChannel):
        return {"name": name, "type": "discrete",
                "f0": list(map(float, sensor.likelihood[0])),
                "f1": list(map(float, sensor.likelihood[1]))}
    if isinstance(sensor, GaussianBooleanChannel):
        return {"name": name, "type": "gaussian", "mean0": sensor.mean0,
                "mean1": sensor.mean1, "sigma": sensor.sigma}
    return {"name": name, "type": "modes",
            "modes": [{"f0": list(map(float, m.channel.likelihood[0])),
                       "f1": list(map(float, m.channel.likelihood[1])),
                       "cost": m.cost} for m in sensor.modes]}


def parse_config(doc: dict) -> RunConfig:
    if not isinstance(doc, dict):
        raise ConfigError("config root must be a JSON object")
    raw_sensors = _require(doc, "sensors", list, "config")
    if not raw_sensors:
        raise ConfigError("config: sensors list is empty")
    names, sensors = [], []
    for i, entry in enumerate(raw_sensors):
        name, sensor = _parse_sensor(entry, i)
        if name in names:
            raise ConfigError(f"duplicate sensor name {name!r}")
        names.append(name)
        sensors.append(sensor)

    gamma = float(doc.get("gamma", 0.0))
    if gamma < 0.0:
        raise ConfigError("gamma must be nonnegative")
    stages = _require(doc, "stages", int, "config")
    replications = _require(doc, "replications", int, "config")
    seed = _require(doc, "seed", int, "config")
    schedule = doc.get("schedule", "joint")
    if schedule not in ("joint", "sequential"):
        raise ConfigError(f"schedule must be 'joint' or 'sequential', "
                          f"got {schedule!r}")
    if stages < 1:
        raise ConfigError("stages must be at least 1")
    if replications < 1:
        raise ConfigError("replications must be at least 1")
    if not 0 <= seed < 2 ** 64:
        raise ConfigError("seed must fit in an unsigned 64-bit integer")

    prior = None
    if "prior" in doc:
        pr = doc["prior"]
        if not isinstance(pr, dict):
            raise ConfigError("prior must be an object")
        try:
            prior = PiecewiseDensity(
                _probability_row(pr, "breakpoints", "prior"),
                _probability_row(pr, "values", "prior"))
        except ValueError as err:
            raise ConfigError(f"prior: {err}") from err

    tol = Tolerances()
    if "tolerances" in doc:
        tdoc = doc["tolerances"]
        if not isinstance(tdoc, dict):
            raise ConfigError("tolerances must be an object")
        known = {"capacity_tol", "capacity_max_iters"}
        unknown = set(tdoc) - known
        if unknown:
            raise ConfigError(f"unknown tolerance keys: {sorted(unknown)}")
        tol = Tolerances(
            capacity_tol=float(tdoc.get("capacity_tol", tol.capacity_tol)),
            capacity_max_iters=int(tdoc.get("capacity_max_iters",
                                            tol.capacity_max_iters)))
        if tol.capacity_tol <= 0.0:
            raise ConfigError("capacity_tol must be positive")

    return RunConfig(sensor_names=names, sensors=sensors, gamma=gamma,
                     stages=stages, replications=replications, seed=seed,
                     schedule=schedule, prior=prior, tolerances=tol)


def load_config(path) -> RunConfig:
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except json.JSONDecodeError as err:
        raise ConfigError(f"{path}: invalid JSON ({err})") from err
    return parse_config(doc)
