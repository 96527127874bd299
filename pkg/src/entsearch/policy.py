"""Optimal sensing plans: operating points, partitions, precision modes.

The optimal operating point of a sensor does not depend on the current
posterior, so planning factors into a one-time resolution step (capacity or
symmetry shortcut per sensor, plus precision-mode selection) followed by a
cheap per-stage quantile construction that cuts [0, 1] into cells carrying
exactly the optimal masses.

Joint cells are laid out left to right in reflected Gray-code order of the
indicator tuples, so every sensor's region is a small union of contiguous
intervals.  Cell index k encodes the tuple (i_1 .. i_M) with sensor 1 in
the most significant bit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from . import channel as _channel
from .belief import Partition, PiecewiseDensity, normalize_union
from .channel import (CapacityResult, DiscreteChannel, GaussianBooleanChannel,
                      as_operating_point, capacity, factorized_joint_optimum,
                      gaussian_boolean_mi, gaussian_optimal_input,
                      is_quasi_symmetric, mutual_information)

PLAN_MASS_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class PrecisionMode:
    """One selectable error model and the cost of using it."""

    channel: DiscreteChannel
    cost: float

    def __post_init__(self):
        if self.cost < 0.0:
            raise ValueError("mode cost must be nonnegative")
        if self.channel.num_inputs != 2:
            raise ValueError("precision modes must be Boolean channels")

    def __eq__(self, other):
        if not isinstance(other, PrecisionMode):
            return NotImplemented
        return self.cost == other.cost and self.channel == other.channel


@dataclass(frozen=True, eq=False)
class PrecisionModeSet:
    """The error models a sensor can choose from, with per-use costs."""

    modes: tuple[PrecisionMode, ...]

    def __post_init__(self):
        modes = tuple(self.modes)
        if not modes:
            raise ValueError("need at least one precision mode")
        object.__setattr__(self, "modes", modes)

    def __eq__(self, other):
        if not isinstance(other, PrecisionModeSet):
            return NotImplemented
        return self.modes == other.modes


SensorDescriptor = DiscreteChannel | GaussianBooleanChannel | PrecisionModeSet


@dataclass(frozen=True, eq=False)
class SensorSuite:
    """A team of Boolean sensors and the cost discount applied to modes."""

    sensors: tuple[SensorDescriptor, ...]
    gamma: float = 0.0

    def __post_init__(self):
        sensors = tuple(self.sensors)
        if not sensors:
            raise ValueError("suite needs at least one sensor")
        for i, s in enumerate(sensors):
            if isinstance(s, DiscreteChannel) and s.num_inputs != 2:
                raise ValueError(f"sensor {i} is not Boolean")
        if self.gamma < 0.0:
            raise ValueError("gamma must be nonnegative")
        object.__setattr__(self, "sensors", sensors)

    def __eq__(self, other):
        if not isinstance(other, SensorSuite):
            return NotImplemented
        return self.gamma == other.gamma and self.sensors == other.sensors

    @property
    def num_sensors(self) -> int:
        return len(self.sensors)


@dataclass(frozen=True)
class ResolvedSensor:
    """Per-sensor planning solution: effective channel, optimum, gains."""

    channel: DiscreteChannel | GaussianBooleanChannel
    u_star: float          # optimal P(object in queried region)
    entropy_gain: float    # bits per stage at the optimum
    mode_index: int | None = None
    cost: float = 0.0

    @property
    def is_gaussian(self) -> bool:
        return isinstance(self.channel, GaussianBooleanChannel)


@dataclass(frozen=True)
class ResolvedSuite:
    sensors: tuple[ResolvedSensor, ...]
    gamma: float

    @property
    def entropy_gain(self) -> float:
        """Optimal expected entropy reduction per stage, in bits."""
        return sum(s.entropy_gain for s in self.sensors)

    @property
    def net_gain(self) -> float:
        """Entropy reduction minus discounted mode costs per stage."""
        return sum(s.entropy_gain - self.gamma * s.cost for s in self.sensors)

    @property
    def mode_indices(self) -> list[int] | None:
        if all(s.mode_index is None for s in self.sensors):
            return None
        return [0 if s.mode_index is None else s.mode_index
                for s in self.sensors]


@dataclass(frozen=True)
class SensingPlan:
    """A realizable stage plan: partition, per-sensor regions, modes.

    ``partition.cells[k]`` carries mass ``operating_point[k]`` under the
    planning density; for joint Boolean plans ``sensor_regions[m]`` is the
    union of cells whose m-th indicator bit is 1.
    """

    partition: Partition
    operating_point: np.ndarray
    sensor_regions: tuple | None = None
    chosen_modes: tuple[int, ...] | None = None
    per_sensor_u: tuple[float, ...] | None = None


def _gray_order(m: int) -> list[int]:
    """Dyadic cell labels in left-to-right reflected Gray-code order."""
    return [j ^ (j >> 1) for j in range(1 << m)]


def _bit(label: int, sensor: int, m: int) -> int:
    """Indicator i_{sensor+1} in label's dyadic expansion (sensor 0 = MSB)."""
    return (label >> (m - 1 - sensor)) & 1


def resolve_sensor(descriptor: SensorDescriptor, gamma: float = 0.0, *,
                   symmetry_shortcut: bool = True,
                   capacity_tol: float = 1e-10,
                   capacity_max_iters: int = 100_000) -> ResolvedSensor:
    """Solve one sensor's scalar optimization.

    Discrete sensors take the quasi-symmetric shortcut (u* = 1/2) when it
    applies, otherwise the capacity solver.  Gaussian sensors with a shared
    noise level always satisfy the mirror-symmetry condition, so u* = 1/2;
    disabling the shortcut runs the numeric maximizer instead, for checking
    agreement.  Mode sets are resolved by maximizing entropy gain minus
    gamma-discounted cost per mode and keeping the best (lowest index wins
    ties).
    """
    if isinstance(descriptor, PrecisionModeSet):
        best: tuple[int, ResolvedSensor] | None = None
        for idx, mode in enumerate(descriptor.modes):
            inner = resolve_sensor(
                mode.channel, symmetry_shortcut=symmetry_shortcut,
                capacity_tol=capacity_tol,
                capacity_max_iters=capacity_max_iters)
            resolved = ResolvedSensor(
                channel=mode.channel, u_star=inner.u_star,
                entropy_gain=inner.entropy_gain, mode_index=idx,
                cost=mode.cost)
            gain = resolved.entropy_gain - gamma * resolved.cost
            if best is None or gain > best[0]:
                best = (gain, resolved)
        return best[1]

    if isinstance(descriptor, GaussianBooleanChannel):
        if symmetry_shortcut or descriptor.mean0 == descriptor.mean1:
            u = 0.5
        else:
            u = gaussian_optimal_input(descriptor)
        gain = gaussian_boolean_mi(descriptor, u)
        return ResolvedSensor(channel=descriptor, u_star=u, entropy_gain=gain)

    if descriptor.num_inputs != 2:
        raise ValueError("joint planning requires Boolean sensors")
    if symmetry_shortcut and is_quasi_symmetric(descriptor) is not None:
        u = 0.5
        gain = mutual_information(descriptor, np.array([0.5, 0.5]))
    else:
        result = capacity(descriptor, tol=capacity_tol,
                          max_iters=capacity_max_iters)
        u = float(result.optimum[1])
        gain = result.value
    return ResolvedSensor(channel=descriptor, u_star=u, entropy_gain=gain)


def resolve_suite(suite: SensorSuite, **kwargs) -> ResolvedSuite:
    """Resolve every sensor of a suite; see resolve_sensor for options."""
    resolved = tuple(resolve_sensor(s, suite.gamma, **kwargs)
                     for s in suite.sensors)
    return ResolvedSuite(sensors=resolved, gamma=suite.gamma)


def plan_single_sensor_multi_region(p: PiecewiseDensity, ch: DiscreteChannel,
                                    capacity_tol: float = 1e-10,
                                    capacity_max_iters: int = 100_000
                                    ) -> SensingPlan:
    """Cut [0, 1] into K contiguous cells carrying the optimal masses.

    Cell k is the interval between the quantiles of the cumulative optimal
    operating point, so its posterior mass equals u*_k exactly.
    """
    result = capacity(ch, tol=capacity_tol, max_iters=capacity_max_iters)
    u_star = result.optimum
    cuts = [0.0] + [p.quantile(c) for c in np.cumsum(u_star)]
    cuts[-1] = 1.0
    partition = Partition.contiguous(cuts)
    realized = partition.masses(p)
    _check_realized(realized, u_star, p)
    return SensingPlan(partition=partition, operating_point=realized)


def plan_joint_boolean(p: PiecewiseDensity, suite: SensorSuite, *,
                       symmetry_shortcut: bool = True,
                       capacity_tol: float = 1e-10,
                       capacity_max_iters: int = 100_000) -> SensingPlan:
    """Jointly optimal batch plan for M Boolean sensors.

    Per-sensor optima factorize the joint operating point, cells are laid
    out in Gray order at quantiles of the cumulative masses, and sensor m's
    region is the union of cells whose m-th indicator bit is 1.
    """
    resolved = resolve_suite(suite, symmetry_shortcut=symmetry_shortcut,
                             capacity_tol=capacity_tol,
                             capacity_max_iters=capacity_max_iters)
    return plan_from_resolved(p, resolved)


def plan_from_resolved(p: PiecewiseDensity,
                       resolved: ResolvedSuite) -> SensingPlan:
    """Quantile construction of the joint plan for pre-resolved sensors."""
    u_per = [s.u_star for s in resolved.sensors]
    m = len(u_per)
    joint = factorized_joint_optimum(u_per)
    order = _gray_order(m)
    cum = np.concatenate(([0.0], np.cumsum(joint[order])))
    cuts = [0.0] + [p.quantile(c) for c in cum[1:]]
    cuts[-1] = 1.0
    # order[j] is the dyadic label of the j-th interval from the left.
    partition = Partition.contiguous(cuts, labels=order)
    realized = partition.masses(p)
    _check_realized(realized, joint, p)
    regions = []
    for s in range(m):
        pieces = [(cuts[j], cuts[j + 1]) for j, lab in enumerate(order)
                  if _bit(lab, s, m)]
        regions.append(normalize_union(pieces))
    return SensingPlan(partition=partition, operating_point=realized,
                       sensor_regions=tuple(regions),
                       chosen_modes=None if resolved.mode_indices is None
                       else tuple(resolved.mode_indices),
                       per_sensor_u=tuple(u_per))


def _check_realized(realized: np.ndarray, target: np.ndarray,
                    p: PiecewiseDensity) -> None:
    # One ulp of cut position carries about peak_density * eps of mass, so
    # sharply peaked posteriors (deep search stages) cannot realize the
    # optimum tighter than that in float64.
    quantization = float(p.values.max()) * 8.0 * np.finfo(float).eps
    tol = max(PLAN_MASS_TOL, quantization)
    err = float(np.max(np.abs(realized - target)))
    if err > tol:
        raise AssertionError(
            f"realized cell masses deviate from the optimum by {err:.3e}")


class PrecisionSelection(NamedTuple):
    modes: list[int]
    u_stars: list[float]
    gain: float


def choose_precision_modes(suite: SensorSuite, *,
                           capacity_tol: float = 1e-10,
                           capacity_max_iters: int = 100_000
                           ) -> PrecisionSelection:
    """Select each sensor's precision mode independently.

    For every mode the best operating point maximizes the entropy gain
    (costs do not depend on u), so the per-mode score is that capacity
    minus gamma times the mode cost; the per-sensor maxima sum to the
    jointly optimal per-stage gain.
    """
    for i, s in enumerate(suite.sensors):
        if not isinstance(s, PrecisionModeSet):
            raise ValueError(f"sensor {i} carries no precision modes")
    resolved = resolve_suite(suite, capacity_tol=capacity_tol,
                             capacity_max_iters=capacity_max_iters)
    return PrecisionSelection(
        modes=[s.mode_index for s in resolved.sensors],
        u_stars=[s.u_star for s in resolved.sensors],
        gain=resolved.net_gain)


def predict_value(h_pn: float, n: int, num_stages: int,
                  per_stage_gain: float) -> float:
    """Optimal expected terminal entropy from stage n: H - (N - n) * gain."""
    if not 0 <= n <= num_stages:
        raise ValueError("need 0 <= n <= N")
    return h_pn - (num_stages - n) * per_stage_gain


def mse_lower_bound(h_p0: float, n: int, phi_star: float,
                    d: int = 1) -> float:
    """Lower bound on the mean-square error of the posterior mean at stage n.

    ``h_p0`` and ``phi_star`` are in bits and are converted to nats inside
    the exponentials.  Only d = 1 is supported.
    """
    if d != 1:
        raise ValueError("only one-dimensional object domains are supported")
    if n < 0:
        raise ValueError("stage must be nonnegative")
    ln2 = math.log(2.0)
    c0 = math.exp(2.0 * h_p0 * ln2)
    return c0 / (2.0 * math.pi * math.e) * math.exp(-2.0 * n * phi_star * ln2)
