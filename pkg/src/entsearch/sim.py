"""Monte Carlo engine for adaptive-search experiments.

Runs N-stage searches against a hidden location drawn from the prior,
under either the joint schedule (all sensors observe the batch plan, one
fold of updates per stage) or the sequential schedule (each sensor
re-plans against the sub-stage posterior before observing).  Also hosts
the exact (enumerated, not sampled) one-stage verification suites used by
the CLI and the test battery.

Randomness comes from counter-based Philox streams keyed by
(seed, replication) with the (stage, sensor) pair placed in the counter
block, so serial and threaded runs produce bit-identical results.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .belief import (Partition, PiecewiseDensity, bayes_update,
                     bayes_update_gaussian, union_complement, union_contains)
from .channel import DiscreteChannel, GaussianBooleanChannel, product_channel
from .policy import (ResolvedSuite, SensorSuite, mse_lower_bound,
                     plan_from_resolved, resolve_suite)

DEFAULT_MAX_PATHS = 1_000_000


@dataclass(frozen=True)
class ExperimentConfig:
    """One experiment: a suite, a horizon, and a replication budget."""

    suite: SensorSuite
    stages: int
    replications: int
    seed: int
    schedule: str = "joint"
    prior: PiecewiseDensity | None = None

    def __post_init__(self):
        if self.stages < 1:
            raise ValueError("stages must be at least 1")
        if self.replications < 1:
            raise ValueError("replications must be at least 1")
        if self.schedule not in ("joint", "sequential"):
            raise ValueError("schedule must be 'joint' or 'sequential'")
        if not 0 <= self.seed < 2 ** 64:
            raise ValueError("seed must fit in 64 bits")

    def prior_density(self) -> PiecewiseDensity:
        return self.prior if self.prior is not None else PiecewiseDensity.uniform()


@dataclass
class Trajectory:
    """Per-stage record of one replication, stage 0 being the prior."""

    ground_truth: float
    entropy: np.ndarray      # bits, length N+1
    post_mean: np.ndarray    # length N+1
    sq_error: np.ndarray     # (X - mean)^2, length N+1
    observations: list[tuple]  # length N, one tuple of sensor outputs per stage


@dataclass
class Aggregate:
    """Cross-replication statistics, stage by stage."""

    stages: np.ndarray
    mean_entropy: np.ndarray
    std_entropy: np.ndarray
    mse: np.ndarray
    slope: float
    num_replications: int


def _stream(seed: int, rep: int, stage: int, sensor: int) -> np.random.Generator:
    """Independent Philox stream for one (replication, stage, sensor) slot.

    The 128-bit key holds (seed, rep); (sensor, stage) occupy the two high
    counter words, leaving 2^128 draws per slot before any collision.
    """
    key = np.array([seed, rep], dtype=np.uint64)
    counter = np.array([0, 0, sensor, stage], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key, counter=counter))


def _sample_discrete(row_cumsum: np.ndarray, rng: np.random.Generator) -> int:
    r = rng.random()
    return int(min(np.searchsorted(row_cumsum, r, side="right"),
                   row_cumsum.size - 1))


def _single_sensor_region(p: PiecewiseDensity, u_star: float):
    """Canonical Boolean region of mass u_star: the right quantile segment."""
    cut = p.quantile(1.0 - u_star)
    return ((cut, 1.0),) if cut < 1.0 else ()


def run_replication(cfg: ExperimentConfig, rep_index: int) -> Trajectory:
    """Run one seeded replication; see _run_one for the stage loop."""
    resolved = resolve_suite(cfg.suite)
    return _run_one(cfg, resolved, rep_index)


def _run_one(cfg: ExperimentConfig, resolved: ResolvedSuite,
             rep: int) -> Trajectory:
    prior = cfg.prior_density()
    x = prior.sample(_stream(cfg.seed, rep, 0, 0))
    num_sensors = len(resolved.sensors)
    cumsums = [None if s.is_gaussian else np.cumsum(s.channel.likelihood, axis=1)
               for s in resolved.sensors]

    n = cfg.stages
    entropy = np.empty(n + 1)
    post_mean = np.empty(n + 1)
    sq_error = np.empty(n + 1)
    observations: list[tuple] = []

    p = prior
    entropy[0] = p.entropy()
    post_mean[0] = p.mean()
    sq_error[0] = (x - post_mean[0]) ** 2

    for stage in range(1, n + 1):
        if cfg.schedule == "joint":
            plan = plan_from_resolved(p, resolved)
            ys = []
            for m, sensor in enumerate(resolved.sensors):
                region = plan.sensor_regions[m]
                inside = union_contains(region, x)
                rng = _stream(cfg.seed, rep, stage, m + 1)
                if sensor.is_gaussian:
                    ch = sensor.channel
                    mean = ch.mean1 if inside else ch.mean0
                    ys.append(float(mean + ch.sigma * rng.standard_normal()))
                else:
                    ys.append(_sample_discrete(cumsums[m][int(inside)], rng))
            for m, sensor in enumerate(resolved.sensors):
                region = plan.sensor_regions[m]
                if sensor.is_gaussian:
                    p = bayes_update_gaussian(p, region, sensor.channel, ys[m])
                else:
                    part = Partition((union_complement(region), region))
                    p = bayes_update(p, part, sensor.channel, ys[m])
        else:
            ys = []
            for m, sensor in enumerate(resolved.sensors):
                region = _single_sensor_region(p, sensor.u_star)
                inside = union_contains(region, x)
                rng = _stream(cfg.seed, rep, stage, m + 1)
                if sensor.is_gaussian:
                    ch = sensor.channel
                    mean = ch.mean1 if inside else ch.mean0
                    y = float(mean + ch.sigma * rng.standard_normal())
                    ys.append(y)
                    p = bayes_update_gaussian(p, region, ch, y)
                else:
                    y = _sample_discrete(cumsums[m][int(inside)], rng)
                    ys.append(y)
                    part = Partition((union_complement(region), region))
                    p = bayes_update(p, part, sensor.channel, y)
        observations.append(tuple(ys))
        entropy[stage] = p.entropy()
        post_mean[stage] = p.mean()
        sq_error[stage] = (x - post_mean[stage]) ** 2

    return Trajectory(ground_truth=x, entropy=entropy, post_mean=post_mean,
                      sq_error=sq_error, observations=observations)


def run_trajectories(cfg: ExperimentConfig,
                     threads: int = 1) -> list[Trajectory]:
    """All replications, in replication order regardless of thread count."""
    resolved = resolve_suite(cfg.suite)
    reps = range(cfg.replications)
    if threads <= 1:
        return [_run_one(cfg, resolved, r) for r in reps]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(lambda r: _run_one(cfg, resolved, r), reps))


def aggregate(trajectories: list[Trajectory]) -> Aggregate:
    """Stage-wise mean/std entropy, empirical MSE, and the OLS decay slope."""
    ent = np.stack([t.entropy for t in trajectories])
    sq = np.stack([t.sq_error for t in trajectories])
    stages = np.arange(ent.shape[1])
    mean_entropy = ent.mean(axis=0)
    std_entropy = (ent.std(axis=0, ddof=1) if ent.shape[0] > 1
                   else np.zeros_like(mean_entropy))
    slope = float(np.polyfit(stages, mean_entropy, 1)[0])
    return Aggregate(stages=stages, mean_entropy=mean_entropy,
                     std_entropy=std_entropy, mse=sq.mean(axis=0),
                     slope=slope, num_replications=ent.shape[0])


def run_experiment(cfg: ExperimentConfig, threads: int = 1) -> Aggregate:
    return aggregate(run_trajectories(cfg, threads=threads))


def _resolved_discrete_channels(resolved: ResolvedSuite) -> list[DiscreteChannel]:
    channels = []
    for s in resolved.sensors:
        if s.is_gaussian:
            raise ValueError(
                "exact outcome enumeration needs discrete-output sensors")
        channels.append(s.channel)
    return channels


def expected_stage_reduction(p: PiecewiseDensity, suite: SensorSuite,
                             schedule: str = "joint",
                             max_paths: int = DEFAULT_MAX_PATHS) -> float:
    """Exact expected one-stage entropy reduction, by outcome enumeration.

    The joint schedule folds all sensors into their product channel and
    sums over joint outputs; the sequential schedule telescopes over every
    sub-stage outcome path, re-planning in between.  Raises ValueError when
    the outcome space exceeds ``max_paths``.
    """
    resolved = resolve_suite(suite)
    channels = _resolved_discrete_channels(resolved)
    paths = int(np.prod([ch.num_outputs for ch in channels]))
    if paths > max_paths:
        raise ValueError(
            f"outcome space has {paths} paths, above the cap {max_paths}")
    if schedule == "joint":
        plan = plan_from_resolved(p, resolved)
        mixed = product_channel(channels)
        masses = plan.partition.masses(p)
        expected = 0.0
        for y in range(mixed.num_outputs):
            eta = float(masses @ mixed.likelihood[:, y])
            if eta <= 0.0:
                continue
            post = bayes_update(p, plan.partition, mixed, y)
            expected += eta * post.entropy()
        return p.entropy() - expected
    if schedule != "sequential":
        raise ValueError("schedule must be 'joint' or 'sequential'")

    def expected_terminal(density: PiecewiseDensity, idx: int) -> float:
        if idx == len(channels):
            return density.entropy()
        region = _single_sensor_region(density, resolved.sensors[idx].u_star)
        part = Partition((union_complement(region), region))
        masses = part.masses(density)
        total = 0.0
        for y in range(channels[idx].num_outputs):
            eta = float(masses @ channels[idx].likelihood[:, y])
            if eta <= 0.0:
                continue
            post = bayes_update(density, part, channels[idx], y)
            total += eta * expected_terminal(post, idx + 1)
        return total

    return p.entropy() - expected_terminal(p, 0)


@dataclass
class MseBoundReport:
    """Empirical MSE against the closed-form lower bound, per stage."""

    stages: np.ndarray
    empirical_mse: np.ndarray
    bound: np.ndarray
    min_ratio: float
    passed: bool
    aggregate: Aggregate = field(repr=False)


def verify_mse_bound(cfg: ExperimentConfig, threads: int = 1) -> MseBoundReport:
    """Check empirical MSE dominates the entropy-rate bound at every stage."""
    resolved = resolve_suite(cfg.suite)
    agg = run_experiment(cfg, threads=threads)
    h0 = cfg.prior_density().entropy()
    phi = resolved.entropy_gain
    bound = np.array([mse_lower_bound(h0, int(n), phi) for n in agg.stages])
    ratios = agg.mse / bound
    return MseBoundReport(stages=agg.stages, empirical_mse=agg.mse,
                          bound=bound, min_ratio=float(ratios.min()),
                          passed=bool(np.all(agg.mse >= bound)),
                          aggregate=agg)


# ---------------------------------------------------------------------------
# Exact identity checks (used by the CLI verify subcommand and the tests).

def random_density(rng: np.random.Generator,
                   max_pieces: int = 6) -> PiecewiseDensity:
    """Random piecewise-constant density with a few strictly positive pieces."""
    n = int(rng.integers(1, max_pieces + 1))
    cuts = np.unique(rng.random(n - 1)) if n > 1 else np.array([])
    bp = np.concatenate(([0.0], cuts, [1.0]))
    raw = rng.gamma(shape=1.0, scale=1.0, size=bp.size - 1) + 1e-3
    total = float((raw * np.diff(bp)).sum())
    return PiecewiseDensity(bp, raw / total)


def random_partition(rng: np.random.Generator, num_cells: int) -> Partition:
    """Random contiguous partition with shuffled cell labels."""
    cuts = np.concatenate(([0.0], np.sort(rng.random(num_cells - 1)), [1.0]))
    labels = rng.permutation(num_cells)
    return Partition.contiguous(cuts, labels=list(labels))


def random_channel(rng: np.random.Generator, num_inputs: int,
                   num_outputs: int) -> DiscreteChannel:
    rows = rng.dirichlet(np.ones(num_outputs), size=num_inputs)
    return DiscreteChannel(rows)


def one_step_identity_error(p: PiecewiseDensity, partition: Partition,
                            ch: DiscreteChannel) -> float:
    """|expected entropy drop - I(Z; Y)| for one (prior, partition, channel).

    The left side enumerates posteriors through the Bayes machinery; the
    right evaluates the mutual-information formula at the cell masses.
    Both are exact, so the difference is floating-point noise.
    """
    from .channel import mutual_information

    masses = partition.masses(p)
    expected = 0.0
    for y in range(ch.num_outputs):
        eta = float(masses @ ch.likelihood[:, y])
        if eta <= 0.0:
            continue
        expected += eta * bayes_update(p, partition, ch, y).entropy()
    drop = p.entropy() - expected
    return abs(drop - mutual_information(ch, masses / masses.sum()))
