"""Exact piecewise-constant information state on the unit interval.

The posterior of the object location stays piecewise constant under every
update used here (interval partitions, two-level Gaussian likelihoods), so
entropies, moments and quantiles are closed-form rather than gridded.
Densities are immutable; every operation returns a new value.

Regions and partition cells are finite unions of half-open intervals
[a, b); boundary points carry no mass so their assignment is irrelevant to
every integral.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .channel import DiscreteChannel, GaussianBooleanChannel

MASS_TOL = 1e-10
DRIFT_TOL = 1e-9
COALESCE_TOL = 1e-14

Interval = tuple[float, float]
IntervalUnion = tuple[Interval, ...]


def normalize_union(intervals) -> IntervalUnion:
    """Sort, drop empty, and merge overlapping or touching intervals."""
    items = sorted((float(a), float(b)) for a, b in intervals if b > a)
    merged: list[list[float]] = []
    for a, b in items:
        if merged and a <= merged[-1][1]:
            merged[-1][1] = max(merged[-1][1], b)
        else:
            merged.append([a, b])
    return tuple((a, b) for a, b in merged)


def union_complement(region: IntervalUnion, lo: float = 0.0,
                     hi: float = 1.0) -> IntervalUnion:
    """Complement of a normalized interval union within [lo, hi]."""
    gaps = []
    cursor = lo
    for a, b in region:
        if a > cursor:
            gaps.append((cursor, a))
        cursor = max(cursor, b)
    if cursor < hi:
        gaps.append((cursor, hi))
    return tuple(gaps)


def union_contains(region: IntervalUnion, x: float) -> bool:
    return any(a <= x < b for a, b in region) or any(
        b == 1.0 and x == 1.0 and a < b for a, b in region)


class PiecewiseDensity:
    """Probability density on [0, 1], constant on each breakpoint interval.

    ``breakpoints`` is strictly increasing from 0.0 to 1.0 and ``values``
    holds one nonnegative density per interval; the total mass must be 1
    within 1e-10.
    """

    __slots__ = ("breakpoints", "values", "_cum")

    def __init__(self, breakpoints, values):
        bp = np.asarray(breakpoints, dtype=float)
        v = np.asarray(values, dtype=float)
        if bp.ndim != 1 or v.ndim != 1 or v.size != bp.size - 1:
            raise ValueError("need n+1 breakpoints for n values")
        if bp[0] != 0.0 or bp[-1] != 1.0:
            raise ValueError("breakpoints must run from 0.0 to 1.0")
        if np.any(np.diff(bp) <= 0.0):
            raise ValueError("breakpoints must be strictly increasing")
        if np.any(v < 0.0):
            raise ValueError("density values must be nonnegative")
        masses = v * np.diff(bp)
        total = float(masses.sum())
        if abs(total - 1.0) > MASS_TOL:
            raise ValueError(f"density integrates to {total!r}, not 1")
        bp.setflags(write=False)
        v.setflags(write=False)
        self.breakpoints = bp
        self.values = v
        cum = np.concatenate(([0.0], np.cumsum(masses)))
        cum[-1] = 1.0
        cum.setflags(write=False)
        self._cum = cum

    @classmethod
    def uniform(cls) -> "PiecewiseDensity":
        return cls([0.0, 1.0], [1.0])

    @classmethod
    def _renormalized(cls, breakpoints, values) -> "PiecewiseDensity":
        """Build from unnormalized nonnegative values, checking drift.

        The raw mass is asserted to be within 1e-9 of 1 (posterior updates
        are normalized analytically, so anything larger is a bug), then
        divided out exactly.
        """
        values = np.asarray(values, dtype=float)
        total = float((values * np.diff(breakpoints)).sum())
        if abs(total - 1.0) > DRIFT_TOL:
            raise AssertionError(
                f"posterior mass drifted to {total!r} before renormalization")
        return cls(breakpoints, values / total)

    def __eq__(self, other):
        if not isinstance(other, PiecewiseDensity):
            return NotImplemented
        return (np.array_equal(self.breakpoints, other.breakpoints)
                and np.array_equal(self.values, other.values))

    def __repr__(self):
        return f"PiecewiseDensity({self.values.size} pieces)"

    @property
    def num_pieces(self) -> int:
        return self.values.size

    def entropy(self) -> float:
        """Differential entropy in bits; negative once the density peaks."""
        lengths = np.diff(self.breakpoints)
        nz = self.values > 0.0
        v = self.values[nz]
        return float(-np.sum(v * np.log2(v) * lengths[nz]))

    def mean(self) -> float:
        bp = self.breakpoints
        return float(np.sum(self.values * (bp[1:] ** 2 - bp[:-1] ** 2)) / 2.0)

    def variance_around_mean(self) -> float:
        bp = self.breakpoints
        second = float(np.sum(self.values * (bp[1:] ** 3 - bp[:-1] ** 3)) / 3.0)
        return max(second - self.mean() ** 2, 0.0)

    def cdf(self, x) -> np.ndarray | float:
        """P(X <= x); piecewise linear with knots at the breakpoints."""
        return np.interp(x, self.breakpoints, self._cum)

    def quantile(self, q: float) -> float:
        """Smallest x with CDF(x) >= q, with quantile(0) = 0, quantile(1) = 1.

        The endpoint values are pinned so partition cells built from
        cumulative masses always cover all of [0, 1], even when the density
        has zero-mass tails.
        """
        if not 0.0 <= q <= 1.0:
            raise ValueError("q must lie in [0, 1]")
        if q <= 0.0:
            return 0.0
        if q >= 1.0:
            return 1.0
        idx = int(np.searchsorted(self._cum, q, side="left"))
        if self._cum[idx] == q:
            return float(self.breakpoints[idx])
        # First crossing lies inside piece idx-1, whose mass is positive.
        # Invert the same linear interpolant cdf() evaluates, so realized
        # cell masses reproduce the requested quantile levels to roundoff.
        j = idx - 1
        bp = self.breakpoints
        slope = (self._cum[j + 1] - self._cum[j]) / (bp[j + 1] - bp[j])
        return float(bp[j] + (q - self._cum[j]) / slope)

    def mass(self, region: IntervalUnion) -> float:
        """Probability of a union of intervals."""
        if not region:
            return 0.0
        ends = np.array([[a, b] for a, b in region], dtype=float)
        vals = np.interp(ends, self.breakpoints, self._cum)
        return float(np.sum(vals[:, 1] - vals[:, 0]))

    def coalesce(self) -> "PiecewiseDensity":
        """Merge adjacent pieces whose values agree within 1e-14 (relative)."""
        v = self.values
        if v.size <= 1:
            return self
        scale = np.maximum(1.0, np.maximum(np.abs(v[:-1]), np.abs(v[1:])))
        keep = np.abs(np.diff(v)) > COALESCE_TOL * scale
        if keep.all():
            return self
        boundary = np.concatenate(([True], keep, [True]))
        return PiecewiseDensity(self.breakpoints[boundary], v[boundary[:-1]])

    def refine(self, points) -> tuple[np.ndarray, np.ndarray]:
        """Breakpoints and values after inserting the given cut points."""
        extra = np.asarray(points, dtype=float)
        extra = extra[(extra > 0.0) & (extra < 1.0)]
        bp = np.unique(np.concatenate((self.breakpoints, extra)))
        idx = np.clip(np.searchsorted(self.breakpoints, bp[:-1], side="right") - 1,
                      0, self.values.size - 1)
        return bp, self.values[idx]

    def sample(self, rng: np.random.Generator) -> float:
        """Inverse-CDF draw."""
        return self.quantile(float(rng.random()))

    def to_csv(self, path) -> None:
        """Dump (breakpoint, value) rows; the last row closes the support."""
        import csv

        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["breakpoint", "value"])
            for b, v in zip(self.breakpoints[:-1], self.values):
                writer.writerow([repr(float(b)), repr(float(v))])
            writer.writerow([repr(1.0), ""])


class Partition:
    """Ordered cover of [0, 1] by disjoint unions of intervals.

    ``cells[k]`` is the region assigned to input label k; cells may be
    empty.  Disjointness and coverage are enforced up to measure zero.
    """

    __slots__ = ("cells", "_starts", "_ends", "_labels")

    def __init__(self, cells):
        normed = tuple(normalize_union(c) for c in cells)
        if len(normed) < 1:
            raise ValueError("partition needs at least one cell")
        flat = sorted(
            (a, b, k) for k, cell in enumerate(normed) for a, b in cell)
        cursor = 0.0
        for a, b, _ in flat:
            if a < cursor - 1e-12:
                raise ValueError("partition cells overlap")
            if a > cursor + 1e-12:
                raise ValueError(f"partition leaves a gap near {cursor!r}")
            cursor = b
        if abs(cursor - 1.0) > 1e-12 and flat:
            raise ValueError("partition does not cover [0, 1]")
        if not flat:
            raise ValueError("partition has no intervals")
        self.cells = normed
        self._starts = np.array([a for a, _, _ in flat])
        self._ends = np.array([b for _, b, _ in flat])
        self._labels = np.array([k for _, _, k in flat])

    @classmethod
    def contiguous(cls, cuts, labels=None) -> "Partition":
        """Cells between consecutive cut points 0 = c0 <= ... <= cn = 1.

        ``labels[j]`` gives the input label of the j-th interval from the
        left (identity when omitted); cells may receive several intervals.
        """
        cuts = np.asarray(cuts, dtype=float)
        n = cuts.size - 1
        if labels is None:
            labels = range(n)
        labels = list(labels)
        num_cells = max(labels) + 1
        cells: list[list[Interval]] = [[] for _ in range(num_cells)]
        for j, lab in enumerate(labels):
            cells[lab].append((float(cuts[j]), float(cuts[j + 1])))
        return cls(cells)

    @property
    def num_cells(self) -> int:
        return len(self.cells)

    def label_of(self, x: float) -> int:
        """Cell label containing x (the last cell for x = 1)."""
        return int(self.labels_of(np.array([x]))[0])

    def labels_of(self, xs: np.ndarray) -> np.ndarray:
        """Vectorized cell labels for an array of points."""
        i = np.searchsorted(self._starts, xs, side="right") - 1
        return self._labels[np.clip(i, 0, self._labels.size - 1)]

    def boundaries(self) -> np.ndarray:
        return np.unique(np.concatenate((self._starts, self._ends)))

    def masses(self, p: PiecewiseDensity) -> np.ndarray:
        """Operating point realized by this partition under density p."""
        n = self._starts.size
        cdf = np.interp(np.concatenate((self._starts, self._ends)),
                        p.breakpoints, p._cum)
        out = np.zeros(len(self.cells))
        np.add.at(out, self._labels, cdf[n:] - cdf[:n])
        return out


def bayes_update(p: PiecewiseDensity, partition: Partition,
                 ch: DiscreteChannel, y: int) -> PiecewiseDensity:
    """Posterior after observing discrete output ``y`` of a partition query.

    Multiplies the density in cell k by the likelihood of ``y`` under input
    k and renormalizes.  When the predictive probability of ``y`` is zero
    the prior is returned unchanged (the conventional continuation).
    """
    if partition.num_cells != ch.num_inputs:
        raise ValueError(
            f"partition has {partition.num_cells} cells, channel expects "
            f"{ch.num_inputs}")
    if not 0 <= y < ch.num_outputs:
        raise ValueError(f"output index {y} out of range")
    u = partition.masses(p)
    likes = ch.likelihood[:, y]
    eta = float(u @ likes)
    if eta == 0.0:
        return p
    bp, values = p.refine(partition.boundaries())
    mids = 0.5 * (bp[:-1] + bp[1:])
    posterior = values * likes[partition.labels_of(mids)] / eta
    return PiecewiseDensity._renormalized(bp, posterior).coalesce()


def bayes_update_gaussian(p: PiecewiseDensity, region: IntervalUnion,
                          ch: GaussianBooleanChannel,
                          y: float) -> PiecewiseDensity:
    """Posterior after a Gaussian observation of the indicator of ``region``.

    The two likelihood levels are formed in log space and shifted by their
    maximum before exponentiating, so extreme observations cannot underflow
    both levels at once.
    """
    region = normalize_union(region)
    log0, log1 = ch.log_likelihoods(y)
    shift = max(log0, log1)
    w0 = math.exp(log0 - shift)
    w1 = math.exp(log1 - shift)
    edges = np.array([e for ab in region for e in ab])
    bp, values = p.refine(edges)
    mids = 0.5 * (bp[:-1] + bp[1:])
    # Odd edge-crossing parity puts a midpoint inside the region.
    inside = (np.searchsorted(edges, mids, side="right") % 2).astype(bool)
    weighted = values * np.where(inside, w1, w0)
    total = float((weighted * np.diff(bp)).sum())
    return PiecewiseDensity._renormalized(bp, weighted / total).coalesce()
