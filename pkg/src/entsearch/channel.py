"""Discrete memoryless channels: mutual information, capacity, symmetry.

All information quantities are in bits (base-2 logarithms), with the usual
convention 0*log(0) = 0.  A channel with K inputs is a row-stochastic K x n
likelihood table; an operating point is a probability vector over the K
inputs.  Boolean sensors are the K = 2 special case, with row 0 the error
model when the queried event is false and row 1 when it is true.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

ROW_SUM_TOL = 1e-12
SYMMETRY_TOL = 1e-12


class ConvergenceError(RuntimeError):
    """An iterative solver ran out of iterations.

    Carries the best iterate found so far in ``result`` (a CapacityResult
    for the capacity solver, None for quadrature failures).
    """

    def __init__(self, message, result=None):
        super().__init__(message)
        self.result = result


def _entropy_bits(p: np.ndarray) -> float:
    """Shannon entropy of a discrete distribution, in bits."""
    p = np.asarray(p, dtype=float)
    nz = p > 0.0
    return float(-np.sum(p[nz] * np.log2(p[nz])))


def as_operating_point(u, num_inputs: int | None = None) -> np.ndarray:
    """Validate ``u`` as a probability vector and return it as a float array.

    Entries must be nonnegative and sum to 1 within 1e-12.  If ``num_inputs``
    is given the length is checked as well.
    """
    u = np.asarray(u, dtype=float)
    if u.ndim != 1:
        raise ValueError("operating point must be a 1-D probability vector")
    if num_inputs is not None and u.size != num_inputs:
        raise ValueError(
            f"operating point has length {u.size}, expected {num_inputs}")
    if np.any(u < 0.0):
        raise ValueError("operating point entries must be nonnegative")
    if abs(float(u.sum()) - 1.0) > ROW_SUM_TOL:
        raise ValueError(f"operating point sums to {u.sum()!r}, not 1")
    return u


@dataclass(frozen=True, eq=False)
class DiscreteChannel:
    """Row-stochastic likelihood table of a discrete memoryless channel.

    ``likelihood[k, y]`` is the probability of observing output ``y`` when
    the input is ``k``.  Rows must sum to 1 within 1e-12 and K >= 2.
    """

    likelihood: np.ndarray

    def __post_init__(self):
        table = np.asarray(self.likelihood, dtype=float)
        if table.ndim != 2:
            raise ValueError("likelihood must be a 2-D table")
        if table.shape[0] < 2:
            raise ValueError("channel needs at least 2 inputs")
        if table.shape[1] < 1:
            raise ValueError("channel needs at least 1 output")
        if np.any(table < 0.0) or np.any(table > 1.0):
            raise ValueError("likelihood entries must lie in [0, 1]")
        sums = table.sum(axis=1)
        bad = np.nonzero(np.abs(sums - 1.0) > ROW_SUM_TOL)[0]
        if bad.size:
            raise ValueError(
                f"likelihood row {bad[0]} sums to {sums[bad[0]]!r}, not 1")
        table.setflags(write=False)
        object.__setattr__(self, "likelihood", table)

    @property
    def num_inputs(self) -> int:
        return self.likelihood.shape[0]

    @property
    def num_outputs(self) -> int:
        return self.likelihood.shape[1]

    def row_entropies(self) -> np.ndarray:
        """Shannon entropy of each likelihood row, in bits."""
        return np.array([_entropy_bits(row) for row in self.likelihood])

    def __eq__(self, other):
        if not isinstance(other, DiscreteChannel):
            return NotImplemented
        return (self.likelihood.shape == other.likelihood.shape
                and bool(np.array_equal(self.likelihood, other.likelihood)))

    def __repr__(self):
        return (f"DiscreteChannel({self.num_inputs} inputs, "
                f"{self.num_outputs} outputs)")


def bsc(crossover: float) -> DiscreteChannel:
    """Binary symmetric channel with the given crossover probability."""
    if not 0.0 <= crossover <= 1.0:
        raise ValueError("crossover must lie in [0, 1]")
    e = float(crossover)
    return DiscreteChannel(np.array([[1.0 - e, e], [e, 1.0 - e]]))


@dataclass(frozen=True)
class GaussianBooleanChannel:
    """Boolean sensor with additive Gaussian noise.

    The observation is N(mean1, sigma^2) when the queried event is true and
    N(mean0, sigma^2) otherwise.
    """

    mean0: float
    mean1: float
    sigma: float

    def __post_init__(self):
        if not self.sigma > 0.0:
            raise ValueError("sigma must be positive")

    def log_likelihoods(self, y: float) -> tuple[float, float]:
        """Natural-log likelihoods (log f0(y), log f1(y)) up to a shared constant."""
        inv = 1.0 / (2.0 * self.sigma * self.sigma)
        return (-(y - self.mean0) ** 2 * inv, -(y - self.mean1) ** 2 * inv)


@dataclass(frozen=True)
class CapacityResult:
    """Solution of the capacity problem max_u I(Z; Y).

    ``optimum`` is the maximizing input distribution, ``value`` the capacity
    in bits, and ``gap`` the final upper-minus-lower capacity bracket of the
    alternating-maximization solver.
    """

    optimum: np.ndarray
    value: float
    iterations: int
    gap: float


def mutual_information(ch: DiscreteChannel, u) -> float:
    """I(Z; Y) in bits for input distribution ``u`` over the channel inputs.

    Computed as the Shannon entropy of the output marginal minus the
    u-weighted row entropies.  Nonnegative, and strictly concave in u.
    """
    u = as_operating_point(u, ch.num_inputs)
    marginal = u @ ch.likelihood
    value = _entropy_bits(marginal) - float(u @ ch.row_entropies())
    # Clamp the tiny negative residue the subtraction can leave behind.
    return max(value, 0.0)


def capacity(ch: DiscreteChannel, tol: float = 1e-10,
             max_iters: int = 100_000) -> CapacityResult:
    """Channel capacity and optimal input distribution by Blahut-Arimoto.

    Alternates the standard multiplicative update from a uniform (strictly
    interior) start.  At each iterate ``u`` the divergences
    D(f_k || sum_j u_j f_j) give a lower bound (their u-average) and an
    upper bound (their max) on capacity; the iteration stops once that
    bracket is at most ``tol``.

    Raises ConvergenceError carrying the best iterate if the bracket does
    not close within ``max_iters``.
    """
    if not tol > 0.0:
        raise ValueError("tol must be positive")
    table = ch.likelihood
    support = table > 0.0
    u = np.full(ch.num_inputs, 1.0 / ch.num_inputs)

    iterations = 0
    while True:
        marginal = u @ table
        with np.errstate(divide="ignore", invalid="ignore"):
            ratio = np.where(support, table / marginal, 1.0)
        div = np.sum(np.where(support, table * np.log2(ratio), 0.0), axis=1)
        lower = float(u @ div)
        gap = float(div.max()) - lower
        if gap <= tol:
            return CapacityResult(optimum=u, value=max(lower, 0.0),
                                  iterations=iterations, gap=gap)
        if iterations >= max_iters:
            best = CapacityResult(optimum=u, value=max(lower, 0.0),
                                  iterations=iterations, gap=gap)
            raise ConvergenceError(
                f"capacity bracket {gap:.3e} > tol {tol:.3e} "
                f"after {max_iters} iterations", result=best)
        u = u * np.exp2(div - div.max())
        u /= u.sum()
        iterations += 1


def is_quasi_symmetric(ch: DiscreteChannel,
                       tol: float = SYMMETRY_TOL) -> list[int] | None:
    """Output permutation that swaps the two rows of a Boolean channel.

    Returns chi as a list with f1(y) = f0(chi[y]) and f0(y) = f1(chi[y]) for
    every output y, or None when no such permutation exists.  Outputs are
    matched greedily among candidates with equal (swapped) likelihood pairs,
    which is exhaustive because candidates within a group are interchangeable.
    """
    if ch.num_inputs != 2:
        raise ValueError("quasi-symmetry is defined for Boolean channels only")
    f0, f1 = ch.likelihood
    n = ch.num_outputs
    perm: list[int] = [-1] * n
    used = [False] * n
    for y in range(n):
        for cand in range(n):
            if used[cand]:
                continue
            if (abs(f0[cand] - f1[y]) <= tol
                    and abs(f1[cand] - f0[y]) <= tol):
                perm[y] = cand
                used[cand] = True
                break
        else:
            return None
    return perm


def asymmetric_binary_optimum(alpha: float, rho: float) -> tuple[float, float]:
    """Closed-form capacity-achieving input probability of a binary channel.

    The channel emits output 1 with probability ``alpha`` when the input is 1
    and output 0 with probability ``rho`` when the input is 0.  Returns
    (u_star, k1) where u_star is the optimal probability of input 1 and k1
    the intermediate constant of the closed form.  The line alpha + rho = 1
    has zero capacity and is rejected.
    """
    if not (0.0 < alpha < 1.0 and 0.0 < rho < 1.0):
        raise ValueError("alpha and rho must lie strictly inside (0, 1)")
    s = alpha + rho - 1.0
    if s == 0.0:
        raise ValueError("alpha + rho = 1 gives a zero-capacity channel")
    log_k1 = (alpha * math.log(alpha) + (1.0 - alpha) * math.log(1.0 - alpha)
              - rho * math.log(rho) - (1.0 - rho) * math.log(1.0 - rho)) / s
    k1 = math.exp(log_k1)
    u_star = (rho * (1.0 + k1) - 1.0) / (s * (1.0 + k1))
    return u_star, k1


def product_channel(chs: list[DiscreteChannel]) -> DiscreteChannel:
    """Joint channel of independent Boolean sensors.

    Input index k enumerates the per-sensor indicator tuple (i_1 .. i_M)
    with sensor 1 in the most significant bit; the output index enumerates
    observation tuples in the same mixed-radix, first-sensor-major order.
    The resulting 2^M x prod(n_m) table is the Kronecker product of the
    per-sensor tables.
    """
    if not chs:
        raise ValueError("need at least one channel")
    for i, ch in enumerate(chs):
        if ch.num_inputs != 2:
            raise ValueError(f"channel {i} is not Boolean (K={ch.num_inputs})")
    table = chs[0].likelihood
    for ch in chs[1:]:
        table = np.kron(table, ch.likelihood)
    return DiscreteChannel(table)


def factorized_joint_optimum(per_sensor: list[float]) -> np.ndarray:
    """Joint operating point assembled from per-sensor optima.

    Given each sensor's optimal probability u_m of querying a region that
    contains the object, the jointly optimal cell masses factor as the
    product of independent Bernoulli(u_m) distributions over the indicator
    tuples, indexed with sensor 1 in the most significant bit.
    """
    if not per_sensor:
        raise ValueError("need at least one sensor")
    cells = np.ones(1)
    for u in per_sensor:
        if not 0.0 < u < 1.0:
            raise ValueError("per-sensor optima must lie strictly inside (0, 1)")
        cells = np.kron(cells, np.array([1.0 - u, u]))
    return as_operating_point(cells)


def gaussian_boolean_mi(ch: GaussianBooleanChannel, u: float,
                        quad_points: int = 128) -> float:
    """I(Z; Y) in bits for a Boolean sensor with additive Gaussian noise.

    The mixture output entropy is integrated by Gauss-Hermite quadrature
    centered at each component mean (log densities evaluated via
    log-sum-exp, so widely separated means do not underflow), then the
    conditional Gaussian entropy 0.5*log2(2*pi*e*sigma^2) is subtracted.

    A halved-order quadrature is used as an internal consistency check;
    disagreement beyond 1e-9 bits raises ConvergenceError.
    """
    if not 0.0 <= u <= 1.0:
        raise ValueError("u must lie in [0, 1]")
    if quad_points < 32:
        raise ValueError("quad_points must be at least 32")
    full = _gaussian_mixture_mi(ch, u, quad_points)
    half = _gaussian_mixture_mi(ch, u, quad_points // 2)
    if abs(full - half) > 1e-9:
        raise ConvergenceError(
            f"quadrature at {quad_points} and {quad_points // 2} points "
            f"disagree by {abs(full - half):.3e} bits")
    return max(full, 0.0)


def _gaussian_mixture_mi(ch: GaussianBooleanChannel, u: float,
                         n_points: int) -> float:
    nodes, weights = np.polynomial.hermite.hermgauss(n_points)
    weights = weights / math.sqrt(math.pi)
    means = np.array([ch.mean0, ch.mean1])
    priors = np.array([1.0 - u, u])
    active = priors > 0.0

    inv2s2 = 1.0 / (2.0 * ch.sigma * ch.sigma)
    log_norm = -math.log(ch.sigma * math.sqrt(2.0 * math.pi))

    def log2_mixture(y: np.ndarray) -> np.ndarray:
        # log2 of sum_z priors[z] * N(y; means[z], sigma^2), via max-shift.
        logs = (np.log(priors[active])[:, None] + log_norm
                - (y[None, :] - means[active][:, None]) ** 2 * inv2s2)
        peak = logs.max(axis=0)
        return (peak + np.log(np.exp(logs - peak).sum(axis=0))) / math.log(2.0)

    h_out = 0.0
    for z in np.nonzero(active)[0]:
        y = means[z] + math.sqrt(2.0) * ch.sigma * nodes
        h_out -= priors[z] * float(weights @ log2_mixture(y))
    h_cond = 0.5 * math.log2(2.0 * math.pi * math.e * ch.sigma ** 2)
    return h_out - h_cond


def gaussian_optimal_input(ch: GaussianBooleanChannel,
                           quad_points: int = 128,
                           tol: float = 1e-10) -> float:
    """Numerically maximize gaussian_boolean_mi over the input probability.

    Golden-section search on [0, 1]; the objective is strictly concave so
    the maximizer is unique (0.5 whenever the two means coincide, by the
    uniform tie-break of a flat objective).
    """
    if ch.mean0 == ch.mean1:
        return 0.5
    inv_phi = (math.sqrt(5.0) - 1.0) / 2.0
    lo, hi = 0.0, 1.0
    a = hi - inv_phi * (hi - lo)
    b = lo + inv_phi * (hi - lo)
    fa = _gaussian_mixture_mi(ch, a, quad_points)
    fb = _gaussian_mixture_mi(ch, b, quad_points)
    while hi - lo > tol:
        if fa < fb:
            lo, a, fa = a, b, fb
            b = lo + inv_phi * (hi - lo)
            fb = _gaussian_mixture_mi(ch, b, quad_points)
        else:
            hi, b, fb = b, a, fa
            a = hi - inv_phi * (hi - lo)
            fa = _gaussian_mixture_mi(ch, a, quad_points)
    return 0.5 * (lo + hi)
