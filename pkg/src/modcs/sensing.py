"""Measurement operators and restricted isometry / orthogonality estimation.

Measurement model: y_t = A x_t + w_t with a fixed n x m matrix A (optionally a
taller n0 x m matrix A0 for t=0 only) and bounded noise.  The only built-in
noise family is iid uniform(-c, c) per coordinate, whose norm is deterministically
bounded by c*sqrt(n); that bound is the natural choice for the solver's
residual-ball radius epsilon.

delta(S): smallest value with (1-delta)||c||^2 <= ||A_T c||^2 <= (1+delta)||c||^2
for every column subset T with |T| <= S.  theta(S1, S2): smallest value with
|c1' A_T1' A_T2 c2| <= theta ||c1|| ||c2|| over disjoint subsets with |T1| <= S1,
|T2| <= S2.  Both are monotone in the set sizes, so only maximal-size subsets
need to be examined.  Exhaustive enumeration is exact but exponential; the
sampled variants visit random subsets and report a lower bound.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

DEFAULT_SUBSET_BUDGET = 10 ** 6


class EnumerationBudgetError(ValueError):
    """Raised when exhaustive subset enumeration would exceed the budget."""


@dataclass(frozen=True)
class RicRocEstimate:
    """A restricted isometry (delta) or orthogonality (theta) estimate.

    order  : (S,) for delta, (S1, S2) for theta
    value  : the estimate; exact for method="exhaustive", a lower bound for
             method="sampled"; method="fixed" marks a user-supplied value
             that downstream checks treat as exact
    subsets_examined : number of subsets (or subset pairs) visited
    """

    order: tuple
    value: float
    method: str
    subsets_examined: int

    @property
    def exact(self) -> bool:
        return self.method in ("exhaustive", "fixed")


@dataclass(frozen=True)
class SensingSystem:
    """A fixed measurement setup.

    A        : n x m matrix used for every t >= 1 (and t=0 if A0 is None)
    A0       : optional n0 x m matrix for t=0 only, n0 >= n
    noise_c  : half-width of the uniform noise, or None for noise-free
    epsilon  : residual-ball radius for t >= 1 solves; defaults to c*sqrt(n)
    epsilon0 : radius for the t=0 solve; defaults to c*sqrt(n0) (the uniform
               noise bound scales with the number of rows, so a taller A0
               needs its own radius)
    """

    A: np.ndarray
    A0: np.ndarray | None = None
    noise_c: float | None = None
    epsilon: float | None = None
    epsilon0: float | None = None

    def __post_init__(self):
        n, m = self.A.shape
        if n >= m:
            raise ValueError("A must be undersampled (n < m)")
        if self.A0 is not None:
            n0, m0 = self.A0.shape
            if m0 != m:
                raise ValueError("A0 must have the same number of columns as A")
            if n0 < n:
                raise ValueError("A0 must have at least as many rows as A")
        if self.noise_c is not None and self.noise_c < 0:
            raise ValueError("noise_c must be >= 0")
        eps = self.epsilon
        if eps is None:
            if self.noise_c is None:
                raise ValueError("epsilon is required when no noise model is given")
            eps = self.noise_c * math.sqrt(n)
        elif self.noise_c is not None and eps < self.noise_c * math.sqrt(n) - 1e-12:
            raise ValueError("epsilon smaller than the worst-case noise norm c*sqrt(n)")
        object.__setattr__(self, "epsilon", float(eps))
        eps0 = self.epsilon0
        if eps0 is None:
            if self.A0 is None:
                eps0 = self.epsilon
            elif self.noise_c is None:
                eps0 = self.epsilon
            else:
                eps0 = self.noise_c * math.sqrt(self.A0.shape[0])
        object.__setattr__(self, "epsilon0", float(eps0))

    @property
    def n(self) -> int:
        return self.A.shape[0]

    @property
    def m(self) -> int:
        return self.A.shape[1]

    def matrix_for(self, t: int) -> np.ndarray:
        return self.A0 if (t == 0 and self.A0 is not None) else self.A

    def epsilon_for(self, t: int) -> float:
        return self.epsilon0 if (t == 0 and self.A0 is not None) else self.epsilon


def gaussian_matrix(n: int, m: int, seed: int) -> np.ndarray:
    """n x m matrix with iid N(0, 1/n) entries (columns have unit norm in
    expectation).  Deterministic in the seed."""
    if not 0 < n < m:
        raise ValueError("need 0 < n < m")
    rng = np.random.default_rng((seed, 0))
    return rng.normal(0.0, 1.0 / math.sqrt(n), size=(n, m))


def measure(system: SensingSystem, x: np.ndarray, t: int, seed: int):
    """Measure x at time t: returns (y, w) with y = A x + w.

    Noise is drawn from the (seed, t) stream, so a trajectory's measurements
    are reproducible and independent across time.
    """
    A = system.matrix_for(t)
    if system.noise_c is None or system.noise_c == 0.0:
        w = np.zeros(A.shape[0])
    else:
        rng = np.random.default_rng((seed, t, 7))
        w = rng.uniform(-system.noise_c, system.noise_c, size=A.shape[0])
    return A @ x + w, w


def uniform_noise_rms(c: float, n: int) -> float:
    """Root-mean-square norm of iid uniform(-c, c) noise in n dimensions.

    E||w||^2 = n c^2 / 3, so ||w|| concentrates near c*sqrt(n/3) rather than
    the worst case c*sqrt(n).  Solving with the residual ball at this typical
    level instead of the worst case tightens the recovered estimates; the
    benchmark panels use it for exactly that reason.
    """
    if c < 0:
        raise ValueError("c must be >= 0")
    if n < 1:
        raise ValueError("n must be >= 1")
    return c * math.sqrt(n / 3.0)


def save_matrix_csv(A: np.ndarray, path) -> None:
    """Write a matrix as CSV with a '# rows cols' header line."""
    with open(path, "w") as fh:
        fh.write(f"# {A.shape[0]} {A.shape[1]}\n")
        np.savetxt(fh, A, delimiter=",", fmt="%.17g")


def load_matrix_csv(path) -> np.ndarray:
    A = np.loadtxt(path, delimiter=",", comments="#")
    return np.atleast_2d(A)


def _subset_count(m: int, s: int) -> int:
    return math.comb(m, s)


def _grams_max_deviation(A: np.ndarray, subsets: np.ndarray) -> float:
    """Max over the given size-S subsets of max(eigmax(G)-1, 1-eigmin(G)),
    G = A_T' A_T.  subsets: (k, S) index array."""
    cols = A[:, subsets]                      # (n, k, S)
    cols = np.moveaxis(cols, 1, 0)            # (k, n, S)
    grams = np.matmul(np.swapaxes(cols, 1, 2), cols)   # (k, S, S)
    eigs = np.linalg.eigvalsh(grams)          # ascending, (k, S)
    dev = np.maximum(eigs[:, -1] - 1.0, 1.0 - eigs[:, 0])
    return float(dev.max())


def ric_exhaustive(A: np.ndarray, S: int, budget: int = DEFAULT_SUBSET_BUDGET) -> RicRocEstimate:
    """Exact delta(S) by enumerating all size-S column subsets.

    Raises EnumerationBudgetError when binom(m, S) exceeds the budget; use
    ric_sampled for a lower bound in that regime.
    """
    n, m = A.shape
    if not (1 <= S <= m):
        raise ValueError("need 1 <= S <= m")
    total = _subset_count(m, S)
    if total > budget:
        raise EnumerationBudgetError(
            f"binom({m},{S}) = {total} subsets exceeds budget {budget}; "
            "use ric_sampled for a sampled lower bound")
    best = 0.0
    chunk = max(1, min(total, 4096))
    buf = []
    for T in itertools.combinations(range(m), S):
        buf.append(T)
        if len(buf) == chunk:
            best = max(best, _grams_max_deviation(A, np.asarray(buf)))
            buf = []
    if buf:
        best = max(best, _grams_max_deviation(A, np.asarray(buf)))
    return RicRocEstimate(order=(S,), value=best, method="exhaustive",
                          subsets_examined=total)


def ric_sampled(A: np.ndarray, S: int, num_samples: int, seed: int = 0) -> RicRocEstimate:
    """Sampled lower bound on delta(S) from num_samples random size-S subsets.

    When num_samples covers the whole subset family the enumeration is used
    instead (the value then equals the exhaustive one).
    """
    n, m = A.shape
    if not (1 <= S <= m):
        raise ValueError("need 1 <= S <= m")
    if num_samples < 1:
        raise ValueError("num_samples must be >= 1")
    total = _subset_count(m, S)
    if num_samples >= total:
        exact = ric_exhaustive(A, S, budget=max(total, 1))
        return RicRocEstimate(order=(S,), value=exact.value, method="sampled",
                              subsets_examined=total)
    rng = np.random.default_rng((seed, 3))
    best = 0.0
    done = 0
    chunk = 4096
    while done < num_samples:
        k = min(chunk, num_samples - done)
        subsets = np.empty((k, S), dtype=np.int64)
        for i in range(k):
            subsets[i] = rng.choice(m, size=S, replace=False)
        best = max(best, _grams_max_deviation(A, subsets))
        done += k
    return RicRocEstimate(order=(S,), value=best, method="sampled",
                          subsets_examined=num_samples)


def _cross_gram_max(A: np.ndarray, pairs_t1: np.ndarray, pairs_t2: np.ndarray) -> float:
    """Max spectral norm of A_T1' A_T2 over paired index arrays (k,S1), (k,S2)."""
    c1 = np.moveaxis(A[:, pairs_t1], 1, 0)    # (k, n, S1)
    c2 = np.moveaxis(A[:, pairs_t2], 1, 0)    # (k, n, S2)
    cross = np.matmul(np.swapaxes(c1, 1, 2), c2)   # (k, S1, S2)
    svals = np.linalg.svd(cross, compute_uv=False)
    return float(svals[:, 0].max())


def roc(A: np.ndarray, S1: int, S2: int, mode: str = "exhaustive",
        num_samples: int = 0, seed: int = 0,
        budget: int = DEFAULT_SUBSET_BUDGET) -> RicRocEstimate:
    """theta(S1, S2): worst cross-correlation between disjoint column subsets.

    mode="exhaustive" enumerates all disjoint pairs (budget-limited);
    mode="sampled" draws num_samples random disjoint pairs (lower bound).
    theta with an empty side (S1 == 0 or S2 == 0) is 0 by convention.
    """
    n, m = A.shape
    if S1 < 0 or S2 < 0 or S1 + S2 > m:
        raise ValueError("need S1, S2 >= 0 and S1 + S2 <= m")
    if S1 == 0 or S2 == 0:
        return RicRocEstimate(order=(S1, S2), value=0.0, method="exhaustive",
                              subsets_examined=0)
    if mode == "exhaustive":
        total = _subset_count(m, S1) * _subset_count(m - S1, S2)
        if total > budget:
            raise EnumerationBudgetError(
                f"{total} subset pairs exceed budget {budget}; use mode='sampled'")
        best = 0.0
        buf1, buf2 = [], []
        chunk = 4096
        rest = np.arange(m)
        for T1 in itertools.combinations(range(m), S1):
            others = np.setdiff1d(rest, T1, assume_unique=True)
            for T2 in itertools.combinations(others.tolist(), S2):
                buf1.append(T1)
                buf2.append(T2)
                if len(buf1) == chunk:
                    best = max(best, _cross_gram_max(A, np.asarray(buf1), np.asarray(buf2)))
                    buf1, buf2 = [], []
        if buf1:
            best = max(best, _cross_gram_max(A, np.asarray(buf1), np.asarray(buf2)))
        return RicRocEstimate(order=(S1, S2), value=best, method="exhaustive",
                              subsets_examined=total)
    if mode == "sampled":
        if num_samples < 1:
            raise ValueError("num_samples must be >= 1 for sampled mode")
        rng = np.random.default_rng((seed, 4))
        best = 0.0
        done = 0
        chunk = 2048
        while done < num_samples:
            k = min(chunk, num_samples - done)
            t1 = np.empty((k, S1), dtype=np.int64)
            t2 = np.empty((k, S2), dtype=np.int64)
            for i in range(k):
                both = rng.choice(m, size=S1 + S2, replace=False)
                t1[i] = both[:S1]
                t2[i] = both[S1:]
            best = max(best, _cross_gram_max(A, t1, t2))
            done += k
        return RicRocEstimate(order=(S1, S2), value=best, method="sampled",
                              subsets_examined=num_samples)
    raise ValueError(f"unknown mode {mode!r}")
