"""Shared helpers: deterministic matrices with analytically known
restricted-isometry behavior.
"""

import itertools

import numpy as np
import pytest

from modcs.sensing import gaussian_matrix


def simplex_frame(m: int) -> np.ndarray:
    """(m-1) x m matrix of m unit columns with pairwise inner product -1/(m-1).

    This is the tightest possible unit-norm frame: with n = m-1, any S >= 2
    columns have Gram eigenvalues {1 + 1/n (multiplicity S-1), 1 - (S-1)/n},
    so delta(S) = (S-1)/n exactly (and delta(1) = 0), while disjoint subsets
    give theta(S1,S2) = sqrt(S1*S2)/n exactly.  That lets stability tests
    run at parameter points where the hypotheses provably hold, without
    enumerating subsets.
    """
    n = m - 1
    V = (np.eye(m) - 1.0 / m) / np.sqrt(1.0 - 1.0 / m)
    # orthonormal basis of the hyperplane orthogonal to the all-ones vector
    H = np.zeros((n, m))
    for k in range(1, m):
        H[k - 1, :k] = 1.0
        H[k - 1, k] = -float(k)
        H[k - 1] /= np.sqrt(k * (k + 1.0))
    return H @ V


def simplex_delta(m: int, s: int) -> float:
    """Exact delta(s) of simplex_frame(m)."""
    if s <= 1:
        return 0.0
    return (s - 1.0) / (m - 1.0)


def simplex_theta(m: int, s1: int, s2: int) -> float:
    """Exact theta(s1,s2) of simplex_frame(m)."""
    if s1 == 0 or s2 == 0:
        return 0.0
    return np.sqrt(float(s1) * s2) / (m - 1.0)


@pytest.fixture(scope="session")
def simplex40():
    return simplex_frame(40)


def have_cvxpy() -> bool:
    try:
        import cvxpy  # noqa: F401
        return True
    except ImportError:
        return False


needs_cvxpy = pytest.mark.skipif(not have_cvxpy(),
                                 reason="cvxpy not installed")


# ---------------------------------------------------------------------------
# brute-force l1 oracles for small noise-free systems
# ---------------------------------------------------------------------------


def sparsest_solutions(A, y, kmax, tol=1e-9):
    """All (support, coeffs) with A_T c = y at the smallest support size."""
    n, m = A.shape
    ynorm = max(np.linalg.norm(y), 1e-30)
    for k in range(0, kmax + 1):
        hits = []
        for T in itertools.combinations(range(m), k):
            cols = A[:, T]
            c, *_ = np.linalg.lstsq(cols, y, rcond=None)
            if np.linalg.norm(cols @ c - y) <= tol * ynorm:
                hits.append((T, c))
        if hits:
            return k, hits
    return None, []


def vertex_l1_minimum(A, y, cond_cap=1e10):
    """Exact minimum of ||b||_1 over A b = y by enumerating basic solutions.

    An equality-constrained l1 program is a linear program, so its optimum
    is attained at a basic solution: a point supported on columns that can
    be extended to an invertible n-column basis.  Enumerating every size-n
    basis therefore yields the exact optimum for any full-row-rank A.
    """
    n, m = A.shape
    ynorm = max(np.linalg.norm(y), 1e-30)
    best = np.inf
    for T in itertools.combinations(range(m), n):
        cols = A[:, T]
        if np.linalg.cond(cols) > cond_cap:
            continue
        c = np.linalg.solve(cols, y)
        if np.linalg.norm(cols @ c - y) > 1e-8 * ynorm:
            continue
        best = min(best, float(np.abs(c).sum()))
    return best


def enumeration_instances(count, master_seed=0):
    """Noise-free sparse instances small enough to enumerate every support.

    Sizes are kept in the regime where the l1 relaxation reliably recovers
    the unique sparsest solution: 7..8 rows against 9 columns, with 2-sparse
    signals only at 8 rows.  At more aggressive sparsity-to-undersampling
    ratios the minimum-l1 and sparsest-support solutions can legitimately
    differ on a nonvanishing fraction of draws.
    """
    out = []
    for i in range(count):
        rng = np.random.default_rng((master_seed, 17, i))
        n, k = [(7, 1), (8, 1), (8, 2)][int(rng.integers(3))]
        m = 9
        A = gaussian_matrix(n, m, seed=int(rng.integers(0, 2 ** 31)))
        x = np.zeros(m)
        support = rng.choice(m, size=k, replace=False)
        x[support] = rng.choice([-1.0, 1.0], size=k) * rng.uniform(1.0, 2.0, k)
        out.append((A, x, A @ x, support))
    return out
