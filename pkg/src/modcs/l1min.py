"""Partial-support l1 minimization and least squares on a support.

The workhorse problem is

    minimize ||beta_{T^c}||_1   subject to   ||y - A beta||_2 <= epsilon,

i.e. basis pursuit denoising in which coordinates inside a trusted set T are
exempt from the l1 penalty (T = empty set recovers plain BPDN).  It is solved
by alternating-direction splitting on

    minimize ||z||_1 + indicator(||v|| <= epsilon)
    subject to  P beta - z = 0,   A beta + v = y,

where P projects onto T^c.  Both constraint blocks share one penalty
parameter, so the beta-subproblem matrix A'A + P never changes during a solve
and is factored once; the z-update is a soft threshold and the v-update a
closed-form projection onto the residual ball (a point when epsilon = 0).
Stopping follows the usual primal/dual residual test, with over-relaxation and
residual-balanced penalty adaptation.  A final feasibility polish moves the
iterate onto the residual ball along the minimum-norm correction, so converged
results satisfy the constraint to within the feasibility tolerance exactly as
reported.

Each solve is cold-started; nothing is carried between calls except
factorizations of fixed matrices (A'A, AA') cached on the solver object.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_factor, cho_solve


class InfeasibleProblemError(ValueError):
    """epsilon = 0 was requested but y is not in the range of A."""


class RankDeficiencyError(ValueError):
    """The support handed to a least-squares step cannot be resolved (|T| > n)."""


@dataclass(frozen=True)
class SolverOptions:
    """Tolerances and iteration controls.

    feas_tol : relative slack allowed on the residual-ball constraint; a
               converged result has ||y - A beta|| <= epsilon*(1 + feas_tol)
               (for epsilon = 0: <= feas_tol * max(1, ||y||)).
    opt_tol  : relative primal/dual residual tolerance of the splitting loop.
    """

    feas_tol: float = 1e-6
    opt_tol: float = 1e-6
    max_iters: int = 10000
    rho: float = 1.0
    over_relax: float = 1.8
    adapt_rho: bool = True
    check_every: int = 5


DEFAULT_OPTIONS = SolverOptions()


@dataclass(frozen=True)
class SolverResult:
    beta: np.ndarray
    objective: float          # ||beta_{T^c}||_1
    residual_norm: float      # ||y - A beta||
    iterations: int
    converged: bool


def _as_index_array(T, m: int) -> np.ndarray:
    if T is None:
        return np.empty(0, dtype=np.int64)
    idx = np.asarray(sorted(set(int(i) for i in np.asarray(list(T), dtype=np.int64).ravel())),
                     dtype=np.int64)
    if idx.size and (idx[0] < 0 or idx[-1] >= m):
        raise ValueError("support index out of range")
    return idx


class PartialL1Solver:
    """Solver bound to one matrix A; caches A'A and the row-space factor.

    Use this class directly when solving many right-hand sides against the
    same A (one Gram computation, one ball-polish factorization); the
    module-level solve_partial_l1 wraps it for one-off calls.
    """

    def __init__(self, A: np.ndarray, options: SolverOptions = DEFAULT_OPTIONS):
        A = np.ascontiguousarray(A, dtype=np.float64)
        self.A = A
        self.At = np.ascontiguousarray(A.T)
        self.n, self.m = A.shape
        self.options = options
        self.AtA = self.At @ A
        self._row_chol = None
        self._row_chol_failed = False

    # -- helpers ----------------------------------------------------------

    def _min_residual_correction(self, r: np.ndarray) -> np.ndarray:
        """Minimum-norm g with A g ~= r (exact when A has full row rank)."""
        if self._row_chol is None and not self._row_chol_failed:
            try:
                self._row_chol = cho_factor(self.A @ self.At, check_finite=False)
            except np.linalg.LinAlgError:
                self._row_chol_failed = True
        if self._row_chol is not None:
            return self.At @ cho_solve(self._row_chol, r, check_finite=False)
        g, *_ = np.linalg.lstsq(self.A, r, rcond=None)
        return g

    def _feas_slack(self, epsilon: float, ynorm: float, feas_tol: float) -> float:
        if epsilon > 0:
            return epsilon * feas_tol
        return feas_tol * max(1.0, ynorm)

    # -- main solve --------------------------------------------------------

    def solve(self, y: np.ndarray, T=None, epsilon: float = 0.0,
              options: SolverOptions | None = None) -> SolverResult:
        opts = options or self.options
        A, AtA, n, m = self.A, self.AtA, self.n, self.m
        y = np.asarray(y, dtype=np.float64).ravel()
        if y.shape[0] != n:
            raise ValueError("y length does not match A")
        if epsilon < 0:
            raise ValueError("epsilon must be >= 0")
        idx = _as_index_array(T, m)
        mask = np.ones(m)
        mask[idx] = 0.0

        ynorm = float(np.linalg.norm(y))
        slack = self._feas_slack(epsilon, ynorm, opts.feas_tol)

        if epsilon == 0.0:
            g = self._min_residual_correction(y)
            if np.linalg.norm(y - A @ g) > slack:
                raise InfeasibleProblemError("y is not in the range of A; the "
                                             "equality-constrained problem has no solution")

        M = AtA + np.diag(mask)
        try:
            factor = cho_factor(M, check_finite=False)
        except np.linalg.LinAlgError:
            # A_T rank deficient: regularize the beta-subproblem slightly
            # (proximal variant); the polish step restores exact feasibility.
            tau = 1e-8 * (np.trace(M) / m + 1.0)
            factor = cho_factor(M + tau * np.eye(m), check_finite=False)
        # one gemv per iteration beats two triangular solves at these sizes
        Minv = cho_solve(factor, np.eye(m), check_finite=False)

        At = self.At
        Aty = At @ y
        rho = opts.rho
        alpha = opts.over_relax
        z = np.zeros(m)
        v = y * (min(1.0, epsilon / ynorm) if ynorm > 0 else 0.0)
        u1 = np.zeros(m)
        u2 = np.zeros(n)
        eps_abs = opts.opt_tol
        eps_rel = opts.opt_tol
        sqrt_pn = math.sqrt(m + n)
        sqrt_m = math.sqrt(m)

        beta = np.zeros(m)
        it = 0
        ok = False
        for it in range(1, opts.max_iters + 1):
            rhs = mask * (z - u1) + Aty - At @ (v + u2)
            beta = Minv @ rhs
            pb = mask * beta
            ab = A @ beta

            z_old = z
            v_old = v
            pb_r = alpha * pb + (1.0 - alpha) * z_old
            ab_r = alpha * ab + (1.0 - alpha) * (y - v_old)

            z = pb_r + u1
            np.multiply(np.sign(z), np.maximum(np.abs(z) - 1.0 / rho, 0.0), out=z)

            q = y - ab_r - u2
            if epsilon == 0.0:
                v = np.zeros(n)
            else:
                qn = np.linalg.norm(q)
                v = q if qn <= epsilon else q * (epsilon / qn)

            u1 = u1 + (pb_r - z)
            u2 = u2 + (ab_r + v - y)

            if it % opts.check_every == 0 or it == opts.max_iters:
                rp = math.sqrt(np.sum((pb - z) ** 2) + np.sum((ab + v - y) ** 2))
                sd = rho * (mask * (z - z_old) - At @ (v - v_old))
                rd = float(np.linalg.norm(sd))
                e_pri = sqrt_pn * eps_abs + eps_rel * max(
                    math.sqrt(np.sum(pb ** 2) + np.sum(ab ** 2)),
                    math.sqrt(np.sum(z ** 2) + np.sum(v ** 2)), ynorm)
                e_dual = sqrt_m * eps_abs + eps_rel * rho * float(
                    np.linalg.norm(mask * u1 + At @ u2))
                if rp <= e_pri and rd <= e_dual:
                    ok = True
                    break
                if opts.adapt_rho and it % (opts.check_every * 5) == 0:
                    if rp > 10.0 * rd and rho < 1e8:
                        rho *= 2.0
                        u1 *= 0.5
                        u2 *= 0.5
                    elif rd > 10.0 * rp and rho > 1e-8:
                        rho *= 0.5
                        u1 *= 2.0
                        u2 *= 2.0

        # feasibility polish: move onto the residual ball along the
        # minimum-norm correction
        res = y - A @ beta
        rnorm = float(np.linalg.norm(res))
        if rnorm > epsilon:
            g = self._min_residual_correction(res)
            shrink = 1.0 if epsilon == 0.0 else (1.0 - epsilon / rnorm)
            beta = beta + shrink * g
            res = y - A @ beta
            rnorm = float(np.linalg.norm(res))

        converged = ok and rnorm <= epsilon + slack
        objective = float(np.sum(np.abs(mask * beta)))
        return SolverResult(beta=beta, objective=objective, residual_norm=rnorm,
                            iterations=it, converged=converged)


def solve_partial_l1(A: np.ndarray, y: np.ndarray, T=None, epsilon: float = 0.0,
                     options: SolverOptions = DEFAULT_OPTIONS) -> SolverResult:
    """One-off wrapper around PartialL1Solver; see the module docstring."""
    return PartialL1Solver(A, options).solve(y, T, epsilon)


def least_squares_on_support(A: np.ndarray, y: np.ndarray, T) -> np.ndarray:
    """Least-squares fit of y on the columns in T, zero elsewhere.

    Returns a length-m vector.  |T| must not exceed the number of rows; a
    numerically rank-deficient A_T is solved in the minimum-norm sense via the
    machine-precision cutoff of lstsq and reported with a warning.
    """
    n, m = A.shape
    idx = _as_index_array(T, m)
    x = np.zeros(m)
    if idx.size == 0:
        return x
    if idx.size > n:
        raise RankDeficiencyError(f"support of size {idx.size} exceeds {n} measurements")
    sol, _, rank, _ = np.linalg.lstsq(A[:, idx], y, rcond=None)
    if rank < idx.size:
        warnings.warn(f"rank-deficient support: rank {rank} < |T| = {idx.size}; "
                      "minimum-norm solution returned", RuntimeWarning)
    x[idx] = sol
    return x
