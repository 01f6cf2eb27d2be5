"""Error-bound constants and stability condition reports.

Each tracking algorithm in :mod:`modcs.recovery` comes with a set of
sufficient conditions — inequalities on restricted-isometry constants
(delta), restricted-orthogonality constants (theta), the support-change rate
sa/s0, and the magnitude-increase rate r — under which the support-error
counts stay bounded for all time and the reconstruction error has a
time-invariant bound.  This module turns those statements into executable
checks:

* ``bound_constants`` / ``modcs_error_bound`` evaluate the per-step error
  bounds for the partial-support l1 program.
* ``check_modcs_stability``, ``check_add_ls_del_stability`` (plus its
  relaxed and generalized variants), and ``check_lscs_stability`` evaluate
  every checkable hypothesis of the corresponding stability statement
  against delta/theta values from a provider and report holds / fails /
  undetermined per condition, along with the prescribed thresholds, rate
  floors, and concluded bounds.
* ``estimate_zeta`` measures the empirical spread factor of the
  addition-stage LS error that the relaxed deletion threshold relies on.
* ``verify_step_facts`` checks the per-step detection/deletion facts that
  drive the stability inductions on actual data.

delta/theta values come from a provider object: ``ExhaustiveRicRoc`` (exact,
cost grows combinatorially), ``SampledRicRoc`` (lower bounds), or
``FixedRicRoc`` (caller-supplied numbers, treated as exact).  A condition
evaluated on a sampled lower bound can fail with certainty but never hold
with certainty — those conditions report "undetermined".
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .l1min import DEFAULT_OPTIONS, SolverOptions
from .recovery import ALG_MODCS_ALD, RecoveryConfig, StepEstimate, run_sequence
from .sensing import (DEFAULT_SUBSET_BUDGET, RicRocEstimate, SensingSystem,
                      gaussian_matrix, ric_exhaustive, ric_sampled, roc)
from .signal_model import ModelParams

SQRT2 = math.sqrt(2.0)

# C1's domain boundary, and the halved version the stability statements use
# to keep the constant small.
DELTA_LIMIT = SQRT2 - 1.0
DELTA_HALF_LIMIT = (SQRT2 - 1.0) / 2.0

# C1 evaluated at DELTA_HALF_LIMIT is 8.7894729...; the threshold and rate
# prescriptions use the rounded 8.79, which is what we reproduce.
RECOVERY_COEFF = 8.79

HOLDS = "holds"
FAILS = "fails"
UNDETERMINED = "undetermined"


class BoundNotApplicableError(ValueError):
    """The requested error bound's hypotheses are violated."""


def c1_constant(delta: float) -> float:
    """4 sqrt(1+delta) / (1 - (sqrt(2)+1) delta), defined for delta < sqrt(2)-1."""
    if not 0.0 <= delta < DELTA_LIMIT:
        raise BoundNotApplicableError(
            f"c1 needs 0 <= delta < sqrt(2)-1, got {delta}")
    return 4.0 * math.sqrt(1.0 + delta) / (1.0 - (SQRT2 + 1.0) * delta)


def c2_constant(delta: float) -> float:
    """2 (1 + (sqrt(2)-1) delta) / (1 - (sqrt(2)+1) delta)."""
    if not 0.0 <= delta < DELTA_LIMIT:
        raise BoundNotApplicableError(
            f"c2 needs 0 <= delta < sqrt(2)-1, got {delta}")
    return 2.0 * (1.0 + (SQRT2 - 1.0) * delta) / (1.0 - (SQRT2 + 1.0) * delta)


@dataclass(frozen=True)
class BoundConstants:
    """C1/C2 at one delta plus the CS-residual constants for given set sizes.

    delta is understood as delta_{2 Delta_size} when c_prime/c_dprime are
    used for the CS-residual bound.
    """

    delta: float
    c1: float
    c2: float
    c_prime: float
    c_dprime: float


def bound_constants(delta_s: float, t_size: int, delta_size: int) -> BoundConstants:
    """Evaluate C1, C2, C', C'' for supports of size t_size with delta_size misses.

    delta_size = 0 uses the continuity convention C' = C1(0) = 4, C'' = 0
    (no misses means the residual step is pure noise fitting).
    """
    if t_size < 0 or delta_size < 0:
        raise ValueError("set sizes must be nonnegative")
    c1 = c1_constant(delta_s)
    c2 = c2_constant(delta_s)
    if delta_size == 0:
        return BoundConstants(delta=delta_s, c1=c1, c2=c2,
                              c_prime=c1_constant(0.0), c_dprime=0.0)
    ratio = math.sqrt(t_size / delta_size)
    return BoundConstants(delta=delta_s, c1=c1, c2=c2,
                          c_prime=c1 + SQRT2 * c2 * ratio,
                          c_dprime=2.0 * c2 * ratio)


def modcs_error_bound(n_size: int, delta_size: int, delta_e_size: int,
                      delta: float, epsilon: float,
                      theta: float | None = None) -> float:
    """Worst-case l2 error of the partial-support l1 solution.

    With ``theta`` omitted: requires delta_{|N|+|Delta|+|Delta_e|} < sqrt(2)-1
    and |Delta| <= |N|/3, and returns C1(delta) * epsilon.

    With ``theta`` given (the restricted-orthogonality constant
    theta_{|T|,|Delta|} where |T| = |N| - |Delta| + |Delta_e|): uses the
    sharper form 4 sqrt(1+delta) / (1 - delta - sqrt(2) theta) * epsilon,
    valid when |Delta| <= |N|/3 and delta + sqrt(2) theta < 1, where delta is
    delta_{|T|+2|Delta|} (the same order as above).
    """
    if min(n_size, delta_size, delta_e_size) < 0:
        raise ValueError("set sizes must be nonnegative")
    if epsilon < 0:
        raise ValueError("epsilon must be nonnegative")
    if 3 * delta_size > n_size:
        raise BoundNotApplicableError(
            f"needs |Delta| <= |N|/3, got |Delta|={delta_size}, |N|={n_size}")
    if theta is None:
        return c1_constant(delta) * epsilon
    if theta < 0:
        raise ValueError("theta must be nonnegative")
    if delta < 0 or delta + SQRT2 * theta >= 1.0:
        raise BoundNotApplicableError(
            f"needs delta + sqrt(2) theta < 1, got {delta + SQRT2 * theta}")
    return 4.0 * math.sqrt(1.0 + delta) / (1.0 - delta - SQRT2 * theta) * epsilon


# ---------------------------------------------------------------------------
# delta / theta providers
# ---------------------------------------------------------------------------


class ExhaustiveRicRoc:
    """Exact delta/theta by exhaustive subset enumeration (small problems only)."""

    def __init__(self, A: np.ndarray, budget: int = DEFAULT_SUBSET_BUDGET):
        self.A = np.asarray(A, dtype=np.float64)
        self.budget = budget
        self._deltas: dict[int, RicRocEstimate] = {}
        self._thetas: dict[tuple, RicRocEstimate] = {}

    def delta(self, s: int) -> RicRocEstimate:
        if s <= 0:
            return RicRocEstimate(order=(s,), value=0.0, method="exhaustive",
                                  subsets_examined=0)
        if s not in self._deltas:
            self._deltas[s] = ric_exhaustive(self.A, s, budget=self.budget)
        return self._deltas[s]

    def theta(self, s1: int, s2: int) -> RicRocEstimate:
        key = (s1, s2)
        if key not in self._thetas:
            self._thetas[key] = roc(self.A, s1, s2, mode="exhaustive",
                                    budget=self.budget)
        return self._thetas[key]


class SampledRicRoc:
    """Lower bounds on delta/theta from randomly sampled subsets."""

    def __init__(self, A: np.ndarray, num_samples: int = 20000, seed: int = 0):
        self.A = np.asarray(A, dtype=np.float64)
        self.num_samples = num_samples
        self.seed = seed
        self._deltas: dict[int, RicRocEstimate] = {}
        self._thetas: dict[tuple, RicRocEstimate] = {}

    def delta(self, s: int) -> RicRocEstimate:
        if s <= 0:
            return RicRocEstimate(order=(s,), value=0.0, method="exhaustive",
                                  subsets_examined=0)
        if s not in self._deltas:
            self._deltas[s] = ric_sampled(self.A, s, self.num_samples,
                                          seed=self.seed)
        return self._deltas[s]

    def theta(self, s1: int, s2: int) -> RicRocEstimate:
        key = (s1, s2)
        if key not in self._thetas:
            self._thetas[key] = roc(self.A, s1, s2, mode="sampled",
                                    num_samples=self.num_samples, seed=self.seed)
        return self._thetas[key]


class FixedRicRoc:
    """Caller-supplied delta/theta values, treated as exact.

    deltas maps order S -> delta_S; thetas maps (S1, S2) -> theta_{S1,S2}
    (keys are normalized to sorted order, matching theta's symmetry).
    Scalar defaults fill in missing orders; with no value and no default a
    KeyError is raised.
    """

    def __init__(self, deltas=None, thetas=None,
                 default_delta: float | None = None,
                 default_theta: float | None = None):
        self.deltas = dict(deltas or {})
        self.thetas = {tuple(sorted(k)): v for k, v in (thetas or {}).items()}
        self.default_delta = default_delta
        self.default_theta = default_theta

    def delta(self, s: int) -> RicRocEstimate:
        if s <= 0:
            value = 0.0
        elif s in self.deltas:
            value = self.deltas[s]
        elif self.default_delta is not None:
            value = self.default_delta
        else:
            raise KeyError(f"no delta value for order {s}")
        return RicRocEstimate(order=(s,), value=float(value), method="fixed",
                              subsets_examined=0)

    def theta(self, s1: int, s2: int) -> RicRocEstimate:
        key = tuple(sorted((s1, s2)))
        if s1 <= 0 or s2 <= 0:
            value = 0.0
        elif key in self.thetas:
            value = self.thetas[key]
        elif self.default_theta is not None:
            value = self.default_theta
        else:
            raise KeyError(f"no theta value for orders {(s1, s2)}")
        return RicRocEstimate(order=(s1, s2), value=float(value), method="fixed",
                              subsets_examined=0)


# ---------------------------------------------------------------------------
# condition reports
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Condition:
    """One checkable inequality of a stability statement.

    The inequality is ``lhs < rhs`` (strict) or ``lhs <= rhs``.  ``exact``
    records whether lhs was built from exact quantities only; when it is a
    sampled lower bound, a satisfied comparison is only "undetermined"
    (the true value could be larger) while a violated one is a certain fail.
    """

    name: str
    inequality: str
    lhs: float
    rhs: float
    strict: bool
    exact: bool
    status: str


def _condition(name: str, inequality: str, lhs: float, rhs: float,
               exact: bool, strict: bool = True) -> Condition:
    ok = (lhs < rhs) if strict else (lhs <= rhs)
    if not ok:
        status = FAILS
    elif exact:
        status = HOLDS
    else:
        status = UNDETERMINED
    return Condition(name=name, inequality=inequality, lhs=float(lhs),
                     rhs=float(rhs), strict=strict, exact=exact, status=status)


@dataclass(frozen=True)
class ConditionReport:
    """Evaluation of one stability statement's hypotheses.

    constants holds the prescribed thresholds and rate floors; conclusions
    holds the support-error and reconstruction-error bounds the statement
    guarantees when every condition holds.  Conclusion values computed from
    sampled theta estimates are themselves lower bounds and are only
    certificates when the provider was exact.  assumptions lists the
    hypotheses that are not numeric inequalities (empirical threshold
    behavior, t=0 initialization, error-spread) and therefore are not
    given a status.
    """

    name: str
    inputs: dict
    constants: dict
    conditions: tuple
    conclusions: dict
    assumptions: tuple

    @property
    def status(self) -> str:
        statuses = [c.status for c in self.conditions]
        if FAILS in statuses:
            return FAILS
        if UNDETERMINED in statuses:
            return UNDETERMINED
        return HOLDS

    def render(self) -> str:
        lines = [f"report: {self.name}  [{self.status}]"]
        lines.append("inputs: " + "  ".join(
            f"{k}={_fmt(v)}" for k, v in self.inputs.items()))
        lines.append("constants:")
        for k, v in self.constants.items():
            lines.append(f"  {k:<12} = {_fmt(v)}")
        lines.append("conditions:")
        width = max((len(c.name) for c in self.conditions), default=0)
        for c in self.conditions:
            op = "<" if c.strict else "<="
            lines.append(f"  [{c.status:^12}] {c.name:<{width}}  "
                         f"{c.inequality}  ({_fmt(c.lhs)} {op} {_fmt(c.rhs)})")
        if any(not c.exact for c in self.conditions):
            lines.append("  note: sampled delta/theta values are lower bounds;"
                         " 'undetermined' means the condition holds at the"
                         " lower bound but could fail at the true value.")
        lines.append("conclusions (valid when all conditions hold):")
        for k, v in self.conclusions.items():
            lines.append(f"  {k:<18} = {_fmt(v)}")
        if self.assumptions:
            lines.append("assumptions (not numerically checkable here):")
            for a in self.assumptions:
                lines.append(f"  - {a}")
        return "\n".join(lines)

    def to_rows(self) -> list:
        """One dict per condition, for CSV output."""
        return [
            {"report": self.name, "condition": c.name,
             "inequality": c.inequality, "lhs": c.lhs, "rhs": c.rhs,
             "strict": c.strict, "exact": c.exact, "status": c.status}
            for c in self.conditions
        ]


def _fmt(v) -> str:
    if isinstance(v, float):
        if v in (math.inf, -math.inf):
            return "inf" if v > 0 else "-inf"
        if v == int(v) and abs(v) < 1e15:
            return str(int(v))
        return f"{v:.6g}"
    return str(v)


def _check_common(s0: int, sa: int, epsilon: float, r: float) -> None:
    if s0 < 1:
        raise ValueError("s0 must be >= 1")
    if sa < 0:
        raise ValueError("sa must be >= 0")
    if epsilon < 0:
        raise ValueError("epsilon must be >= 0")
    if r <= 0:
        raise ValueError("r must be > 0")


_INIT_ASSUMPTION = ("t=0: initial support estimate has at most {misses} misses, "
                    "all with magnitude below {rung}r, no extras, and size <= s0")
_FALSE_ADD_ASSUMPTION = ("alpha_add is large enough that at most {f} false "
                         "additions occur per step")
_SPREAD_ASSUMPTION = ("the addition-stage LS error e satisfies "
                      "||e||_inf <= (zeta/sqrt(sa)) ||e|| at all times")


def check_modcs_stability(s0: int, sa: int, epsilon: float, r: float,
                          provider) -> ConditionReport:
    """Stability conditions for the single-threshold partial-support tracker.

    Prescribes alpha = 8.79 epsilon and requires delta_{s0+3sa} < (sqrt2-1)/2,
    sa <= s0/6, and r >= G = 8.79 epsilon.  When they hold, misses stay <=
    2 sa (confined to magnitudes below 2r), extras stay 0, and the error is
    <= 8.79 epsilon at every step.
    """
    _check_common(s0, sa, epsilon, r)
    alpha = RECOVERY_COEFF * epsilon
    g = (alpha + RECOVERY_COEFF * epsilon) / 2.0
    d_est = provider.delta(s0 + 3 * sa)
    conditions = (
        _condition("support-change-ratio", f"sa <= {_fmt(s0 / 6.0)}",
                   sa, s0 / 6.0, exact=True, strict=False),
        _condition("ric-union",
                   f"delta({s0 + 3 * sa}) < {_fmt(DELTA_HALF_LIMIT)}",
                   d_est.value, DELTA_HALF_LIMIT, exact=d_est.exact),
        _condition("rate-minimum", f"G <= r", g, r, exact=True, strict=False),
    )
    return ConditionReport(
        name="modcs-stability",
        inputs={"s0": s0, "sa": sa, "epsilon": epsilon, "r": r},
        constants={"alpha": alpha, "G": g},
        conditions=conditions,
        conclusions={
            "support_size_max": s0,
            "miss_max": 2 * sa, "extra_max": 0, "miss_rung": 2,
            "miss_prev_max": 2 * sa, "extra_prev_max": sa,
            "err_bound": RECOVERY_COEFF * epsilon,
        },
        assumptions=(_INIT_ASSUMPTION.format(misses=2 * sa, rung=2),),
    )


def _add_del_support_conclusions(s0, sa, d0, f):
    """Support-size conclusions shared by the add-LS-del stability results."""
    k1 = max(1, 2 * d0 - 2)
    k2 = max(0, 2 * d0 - 3)
    return {
        "support_size_max": s0,
        "miss_max": (2 * d0 - 2) * sa, "extra_max": 0, "miss_rung": d0,
        "miss_prev_max": k1 * sa, "extra_prev_max": sa,
        "t_add_size_max": s0 + sa + f, "miss_add_max": k2 * sa,
        "extra_add_max": sa + f,
    }


def check_add_ls_del_stability(s0: int, sa: int, epsilon: float, r: float,
                               alpha_add: float, provider) -> ConditionReport:
    """Stability conditions for the add-LS-del tracker.

    Conditions: delta_{s0+3sa} < (sqrt2-1)/2, sa <= s0/6,
    theta_{s0+2sa,sa} < 1/(4 sqrt(sa)), and r >= max(G1, G2).  Prescribes
    alpha_del = sqrt(2) eps + 2 sqrt(sa) theta_{s0+2sa,sa} r.
    """
    _check_common(s0, sa, epsilon, r)
    th_del = provider.theta(s0 + 2 * sa, sa)
    d_est = provider.delta(s0 + 3 * sa)
    th_err = provider.theta(s0, 2 * sa)

    alpha_del = SQRT2 * epsilon + 2.0 * math.sqrt(sa) * th_del.value * r
    g1 = (alpha_add + RECOVERY_COEFF * epsilon) / 2.0
    den = 1.0 - 2.0 * math.sqrt(sa) * th_del.value
    g2 = SQRT2 * epsilon / den if den > 0 else math.inf
    theta_rhs = 1.0 / (4.0 * math.sqrt(sa)) if sa > 0 else math.inf

    conditions = (
        _condition("support-change-ratio", f"sa <= {_fmt(s0 / 6.0)}",
                   sa, s0 / 6.0, exact=True, strict=False),
        _condition("ric-union",
                   f"delta({s0 + 3 * sa}) < {_fmt(DELTA_HALF_LIMIT)}",
                   d_est.value, DELTA_HALF_LIMIT, exact=d_est.exact),
        _condition("roc-deletion",
                   f"theta({s0 + 2 * sa},{sa}) < {_fmt(theta_rhs)}",
                   th_del.value, theta_rhs, exact=th_del.exact),
        _condition("rate-minimum", "max(G1, G2) <= r",
                   max(g1, g2), r, exact=th_del.exact, strict=False),
    )
    err_bound = SQRT2 * epsilon + (2.0 * th_err.value + 1.0) * math.sqrt(2 * sa) * r
    return ConditionReport(
        name="add-ls-del-stability",
        inputs={"s0": s0, "sa": sa, "epsilon": epsilon, "r": r,
                "alpha_add": alpha_add},
        constants={"alpha_del": alpha_del, "G1": g1, "G2": g2,
                   "theta_del": th_del.value, "theta_err": th_err.value},
        conditions=conditions,
        conclusions={**_add_del_support_conclusions(s0, sa, 2, sa),
                     "err_bound": err_bound,
                     "modcs_err_bound": RECOVERY_COEFF * epsilon},
        assumptions=(_FALSE_ADD_ASSUMPTION.format(f=sa),
                     _INIT_ASSUMPTION.format(misses=2 * sa, rung=2)),
    )


def check_add_ls_del_stability_relaxed(s0: int, sa: int, epsilon: float,
                                       r: float, alpha_add: float, zeta: float,
                                       provider) -> ConditionReport:
    """Add-LS-del stability with the deletion conditions relaxed by the
    empirical spread factor zeta of the addition-stage LS error.

    zeta = sqrt(sa) reduces every constant and condition to the unrelaxed
    form; measured zeta values are near 1, which weakens the theta condition
    to theta < 1/(4 zeta) and lowers the rate floor G2.
    """
    _check_common(s0, sa, epsilon, r)
    if zeta <= 0:
        raise ValueError("zeta must be > 0")
    th_del = provider.theta(s0 + 2 * sa, sa)
    d_union = provider.delta(s0 + 3 * sa)
    d_ls = provider.delta(s0 + 2 * sa)
    th_err = provider.theta(s0, 2 * sa)

    if sa > 0:
        alpha_del = (math.sqrt(2.0 / sa) * zeta * epsilon
                     + 2.0 * th_del.value * zeta * r)
        den = math.sqrt(sa) * (1.0 - 2.0 * th_del.value * zeta)
        g2 = SQRT2 * zeta * epsilon / den if den > 0 else math.inf
    else:
        alpha_del = 0.0
        g2 = 0.0
    g1 = (alpha_add + RECOVERY_COEFF * epsilon) / 2.0

    conditions = (
        _condition("support-change-ratio", f"sa <= {_fmt(s0 / 6.0)}",
                   sa, s0 / 6.0, exact=True, strict=False),
        _condition("ric-union",
                   f"delta({s0 + 3 * sa}) < {_fmt(DELTA_HALF_LIMIT)}",
                   d_union.value, DELTA_HALF_LIMIT, exact=d_union.exact),
        _condition("ric-ls", f"delta({s0 + 2 * sa}) < 0.5",
                   d_ls.value, 0.5, exact=d_ls.exact),
        _condition("roc-deletion",
                   f"theta({s0 + 2 * sa},{sa}) < {_fmt(1.0 / (4.0 * zeta))}",
                   th_del.value, 1.0 / (4.0 * zeta), exact=th_del.exact),
        _condition("rate-minimum", "max(G1, G2) <= r",
                   max(g1, g2), r, exact=th_del.exact, strict=False),
    )
    err_bound = SQRT2 * epsilon + (2.0 * th_err.value + 1.0) * math.sqrt(2 * sa) * r
    return ConditionReport(
        name="add-ls-del-stability-relaxed",
        inputs={"s0": s0, "sa": sa, "epsilon": epsilon, "r": r,
                "alpha_add": alpha_add, "zeta": zeta},
        constants={"alpha_del": alpha_del, "G1": g1, "G2": g2,
                   "theta_del": th_del.value, "theta_err": th_err.value},
        conditions=conditions,
        conclusions={**_add_del_support_conclusions(s0, sa, 2, sa),
                     "err_bound": err_bound,
                     "modcs_err_bound": RECOVERY_COEFF * epsilon},
        assumptions=(_FALSE_ADD_ASSUMPTION.format(f=sa),
                     _INIT_ASSUMPTION.format(misses=2 * sa, rung=2),
                     _SPREAD_ASSUMPTION),
    )


def check_add_ls_del_stability_general(s0: int, sa: int, epsilon: float,
                                       r: float, alpha_add: float, zeta: float,
                                       d0: int, f: int,
                                       provider) -> ConditionReport:
    """Add-LS-del stability allowing the miss set to settle at rung d0.

    Misses are confined to magnitudes below d0*r (so their count settles at
    (2 d0 - 2) sa) and up to f false additions per step are tolerated.
    d0=2, f=sa reduces exactly to the relaxed conditions above; larger d0
    trades a weaker rate requirement (G1 ~ 1/d0) for a larger settled miss
    count and stronger delta/theta conditions.
    """
    _check_common(s0, sa, epsilon, r)
    if zeta <= 0:
        raise ValueError("zeta must be > 0")
    if d0 < 1:
        raise ValueError("d0 must be >= 1")
    if f < 0:
        raise ValueError("f must be >= 0")
    k1 = max(1, 2 * d0 - 2)
    k2 = max(0, 2 * d0 - 3)
    k3 = math.sqrt(sum(j * j for j in range(1, d0))
                   + sum(j * j for j in range(1, d0 - 1)))

    th_del = provider.theta(s0 + sa + f, k2 * sa)
    d_union = provider.delta(s0 + sa * (1 + k1))
    d_ls = provider.delta(s0 + sa + f)
    th_err = provider.theta(s0, (2 * d0 - 2) * sa)

    if sa > 0:
        alpha_del = (math.sqrt(2.0 / sa) * zeta * epsilon
                     + 2.0 * k3 * th_del.value * zeta * r)
        den = math.sqrt(sa) * (d0 - 4.0 * k3 * th_del.value * zeta)
        g2 = 2.0 * SQRT2 * zeta * epsilon / den if den > 0 else math.inf
    else:
        alpha_del = 0.0
        g2 = 0.0
    g1 = (alpha_add + RECOVERY_COEFF * epsilon) / d0
    theta_rhs = d0 / (8.0 * k3 * zeta) if k3 > 0 else math.inf

    conditions = (
        _condition("support-change-ratio", f"sa <= {_fmt(s0 / (3.0 * k1))}",
                   sa, s0 / (3.0 * k1), exact=True, strict=False),
        _condition("ric-union",
                   f"delta({s0 + sa * (1 + k1)}) < {_fmt(DELTA_HALF_LIMIT)}",
                   d_union.value, DELTA_HALF_LIMIT, exact=d_union.exact),
        _condition("ric-ls", f"delta({s0 + sa + f}) < 0.5",
                   d_ls.value, 0.5, exact=d_ls.exact),
        _condition("roc-deletion",
                   f"theta({s0 + sa + f},{k2 * sa}) < {_fmt(theta_rhs)}",
                   th_del.value, theta_rhs, exact=th_del.exact),
        _condition("rate-minimum", "max(G1, G2) <= r",
                   max(g1, g2), r, exact=th_del.exact, strict=False),
    )
    err_bound = (SQRT2 * epsilon
                 + k3 * math.sqrt(sa) * (2.0 * th_err.value + 1.0) * r)
    return ConditionReport(
        name="add-ls-del-stability-general",
        inputs={"s0": s0, "sa": sa, "epsilon": epsilon, "r": r,
                "alpha_add": alpha_add, "zeta": zeta, "d0": d0, "f": f},
        constants={"alpha_del": alpha_del, "G1": g1, "G2": g2,
                   "theta_del": th_del.value, "theta_err": th_err.value,
                   "k1": k1, "k2": k2, "k3": k3},
        conditions=conditions,
        conclusions={**_add_del_support_conclusions(s0, sa, d0, f),
                     "err_bound": err_bound,
                     "modcs_err_bound": RECOVERY_COEFF * epsilon},
        assumptions=(_FALSE_ADD_ASSUMPTION.format(f=f),
                     _INIT_ASSUMPTION.format(misses=(2 * d0 - 2) * sa, rung=d0),
                     _SPREAD_ASSUMPTION),
    )


def check_lscs_stability(s0: int, sa: int, epsilon: float, r: float,
                         alpha_add: float, provider) -> ConditionReport:
    """Stability conditions for the CS-on-LS-residual tracker.

    The residual solve has no partial-support knowledge, so the detection
    condition involves the CS-residual constants C'/C'' at every possible
    miss count |Delta| <= 2 sa, making the conditions much stronger than the
    add-LS-del ones on the same matrix.
    """
    _check_common(s0, sa, epsilon, r)
    th_del = provider.theta(s0 + 2 * sa, sa)
    d_small = provider.delta(4 * sa)
    d_ls = provider.delta(s0 + 2 * sa)

    # per-|Delta| CS-residual constants for the detection condition, the
    # rate floor, and the error conclusion
    det_lhs = 0.0
    det_exact = True
    g1 = (alpha_add + c1_constant(0.0) * epsilon) / 2.0
    err_bound = 0.0
    for ds in range(1, 2 * sa + 1):
        d2 = provider.delta(2 * ds)
        th = provider.theta(s0, ds)
        det_exact = det_exact and d2.exact and th.exact
        if d2.value >= DELTA_LIMIT:
            det_lhs = math.inf
            g1 = math.inf
            err_bound = math.inf
            continue
        bc = bound_constants(d2.value, s0, ds)
        det_lhs = max(det_lhs, th.value * bc.c_dprime)
        den = 2.0 - 3.0 * th.value * math.sqrt(sa) * bc.c_dprime
        g1 = max(g1, (alpha_add + bc.c_prime * epsilon) / den
                 if den > 0 else math.inf)
        err_bound = max(err_bound,
                        bc.c_prime * epsilon
                        + (th.value * bc.c_dprime + 1.0)
                        * math.sqrt(2 * sa) * r)

    alpha_del = SQRT2 * epsilon + 2.0 * math.sqrt(sa) * th_del.value * r
    den2 = 1.0 - 2.0 * math.sqrt(sa) * th_del.value
    g2 = SQRT2 * epsilon / den2 if den2 > 0 else math.inf
    det_rhs = 1.0 / (3.0 * math.sqrt(sa)) if sa > 0 else math.inf
    theta_rhs = 1.0 / (4.0 * math.sqrt(sa)) if sa > 0 else math.inf

    conditions = (
        _condition("ric-small",
                   f"delta({4 * sa}) < {_fmt(DELTA_HALF_LIMIT)}",
                   d_small.value, DELTA_HALF_LIMIT, exact=d_small.exact),
        _condition("ric-ls", f"delta({s0 + 2 * sa}) < 0.5",
                   d_ls.value, 0.5, exact=d_ls.exact),
        _condition("roc-detection",
                   f"max theta(s0,.)*C''(s0,.) < {_fmt(det_rhs)}",
                   det_lhs, det_rhs, exact=det_exact),
        _condition("roc-deletion",
                   f"theta({s0 + 2 * sa},{sa}) < {_fmt(theta_rhs)}",
                   th_del.value, theta_rhs, exact=th_del.exact),
        _condition("rate-minimum", "max(G1, G2) <= r",
                   max(g1, g2), r, exact=det_exact and th_del.exact,
                   strict=False),
    )
    return ConditionReport(
        name="lscs-stability",
        inputs={"s0": s0, "sa": sa, "epsilon": epsilon, "r": r,
                "alpha_add": alpha_add},
        constants={"alpha_del": alpha_del, "G1": g1, "G2": g2,
                   "theta_del": th_del.value},
        conditions=conditions,
        conclusions={**_add_del_support_conclusions(s0, sa, 2, sa),
                     "err_bound": (SQRT2 * epsilon
                                   + (2.0 * provider.theta(s0, 2 * sa).value
                                      + 1.0) * math.sqrt(2 * sa) * r),
                     "csres_err_bound": err_bound},
        assumptions=(_FALSE_ADD_ASSUMPTION.format(f=sa),
                     _INIT_ASSUMPTION.format(misses=2 * sa, rung=2)),
    )


# ---------------------------------------------------------------------------
# empirical spread factor and per-step fact checks
# ---------------------------------------------------------------------------


def support_error_spread(x_true: np.ndarray, x_est: np.ndarray, support,
                         sa: int) -> float:
    """sqrt(sa) * ||e||_inf / ||e|| for e = (x_true - x_est) on support.

    Returns 0.0 when the restricted error is identically zero (the spread
    assumption is vacuous there).
    """
    idx = np.asarray(sorted(support), dtype=np.int64)
    if idx.size == 0:
        return 0.0
    e = (np.asarray(x_true, dtype=np.float64)
         - np.asarray(x_est, dtype=np.float64))[idx]
    norm = float(np.linalg.norm(e))
    if norm == 0.0:
        return 0.0
    return float(np.max(np.abs(e)) * math.sqrt(sa) / norm)


def estimate_zeta(m: int, s0: int, sa: int, r: float, d: int, n: int, c: float,
                  trials: int = 500, horizon: int = 20, seed: int = 0,
                  options: SolverOptions = DEFAULT_OPTIONS) -> float:
    """Empirical spread factor of the addition-stage LS error.

    Runs the add-LS-del tracker on `trials` independent trajectories against
    one fixed Gaussian matrix (alpha_add = c/2, alpha_del = r/2, epsilon =
    c sqrt(n), uniform(-c, c) noise) and returns the maximum over all steps
    t >= 1 and all trials of sqrt(sa) ||e||_inf / ||e|| with
    e = (x_t - x_add_t) restricted to the post-addition support.
    """
    if trials < 1 or horizon < 1:
        raise ValueError("trials and horizon must be >= 1")
    A = gaussian_matrix(n, m, seed=seed)
    system = SensingSystem(A, noise_c=c)
    config = RecoveryConfig(algorithm=ALG_MODCS_ALD, alpha_add=c / 2.0,
                            alpha_del=r / 2.0)
    worst = 0.0
    for trial in range(trials):
        trial_seed = int(np.random.SeedSequence((seed, 705, trial))
                         .generate_state(1)[0])
        params = ModelParams(m=m, s0=s0, sa=sa, r=r, d=d, seed=trial_seed)
        result = run_sequence(params, system, config, horizon, options=options)
        for sig, step in zip(result.signals[1:], result.steps[1:]):
            est = step.estimate
            if est.t_add is None or est.x_add is None:
                continue
            worst = max(worst, support_error_spread(sig.x, est.x_add,
                                                    est.t_add, sa))
    return worst


@dataclass(frozen=True)
class FalseAdditionReport:
    """Pilot-trial measurement of the addition stage's false-add counts.

    The stability statements assume alpha_add keeps false additions per step
    at or below a limit (sa, or f in the generalized form); that clause is
    empirical, so this is how it gets checked.
    """

    alpha_add: float
    limit: int
    max_per_step: int
    mean_per_step: float
    steps: int
    ok: bool


def measure_false_additions(m: int, s0: int, sa: int, r: float, d: int,
                            n: int, c: float, alpha_add: float,
                            alpha_del: float, limit: int | None = None,
                            trials: int = 20, horizon: int = 20, seed: int = 0,
                            options: SolverOptions = DEFAULT_OPTIONS) -> FalseAdditionReport:
    """Run pilot add-LS-del trials and count per-step false additions.

    A false addition at step t is an index that enters the post-addition
    support without being in the true support: (t_add minus t_used) minus
    N_t.  Returns the worst and mean count over all pilot steps and whether
    the worst stayed within `limit` (default sa).
    """
    if trials < 1 or horizon < 1:
        raise ValueError("trials and horizon must be >= 1")
    if limit is None:
        limit = sa
    A = gaussian_matrix(n, m, seed=seed)
    system = SensingSystem(A, noise_c=c)
    config = RecoveryConfig(algorithm=ALG_MODCS_ALD, alpha_add=alpha_add,
                            alpha_del=alpha_del)
    counts = []
    for trial in range(trials):
        trial_seed = int(np.random.SeedSequence((seed, 706, trial))
                         .generate_state(1)[0])
        params = ModelParams(m=m, s0=s0, sa=sa, r=r, d=d, seed=trial_seed)
        result = run_sequence(params, system, config, horizon, options=options)
        for sig, step in zip(result.signals[1:], result.steps[1:]):
            est = step.estimate
            if est.t_add is None:
                continue
            added = np.setdiff1d(est.t_add, est.t_used)
            counts.append(np.setdiff1d(added, sig.support).size)
    counts = np.asarray(counts, dtype=np.int64)
    worst = int(counts.max()) if counts.size else 0
    return FalseAdditionReport(alpha_add=alpha_add, limit=limit,
                               max_per_step=worst,
                               mean_per_step=float(counts.mean()) if counts.size else 0.0,
                               steps=int(counts.size), ok=worst <= limit)


@dataclass(frozen=True)
class FactCheck:
    """Outcome of one per-step detection/deletion fact.

    applicable is False when the fact's premise is vacuous on this step
    (nothing above the detection level, or the deletion premise not met);
    holds is always True for vacuous facts.
    """

    name: str
    applicable: bool
    holds: bool
    detail: str


def verify_step_facts(x_true: np.ndarray, est: StepEstimate,
                      alpha: float | None = None,
                      alpha_add: float | None = None,
                      alpha_del: float | None = None) -> list:
    """Check the detection/deletion facts behind the stability inductions.

    * detection: entries with |x_i| > threshold + ||x - x_raw|| must appear
      in the detected support (t_add when the step has an addition stage,
      the final support otherwise);
    * no-false-deletion: entries of t_add with |x_i| > alpha_del +
      ||(x - x_add) on t_add|| must survive the deletion;
    * deletion-of-extras: when alpha_del >= ||(x - x_add) on t_add||, every
      off-support entry of t_add must be deleted.

    All thresholds use the actually realized error norms, so these are the
    empirical counterparts of the facts the proofs derive from delta/theta.
    """
    x_true = np.asarray(x_true, dtype=np.float64)
    checks: list[FactCheck] = []
    has_add = est.t_add is not None and est.x_add is not None

    thresh = alpha_add if has_add else alpha
    if thresh is not None:
        b = float(np.linalg.norm(x_true - est.x_raw))
        target = est.t_add if has_add else est.support
        target_set = set(np.asarray(target).tolist())
        need = np.flatnonzero(np.abs(x_true) > thresh + b)
        missing = [i for i in need.tolist() if i not in target_set]
        checks.append(FactCheck(
            name="detection", applicable=need.size > 0, holds=not missing,
            detail=(f"{need.size} entries above {thresh:.4g}+{b:.4g}, "
                    f"{len(missing)} undetected")))

    if has_add and alpha_del is not None:
        t_add = np.asarray(est.t_add, dtype=np.int64)
        e_add = float(np.linalg.norm((x_true - est.x_add)[t_add]))
        final_set = set(np.asarray(est.support).tolist())

        need = t_add[np.abs(x_true[t_add]) > alpha_del + e_add]
        lost = [i for i in need.tolist() if i not in final_set]
        checks.append(FactCheck(
            name="no-false-deletion", applicable=need.size > 0,
            holds=not lost,
            detail=(f"{need.size} entries above {alpha_del:.4g}+{e_add:.4g}, "
                    f"{len(lost)} falsely deleted")))

        applicable = alpha_del >= e_add
        extras = t_add[x_true[t_add] == 0.0]
        surviving = [i for i in extras.tolist() if i in final_set]
        checks.append(FactCheck(
            name="deletion-of-extras", applicable=applicable,
            holds=(not applicable) or not surviving,
            detail=(f"ls error {e_add:.4g} vs alpha_del {alpha_del:.4g}; "
                    f"{len(surviving)} extras kept of {extras.size}")))
    return checks
