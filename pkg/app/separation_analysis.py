"""
Separation conditions between varQITE and QIPA2 iteration bounds.

For a problem of size n with maximization eigenvalues ``lambda1 > lambda2``
the lab checks when varQITE needs exponentially many steps while QIPA2 needs
polynomially many:

    n / log2(lambda1/lambda2) >= c * 2^n      (varQITE is slow)
    n / (lambda1 - lambda2)   <= d * n^k      (QIPA2 is fast)

Rearranged, these bound the absolute gap from below, the ratio from above
and force ``lambda2`` (and ``lambda1``) above a floor that grows faster than
any polynomial in n. The floors are evaluated with ``expm1`` because
``2^(n / (c 2^n)) - 1`` underflows to zero in naive arithmetic for n ~ 60.
"""

import logging
import math
from typing import Optional, Sequence

from app.config import get_settings
from app.exceptions import InputError, NumericalError
from app.models import (
    ConditionReport,
    DivergenceProbe,
    DivergenceRow,
    SeparationConstants,
    SpectrumAnalysis,
)
from app.power_iteration import kappa_bounds, log2_ratio

logger = logging.getLogger(__name__)

_LN2 = math.log(2.0)


def default_constants() -> SeparationConstants:
    settings = get_settings()
    return SeparationConstants(
        c=settings.default_c, d=settings.default_d, k=settings.default_k
    )


def _check_n(n: int) -> None:
    if n < 1:
        raise InputError(f"n must be >= 1, got {n}")


def _ratio_exponent(n: int, consts: SeparationConstants) -> float:
    # n / (c 2^n), the largest allowed log2(lambda1/lambda2)
    return math.ldexp(n, -n) / consts.c


def gap_lower_bound(n: int, consts: Optional[SeparationConstants] = None) -> float:
    """Smallest absolute gap with ``n / gap <= d n^k``, i.e. ``1/(d n^(k-1))``."""
    _check_n(n)
    consts = consts or default_constants()
    return 1.0 / (consts.d * n ** (consts.k - 1.0))


def lambda2_lower_bound(n: int, consts: Optional[SeparationConstants] = None) -> float:
    """
    Floor on ``lambda2`` under both inequalities.

    ``L(n) = 1 / (d n^(k-1) (2^(n/(c 2^n)) - 1))``.

    Example:
        >>> round(lambda2_lower_bound(10), 3)
        147.233
    """
    _check_n(n)
    consts = consts or default_constants()
    growth = math.expm1(_ratio_exponent(n, consts) * _LN2)
    if growth == 0.0:
        raise NumericalError(f"2^(n/(c 2^n)) - 1 underflows at n={n}")
    return 1.0 / (consts.d * n ** (consts.k - 1.0) * growth)


def lambda1_lower_bound(n: int, consts: Optional[SeparationConstants] = None) -> float:
    """Floor on ``lambda1``: ``1 / (d n^(k-1) (1 - 2^(-n/(c 2^n))))``."""
    _check_n(n)
    consts = consts or default_constants()
    shrink = -math.expm1(-_ratio_exponent(n, consts) * _LN2)
    if shrink == 0.0:
        raise NumericalError(f"1 - 2^(-n/(c 2^n)) underflows at n={n}")
    return 1.0 / (consts.d * n ** (consts.k - 1.0) * shrink)


def check_inequality_system(
    n: int,
    lambda1: float,
    lambda2: float,
    consts: Optional[SeparationConstants] = None,
    rtol: Optional[float] = None,
) -> ConditionReport:
    """
    Evaluate each inequality and derived condition for one instance.

    Gap and floor comparisons allow a relative slack of ``rtol`` (default
    ``comparison_rtol``) so that an upscale landing exactly on a floor
    counts as satisfying it.

    Args:
        n: Problem size (qubits)
        lambda1: Solution eigenvalue of the maximization problem
        lambda2: Runner-up eigenvalue, strictly positive
        consts: Separation constants; defaults from settings
        rtol: Relative slack on floor comparisons

    Returns:
        ConditionReport: ``separated`` is the conjunction of every field

    Raises:
        InputError: If ``n < 1`` or ``lambda2 <= 0``

    Example:
        >>> check_inequality_system(10, 4.0, 1.0).ineq_varqite
        False
    """
    _check_n(n)
    if not lambda2 > 0:
        raise InputError(f"lambda2 must be > 0, got {lambda2}")
    consts = consts or default_constants()
    rtol = get_settings().comparison_rtol if rtol is None else rtol

    gap_floor = gap_lower_bound(n, consts)
    l2_floor = lambda2_lower_bound(n, consts)
    l1_floor = lambda1_lower_bound(n, consts)

    if not lambda1 > lambda2:
        return ConditionReport(
            n=n,
            lambda1=lambda1,
            lambda2=lambda2,
            ordering=False,
            ineq_varqite=False,
            ineq_qipa=False,
            cond_I=False,
            cond_II=False,
            cond_III=False,
            separated=False,
            gap_floor=gap_floor,
            lambda2_floor=l2_floor,
            lambda1_floor=l1_floor,
        )

    gap = lambda1 - lambda2
    exponent = _ratio_exponent(n, consts)
    bounds = kappa_bounds(n, lambda1, lambda2)

    ineq_varqite = log2_ratio(lambda1, lambda2) <= exponent
    ineq_qipa = bounds.kappa_qipa2 <= consts.d * n**consts.k * (1.0 + rtol)
    cond_I = gap >= gap_floor * (1.0 - rtol)
    # relative gap form of lambda1/lambda2 <= 2^exponent
    cond_II = gap / lambda2 <= math.expm1(exponent * _LN2)
    cond_III = lambda2 >= l2_floor * (1.0 - rtol)
    separated = ineq_varqite and ineq_qipa and cond_I and cond_II and cond_III

    report = ConditionReport(
        n=n,
        lambda1=lambda1,
        lambda2=lambda2,
        ordering=True,
        ineq_varqite=ineq_varqite,
        ineq_qipa=ineq_qipa,
        cond_I=cond_I,
        cond_II=cond_II,
        cond_III=cond_III,
        separated=separated,
        kappa_varqite=bounds.kappa_varqite,
        kappa_qipa2=bounds.kappa_qipa2,
        gap_floor=gap_floor,
        lambda2_floor=l2_floor,
        lambda1_floor=l1_floor,
    )
    logger.debug("Separation check n=%d: %s", n, report.model_dump())
    return report


def minimal_upscale_alpha(
    gap: float, n: int, consts: Optional[SeparationConstants] = None
) -> float:
    """
    Smallest ``alpha >= 1`` that lifts an absolute gap onto the gap floor.

    Example:
        >>> round(minimal_upscale_alpha(0.001, 10, SeparationConstants(k=2)), 9)
        100.0
    """
    _check_n(n)
    if not gap > 0:
        raise InputError(f"gap must be > 0, got {gap}")
    consts = consts or default_constants()
    return max(1.0, 1.0 / (consts.d * n ** (consts.k - 1.0) * gap))


def divergence_probe(
    consts: Optional[SeparationConstants], n_values: Sequence[int]
) -> DivergenceProbe:
    """
    Tabulate ``L(n)`` and the doubling ratio ``L(2n)/L(n)``.

    A super-polynomial floor shows up as a doubling ratio that keeps
    growing with n (it exceeds n for n = 8, 16, 24 at c = d = k = 1).

    Raises:
        InputError: If ``n_values`` is empty or not strictly increasing
    """
    consts = consts or default_constants()
    n_values = list(n_values)
    if not n_values:
        raise InputError("n_values must not be empty")
    if any(a >= b for a, b in zip(n_values, n_values[1:])):
        raise InputError("n_values must be strictly increasing")

    rows = []
    for n in n_values:
        bound = lambda2_lower_bound(n, consts)
        rows.append(
            DivergenceRow(
                n=n,
                lambda2_bound=bound,
                doubling_ratio=lambda2_lower_bound(2 * n, consts) / bound,
            )
        )

    monotone_from = None
    if len(rows) > 1:
        start = len(rows) - 1
        while start > 0 and rows[start - 1].lambda2_bound < rows[start].lambda2_bound:
            start -= 1
        if start < len(rows) - 1:
            monotone_from = rows[start].n

    return DivergenceProbe(
        constants=consts, rows=tuple(rows), monotone_from=monotone_from
    )


def analyze_spectrum(
    n: int,
    lambda1: float,
    lambda2: float,
    consts: Optional[SeparationConstants] = None,
) -> SpectrumAnalysis:
    """
    Separation verdict for one spectrum, before and after the upscale that
    the gap floor calls for.
    """
    consts = consts or default_constants()
    report = check_inequality_system(n, lambda1, lambda2, consts)
    alpha = minimal_upscale_alpha(lambda1 - lambda2, n, consts)
    after = check_inequality_system(n, alpha * lambda1, alpha * lambda2, consts)
    if not after.cond_I:
        logger.warning("Upscale by %.6g did not reach the gap floor at n=%d", alpha, n)
    return SpectrumAnalysis(
        n=n,
        lambda1=lambda1,
        lambda2=lambda2,
        constants=consts,
        bounds=kappa_bounds(n, lambda1, lambda2),
        report=report,
        recommended_alpha=alpha,
        report_after_upscale=after,
        bounds_after_upscale=kappa_bounds(n, alpha * lambda1, alpha * lambda2),
    )
