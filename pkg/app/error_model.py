"""
Error accounting for QIPA2 next to varQITE.

A QIPA2 step with oracle step ``dt`` and Euler step ``dtau`` carries an
intrinsic Bures error floor of ``eps_varqite + Delta * dtau`` (dropping a
``dtau^1.5`` term), where ``Delta^2`` is the expectation of

    (1 + e^(h dt))^2 / dtau^2 + 2 (e^(h dt) - 1) h / dtau - (e^(h dt) - 2) h^2

over the current state. Upscaling H by alpha multiplies the variance by
``alpha^2`` and makes Delta grow with alpha, which is the error side of
the speedup bought by upscaling.
"""

import logging
import math
from typing import Iterable, Optional, Sequence

import numpy as np

from app.config import get_settings
from app.exceptions import InputError, NumericalError
from app.graph_ising import brute_force_spectrum
from app.models import (
    BlowupRow,
    ErrorBudget,
    IsingHamiltonian,
    OracleFunction,
    StateVector,
    TradeoffRow,
    VarianceScalingCheck,
)
from app.power_iteration import iterations_to_majority
from app.statevector import (
    Observable,
    diagonal_function_observable,
    expectation,
    variance,
)

logger = logging.getLogger(__name__)


def _check_steps(dt: float, dtau: float) -> None:
    if not dt > 0 or not dtau > 0:
        raise InputError(f"dt and dtau must be > 0, got {dt} and {dtau}")


def delta_squared(
    state: StateVector, hamiltonian: Observable, dt: float, dtau: float
) -> float:
    """
    ``Delta^2`` for one QIPA2 step, as an exact diagonal expectation.

    Raises:
        InputError: If ``dt`` or ``dtau`` is not positive
        NumericalError: If ``exp(h dt)`` overflows or the result is negative

    Example:
        >>> z = DiagonalObservable(num_qubits=1, values=[1.0, -1.0])
        >>> ground = StateVector(num_qubits=1, amplitudes=[0.0, 1.0])
        >>> round(delta_squared(ground, z.scaled(0.0), 0.5, 1.0), 12)
        4.0
    """
    _check_steps(dt, dtau)

    def integrand(h: np.ndarray) -> np.ndarray:
        grow = np.exp(h * dt)
        return (
            (1.0 + grow) ** 2 / dtau**2
            + 2.0 * (grow - 1.0) * h / dtau
            - (grow - 2.0) * h**2
        )

    try:
        observable = diagonal_function_observable(hamiltonian, integrand)
    except NumericalError as exc:
        raise NumericalError(
            f"Delta^2 overflows at dt={dt}; use a smaller dt ({exc})"
        ) from exc
    value = expectation(state, observable)
    if value < 0:
        raise NumericalError(
            f"Delta^2 is negative ({value:.3e}) at dt={dt}; use a smaller dt"
        )
    return value


def delta(state: StateVector, hamiltonian: Observable, dt: float, dtau: float) -> float:
    return math.sqrt(delta_squared(state, hamiltonian, dt, dtau))


def qipa_error_floor(eps_varqite: float, delta_value: float, dtau: float) -> float:
    """``eps_varqite + Delta * dtau``, exclusive of the ``dtau^1.5`` term."""
    if eps_varqite < 0 or delta_value < 0 or dtau < 0:
        raise InputError("error floor inputs must be non-negative")
    return eps_varqite + delta_value * dtau


def error_budget(eps_varqite: float, delta_value: float, dtau: float) -> ErrorBudget:
    return ErrorBudget(
        varqite_error=eps_varqite,
        delta=delta_value,
        delta_tau=dtau,
        qipa_floor=qipa_error_floor(eps_varqite, delta_value, dtau),
    )


def bures_accumulate(step_errors: Iterable[float], dtau: float) -> float:
    """Cumulative Bures bound ``dtau * sum(||e_k||)`` with an exact sum."""
    step_errors = list(step_errors)
    if dtau < 0 or any(e < 0 for e in step_errors):
        raise InputError("step errors and dtau must be non-negative")
    return dtau * math.fsum(step_errors)


def variance_scaling_check(
    hamiltonian: Observable, state: StateVector, alpha: float
) -> VarianceScalingCheck:
    """Compare ``Var(alpha H)`` against ``alpha^2 Var(H)`` on one state."""
    if not alpha > 0:
        raise InputError(f"alpha must be > 0, got {alpha}")
    base = diagonal_function_observable(hamiltonian)
    scaled = variance(state, base.scaled(alpha))
    expected = alpha**2 * variance(state, base)
    denom = abs(expected) if expected else 1.0
    return VarianceScalingCheck(
        alpha=alpha,
        scaled_variance=scaled,
        expected_variance=expected,
        relative_error=abs(scaled - expected) / denom,
    )


def _check_alphas(alphas: Sequence[float]) -> list[float]:
    alphas = [float(a) for a in alphas]
    if not alphas:
        raise InputError("alphas must not be empty")
    if any(a <= 0 for a in alphas):
        raise InputError("alphas must be > 0")
    if any(a >= b for a, b in zip(alphas, alphas[1:])):
        raise InputError("alphas must be strictly increasing")
    return alphas


def alpha_blowup_scan(
    hamiltonian: Observable,
    state: StateVector,
    alphas: Sequence[float],
    dt: float,
    dtau: float,
    eps_varqite: Optional[float] = None,
    max_exponent: Optional[float] = None,
) -> list[BlowupRow]:
    """
    Variance, Delta and QIPA2 error floor for each upscale factor.

    The oracle step is shrunk so that ``alpha * max|h| * dt_used`` stays at
    or below ``max_exponent`` (default ``max_oracle_exponent``). The scan
    then runs at a fixed oracle exponent once alpha is large, and every row
    records the ``dt_used``.

    Args:
        hamiltonian: Base Hamiltonian (upscale factor 1)
        state: State the expectations are taken in
        alphas: Strictly increasing upscale factors
        dt: Requested oracle step
        dtau: Euler step
        eps_varqite: varQITE error per row; defaults to ``dtau * sqrt(Var(alpha H))``
        max_exponent: Cap on the oracle exponent

    Returns:
        list[BlowupRow]: One row per alpha, in order
    """
    _check_steps(dt, dtau)
    alphas = _check_alphas(alphas)
    cap = get_settings().max_oracle_exponent if max_exponent is None else max_exponent
    base = diagonal_function_observable(hamiltonian)
    h_max = float(np.max(np.abs(base.values)))

    rows = []
    for alpha in alphas:
        dt_used = dt
        if h_max > 0 and alpha * h_max * dt > cap:
            dt_used = cap / (alpha * h_max)
            logger.debug("alpha=%g: oracle step %g -> %g", alpha, dt, dt_used)
        scaled = base.scaled(alpha)
        var = variance(state, scaled)
        delta_value = delta(state, scaled, dt_used, dtau)
        eps = dtau * math.sqrt(var) if eps_varqite is None else eps_varqite
        rows.append(
            BlowupRow(
                alpha=alpha,
                var=var,
                delta=delta_value,
                qipa_floor=qipa_error_floor(eps, delta_value, dtau),
                dt_used=dt_used,
                eps_varqite=eps,
                log_var=math.log(var) if var > 0 else None,
                log_delta=math.log(delta_value) if delta_value > 0 else None,
            )
        )
    logger.info("Blow-up scan over %d alphas (max |h| = %g)", len(rows), h_max)
    return rows


def speedup_error_tradeoff(
    hamiltonian: IsingHamiltonian,
    state: StateVector,
    alphas: Sequence[float],
    dt: float,
    dtau: float,
    oracle: Optional[OracleFunction] = None,
    max_iter: Optional[int] = None,
) -> list[TradeoffRow]:
    """
    Blow-up scan joined with oracle iterations-to-majority at each alpha.

    Upscaling shortens the exact power iteration (the speedup) while the
    QIPA2 error floor grows (the cost). Requires every alpha >= 1.
    """
    alphas = _check_alphas(alphas)
    if alphas[0] < 1.0:
        raise InputError("upscale factors must be >= 1")
    oracle = oracle or OracleFunction(variant="exp", dt=1.0)
    spectrum = brute_force_spectrum(hamiltonian)
    rows = []
    for row in alpha_blowup_scan(hamiltonian, state, alphas, dt, dtau):
        levels = [(row.alpha * lam, m) for lam, m in spectrum.levels]
        result = iterations_to_majority(levels, oracle, max_iter=max_iter)
        rows.append(
            TradeoffRow(
                **row.model_dump(),
                iterations=result.iterations,
                status=result.status,
            )
        )
    return rows
