"""
Classical simulation of QIPA power iteration on a spectral population.

Each step multiplies the mass of an eigenvalue level by ``f(lambda)^2`` and
renormalizes. Masses are tracked as natural logs and renormalized with
``logsumexp`` so even the double-exponential oracle stays finite.
"""

import json
import logging
import math
from pathlib import Path
from typing import Iterable, Optional, Sequence, Union

import numpy as np
from scipy.special import logsumexp

from app.config import get_settings
from app.exceptions import (
    InputError,
    NoAmplificationError,
    NoGapError,
    NumericalError,
)
from app.models import (
    IterationBoundEstimate,
    LevelSpectrum,
    MajorityResult,
    OracleFunction,
    SpectralPopulation,
)

logger = logging.getLogger(__name__)

# Levels this far below the solution are zero for every practical purpose
LOG_MASS_FLOOR = -1e300

Levels = Sequence[tuple[float, int]]


# ============================================================================
# Spectra
# ============================================================================


def degenerate_rest_spectrum(
    n: int, lambda1: float, lambda2: float
) -> list[tuple[float, int]]:
    """Solution at ``lambda1`` and the other ``2^n - 1`` states at ``lambda2``."""
    if n < 1:
        raise InputError(f"n must be >= 1, got {n}")
    if not lambda1 > lambda2:
        raise InputError(f"need lambda1 > lambda2, got {lambda1} and {lambda2}")
    return [(float(lambda1), 1), (float(lambda2), 2**n - 1)]


def levels_from_request(spectrum: LevelSpectrum) -> list[tuple[float, int]]:
    if spectrum.levels is not None:
        return [(float(lam), int(m)) for lam, m in spectrum.levels]
    return degenerate_rest_spectrum(spectrum.n, spectrum.lambda1, spectrum.lambda2)


def load_spectrum(path: Union[str, Path]) -> LevelSpectrum:
    """
    Read a spectrum file.

    The file is JSON, either ``{"n": 10, "lambda1": 1025, "lambda2": 1024}``
    for a degenerate-rest model or ``{"n": 3, "levels": [[5, 6], [1, 2]]}``.
    """
    path = Path(path)
    try:
        document = json.loads(path.read_text(encoding="utf-8"))
    except OSError as exc:
        raise InputError(f"cannot read spectrum file {path}: {exc.strerror}") from exc
    except json.JSONDecodeError as exc:
        raise InputError(f"invalid spectrum JSON: {exc.msg}", line=exc.lineno) from exc
    try:
        return LevelSpectrum.model_validate(document)
    except ValueError as exc:
        raise InputError(f"invalid spectrum file {path}: {exc}") from exc


def init_uniform_population(levels: Levels) -> SpectralPopulation:
    """
    Uniform superposition over all basis states, grouped by level.

    Raises:
        InputError: If levels repeat, a multiplicity is < 1 or the total
            count is not a power of two
    """
    ordered = sorted(((float(lam), int(m)) for lam, m in levels), reverse=True)
    if not ordered:
        raise InputError("spectrum is empty")
    eigenvalues = [lam for lam, _ in ordered]
    multiplicities = [m for _, m in ordered]
    if any(not math.isfinite(lam) for lam in eigenvalues):
        raise InputError("eigenvalues must be finite")
    if any(m < 1 for m in multiplicities):
        raise InputError("multiplicities must be >= 1")
    if len(set(eigenvalues)) != len(eigenvalues):
        raise InputError("eigenvalue levels must be distinct")
    total = sum(multiplicities)
    if total & (total - 1):
        raise InputError(f"multiplicities sum to {total}, not a power of two")

    log_total = math.log(total)
    return SpectralPopulation(
        eigenvalues=tuple(eigenvalues),
        multiplicities=tuple(multiplicities),
        log_probabilities=tuple(math.log(m) - log_total for m in multiplicities),
    )


# ============================================================================
# Oracle steps
# ============================================================================


def oracle_log_values(oracle: OracleFunction, eigenvalues: np.ndarray) -> np.ndarray:
    """
    Natural log of ``f(lambda)`` for each eigenvalue.

    Raises:
        InputError: If the identity oracle meets a non-positive eigenvalue
        NumericalError: If ``exp(lambda * dt)`` overflows for the double
            exponential
    """
    eigenvalues = np.asarray(eigenvalues, dtype=np.float64)
    if oracle.variant == "identity":
        if np.any(eigenvalues <= 0):
            raise InputError("identity oracle needs strictly positive eigenvalues")
        return np.log(eigenvalues)
    if oracle.variant == "exp":
        return eigenvalues * oracle.dt
    with np.errstate(over="ignore"):
        values = np.exp(eigenvalues * oracle.dt)
    if not np.all(np.isfinite(values)):
        raise NumericalError(
            f"double_exp oracle overflows at dt={oracle.dt}; reduce dt or the spectrum"
        )
    return values


def apply_oracle_step(
    population: SpectralPopulation, oracle: OracleFunction
) -> SpectralPopulation:
    """
    One QIPA step: ``p'_i proportional to m_i f(lambda_i)^2 p_i`` per basis state.

    Multiplicity is already folded into the level mass, so only ``f^2``
    multiplies it here.
    """
    log_f = oracle_log_values(oracle, np.asarray(population.eigenvalues))
    log_mass = np.asarray(population.log_probabilities) + 2.0 * log_f
    log_mass = log_mass - logsumexp(log_mass)
    if np.any(np.isnan(log_mass)) or not np.isfinite(log_mass.max()):
        raise NumericalError("population renormalization produced a non-finite value")
    log_mass = np.maximum(log_mass, LOG_MASS_FLOOR)
    return SpectralPopulation(
        eigenvalues=population.eigenvalues,
        multiplicities=population.multiplicities,
        log_probabilities=tuple(log_mass.tolist()),
        solution_index=population.solution_index,
    )


def _solution_log_odds(population: SpectralPopulation) -> float:
    log_mass = np.asarray(population.log_probabilities)
    sol = population.solution_index
    rest = np.delete(log_mass, sol)
    if rest.size == 0:
        return math.inf
    return float(log_mass[sol] - logsumexp(rest))


def has_majority(population: SpectralPopulation) -> bool:
    """True when the solution level holds strictly more than half the mass."""
    return _solution_log_odds(population) > 0.0


def iterations_to_majority(
    levels: Levels, oracle: OracleFunction, max_iter: Optional[int] = None
) -> MajorityResult:
    """
    Smallest k with solution probability > 1/2 after k oracle steps.

    Args:
        levels: (eigenvalue, multiplicity) pairs; the largest eigenvalue is
            the solution
        oracle: Strictly increasing oracle function
        max_iter: Step budget; defaults to the configured ``max_iter``

    Returns:
        MajorityResult: ``iterations`` is None when the budget ran out

    Example:
        >>> exp = OracleFunction(variant="exp")
        >>> iterations_to_majority([(5.0, 6), (1.0, 2)], exp).iterations
        0
    """
    budget = get_settings().max_iter if max_iter is None else max_iter
    if budget < 0:
        raise InputError(f"max_iter must be >= 0, got {budget}")
    population = init_uniform_population(levels)
    if len(population.eigenvalues) < 2:
        raise NoGapError("spectrum has a single level; nothing to amplify")
    log_f = oracle_log_values(oracle, np.asarray(population.eigenvalues))
    if log_f[0] <= log_f[1]:
        raise NoAmplificationError(
            f"{oracle.label} does not separate the solution from the runner-up"
        )

    for k in range(budget + 1):
        if has_majority(population):
            logger.debug("Majority after %d steps with %s", k, oracle.label)
            return MajorityResult(
                iterations=k,
                status="reached",
                solution_probability=population.solution_probability,
                oracle=oracle.label,
            )
        if k < budget:
            population = apply_oracle_step(population, oracle)

    logger.warning("No majority within %d steps using %s", budget, oracle.label)
    return MajorityResult(
        iterations=None,
        status="budget_exceeded",
        solution_probability=population.solution_probability,
        oracle=oracle.label,
    )


def closed_form_majority_count(
    n: int, lambda1: float, lambda2: float, oracle: OracleFunction
) -> int:
    """
    Majority step count for the degenerate-rest model in closed form.

    With ``r = f(lambda1)/f(lambda2)`` the answer is ``floor(x) + 1`` for
    ``x = ln(2^n - 1) / (2 ln r)``.
    """
    if n < 1:
        raise InputError(f"n must be >= 1, got {n}")
    if not lambda1 > lambda2:
        raise InputError(f"need lambda1 > lambda2, got {lambda1} and {lambda2}")
    log_f = oracle_log_values(oracle, np.array([lambda1, lambda2]))
    log_ratio = float(log_f[0] - log_f[1])
    if log_ratio <= 0:
        raise NoAmplificationError(f"{oracle.label} maps lambda1 and lambda2 together")
    x = math.log(2**n - 1) / (2.0 * log_ratio)
    return math.floor(x) + 1


# ============================================================================
# Iteration bounds
# ============================================================================


def log2_ratio(lambda1: float, lambda2: float) -> float:
    """``log2(lambda1/lambda2)`` without cancellation when the ratio is near 1."""
    ratio = lambda1 / lambda2
    if ratio >= 1.5:
        return math.log2(ratio)
    return math.log1p((lambda1 - lambda2) / lambda2) / math.log(2.0)


def kappa_bounds(n: int, lambda1: float, lambda2: float) -> IterationBoundEstimate:
    """
    Leading-order iteration counts of varQITE and QIPA2.

    ``kappa_varqite = n / log2(lambda1/lambda2)`` and
    ``kappa_qipa2 = n / (lambda1 - lambda2)``.

    Example:
        >>> kappa_bounds(3, 2.0, 1.0)
        IterationBoundEstimate(kappa_varqite=3.0, kappa_qipa2=3.0)
    """
    if n < 1:
        raise InputError(f"n must be >= 1, got {n}")
    if not (lambda1 > lambda2 > 0):
        raise InputError(f"need lambda1 > lambda2 > 0, got {lambda1} and {lambda2}")
    return IterationBoundEstimate(
        kappa_varqite=n / log2_ratio(lambda1, lambda2),
        kappa_qipa2=n / (lambda1 - lambda2),
    )


def iteration_grid(
    ns: Iterable[int],
    lambda_pairs: Iterable[tuple[float, float]],
    oracles: Iterable[OracleFunction],
    max_iter: Optional[int] = None,
) -> list[dict]:
    """Empirical and closed-form majority counts over a parameter grid."""
    rows = []
    lambda_pairs = list(lambda_pairs)
    oracles = list(oracles)
    for n in ns:
        for lambda1, lambda2 in lambda_pairs:
            for oracle in oracles:
                levels = degenerate_rest_spectrum(n, lambda1, lambda2)
                result = iterations_to_majority(levels, oracle, max_iter=max_iter)
                rows.append(
                    {
                        "n": n,
                        "lambda1": lambda1,
                        "lambda2": lambda2,
                        "oracle": oracle.label,
                        "empirical": result.iterations,
                        "closed_form": closed_form_majority_count(
                            n, lambda1, lambda2, oracle
                        ),
                    }
                )
    return rows
