"""
Tests for the exact QIPA power iteration and the leading-order bounds.
"""

import json
import math
from decimal import Decimal, localcontext

import pytest

from app.exceptions import (
    InputError,
    NoAmplificationError,
    NoGapError,
    NumericalError,
)
from app.models import OracleFunction
from app.power_iteration import (
    apply_oracle_step,
    closed_form_majority_count,
    degenerate_rest_spectrum,
    has_majority,
    init_uniform_population,
    iteration_grid,
    iterations_to_majority,
    kappa_bounds,
    load_spectrum,
    log2_ratio,
)

IDENTITY = OracleFunction(variant="identity")
EXP = OracleFunction(variant="exp", dt=1.0)
DOUBLE_EXP = OracleFunction(variant="double_exp", dt=1.0)


def test_uniform_population():
    """Test that level masses are multiplicity / 2^n."""
    population = init_uniform_population([(1.0, 2), (5.0, 6)])

    assert population.eigenvalues == (5.0, 1.0)
    assert population.probabilities == pytest.approx((0.75, 0.25))
    assert has_majority(population)


def test_single_level_population():
    """Test that one level of 2^n states holds all the mass."""
    population = init_uniform_population([(2.0, 8)])

    assert population.solution_probability == 1.0
    assert has_majority(population)
    with pytest.raises(NoGapError):
        iterations_to_majority([(2.0, 8)], EXP)


def test_population_rejects_bad_levels():
    """Test validation of the level list."""
    with pytest.raises(InputError, match="power of two"):
        init_uniform_population([(2.0, 1), (1.0, 6)])
    with pytest.raises(InputError, match="distinct"):
        init_uniform_population([(2.0, 1), (2.0, 1)])
    with pytest.raises(InputError):
        init_uniform_population([(2.0, 0), (1.0, 8)])


def test_exp_step_probability():
    """Test one exp step on {(2, 1), (1, 7)}: p = e^2 / (e^2 + 7)."""
    population = init_uniform_population([(2.0, 1), (1.0, 7)])
    stepped = apply_oracle_step(population, EXP)

    expected = math.exp(2) / (math.exp(2) + 7)
    assert stepped.solution_probability == pytest.approx(expected, rel=1e-12)
    assert sum(stepped.probabilities) == pytest.approx(1.0, abs=1e-12)


def test_majority_counts_small_case():
    """Test n = 3, lambda1 = 2, lambda2 = 1 for exp and identity oracles."""
    levels = degenerate_rest_spectrum(3, 2.0, 1.0)

    assert iterations_to_majority(levels, EXP).iterations == 1
    assert iterations_to_majority(levels, IDENTITY).iterations == 2


def test_degenerate_ground_already_majority():
    """Test that a solution level with 6 of 8 states needs no steps."""
    result = iterations_to_majority([(5.0, 6), (1.0, 2)], EXP)

    assert result.iterations == 0
    assert result.status == "reached"
    assert result.solution_probability == pytest.approx(0.75)


def test_single_qubit_needs_one_step():
    """Test that an exact tie at k = 0 is not a majority."""
    levels = degenerate_rest_spectrum(1, 2.0, 1.0)

    assert iterations_to_majority(levels, EXP).iterations == 1
    assert closed_form_majority_count(1, 2.0, 1.0, EXP) == 1


def test_empirical_matches_closed_form_grid():
    """Test empirical majority counts against the closed form over a grid."""
    pairs = [
        (lambda2 + delta, lambda2)
        for lambda2 in (0.5, 1.0, 1.7, 2.3, 3.1)
        for delta in (0.05, 0.3, 0.9, 1.6, 2.5)
    ]
    rows = iteration_grid(range(2, 11), pairs, [IDENTITY, EXP, DOUBLE_EXP])

    assert len(rows) == 9 * 25 * 3
    mismatches = [row for row in rows if row["empirical"] != row["closed_form"]]
    assert mismatches == []


def test_double_exp_stays_finite():
    """Test log-space masses with f(lambda) = exp(exp(700))."""
    oracle = OracleFunction(variant="double_exp", dt=100.0)
    result = iterations_to_majority([(7.0, 1), (6.0, 1)], oracle)

    assert result.iterations == 1
    assert result.solution_probability == 1.0


def test_double_exp_overflow_is_numerical_error():
    """Test that exp(lambda dt) overflowing is reported."""
    oracle = OracleFunction(variant="double_exp", dt=1000.0)

    with pytest.raises(NumericalError):
        iterations_to_majority([(7.0, 1), (6.0, 1)], oracle)


def test_identity_needs_positive_eigenvalues():
    """Test that the identity oracle refuses lambda <= 0."""
    with pytest.raises(InputError):
        iterations_to_majority([(1.0, 1), (-1.0, 1)], IDENTITY)


def test_oracle_that_merges_levels():
    """Test NoAmplificationError when f(lambda1) == f(lambda2) in floating point."""
    with pytest.raises(NoAmplificationError):
        iterations_to_majority([(-800.0, 1), (-900.0, 1)], DOUBLE_EXP)


def test_budget_exceeded():
    """Test that an exhausted budget returns no iteration count."""
    levels = degenerate_rest_spectrum(10, 1.01, 1.0)
    result = iterations_to_majority(levels, IDENTITY, max_iter=5)

    assert result.status == "budget_exceeded"
    assert result.iterations is None
    assert result.solution_probability < 0.5


def test_kappa_bounds_small_case():
    """Test kappa for n = 3, lambda1 = 2, lambda2 = 1."""
    bounds = kappa_bounds(3, 2.0, 1.0)

    assert bounds.kappa_varqite == 3.0
    assert bounds.kappa_qipa2 == 3.0


def test_kappa_bounds_near_degenerate():
    """Test kappa for a ratio close to 1 against 50-digit arithmetic."""
    bounds = kappa_bounds(10, 1024.5, 1024.0)

    with localcontext() as ctx:
        ctx.prec = 50
        log2 = (Decimal("1024.5") / Decimal("1024")).ln() / Decimal(2).ln()
        expected = float(Decimal(10) / log2)

    assert bounds.kappa_varqite == pytest.approx(expected, rel=1e-12)
    assert round(bounds.kappa_varqite) == 14199
    assert bounds.kappa_qipa2 == 20.0
    assert bounds.ratio > 700


def test_log2_ratio_branches():
    """Test both the direct and the log1p branch."""
    assert log2_ratio(8.0, 1.0) == 3.0
    tiny = 2.0**-40
    assert log2_ratio(1.0 + tiny, 1.0) == pytest.approx(tiny / math.log(2), rel=1e-9)


def test_kappa_bounds_rejects_bad_input():
    """Test the precondition lambda1 > lambda2 > 0."""
    with pytest.raises(InputError):
        kappa_bounds(3, 1.0, 2.0)
    with pytest.raises(InputError):
        kappa_bounds(3, 2.0, 0.0)
    with pytest.raises(InputError):
        kappa_bounds(0, 2.0, 1.0)


def test_load_spectrum(tmp_path):
    """Test reading both spectrum file forms."""
    rest = tmp_path / "rest.json"
    rest.write_text(json.dumps({"n": 10, "lambda1": 1025, "lambda2": 1024}))
    levels = tmp_path / "levels.json"
    levels.write_text(json.dumps({"n": 3, "levels": [[5, 6], [1, 2]]}))

    assert load_spectrum(rest).lambda1 == 1025
    assert load_spectrum(levels).levels is not None


def test_load_spectrum_invalid_json(tmp_path):
    """Test that malformed JSON is an input error."""
    path = tmp_path / "bad.json"
    path.write_text('{"n": 3,\n "lambda1": }')

    with pytest.raises(InputError):
        load_spectrum(path)
