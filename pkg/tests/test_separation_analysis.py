"""
Tests for the separation inequalities, their floors and the divergence probe.
"""

import numpy as np
import pytest

from app.exceptions import InputError, NumericalError
from app.models import SeparationConstants
from app.separation_analysis import (
    analyze_spectrum,
    check_inequality_system,
    divergence_probe,
    gap_lower_bound,
    lambda1_lower_bound,
    lambda2_lower_bound,
    minimal_upscale_alpha,
)

UNIT = SeparationConstants()


def test_lambda2_floor_at_ten():
    """Test L(10) for c = d = k = 1."""
    assert lambda2_lower_bound(10, UNIT) == pytest.approx(147.233, abs=5e-4)


def test_lambda1_floor_exceeds_lambda2_floor_by_gap_floor():
    """Test lambda1 floor = lambda2 floor + 1 / (d n^(k-1))."""
    consts = SeparationConstants(c=0.5, d=2.0, k=1.5)
    for n in (2, 5, 10, 20):
        expected = lambda2_lower_bound(n, consts) + gap_lower_bound(n, consts)
        assert lambda1_lower_bound(n, consts) == pytest.approx(expected, rel=1e-9)


def test_gap_floor():
    """Test 1 / (d n^(k-1))."""
    assert gap_lower_bound(10, UNIT) == 1.0
    assert gap_lower_bound(10, SeparationConstants(d=2.0, k=2.0)) == 0.05


def test_floor_underflow_is_numerical_error():
    """Test that n / (c 2^n) underflowing to zero is reported."""
    with pytest.raises(NumericalError):
        lambda2_lower_bound(1100, UNIT)


def test_separated_instance():
    """Test n = 10, lambda1 = 1025, lambda2 = 1024."""
    report = check_inequality_system(10, 1025.0, 1024.0, UNIT)

    assert report.ordering
    assert report.ineq_varqite
    assert report.ineq_qipa
    assert report.cond_I and report.cond_II and report.cond_III
    assert report.separated
    assert report.kappa_qipa2 == 10.0
    assert report.kappa_varqite >= 2**10


def test_large_ratio_fails_varqite_inequality():
    """Test n = 10, lambda1 = 4, lambda2 = 1."""
    report = check_inequality_system(10, 4.0, 1.0, UNIT)

    assert not report.ineq_varqite
    assert not report.cond_II
    assert not report.separated


def test_triangle_not_separated():
    """Test the triangle spectrum (n = 3, lambda1 = 5, lambda2 = 1)."""
    assert not check_inequality_system(3, 5.0, 1.0, UNIT).separated


def test_unordered_levels_report_ordering_failure():
    """Test that lambda1 <= lambda2 fails every condition."""
    report = check_inequality_system(10, 2.0, 2.0, UNIT)

    assert not report.ordering
    assert not report.separated
    assert report.kappa_varqite is None


def test_non_positive_lambda2_rejected():
    """Test the lambda2 > 0 precondition."""
    with pytest.raises(InputError):
        check_inequality_system(10, 2.0, 0.0, UNIT)


def test_minimal_upscale_alpha():
    """Test alpha for gap 0.001 at n = 10, k = 2."""
    consts = SeparationConstants(k=2.0)

    assert minimal_upscale_alpha(0.001, 10, consts) == pytest.approx(100.0, rel=1e-12)
    assert minimal_upscale_alpha(4.0, 3, UNIT) == 1.0


def test_upscale_lands_on_gap_floor():
    """Test that the recommended alpha satisfies the gap condition."""
    analysis = analyze_spectrum(10, 1.001, 1.0, UNIT)

    assert not analysis.report.separated
    assert analysis.recommended_alpha == pytest.approx(1000.0, rel=1e-9)
    assert analysis.report_after_upscale.cond_I
    assert analysis.report_after_upscale.separated
    assert analysis.bounds_after_upscale.kappa_qipa2 == pytest.approx(10.0)


def test_analyze_triangle_needs_no_upscale():
    """Test that a gap above the floor keeps alpha = 1."""
    analysis = analyze_spectrum(3, 5.0, 1.0, UNIT)

    assert analysis.recommended_alpha == 1.0
    assert analysis.report_after_upscale == analysis.report


def test_divergence_probe_monotone_from_two():
    """Test that L(1) = L(2) and L grows strictly from n = 2."""
    probe = divergence_probe(UNIT, range(1, 61))

    assert probe.rows[0].lambda2_bound == probe.rows[1].lambda2_bound
    assert probe.monotone_from == 2


def test_divergence_probe_doubling_ratio():
    """Test that L(2n)/L(n) exceeds n at n = 8, 16, 24."""
    probe = divergence_probe(UNIT, range(1, 61))
    rows = {row.n: row for row in probe.rows}

    for n in (8, 16, 24):
        assert rows[n].doubling_ratio >= n


def test_divergence_probe_rejects_bad_ranges():
    """Test empty and non-increasing n lists."""
    with pytest.raises(InputError):
        divergence_probe(UNIT, [])
    with pytest.raises(InputError):
        divergence_probe(UNIT, [3, 2])


def test_inequalities_imply_lambda2_floor():
    """Test on random instances that both inequalities force lambda2 >= L(n)."""
    rng = np.random.default_rng(1234)
    consts = SeparationConstants(c=1.0, d=1.0, k=2.0)
    checked = 0
    for _ in range(2000):
        n = int(rng.integers(2, 25))
        floor = lambda2_lower_bound(n, consts)
        lambda2 = floor * float(rng.uniform(0.25, 4.0))
        gap = gap_lower_bound(n, consts) * float(rng.uniform(0.25, 4.0))
        report = check_inequality_system(n, lambda2 + gap, lambda2, consts)
        if report.ineq_varqite and report.ineq_qipa:
            checked += 1
            assert report.cond_III
            assert report.kappa_varqite >= consts.c * 2**n * (1 - 1e-9)
            assert report.kappa_qipa2 <= consts.d * n**consts.k * (1 + 1e-9)
        assert report.separated == (
            report.ineq_varqite
            and report.ineq_qipa
            and report.cond_I
            and report.cond_II
            and report.cond_III
        )
    assert checked > 0
