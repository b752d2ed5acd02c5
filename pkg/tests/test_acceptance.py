"""Acceptance gate: one test per criterion, each printing its pass line.

Runtime limits are asserted where stated; everything else is exact /
zero-tolerance inside the checks themselves.
"""
import pytest

from hofa import acceptance


def _run(check, limit=None):
    result = check(quick=False)
    print(f"[{'PASS' if result.ok else 'FAIL'}] {result.name} ({result.elapsed:.2f}s) {result.detail}")
    assert result.ok, result.detail
    if limit is not None:
        assert result.elapsed < limit, f"{result.name} took {result.elapsed:.2f}s >= {limit}s"


def test_criterion_1_counting_identity():
    _run(acceptance.check_counting, limit=10.0)


def test_criterion_2_integration_exactness():
    _run(acceptance.check_integration, limit=60.0)


def test_criterion_3_total_derivative_membership():
    _run(acceptance.check_membership)


def test_criterion_4_cauchy_schwarz_defect():
    _run(acceptance.check_gt_defect, limit=120.0)


def test_criterion_5_codimension_ledgers():
    _run(acceptance.check_ledgers)


def test_criterion_6_symmetrization_certificates():
    _run(acceptance.check_symmetrization)


def test_criterion_7_rank_consistency():
    _run(acceptance.check_rank, limit=600.0)


def test_criterion_8_end_to_end_pipeline():
    _run(acceptance.check_pipeline, limit=600.0)


def test_criterion_9_perturbation_robustness():
    _run(acceptance.check_noise, limit=300.0)


def test_criterion_10_performance():
    _run(acceptance.check_performance)
