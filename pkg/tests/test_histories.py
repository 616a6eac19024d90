import numpy as np
import pytest

from ablkit.abl import PrePostContext, abl_distribution
from ablkit.errors import DimensionMismatchError, TooManyBranchesError, ValidationError
from ablkit.histories import (
    ConsistencyReport,
    HistoryFamily,
    decoherence_functional,
    decoherence_matrix,
    disturbance_check,
    enumerate_coarse_grainings,
    is_consistent,
)
from ablkit.linalg import (
    Ket,
    ObservableDecomposition,
    Projector,
    basis_containing,
    inner,
    projector_from_kets,
)
from ablkit.sampling import random_basis, random_ket
from ablkit.scenarios import three_box

from conftest import make_context

SCENARIO = three_box()
CTX = SCENARIO.context
# the three families around the three-box context
FAMILY_BOXES = HistoryFamily.from_context(CTX, SCENARIO.observables["C"])
FAMILY_BOX1 = HistoryFamily.from_context(CTX, SCENARIO.observables["Cprime"])
FAMILY_BOX2 = HistoryFamily.from_context(CTX, SCENARIO.observables["Cdprime"])


def test_family_validates_ranks():
    with pytest.raises(ValidationError):
        HistoryFamily(projector_from_kets([CTX.preselection, Ket.normalized([-1, 1, 0])]),
                      SCENARIO.observables["C"],
                      Projector(CTX.final_projector, rank=1))


def test_family_validates_dimensions():
    two_dim = ObservableDecomposition.from_eigenbasis(
        [Ket.normalized([1, 0]), Ket.normalized([0, 1])])
    with pytest.raises(DimensionMismatchError):
        HistoryFamily(Projector(CTX.initial_projector, rank=1), two_dim,
                      Projector(CTX.final_projector, rank=1))


def test_decoherence_functional_frozen_values():
    # fine-grained boxes: every off-diagonal pair interferes at magnitude 1/9
    assert decoherence_functional(FAMILY_BOXES, 0, 1) == pytest.approx(1 / 9, abs=1e-12)
    assert decoherence_functional(FAMILY_BOXES, 0, 2) == pytest.approx(-1 / 9, abs=1e-12)
    assert decoherence_functional(FAMILY_BOXES, 1, 2) == pytest.approx(-1 / 9, abs=1e-12)
    # merging boxes 2 and 3 kills the interference
    assert decoherence_functional(FAMILY_BOX1, 0, 1) == pytest.approx(0.0, abs=1e-12)
    assert decoherence_functional(FAMILY_BOX2, 0, 1) == pytest.approx(0.0, abs=1e-12)


def test_decoherence_functional_index_checks():
    with pytest.raises(IndexError):
        decoherence_functional(FAMILY_BOXES, 0, 3)


def test_decoherence_diagonal_is_joint_probability():
    d = decoherence_matrix(FAMILY_BOXES)
    np.testing.assert_allclose(np.diag(d), [1 / 9] * 3, atol=1e-12)


def test_consistency_verdicts_frozen():
    report = is_consistent(FAMILY_BOXES)
    assert isinstance(report, ConsistencyReport)
    assert not report.consistent
    assert report.max_violation == pytest.approx(1 / 9, abs=1e-10)
    assert is_consistent(FAMILY_BOX1).consistent
    assert is_consistent(FAMILY_BOX2).consistent


def test_span_family_is_consistent():
    # {P onto span(a, b), complement} never interferes
    span = projector_from_kets([CTX.preselection, CTX.postselection])
    family = HistoryFamily(
        Projector(CTX.initial_projector, rank=1),
        ObservableDecomposition.from_projectors([span, span.complement()]),
        Projector(CTX.final_projector, rank=1))
    report = is_consistent(family)
    assert report.consistent
    assert disturbance_check(family).holds


def test_conjugate_symmetry_random():
    rng = np.random.default_rng(43)
    for trial in range(100):
        dim = 2 + trial % 4
        ctx = make_context(rng, dim)
        obs = ObservableDecomposition.from_eigenbasis(random_basis(rng, dim))
        d = decoherence_matrix(HistoryFamily.from_context(ctx, obs))
        np.testing.assert_allclose(d, d.conj().T, atol=1e-10)


def test_matrix_sums_to_overlap_random():
    rng = np.random.default_rng(47)
    for trial in range(100):
        dim = 2 + trial % 4
        ctx = make_context(rng, dim)
        obs = ObservableDecomposition.from_eigenbasis(random_basis(rng, dim))
        d = decoherence_matrix(HistoryFamily.from_context(ctx, obs))
        overlap = abs(inner(ctx.postselection, ctx.preselection)) ** 2
        assert complex(d.sum()) == pytest.approx(overlap, abs=1e-10)


def test_selection_bases_always_consistent():
    rng = np.random.default_rng(53)
    for trial in range(100):
        dim = 2 + trial % 4
        ctx = make_context(rng, dim)
        for basis_of in (ctx.preselection, ctx.postselection):
            family = HistoryFamily.from_context(ctx, basis_containing(basis_of))
            assert is_consistent(family).consistent
            assert disturbance_check(family).holds


def test_medium_versus_weak_criterion():
    # purely imaginary interference: weakly consistent, not medium
    ctx = PrePostContext(Ket.normalized([1, 1]), Ket.normalized([1, 1j]))
    z_basis = ObservableDecomposition.from_eigenbasis(
        [Ket.normalized([1, 0]), Ket.normalized([0, 1])])
    family = HistoryFamily.from_context(ctx, z_basis)
    d01 = decoherence_functional(family, 0, 1)
    assert d01.real == pytest.approx(0.0, abs=1e-12)
    assert abs(d01.imag) == pytest.approx(0.25, abs=1e-12)
    medium = is_consistent(family, criterion="medium")
    weak = is_consistent(family, criterion="weak")
    assert not medium.consistent and medium.max_violation == pytest.approx(0.25, abs=1e-10)
    assert weak.consistent
    assert weak.criterion == "weak"


def test_unknown_criterion_rejected():
    with pytest.raises(ValueError):
        is_consistent(FAMILY_BOXES, criterion="strong")


def test_tolerance_threshold_is_respected():
    assert is_consistent(FAMILY_BOXES, tol=0.2).consistent
    # rounding residue of order 1e-18 trips a zero tolerance
    assert not is_consistent(FAMILY_BOX1, tol=0.0).consistent
    # single-branch family trivially consistent at any tolerance
    trivial = HistoryFamily(
        Projector(CTX.initial_projector, rank=1),
        ObservableDecomposition.from_projectors([Projector(np.eye(3))]),
        Projector(CTX.final_projector, rank=1))
    report = is_consistent(trivial, tol=0.0)
    assert report.consistent and report.max_violation == 0.0


def test_disturbance_check_frozen():
    check = disturbance_check(FAMILY_BOXES)
    assert check.undisturbed == pytest.approx(1 / 9, abs=1e-12)
    assert check.disturbed == pytest.approx(1 / 3, abs=1e-12)
    assert not check.holds
    for family in (FAMILY_BOX1, FAMILY_BOX2):
        check = disturbance_check(family)
        assert check.undisturbed == pytest.approx(1 / 9, abs=1e-12)
        assert check.disturbed == pytest.approx(1 / 9, abs=1e-12)
        assert check.holds


def test_consistent_families_leave_postselection_undisturbed():
    """One-directional linkage: a consistent verdict implies the disturbance
    identity.  Inconsistent families may or may not satisfy it."""
    rng = np.random.default_rng(59)
    checked_consistent = 0
    for trial in range(500):
        dim = 2 + trial % 3
        ctx = make_context(rng, dim)
        kind = trial % 4
        if kind == 0:
            obs = ObservableDecomposition.from_eigenbasis(random_basis(rng, dim))
        elif kind == 1:
            obs = basis_containing(ctx.preselection)
        elif kind == 2:
            obs = basis_containing(ctx.postselection)
        else:
            fine = ObservableDecomposition.from_eigenbasis(random_basis(rng, dim))
            grainings = enumerate_coarse_grainings(fine)
            obs = grainings[int(rng.integers(len(grainings)))]
        family = HistoryFamily.from_context(ctx, obs)
        if is_consistent(family).consistent:
            checked_consistent += 1
            assert disturbance_check(family).holds
    # structured draws guarantee the implication was exercised
    assert checked_consistent > 200


def test_enumerate_counts_match_bell_numbers():
    for n, bell in ((1, 1), (2, 2), (3, 5), (4, 15)):
        base = ObservableDecomposition.from_eigenbasis(
            [Ket(v) for v in np.eye(n, dtype=complex)])
        grainings = enumerate_coarse_grainings(base)
        assert len(grainings) == bell


def test_enumerate_refuses_above_cap():
    base = ObservableDecomposition.from_eigenbasis(
        [Ket(v) for v in np.eye(7, dtype=complex)])
    with pytest.raises(TooManyBranchesError):
        enumerate_coarse_grainings(base)


def test_enumerate_labels_are_consecutive_integers():
    base = ObservableDecomposition.from_eigenbasis(
        [Ket(v) for v in np.eye(3, dtype=complex)], eigenvalues=[5.0, -2.0, 0.5])
    for grained in enumerate_coarse_grainings(base):
        assert grained.eigenvalues == tuple(float(k) for k in range(len(grained)))


def test_enumerate_includes_both_box_groupings(box_scenario):
    base = box_scenario.observables["C"]
    grainings = enumerate_coarse_grainings(base)

    def found(target):
        for grained in grainings:
            if len(grained) != len(target):
                continue
            if all(any(np.allclose(grained.matrix(i), target.matrix(j), atol=1e-10)
                       for i in range(len(grained))) for j in range(len(target))):
                return True
        return False

    assert found(box_scenario.observables["Cprime"])
    assert found(box_scenario.observables["Cdprime"])
    # the trivial single-branch graining is present too
    assert any(len(g) == 1 for g in grainings)


def test_coarse_graining_verdicts_three_box():
    # merging boxes {1,2} interferes even more strongly than the fine graining
    base = SCENARIO.observables["C"]
    verdicts = {}
    for grained in enumerate_coarse_grainings(base):
        family = HistoryFamily.from_context(CTX, grained)
        key = tuple(sorted(p.rank for _, p in grained))
        verdicts.setdefault(key, []).append(is_consistent(family))
    assert all(r.consistent for r in verdicts[(3,)])
    fine = verdicts[(1, 1, 1)]
    assert len(fine) == 1 and not fine[0].consistent
    two_block = verdicts[(1, 2)]
    assert len(two_block) == 3
    assert sum(r.consistent for r in two_block) == 2
    worst = max(r.max_violation for r in two_block)
    assert worst == pytest.approx(2 / 9, abs=1e-10)
