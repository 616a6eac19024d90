"""Probabilities for measurements between a preselection and a postselection.

The ABL rule gives the probability of finding outcome ``c_i`` in an
intermediate projective measurement of ``C = sum_i c_i P_i``, conditioned on
preparing ``|a>`` beforehand and successfully postselecting ``|b>``
afterwards:

    P(c_i | a, b) = Tr(P_b P_i P_a P_i) / sum_j Tr(P_b P_j P_a P_j)

The numerator terms are the joint probabilities "outcome i, then
postselection succeeds"; the denominator is the total probability that the
postselection succeeds at all, given that C was measured.  This module also
covers the ordinary Born distribution, the Lüders update after a projective
outcome, and the postselection probability as disturbed by an intervening
measurement.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatchError, ImpossiblePostselectionError, ZeroProjectionError
from .linalg import (
    Ket,
    ObservableDecomposition,
    apply_operator,
    operator_matrix,
    trace_product,
)

#: Denominators at or below this threshold count as zero.
DIV_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class PrePostContext:
    """A preselected and postselected experiment: prepare ``preselection`` at
    the initial time, accept the run only if a final measurement finds
    ``postselection``."""

    preselection: Ket
    postselection: Ket

    def __post_init__(self):
        if self.preselection.dim != self.postselection.dim:
            raise DimensionMismatchError(
                f"preselection dim {self.preselection.dim} != postselection dim {self.postselection.dim}")
        p_init = np.outer(self.preselection.amplitudes, self.preselection.amplitudes.conj())
        p_final = np.outer(self.postselection.amplitudes, self.postselection.amplitudes.conj())
        p_init.setflags(write=False)
        p_final.setflags(write=False)
        object.__setattr__(self, "_initial", p_init)
        object.__setattr__(self, "_final", p_final)

    @property
    def dim(self) -> int:
        return self.preselection.dim

    @property
    def initial_projector(self) -> np.ndarray:
        """Rank-1 projector matrix onto the preselected state."""
        return self._initial

    @property
    def final_projector(self) -> np.ndarray:
        """Rank-1 projector matrix onto the postselected state."""
        return self._final


@dataclass(frozen=True, eq=False)
class AblDistribution:
    """ABL conditional outcome probabilities together with the raw
    denominator (the postselection probability if the observable is
    measured), kept so callers can see how close the conditioning came to
    being impossible."""

    context: PrePostContext
    observable: ObservableDecomposition
    probabilities: np.ndarray
    denominator: float


def born_distribution(state: Ket, observable: ObservableDecomposition) -> np.ndarray:
    """Born outcome probabilities for measuring ``observable`` on ``state``."""
    if state.dim != observable.dim:
        raise DimensionMismatchError(f"state dim {state.dim} != observable dim {observable.dim}")
    amps = state.amplitudes
    vals = [np.vdot(amps, observable.matrix(j) @ amps).real for j in range(len(observable))]
    return np.maximum(np.asarray(vals, dtype=np.float64), 0.0)


def _joint(p_final: np.ndarray, p_branch: np.ndarray, p_initial: np.ndarray) -> float:
    # Tr(P_b P_i P_a P_i); real and nonnegative up to rounding.
    return max(trace_product([p_final, p_branch, p_initial, p_branch]).real, 0.0)


def joint_probability(ctx: PrePostContext, observable: ObservableDecomposition, branch: int) -> float:
    """Probability of outcome ``branch`` AND a successful postselection,
    given preparation in ``ctx.preselection`` and a measurement of
    ``observable`` in between."""
    if ctx.dim != observable.dim:
        raise DimensionMismatchError(f"context dim {ctx.dim} != observable dim {observable.dim}")
    if not 0 <= branch < len(observable):
        raise IndexError(f"branch {branch} out of range for {len(observable)} branches")
    return _joint(ctx.final_projector, observable.matrix(branch), ctx.initial_projector)


def abl_probabilities(initial, observable: ObservableDecomposition, final,
                      *, div_tol: float = DIV_TOL) -> tuple[np.ndarray, float]:
    """ABL conditional probabilities in projector form.

    ``initial`` and ``final`` are projectors (or matrices) and may have rank
    above 1; the rank-1 case reduces to conditioning on pure pre- and
    postselected states.  Returns ``(probabilities, denominator)``.

    Raises :class:`ImpossiblePostselectionError` when the denominator, the
    probability that the postselection succeeds at all, is ``div_tol`` or
    below.
    """
    p_init = operator_matrix(initial, dim=observable.dim)
    p_final = operator_matrix(final, dim=observable.dim)
    joints = np.array([_joint(p_final, observable.matrix(j), p_init)
                       for j in range(len(observable))], dtype=np.float64)
    denominator = float(joints.sum())
    if denominator <= div_tol:
        raise ImpossiblePostselectionError(
            f"postselection probability {denominator!r} is below the division cutoff {div_tol}")
    return joints / denominator, denominator


def abl_distribution(ctx: PrePostContext, observable: ObservableDecomposition) -> AblDistribution:
    """The ABL distribution of ``observable`` outcomes in a pre- and
    postselected context."""
    if ctx.dim != observable.dim:
        raise DimensionMismatchError(f"context dim {ctx.dim} != observable dim {observable.dim}")
    probs, denominator = abl_probabilities(ctx.initial_projector, observable, ctx.final_projector)
    probs.setflags(write=False)
    return AblDistribution(ctx, observable, probs, denominator)


def luders_update(state: Ket, projector) -> Ket:
    """State after a projective outcome: project and renormalize."""
    projected = apply_operator(projector, state)
    norm = float(np.linalg.norm(projected))
    if norm <= DIV_TOL:
        raise ZeroProjectionError("state is orthogonal to the outcome subspace")
    return Ket(projected / norm)


def disturbed_final_probability(ctx: PrePostContext, observable: ObservableDecomposition) -> float:
    """Probability that the postselection succeeds when ``observable`` is
    measured (and its outcome discarded) between the two selections.

    This is exactly the sum of the joint probabilities over branches; with no
    intervening measurement the postselection probability would instead be
    ``|<b|a>|^2``.
    """
    if ctx.dim != observable.dim:
        raise DimensionMismatchError(f"context dim {ctx.dim} != observable dim {observable.dim}")
    return sum(joint_probability(ctx, observable, i) for i in range(len(observable)))
