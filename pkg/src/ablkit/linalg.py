"""Complex linear algebra for small Hilbert spaces.

Kets, projectors, and projective decompositions of observables (spectral
resolutions of the identity), plus the primitives every probability rule in
this toolkit is built from: inner products, operator application, and traces
of operator products.  Everything is validated eagerly at construction time
and immutable afterwards, so instances are safe to share between threads.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

from .errors import DegenerateSpanError, DimensionMismatchError, ValidationError

#: Tolerance for algebraic identities on exact inputs (sized for dims <= 16).
ALG_TOL = 1e-10
#: Tolerance on ket normalization, |norm^2 - 1|.
NORM_TOL = 1e-9
#: Linear-dependence cutoff on residual norms in Gram-Schmidt.
SPAN_TOL = 1e-8


def _as_vector(values) -> np.ndarray:
    arr = np.asarray(values, dtype=np.complex128)
    if arr.ndim != 1 or arr.size == 0:
        raise ValidationError(f"expected a nonempty 1-d amplitude vector, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValidationError("amplitudes must be finite")
    return arr


def _max_abs(values: np.ndarray) -> float:
    # np.allclose costs ~100us per call; constructors are hot enough to care.
    return float(np.max(np.abs(values)))


def operator_matrix(op, *, dim: int | None = None) -> np.ndarray:
    """Return the square complex matrix behind ``op``.

    Accepts a :class:`Projector` or anything ``np.asarray`` turns into a
    square matrix.  ``dim``, when given, is enforced.
    """
    m = op.matrix if isinstance(op, Projector) else np.asarray(op, dtype=np.complex128)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValidationError(f"expected a square operator matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ValidationError("operator entries must be finite")
    if dim is not None and m.shape[0] != dim:
        raise DimensionMismatchError(f"operator dimension {m.shape[0]} != expected {dim}")
    return m


@dataclass(frozen=True, eq=False)
class Ket:
    """A normalized state vector.

    Amplitudes are stored as a read-only complex128 array; ``norm^2`` must be
    1 within :data:`NORM_TOL`.  Use :meth:`normalized` to build one from an
    unnormalized vector.
    """

    amplitudes: np.ndarray

    def __post_init__(self):
        arr = _as_vector(self.amplitudes).copy()
        norm_sq = float(np.vdot(arr, arr).real)
        if abs(norm_sq - 1.0) > NORM_TOL:
            raise ValidationError(f"ket norm^2 = {norm_sq!r}, expected 1 within {NORM_TOL}")
        arr.setflags(write=False)
        object.__setattr__(self, "amplitudes", arr)

    @property
    def dim(self) -> int:
        return self.amplitudes.size

    @classmethod
    def normalized(cls, values) -> "Ket":
        """Scale ``values`` to unit norm.  Rejects (near-)zero vectors."""
        arr = _as_vector(values)
        norm = float(np.linalg.norm(arr))
        if norm <= SPAN_TOL:
            raise ValidationError("cannot normalize a vector of (near-)zero norm")
        return cls(arr / norm)

    def projector(self) -> "Projector":
        """The rank-1 projector onto this state."""
        return Projector(np.outer(self.amplitudes, self.amplitudes.conj()), rank=1)


@dataclass(frozen=True, eq=False)
class Projector:
    """An orthogonal projector, validated as Hermitian and idempotent.

    ``rank`` is inferred from the trace when omitted; the zero matrix is
    rejected (rank must be positive).
    """

    matrix: np.ndarray
    rank: int | None = None

    def __post_init__(self):
        m = operator_matrix(self.matrix).copy()
        if _max_abs(m - m.conj().T) > ALG_TOL:
            raise ValidationError("projector matrix is not Hermitian")
        if _max_abs(m @ m - m) > ALG_TOL:
            raise ValidationError("projector matrix is not idempotent")
        trace = float(np.trace(m).real)
        rank = int(round(trace)) if self.rank is None else int(self.rank)
        if rank <= 0:
            raise ValidationError("projector rank must be a positive integer")
        if abs(trace - rank) > ALG_TOL * m.shape[0]:
            raise ValidationError(f"projector trace {trace!r} does not match rank {rank}")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)
        object.__setattr__(self, "rank", rank)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def complement(self) -> "Projector":
        """Projector onto the orthogonal complement (must itself be nonzero)."""
        if self.rank >= self.dim:
            raise ValidationError("complement of a full-rank projector is the zero projector")
        return Projector(np.eye(self.dim) - self.matrix, rank=self.dim - self.rank)


class Branch(NamedTuple):
    eigenvalue: float
    projector: Projector


@dataclass(frozen=True, eq=False)
class ObservableDecomposition:
    """A projective decomposition of an observable.

    An ordered tuple of ``(eigenvalue, projector)`` branches with pairwise
    distinct eigenvalue labels, mutually orthogonal projectors, and
    completeness: the branch projectors sum to the identity.
    """

    branches: tuple[Branch, ...]

    def __post_init__(self):
        branches = tuple(Branch(float(e), p) for e, p in self.branches)
        if not branches:
            raise ValidationError("a decomposition needs at least one branch")
        dim = branches[0].projector.dim
        for _, proj in branches:
            if proj.dim != dim:
                raise DimensionMismatchError("branch projectors differ in dimension")
        labels = [e for e, _ in branches]
        if len(set(labels)) != len(labels):
            raise ValidationError(f"eigenvalue labels must be pairwise distinct, got {labels}")
        total = np.zeros((dim, dim), dtype=np.complex128)
        for _, proj in branches:
            total += proj.matrix
        total_err = total.copy()
        np.fill_diagonal(total_err, total_err.diagonal() - 1.0)
        if _max_abs(total_err) > ALG_TOL * dim:
            raise ValidationError("branch projectors do not sum to the identity")
        for i in range(len(branches)):
            for j in range(i + 1, len(branches)):
                prod = branches[i].projector.matrix @ branches[j].projector.matrix
                if _max_abs(prod) > ALG_TOL:
                    raise ValidationError(f"branch projectors {i} and {j} are not orthogonal")
        object.__setattr__(self, "branches", branches)

    @property
    def dim(self) -> int:
        return self.branches[0].projector.dim

    def __len__(self) -> int:
        return len(self.branches)

    def __iter__(self):
        return iter(self.branches)

    @property
    def eigenvalues(self) -> tuple[float, ...]:
        return tuple(e for e, _ in self.branches)

    def projector(self, branch: int) -> Projector:
        return self.branches[branch].projector

    def matrix(self, branch: int) -> np.ndarray:
        return self.branches[branch].projector.matrix

    @classmethod
    def from_projectors(cls, projectors: Sequence[Projector],
                        eigenvalues: Sequence[float] | None = None) -> "ObservableDecomposition":
        if eigenvalues is None:
            eigenvalues = [float(k) for k in range(len(projectors))]
        return cls(tuple(Branch(float(e), p) for e, p in zip(eigenvalues, projectors)))

    @classmethod
    def from_eigenbasis(cls, kets: Sequence[Ket],
                        eigenvalues: Sequence[float] | None = None) -> "ObservableDecomposition":
        """Nondegenerate decomposition with one rank-1 branch per basis ket."""
        return cls.from_projectors([k.projector() for k in kets], eigenvalues)


def inner(x: Ket, y: Ket) -> complex:
    """Inner product <x|y>, conjugate-linear in the first argument."""
    if x.dim != y.dim:
        raise DimensionMismatchError(f"kets of dimension {x.dim} and {y.dim}")
    return complex(np.vdot(x.amplitudes, y.amplitudes))


def apply_operator(op, state: Ket) -> np.ndarray:
    """Apply an operator to a ket.  The result is a plain (generally
    unnormalized) amplitude vector, not a Ket."""
    m = operator_matrix(op, dim=state.dim)
    return m @ state.amplitudes


def trace_product(ops: Sequence) -> complex:
    """Trace of the ordered product of operators.

    Each entry may be a :class:`Projector` or a raw square matrix; all must
    share one dimension.
    """
    if len(ops) == 0:
        raise ValidationError("trace_product needs at least one operator")
    mats = [operator_matrix(op) for op in ops]
    dim = mats[0].shape[0]
    for m in mats[1:]:
        if m.shape[0] != dim:
            raise DimensionMismatchError("operators differ in dimension")
    acc = mats[0]
    for m in mats[1:]:
        acc = acc @ m
    return complex(np.trace(acc))


def orthonormalize(vectors: Sequence[np.ndarray], *, tol: float = SPAN_TOL) -> list[np.ndarray]:
    """Modified Gram-Schmidt orthonormalization.

    Raises :class:`DegenerateSpanError` when a residual norm falls to ``tol``
    or below, i.e. the inputs are (numerically) linearly dependent.
    """
    basis: list[np.ndarray] = []
    for k, v in enumerate(vectors):
        w = np.array(v, dtype=np.complex128)
        for q in basis:
            w = w - q * np.vdot(q, w)
        norm = float(np.linalg.norm(w))
        if norm <= tol:
            raise DegenerateSpanError(
                f"vector {k} is linearly dependent on its predecessors (residual norm {norm:.3e})")
        basis.append(w / norm)
    return basis


def projector_from_kets(kets: Sequence[Ket]) -> Projector:
    """Projector onto the span of the given kets (need not be orthogonal)."""
    if not kets:
        raise ValidationError("projector_from_kets needs at least one ket")
    dim = kets[0].dim
    for k in kets:
        if k.dim != dim:
            raise DimensionMismatchError("kets differ in dimension")
    basis = orthonormalize([k.amplitudes for k in kets])
    m = np.zeros((dim, dim), dtype=np.complex128)
    for q in basis:
        m += np.outer(q, q.conj())
    return Projector(m, rank=len(basis))


def complete_basis(vectors: Sequence[np.ndarray], dim: int) -> list[np.ndarray]:
    """Extend vectors to a full orthonormal basis of a ``dim``-dimensional space.

    Deterministic: candidates are the canonical basis vectors taken in index
    order, keeping each one whose Gram-Schmidt residual survives the
    dependence cutoff.
    """
    basis = orthonormalize(vectors) if len(vectors) else []
    if len(basis) > dim:
        raise ValidationError(f"{len(basis)} orthonormal vectors cannot fit in dimension {dim}")
    for k in range(dim):
        if len(basis) == dim:
            break
        candidate = np.zeros(dim, dtype=np.complex128)
        candidate[k] = 1.0
        w = candidate
        for q in basis:
            w = w - q * np.vdot(q, w)
        norm = float(np.linalg.norm(w))
        if norm > SPAN_TOL:
            basis.append(w / norm)
    if len(basis) != dim:
        raise ValidationError("failed to complete an orthonormal basis")
    return basis


def basis_containing(ket: Ket) -> ObservableDecomposition:
    """A nondegenerate basis observable whose branch 0 projects onto ``ket``.

    The remaining directions come from :func:`complete_basis`, so the result
    is deterministic for a given input.
    """
    vectors = complete_basis([ket.amplitudes], ket.dim)
    return ObservableDecomposition.from_eigenbasis([Ket(v) for v in vectors])
