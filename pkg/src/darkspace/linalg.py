"""Dense complex matrix kernel: eigendecompositions, tensor products, isometries.

Everything downstream (channels, numerical ranges, code finders) sits on the
handful of primitives in this module.  Matrices are plain ``numpy`` arrays of
``complex128``; eigensolves are delegated to LAPACK via ``numpy.linalg`` and
wrapped with the validation, ordering and phase conventions the rest of the
package relies on:

* Hermitian eigenvalues are returned ascending and real.
* Unitary eigenvalues are sorted by principal phase in ``[0, 2*pi)``.
* Every eigenvector has its first significantly nonzero component rotated to
  be real and positive, so repeated runs produce identical bases.

Residuals are always measured entrywise (max-norm) against an absolute
tolerance; :data:`DEFAULT_TOL` is used wherever the caller does not say
otherwise.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (
    NoConvergenceError,
    NotCommutingError,
    NotHermitianError,
    NotUnitaryError,
    ShapeMismatchError,
)

#: Default absolute tolerance on entrywise (max-norm) residuals.
DEFAULT_TOL = 1e-10

#: Eigenvalues of a compressed Hermitian closer than this are treated as one
#: eigenspace when refining shared eigenbases.
CLUSTER_TOL = 1e-8


def max_abs(a) -> float:
    """Largest absolute entry of an array (0.0 for empty input)."""
    a = np.asarray(a)
    if a.size == 0:
        return 0.0
    return float(np.max(np.abs(a)))


def as_complex_matrix(obj, name: str = "matrix") -> np.ndarray:
    """Coerce input to a 2-D complex128 array, rejecting non-finite entries."""
    a = np.asarray(obj, dtype=complex)
    if a.ndim != 2:
        raise ShapeMismatchError(f"{name} must be 2-D, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ShapeMismatchError(f"{name} contains non-finite entries")
    return a


def require_square(obj, name: str = "matrix") -> np.ndarray:
    """Like :func:`as_complex_matrix` but additionally requires a square shape."""
    a = as_complex_matrix(obj, name)
    if a.shape[0] != a.shape[1]:
        raise ShapeMismatchError(f"{name} must be square, got shape {a.shape}")
    return a


def adjoint(a) -> np.ndarray:
    """Conjugate transpose."""
    return as_complex_matrix(a).conj().T


def tensor(a, b) -> np.ndarray:
    """Kronecker product with row-major blocks: ``out[i*p+k, j*q+l] = a[i,j] * b[k,l]``."""
    return np.kron(as_complex_matrix(a, "a"), as_complex_matrix(b, "b"))


def _fix_column_phases(vectors: np.ndarray) -> np.ndarray:
    """Rotate each column so its first component of significant size is real > 0."""
    out = np.array(vectors, dtype=complex)
    for j in range(out.shape[1]):
        col = out[:, j]
        idx = np.flatnonzero(np.abs(col) > 1e-8)
        if idx.size == 0:  # pragma: no cover - zero columns never reach here
            continue
        pivot = col[idx[0]]
        out[:, j] = col * (pivot.conjugate() / abs(pivot))
    return out


@dataclass(frozen=True)
class EigenDecomposition:
    """Eigenvalues (``values``) and orthonormal eigenvectors (columns of ``vectors``).

    ``ordering`` records the sort convention: ``"ascending"`` for real
    Hermitian spectra, ``"phase"`` for unitary spectra sorted by principal
    phase in ``[0, 2*pi)``.
    """

    values: np.ndarray
    vectors: np.ndarray
    ordering: str

    def __post_init__(self):
        self.values.setflags(write=False)
        self.vectors.setflags(write=False)


def eig_hermitian(matrix, tol: float = DEFAULT_TOL) -> EigenDecomposition:
    """Eigendecomposition of a Hermitian matrix.

    Parameters
    ----------
    matrix : array_like
        Square matrix with ``max |T - T^dag| <= tol``.
    tol : float
        Absolute gate on the hermiticity residual, and the budget for the
        reconstruction check ``max |V L V^dag - T| <= 10 * tol * max|T|``.

    Returns
    -------
    EigenDecomposition
        Real eigenvalues ascending, phase-fixed orthonormal eigenvectors.

    Raises
    ------
    NotHermitianError
        If the hermiticity gate fails.
    NoConvergenceError
        If LAPACK fails or the reconstruction residual exceeds its budget.
    """
    t = require_square(matrix)
    if max_abs(t - t.conj().T) > tol:
        raise NotHermitianError(
            f"hermiticity residual {max_abs(t - t.conj().T):.3e} exceeds tol {tol:.3e}"
        )
    h = (t + t.conj().T) / 2.0
    try:
        values, vectors = np.linalg.eigh(h)
    except np.linalg.LinAlgError as exc:
        raise NoConvergenceError(str(exc)) from exc
    vectors = _fix_column_phases(vectors)
    residual = max_abs(vectors @ np.diag(values) @ vectors.conj().T - t)
    if residual > 10.0 * tol * max(max_abs(t), 1e-300):
        raise NoConvergenceError(
            f"reconstruction residual {residual:.3e} exceeds 10*tol*|T|"
        )
    return EigenDecomposition(values=values.astype(float), vectors=vectors, ordering="ascending")


def _canonical_phases(values: np.ndarray, snap: float = 1e-9) -> np.ndarray:
    """Principal phases in [0, 2*pi), with phases within ``snap`` of 2*pi folded to 0-."""
    phases = np.mod(np.angle(values), 2.0 * np.pi)
    phases[phases > 2.0 * np.pi - snap] -= 2.0 * np.pi
    return phases


def eig_unitary(matrix, tol: float = DEFAULT_TOL) -> EigenDecomposition:
    """Eigendecomposition of a unitary matrix with phase-sorted spectrum.

    The matrix is split into the commuting Hermitian pair
    ``(U + U^dag)/2`` and ``(U - U^dag)/(2i)``; the first is diagonalised and
    its (near-)degenerate eigenspaces are refined against the compression of
    the second.  Eigenvalues are reassembled as ``h1 + i*h2`` and sorted by
    principal phase in ``[0, 2*pi)``.

    Raises
    ------
    NotUnitaryError
        If ``max |U^dag U - 1| > tol``.
    NoConvergenceError
        If the residual budget ``10 * tol * max|U|`` cannot be met or an
        eigenvalue strays from the unit circle by more than ``10 * tol``.
    """
    u = require_square(matrix)
    n = u.shape[0]
    if max_abs(u.conj().T @ u - np.eye(n)) > tol:
        raise NotUnitaryError(
            f"unitarity residual {max_abs(u.conj().T @ u - np.eye(n)):.3e} exceeds tol {tol:.3e}"
        )
    h1 = (u + u.conj().T) / 2.0
    h2 = (u - u.conj().T) / 2.0j
    try:
        v1, vectors = np.linalg.eigh(h1)
    except np.linalg.LinAlgError as exc:  # pragma: no cover - LAPACK rarely fails here
        raise NoConvergenceError(str(exc)) from exc
    vectors = np.array(vectors, dtype=complex)
    v2 = np.empty(n)
    start = 0
    while start < n:
        stop = start + 1
        while stop < n and v1[stop] - v1[stop - 1] <= CLUSTER_TOL:
            stop += 1
        block = vectors[:, start:stop]
        m = block.conj().T @ h2 @ block
        m = (m + m.conj().T) / 2.0
        w, q = np.linalg.eigh(m)
        vectors[:, start:stop] = block @ q
        v2[start:stop] = w
        start = stop
    values = v1 + 1j * v2
    if max_abs(np.abs(values) - 1.0) > 10.0 * tol:
        raise NoConvergenceError("eigenvalues stray from the unit circle")
    order = np.argsort(_canonical_phases(values), kind="stable")
    values = values[order]
    vectors = _fix_column_phases(vectors[:, order])
    residual = max_abs(vectors @ np.diag(values) @ vectors.conj().T - u)
    if residual > 10.0 * tol * max_abs(u):
        raise NoConvergenceError(
            f"reconstruction residual {residual:.3e} exceeds 10*tol*|U|"
        )
    return EigenDecomposition(values=values, vectors=vectors, ordering="phase")


class Isometry:
    """A tall matrix ``C`` (n x k) with orthonormal columns: ``C^dag C = 1_k``.

    Columns span the code subspace; ``encode`` maps logical vectors into the
    ambient space and ``compress`` pulls an ambient operator down to ``k x k``.
    """

    def __init__(self, matrix, tol: float = DEFAULT_TOL):
        c = as_complex_matrix(matrix, "isometry")
        n, k = c.shape
        if k > n:
            raise ShapeMismatchError(f"isometry must be tall, got shape {c.shape}")
        gram_residual = max_abs(c.conj().T @ c - np.eye(k))
        if gram_residual > tol:
            raise ShapeMismatchError(
                f"columns not orthonormal: residual {gram_residual:.3e} exceeds {tol:.3e}"
            )
        c.setflags(write=False)
        self.matrix = c

    @property
    def ambient_dim(self) -> int:
        return self.matrix.shape[0]

    @property
    def code_dim(self) -> int:
        return self.matrix.shape[1]

    def encode(self, state) -> np.ndarray:
        """Lift a k-dimensional logical vector into the ambient space."""
        psi = np.asarray(state, dtype=complex).reshape(-1)
        if psi.shape[0] != self.code_dim:
            raise ShapeMismatchError(
                f"expected logical dimension {self.code_dim}, got {psi.shape[0]}"
            )
        return self.matrix @ psi

    def compress(self, operator) -> np.ndarray:
        """Return ``C^dag X C`` for an ambient operator X."""
        x = require_square(operator, "operator")
        if x.shape[0] != self.ambient_dim:
            raise ShapeMismatchError(
                f"operator dimension {x.shape[0]} != ambient {self.ambient_dim}"
            )
        return self.matrix.conj().T @ x @ self.matrix

    def __repr__(self):
        return f"Isometry(ambient_dim={self.ambient_dim}, code_dim={self.code_dim})"


# ---------------------------------------------------------------------------
# seeded random matrix helpers (used by tests, audits and the simulator)


def random_hermitian(n: int, rng: np.random.Generator) -> np.ndarray:
    """Random Hermitian matrix with Gaussian entries, normalised scale O(1)."""
    g = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    return (g + g.conj().T) / 2.0


def haar_unitary(n: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-distributed random unitary (QR of a Ginibre matrix, phase corrected)."""
    g = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    q, r = np.linalg.qr(g)
    d = np.diagonal(r)
    return q * (d / np.abs(d))


def haar_isometry(n_rows: int, n_cols: int, rng: np.random.Generator) -> np.ndarray:
    """Random isometry: first ``n_cols`` columns of a Haar unitary."""
    if n_cols > n_rows:
        raise ShapeMismatchError("isometry must be tall")
    g = rng.standard_normal((n_rows, n_cols)) + 1j * rng.standard_normal((n_rows, n_cols))
    q, r = np.linalg.qr(g)
    d = np.diagonal(r)
    return q * (d / np.abs(d))


def random_unit_vector(n: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-random unit vector (normalised complex Gaussian)."""
    v = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    return v / np.linalg.norm(v)


# ---------------------------------------------------------------------------
# shared eigenbases for commuting normal families


def simultaneous_diagonalization(ops, tol: float = DEFAULT_TOL):
    """Common orthonormal eigenbasis of a family of commuting normal matrices.

    Parameters
    ----------
    ops : sequence of array_like
        Square matrices of a shared dimension, pairwise commuting and each
        normal.  (Both conditions are equivalent to all their Hermitian and
        anti-Hermitian parts commuting, which is what is actually gated.)
    tol : float
        Absolute tolerance for the commutation gate and for the final
        verification that every operator is diagonal in the returned basis.

    Returns
    -------
    basis : ndarray
        Unitary matrix whose columns are the shared eigenvectors.
    diagonals : list of ndarray
        ``diagonals[m][j]`` is the eigenvalue of ``ops[m]`` on column ``j``.

    Raises
    ------
    NotCommutingError
        If the family fails the commutation/normality gate, or if the refined
        basis does not diagonalise every operator to tolerance.
    """
    mats = [require_square(t, f"ops[{i}]") for i, t in enumerate(ops)]
    if not mats:
        raise ShapeMismatchError("need at least one operator")
    n = mats[0].shape[0]
    if any(t.shape[0] != n for t in mats):
        raise ShapeMismatchError("operators must share one dimension")

    parts = []
    for t in mats:
        parts.append((t + t.conj().T) / 2.0)
        parts.append((t - t.conj().T) / 2.0j)
    scale = max(1.0, max(max_abs(t) for t in mats))
    gate = 10.0 * tol * scale * scale
    for i in range(len(parts)):
        for j in range(i + 1, len(parts)):
            comm = parts[i] @ parts[j] - parts[j] @ parts[i]
            if max_abs(comm) > gate:
                raise NotCommutingError(
                    "family is not commuting-normal: commutator residual "
                    f"{max_abs(comm):.3e} exceeds {gate:.3e}"
                )

    blocks = [np.eye(n, dtype=complex)]
    for h in parts:
        refined = []
        for b in blocks:
            if b.shape[1] == 1:
                refined.append(b)
                continue
            m = b.conj().T @ h @ b
            m = (m + m.conj().T) / 2.0
            w, q = np.linalg.eigh(m)
            start = 0
            while start < b.shape[1]:
                stop = start + 1
                while stop < b.shape[1] and w[stop] - w[stop - 1] <= CLUSTER_TOL:
                    stop += 1
                refined.append(b @ q[:, start:stop])
                start = stop
        blocks = refined
    basis = _fix_column_phases(np.hstack(blocks))

    diagonals = []
    for t in mats:
        d = basis.conj().T @ t @ basis
        off = d - np.diag(np.diagonal(d))
        if max_abs(off) > gate:
            raise NotCommutingError(
                f"shared basis leaves off-diagonal residual {max_abs(off):.3e}"
            )
        diagonals.append(np.diagonal(d).copy())
    return basis, diagonals
