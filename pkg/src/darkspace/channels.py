"""Quantum channels in Kraus form, their dilations and ancilla bookkeeping.

A channel is stored as a list of Kraus operators ``A_i`` acting on one
``dim``-dimensional system, validated against the trace-preservation
(completeness) identity ``sum_i A_i^dag A_i = 1``.  Both directions of the
action are available: on observables ``X -> sum_i A_i^dag X A_i`` (Heisenberg)
and on states ``rho -> sum_i A_i rho A_i^dag`` (Schrodinger).

The Stinespring isometry ``V`` stacks the Kraus blocks ancilla-major, i.e.
rows ``i*dim .. (i+1)*dim - 1`` of ``V`` hold ``A_i``.  Under that layout an
ambient observable ``X (x) 1_anc`` is numerically ``kron(1, X)`` and an
ancilla observable ``1 (x) Y`` is ``kron(Y, 1)``; the map
``Y -> V^dag (1 (x) Y) V = sum_ij Y_ij A_i^dag A_j`` is the channel to the
environment (the conjugate channel).
"""

from __future__ import annotations

import numpy as np

from .errors import (
    BadPermutationError,
    BadWeightsError,
    NotStochasticError,
    NotTracePreservingError,
    NotUnitaryError,
    ShapeMismatchError,
)
from .linalg import DEFAULT_TOL, as_complex_matrix, max_abs, require_square, haar_isometry


class KrausChannel:
    """A completely positive trace-preserving map given by Kraus operators.

    Parameters
    ----------
    kraus : sequence of array_like
        Square matrices of one shared dimension.
    tol : float
        Absolute max-norm gate on the completeness residual
        ``sum_i A_i^dag A_i - 1``.

    Raises
    ------
    ShapeMismatchError
        If the operators are not square or do not share a dimension.
    NotTracePreservingError
        If the completeness residual exceeds ``tol``.
    """

    def __init__(self, kraus, tol: float = DEFAULT_TOL):
        ops = [require_square(a, f"kraus[{i}]") for i, a in enumerate(kraus)]
        if not ops:
            raise ShapeMismatchError("need at least one Kraus operator")
        dim = ops[0].shape[0]
        if any(a.shape[0] != dim for a in ops):
            raise ShapeMismatchError("Kraus operators must share one dimension")
        total = sum(a.conj().T @ a for a in ops)
        residual = max_abs(total - np.eye(dim))
        if residual > tol:
            raise NotTracePreservingError(
                f"completeness residual {residual:.3e} exceeds tol {tol:.3e}"
            )
        stack = np.array(ops)
        stack.setflags(write=False)
        self._stack = stack
        self.dim = dim
        self.tol = tol

    @property
    def kraus(self) -> tuple:
        """The Kraus operators as a tuple of read-only arrays."""
        return tuple(self._stack[i] for i in range(self._stack.shape[0]))

    @property
    def num_kraus(self) -> int:
        return self._stack.shape[0]

    def apply_schrodinger(self, rho) -> np.ndarray:
        """State picture: ``sum_i A_i rho A_i^dag``."""
        r = self._check_operand(rho)
        return np.einsum("iab,bc,idc->ad", self._stack, r, self._stack.conj())

    def apply_heisenberg(self, x) -> np.ndarray:
        """Observable picture: ``sum_i A_i^dag X A_i``."""
        xm = self._check_operand(x)
        return np.einsum("iba,bc,icd->ad", self._stack.conj(), xm, self._stack)

    def conjugate_apply(self, y) -> np.ndarray:
        """Environment observable pulled back: ``sum_ij Y_ij A_i^dag A_j``.

        ``y`` is an operator on the ancilla, so it must be ``m x m`` where
        ``m`` is the number of Kraus operators.
        """
        ym = require_square(y, "ancilla operator")
        if ym.shape[0] != self.num_kraus:
            raise ShapeMismatchError(
                f"ancilla operator must be {self.num_kraus} x {self.num_kraus}"
            )
        return np.einsum("ij,iba,jbc->ac", ym, self._stack.conj(), self._stack)

    def stinespring(self) -> "StinespringDilation":
        """Stacked-block dilation isometry (verified against both pictures)."""
        v = self._stack.reshape(self.num_kraus * self.dim, self.dim)
        return StinespringDilation(v, ancilla_dim=self.num_kraus, tol=self.tol)

    def rebase(self, u) -> "KrausChannel":
        """Equivalent Kraus list ``B_j = sum_i u_ij A_i`` for unitary ``u``.

        The new list describes the same channel; only the ancilla basis (the
        measurement one would perform on the environment) changes.
        """
        um = require_square(u, "rebasing unitary")
        m = self.num_kraus
        if um.shape[0] != m:
            raise ShapeMismatchError(f"rebasing unitary must be {m} x {m}")
        if max_abs(um.conj().T @ um - np.eye(m)) > self.tol:
            raise NotUnitaryError("rebasing matrix is not unitary")
        new_ops = np.einsum("ij,iab->jab", um, self._stack)
        return KrausChannel(list(new_ops), tol=self.tol)

    def _check_operand(self, x) -> np.ndarray:
        xm = require_square(x, "operand")
        if xm.shape[0] != self.dim:
            raise ShapeMismatchError(
                f"operand dimension {xm.shape[0]} != channel dimension {self.dim}"
            )
        return xm

    def __repr__(self):
        return f"KrausChannel(dim={self.dim}, num_kraus={self.num_kraus})"


class StinespringDilation:
    """Isometry ``V`` from the system into system (x) ancilla.

    ``V`` has shape ``(ancilla_dim * dim, dim)`` with Kraus block ``i`` in
    rows ``i*dim .. (i+1)*dim - 1``.  Construction re-verifies ``V^dag V = 1``
    and, on a full matrix-unit basis, ``V^dag (X (x) 1) V = sum A^dag X A``.
    """

    def __init__(self, v, ancilla_dim: int, tol: float = DEFAULT_TOL):
        vm = as_complex_matrix(v, "dilation isometry")
        rows, dim = vm.shape
        if ancilla_dim < 1 or rows != ancilla_dim * dim:
            raise ShapeMismatchError(
                f"dilation of shape {vm.shape} inconsistent with ancilla_dim={ancilla_dim}"
            )
        if max_abs(vm.conj().T @ vm - np.eye(dim)) > tol:
            raise NotTracePreservingError("dilation columns are not orthonormal")
        blocks = vm.reshape(ancilla_dim, dim, dim)
        for p in range(dim):
            for q in range(dim):
                unit = np.zeros((dim, dim), dtype=complex)
                unit[p, q] = 1.0
                lifted = vm.conj().T @ np.kron(np.eye(ancilla_dim), unit) @ vm
                direct = np.einsum("iba,bc,icd->ad", blocks.conj(), unit, blocks)
                if max_abs(lifted - direct) > tol:  # pragma: no cover - block identity
                    raise ShapeMismatchError("dilation does not reproduce the channel")
        vm.setflags(write=False)
        self.matrix = vm
        self.ancilla_dim = ancilla_dim
        self.dim = dim

    def block(self, i: int) -> np.ndarray:
        """Kraus operator ``A_i`` (rows ``i*dim .. (i+1)*dim - 1`` of ``V``)."""
        return self.matrix[i * self.dim : (i + 1) * self.dim]

    def __repr__(self):
        return f"StinespringDilation(dim={self.dim}, ancilla_dim={self.ancilla_dim})"


class Instrument:
    """A Kraus channel whose operators are tagged with outcome labels.

    Reading outcome ``i`` on the environment leaves the system in
    ``A_i psi / ||A_i psi||`` with probability ``||A_i psi||^2``.
    """

    def __init__(self, channel: KrausChannel, labels=None):
        if labels is None:
            labels = tuple(str(i) for i in range(channel.num_kraus))
        labels = tuple(str(l) for l in labels)
        if len(labels) != channel.num_kraus:
            raise ShapeMismatchError(
                f"{len(labels)} labels for {channel.num_kraus} outcomes"
            )
        self.channel = channel
        self.labels = labels

    @property
    def num_outcomes(self) -> int:
        return self.channel.num_kraus

    def outcome_probabilities(self, state) -> np.ndarray:
        """``p_i = ||A_i psi||^2`` for a unit vector ``psi``."""
        psi = np.asarray(state, dtype=complex).reshape(-1)
        if psi.shape[0] != self.channel.dim:
            raise ShapeMismatchError("state dimension mismatch")
        amplitudes = np.einsum("iab,b->ia", self.channel._stack, psi)
        return np.sum(np.abs(amplitudes) ** 2, axis=1)

    def __repr__(self):
        return f"Instrument(dim={self.channel.dim}, outcomes={self.labels})"


# ---------------------------------------------------------------------------
# constructors for the channel families used throughout


def ref_channel(unitaries, weights, tol: float = DEFAULT_TOL) -> KrausChannel:
    """Random/external-field channel: Kraus operators ``sqrt(q_i) U_i``.

    Every subspace is dark for such a channel, with compression values equal
    to the mixing weights.

    Raises
    ------
    BadWeightsError
        If the weights are not a probability vector to tolerance.
    NotUnitaryError
        If any of the mixed operators fails the unitarity gate.
    """
    q = np.asarray(weights, dtype=float).reshape(-1)
    mats = [require_square(u, f"unitaries[{i}]") for i, u in enumerate(unitaries)]
    if len(mats) != q.shape[0]:
        raise ShapeMismatchError(f"{len(mats)} unitaries but {q.shape[0]} weights")
    if np.any(q < -tol):
        raise BadWeightsError("negative mixing weight")
    q = np.clip(q, 0.0, None)
    if abs(q.sum() - 1.0) > tol:
        raise BadWeightsError(f"weights sum to {q.sum()!r}, expected 1")
    dim = mats[0].shape[0]
    for i, u in enumerate(mats):
        if u.shape[0] != dim:
            raise ShapeMismatchError("unitaries must share one dimension")
        if max_abs(u.conj().T @ u - np.eye(dim)) > tol:
            raise NotUnitaryError(f"operator {i} is not unitary to tol {tol:.3e}")
    return KrausChannel([np.sqrt(qi) * u for qi, u in zip(q, mats)], tol=tol)


def permutation_matrix(images, n: int | None = None) -> np.ndarray:
    """0/1 matrix sending basis vector ``e_m`` to ``e_images[m]``.

    ``images`` is a one-line permutation array over ``0 .. N-1``.
    """
    img = np.asarray(images, dtype=int).reshape(-1)
    if n is not None and img.shape[0] != n:
        raise BadPermutationError(f"permutation length {img.shape[0]}, expected {n}")
    size = img.shape[0]
    if sorted(img.tolist()) != list(range(size)):
        raise BadPermutationError(f"{img.tolist()} is not a permutation of 0..{size - 1}")
    p = np.zeros((size, size))
    p[img, np.arange(size)] = 1.0
    return p


def biased_permutation_channel(s, perms, tol: float = DEFAULT_TOL) -> KrausChannel:
    """Channel with Kraus operators ``A_i = P_i sqrt(D_i)``.

    ``s`` is an ``r x N`` bias matrix whose row ``i`` forms the diagonal of
    ``D_i``; trace preservation requires every column of ``s`` to sum to one
    (the rows are a diagonal POVM).  ``perms`` gives one permutation per row
    as a one-line image array.

    Raises
    ------
    NotStochasticError
        If an entry of ``s`` is significantly negative or a column sum
        differs from one by more than ``tol``.
    BadPermutationError
        If any image array fails to be a bijection on ``0..N-1``.
    """
    sm = np.asarray(s, dtype=float)
    if sm.ndim != 2:
        raise ShapeMismatchError(f"bias matrix must be 2-D, got shape {sm.shape}")
    r, n = sm.shape
    if np.any(sm < -tol):
        raise NotStochasticError("bias matrix has a negative entry")
    sm = np.clip(sm, 0.0, None)
    col_sums = sm.sum(axis=0)
    if max_abs(col_sums - 1.0) > tol:
        raise NotStochasticError(
            f"column sums deviate from 1 by {max_abs(col_sums - 1.0):.3e}"
        )
    if len(perms) != r:
        raise ShapeMismatchError(f"{len(perms)} permutations for {r} rows")
    ops = []
    for i in range(r):
        p = permutation_matrix(perms[i], n)
        ops.append(p @ np.diag(np.sqrt(sm[i])))
    return KrausChannel(ops, tol=tol)


def random_kraus_channel(dim: int, num_kraus: int, rng: np.random.Generator,
                         tol: float = DEFAULT_TOL) -> KrausChannel:
    """Haar-random channel: a random dilation isometry cut into Kraus blocks."""
    v = haar_isometry(num_kraus * dim, dim, rng)
    blocks = [v[i * dim : (i + 1) * dim] for i in range(num_kraus)]
    return KrausChannel(blocks, tol=tol)


def tensor_channel(first: KrausChannel, second: KrausChannel) -> KrausChannel:
    """Channel acting independently on two subsystems: Kraus set ``{A_i (x) B_j}``."""
    ops = [np.kron(a, b) for a in first.kraus for b in second.kraus]
    return KrausChannel(ops, tol=max(first.tol, second.tol))
