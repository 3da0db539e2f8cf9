"""Decoders that invert a channel on a protected subspace.

Protection and darkness are two sides of one equivalence.  This module
supplies the constructive side: given a certificate, build the unital map
``Delta`` whose composition with the channel restricts to the identity on the
code, in both flavours.

*Strong* (no access to the environment): diagonalise the environment state
``alpha = u diag(a) u^dag``, move to the rebased Kraus frame ``B = u^T A``
where the conditional images of the code are mutually orthogonal, and take
``D_i = C^dag B_i^dag / sqrt(a_i)`` for the outcomes of positive weight.  The
decoder observable map is

    Delta(Z) = sum_i D_i^dag Z D_i + tr(rho Z) (1 - sum_j D_j^dag D_j),

with an arbitrary completion state ``rho`` (maximally mixed by default); the
round trip ``C^dag Phi(Delta(Z)) C = Z`` holds exactly on the code.

*Weak* (the environment outcome ``l`` is known): per-outcome corrections
``D_l = C^dag A_l^dag / sqrt(lambda_l)`` in the channel's own frame, with
``D_l = 0`` for outcomes of zero weight; the round trip sums the
outcome-matched blocks.

``conjugate_compression_audit`` checks the converse direction numerically:
once the strong round trip passes, the conjugate channel compressed to the
code must be scalar, i.e. the environment learns nothing.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channels import Instrument, KrausChannel
from .codes import CodeCertificate, ProtectionClass, check_darkness, check_knill_laflamme
from .errors import (
    AlphaNotPSDError,
    AuditFailedError,
    NotCompletelyDarkError,
    NotDarkError,
    ShapeMismatchError,
)
from .linalg import DEFAULT_TOL, Isometry, max_abs, require_square

#: Spectral weights at or below this cutoff are treated as exactly zero.
ZERO_WEIGHT_CUTOFF = 1e-12


@dataclass(frozen=True)
class Decoder:
    """Recovery data for one (channel, code) pair.

    ``operators[i]`` is a ``k x n`` map from the ambient space back to the
    logical space.  In ``"strong"`` mode the list covers the positive
    eigenvalues ``weights[i]`` of alpha, in the Kraus frame reached by
    ``rebasing``; in ``"weak"`` mode it is outcome-aligned with the channel
    (zero operators for zero-weight outcomes) and ``rebasing`` is ``None``.
    ``completion_state`` is the logical state used to complete the decoder to
    a unital map.
    """

    mode: str
    operators: tuple
    weights: np.ndarray
    completion_state: np.ndarray
    rebasing: np.ndarray | None

    def __post_init__(self):
        self.weights.setflags(write=False)
        self.completion_state.setflags(write=False)
        if self.rebasing is not None:
            self.rebasing.setflags(write=False)

    @property
    def code_dim(self) -> int:
        return self.operators[0].shape[0]

    @property
    def ambient_dim(self) -> int:
        return self.operators[0].shape[1]

    def observable_map(self, z) -> np.ndarray:
        """Heisenberg decoder ``Delta(Z)`` (strong mode composition)."""
        zz = self._check_logical(z)
        n = self.ambient_dim
        total = np.zeros((n, n), dtype=complex)
        gram = np.zeros((n, n), dtype=complex)
        for d in self.operators:
            total += d.conj().T @ zz @ d
            gram += d.conj().T @ d
        completion = complex(np.trace(self.completion_state @ zz))
        return total + completion * (np.eye(n) - gram)

    def outcome_observable_map(self, z, outcome: int) -> np.ndarray:
        """Per-outcome decoder block ``D_l^dag Z D_l + tr(rho Z)(1 - D_l^dag D_l)``."""
        zz = self._check_logical(z)
        d = self.operators[outcome]
        completion = np.trace(self.completion_state @ zz)
        n = self.ambient_dim
        return d.conj().T @ zz @ d + completion * (np.eye(n) - d.conj().T @ d)

    def _check_logical(self, z) -> np.ndarray:
        zz = require_square(z, "logical observable")
        if zz.shape[0] != self.code_dim:
            raise ShapeMismatchError(
                f"logical observable must be {self.code_dim} x {self.code_dim}"
            )
        return zz


def _default_completion(k: int) -> np.ndarray:
    return np.eye(k, dtype=complex) / k


def _validate_completion(state, k: int, tol: float) -> np.ndarray:
    rho = require_square(state, "completion state")
    if rho.shape[0] != k:
        raise ShapeMismatchError(f"completion state must be {k} x {k}")
    if max_abs(rho - rho.conj().T) > tol or abs(np.trace(rho).real - 1.0) > tol:
        raise ShapeMismatchError("completion state must be a density matrix")
    if np.linalg.eigvalsh((rho + rho.conj().T) / 2).min() < -k * tol:
        raise ShapeMismatchError("completion state must be positive semidefinite")
    return rho.astype(complex)


def build_strong_decoder(channel: KrausChannel, code: Isometry,
                         certificate: CodeCertificate | None = None,
                         completion_state=None,
                         zero_cutoff: float = ZERO_WEIGHT_CUTOFF,
                         tol: float = DEFAULT_TOL) -> Decoder:
    """Decoder that inverts the channel on a completely dark code.

    Raises
    ------
    NotCompletelyDarkError
        If the certificate class is below ``CompletelyDark``.
    AlphaNotPSDError
        If alpha has an eigenvalue below ``-zero_cutoff`` (inconsistent
        certificate).
    AuditFailedError
        If the assembled decoder fails its own unitality / positivity check.
    """
    if certificate is None:
        certificate = check_knill_laflamme(channel, code, tol)
    if certificate.klass < ProtectionClass.COMPLETELY_DARK or certificate.alpha is None:
        raise NotCompletelyDarkError(
            f"strong decoding needs CompletelyDark, certificate says "
            f"{certificate.klass.label}"
        )
    k = code.code_dim
    eigvals, u = np.linalg.eigh(certificate.alpha)
    if eigvals.min() < -max(zero_cutoff, k * tol):
        raise AlphaNotPSDError(f"alpha eigenvalue {eigvals.min():.3e} is negative")
    rebased = channel.rebase(u)
    operators = []
    weights = []
    for i, a_i in enumerate(eigvals):
        if a_i <= zero_cutoff:
            continue
        operators.append(code.matrix.conj().T @ rebased.kraus[i].conj().T / np.sqrt(a_i))
        weights.append(float(a_i))
    rho = (_default_completion(k) if completion_state is None
           else _validate_completion(completion_state, k, tol))
    decoder = Decoder(
        mode="strong",
        operators=tuple(operators),
        weights=np.array(weights),
        completion_state=rho,
        rebasing=u.astype(complex),
    )
    _check_decoder_shape(decoder, channel.dim, tol)
    return decoder


def build_weak_decoder(source, code: Isometry,
                       certificate: CodeCertificate | None = None,
                       completion_state=None,
                       zero_cutoff: float = ZERO_WEIGHT_CUTOFF,
                       tol: float = DEFAULT_TOL) -> Decoder:
    """Outcome-indexed decoder for a dark code (channel's own Kraus frame).

    ``source`` may be a :class:`KrausChannel` or an :class:`Instrument`.
    Darkness is frame dependent, so the decoder only makes sense together
    with the Kraus list it was built from.

    Raises
    ------
    NotDarkError
        If the certificate class is below ``Dark``.
    """
    channel = source.channel if isinstance(source, Instrument) else source
    if certificate is None:
        certificate = check_darkness(channel, code, tol)
    if certificate.klass < ProtectionClass.DARK:
        raise NotDarkError(
            f"weak decoding needs a Dark code, certificate says {certificate.klass.label}"
        )
    k = code.code_dim
    n = channel.dim
    operators = []
    for lam, a_l in zip(certificate.lambdas, channel.kraus):
        if lam <= zero_cutoff:
            operators.append(np.zeros((k, n), dtype=complex))
        else:
            operators.append(code.matrix.conj().T @ a_l.conj().T / np.sqrt(lam))
    rho = (_default_completion(k) if completion_state is None
           else _validate_completion(completion_state, k, tol))
    return Decoder(
        mode="weak",
        operators=tuple(operators),
        weights=np.array(certificate.lambdas, dtype=float),
        completion_state=rho,
        rebasing=None,
    )


def _check_decoder_shape(decoder: Decoder, dim: int, tol: float):
    """Unitality and complete positivity of the strong decoder map."""
    n = decoder.ambient_dim
    if n != dim:
        raise ShapeMismatchError("decoder does not match the channel dimension")
    gram = sum(d.conj().T @ d for d in decoder.operators)
    unital = decoder.observable_map(np.eye(decoder.code_dim))
    if max_abs(unital - np.eye(n)) > 100 * tol:
        raise AuditFailedError("decoder is not unital")
    leftovers = np.linalg.eigvalsh(np.eye(n) - gram)
    if leftovers.min() < -100 * tol:
        raise AuditFailedError(
            f"decoder completion term is not PSD (eigenvalue {leftovers.min():.3e})"
        )


@dataclass(frozen=True)
class RoundtripReport:
    """Worst-case identity deviation of decode-then-channel on the code."""

    mode: str
    max_residual: float
    report_tol: float

    @property
    def passed(self) -> bool:
        return self.max_residual <= self.report_tol


def verify_roundtrip(channel: KrausChannel, code: Isometry, decoder: Decoder,
                     report_tol: float = 1e-9) -> RoundtripReport:
    """Measure ``max_Z |Gamma(Phi(Delta(Z))) - Z|`` over logical matrix units.

    In weak mode the composition is outcome matched:
    ``sum_l C^dag A_l^dag Delta_l(Z) A_l C``.
    """
    k = code.code_dim
    if decoder.ambient_dim != channel.dim or decoder.code_dim != k:
        raise ShapeMismatchError("decoder/channel/code dimensions disagree")
    worst = 0.0
    for p in range(k):
        for q in range(k):
            unit = np.zeros((k, k), dtype=complex)
            unit[p, q] = 1.0
            if decoder.mode == "strong":
                got = code.compress(channel.apply_heisenberg(decoder.observable_map(unit)))
            else:
                n = channel.dim
                total = np.zeros((n, n), dtype=complex)
                for l, a_l in enumerate(channel.kraus):
                    total += a_l.conj().T @ decoder.outcome_observable_map(unit, l) @ a_l
                got = code.compress(total)
            worst = max(worst, max_abs(got - unit))
    return RoundtripReport(mode=decoder.mode, max_residual=worst, report_tol=report_tol)


@dataclass(frozen=True)
class ConjugateAuditReport:
    """Scalarity of the conjugate channel on the code after strong recovery."""

    max_scalar_residual: float
    environment_state: np.ndarray
    tol: float

    def __post_init__(self):
        self.environment_state.setflags(write=False)

    @property
    def passed(self) -> bool:
        return self.max_scalar_residual <= self.tol


def conjugate_compression_audit(channel: KrausChannel, code: Isometry,
                                decoder: Decoder, tol: float = DEFAULT_TOL,
                                roundtrip_tol: float = 1e-9) -> ConjugateAuditReport:
    """Strong protection must silence the environment: verify it numerically.

    First re-checks the strong round trip, then compresses the conjugate
    channel on every ancilla matrix unit and measures the deviation from a
    scalar.  The extracted scalars are returned as ``environment_state``
    (they reproduce alpha entrywise).

    Raises
    ------
    AuditFailedError
        If the round-trip precondition fails, or if any compressed conjugate
        image deviates from a scalar by more than ``tol``.
    """
    if decoder.mode != "strong":
        raise ShapeMismatchError("conjugate audit applies to strong decoders")
    roundtrip = verify_roundtrip(channel, code, decoder, roundtrip_tol)
    if not roundtrip.passed:
        raise AuditFailedError(
            f"strong round trip residual {roundtrip.max_residual:.3e} exceeds "
            f"{roundtrip_tol:.3e}; audit precondition not met"
        )
    m = channel.num_kraus
    k = code.code_dim
    scalars = np.empty((m, m), dtype=complex)
    worst = 0.0
    for i in range(m):
        for j in range(m):
            unit = np.zeros((m, m), dtype=complex)
            unit[i, j] = 1.0
            compressed = code.compress(channel.conjugate_apply(unit))
            scalars[i, j] = np.trace(compressed) / k
            worst = max(worst, max_abs(compressed - scalars[i, j] * np.eye(k)))
    if worst > tol:
        raise AuditFailedError(
            f"conjugate channel is not scalar on the code (residual {worst:.3e})"
        )
    return ConjugateAuditReport(max_scalar_residual=worst,
                                environment_state=scalars, tol=tol)
