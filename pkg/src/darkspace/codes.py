"""Certification and construction of protected subspaces for Kraus channels.

A subspace with isometry ``C`` is *dark* for the Kraus family ``{A_i}`` when
each ``C^dag A_i^dag A_i C`` is a scalar: the outcome statistics of the
environment measurement then carry no information about which code state was
sent, and each conditional evolution is reversible on the code.  When the
cross terms also collapse, ``C^dag A_i^dag A_j C = alpha_ij * 1``, the code is
*completely dark*; the matrix ``alpha`` is a density matrix (the state the
environment ends up in regardless of input) and its von Neumann entropy
measures how far the code is from a decoherence-free subspace (``alpha``
pure, entropy zero), where no recovery operation is needed at all.

The hierarchy is strict and is enforced on every certificate:

    DecoherenceFree  <=  CompletelyDark  <=  Dark.

Besides the two checkers, this module hosts the constructive code families:
rank-2 channels (midpoint of the rank-k range of ``A_1^dag A_1``), biased
permutation channels (mirror pairs of basis vectors), products of codes, and
the two- and three-unitary mixture constructions.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .channels import KrausChannel, ref_channel
from .errors import (
    AlphaNotPSDError,
    AuditFailedError,
    CertificateError,
    NoCodeError,
    NotBiunitaryError,
    NotCompletelyDarkError,
    NotUnitaryError,
    OddDimensionError,
    PhaseOutOfRangeError,
    ShapeMismatchError,
    SymmetryViolatedError,
    WrongKrausCountError,
)
from .linalg import (
    DEFAULT_TOL,
    Isometry,
    eig_unitary,
    haar_unitary,
    max_abs,
    require_square,
    tensor,
)
from .numrange import (
    PHASE_DEGENERACY,
    hermitian_compression,
    hermitian_rank_range,
    unitary_rank2_compression,
)


class ProtectionClass(enum.IntEnum):
    """Protection hierarchy; comparisons follow set inclusion of the classes."""

    NOT_DARK = 0
    DARK = 1
    COMPLETELY_DARK = 2
    DECOHERENCE_FREE = 3

    @property
    def label(self) -> str:
        return {
            ProtectionClass.NOT_DARK: "NotDark",
            ProtectionClass.DARK: "Dark",
            ProtectionClass.COMPLETELY_DARK: "CompletelyDark",
            ProtectionClass.DECOHERENCE_FREE: "DecoherenceFree",
        }[self]

    @staticmethod
    def from_label(label: str) -> "ProtectionClass":
        for member in ProtectionClass:
            if member.label == label:
                return member
        raise ValueError(f"unknown protection class {label!r}")


def von_neumann_entropy(density) -> float:
    """Entropy ``-sum(w ln w)`` of a density matrix, natural logarithm.

    Eigenvalues are clamped at zero; ``0 ln 0`` counts as 0.
    """
    w = np.linalg.eigvalsh(require_square(density, "density"))
    w = np.clip(w.real, 0.0, None)
    positive = w[w > 0.0]
    return max(0.0, float(-np.sum(positive * np.log(positive))))


@dataclass(frozen=True)
class CodeCertificate:
    """Outcome of a darkness / cross-term check for one (channel, code) pair.

    ``lambdas[i]`` is the extracted compression value of ``A_i^dag A_i`` on
    the code and ``residuals["darkness"]`` the worst deviation from scalar.
    ``alpha`` and ``entropy`` are present only when the code is completely
    dark; ``residuals["cross"]`` (worst off-scalar cross term) and
    ``residuals["purity"]`` (``max |alpha^2 - alpha|``) document the boundary
    to the next class.  Construction fails if the recorded class is
    inconsistent with the recorded residuals, so certificates cannot violate
    the hierarchy.
    """

    klass: ProtectionClass
    lambdas: np.ndarray
    alpha: np.ndarray | None
    entropy: float | None
    residuals: dict
    tol: float

    def __post_init__(self):
        self.lambdas.setflags(write=False)
        if self.alpha is not None:
            self.alpha.setflags(write=False)
        dark_ok = self.residuals["darkness"] <= self.tol
        cross = self.residuals.get("cross")
        cross_ok = cross is not None and cross <= self.tol
        purity = self.residuals.get("purity")
        purity_ok = purity is not None and purity <= self.tol
        if self.klass >= ProtectionClass.DARK and not dark_ok:
            raise CertificateError("class claims Dark but darkness residual exceeds tol")
        if self.klass >= ProtectionClass.COMPLETELY_DARK and not cross_ok:
            raise CertificateError("class claims CompletelyDark but cross residual exceeds tol")
        if self.klass >= ProtectionClass.DECOHERENCE_FREE and not purity_ok:
            raise CertificateError("class claims DecoherenceFree but alpha is not idempotent")
        if self.klass < ProtectionClass.DARK and dark_ok:
            raise CertificateError("darkness holds but class claims NotDark")
        if self.klass == ProtectionClass.DARK and cross_ok:
            raise CertificateError("cross terms hold but class claims only Dark")


def check_darkness(channel: KrausChannel, code: Isometry,
                   tol: float = DEFAULT_TOL) -> CodeCertificate:
    """Test ``C^dag A_i^dag A_i C = lambda_i * 1`` for every Kraus operator.

    The scalar is extracted as ``trace / k``; the certificate carries all the
    ``lambda_i`` (clamped at 0) and the worst max-norm deviation.  Cross
    terms are not inspected, so the result is at most ``Dark``.
    """
    _check_dims(channel, code)
    k = code.code_dim
    lambdas = np.empty(channel.num_kraus)
    worst = 0.0
    for i, a in enumerate(channel.kraus):
        m = code.compress(a.conj().T @ a)
        lam = float(np.trace(m).real) / k
        worst = max(worst, max_abs(m - lam * np.eye(k)))
        lambdas[i] = max(lam, 0.0)
    klass = ProtectionClass.DARK if worst <= tol else ProtectionClass.NOT_DARK
    return CodeCertificate(
        klass=klass,
        lambdas=lambdas,
        alpha=None,
        entropy=None,
        residuals={"darkness": worst},
        tol=tol,
    )


def check_knill_laflamme(channel: KrausChannel, code: Isometry,
                         tol: float = DEFAULT_TOL) -> CodeCertificate:
    """Full cross-term check ``C^dag A_i^dag A_j C = alpha_ij * 1``.

    Classifies the code as ``NotDark``, ``Dark`` (diagonal conditions only),
    ``CompletelyDark`` (all pairs scalar; ``alpha`` validated as a density
    matrix and its entropy reported) or ``DecoherenceFree``
    (``alpha`` additionally idempotent, i.e. a pure state).

    Raises
    ------
    AlphaNotPSDError
        If the code is completely dark but ``alpha`` has an eigenvalue below
        ``-k * tol``.
    """
    _check_dims(channel, code)
    k = code.code_dim
    m_ops = channel.num_kraus
    ident = np.eye(k)
    alpha = np.empty((m_ops, m_ops), dtype=complex)
    dark_worst = 0.0
    cross_worst = 0.0
    ops = channel.kraus
    compressed_blocks = [code.matrix.conj().T @ a.conj().T for a in ops]
    encoded = [a @ code.matrix for a in ops]
    for i in range(m_ops):
        for j in range(m_ops):
            block = compressed_blocks[i] @ encoded[j]
            alpha[i, j] = np.trace(block) / k
            residual = max_abs(block - alpha[i, j] * ident)
            if i == j:
                dark_worst = max(dark_worst, residual)
            else:
                cross_worst = max(cross_worst, residual)

    lambdas = np.clip(np.diagonal(alpha).real, 0.0, None)
    residuals = {"darkness": dark_worst, "cross": max(dark_worst, cross_worst)}
    if residuals["cross"] > tol:
        klass = ProtectionClass.DARK if dark_worst <= tol else ProtectionClass.NOT_DARK
        return CodeCertificate(klass=klass, lambdas=lambdas, alpha=None,
                               entropy=None, residuals=residuals, tol=tol)

    alpha = (alpha + alpha.conj().T) / 2.0
    w = np.linalg.eigvalsh(alpha)
    if w.min() < -k * tol:
        raise AlphaNotPSDError(
            f"alpha eigenvalue {w.min():.3e} below -k*tol = {-k * tol:.3e}"
        )
    if abs(alpha.trace().real - 1.0) > m_ops * tol:
        raise AlphaNotPSDError(f"alpha trace {alpha.trace().real!r} differs from 1")
    entropy = von_neumann_entropy(alpha)
    residuals["purity"] = max_abs(alpha @ alpha - alpha)
    klass = (ProtectionClass.DECOHERENCE_FREE
             if residuals["purity"] <= tol
             else ProtectionClass.COMPLETELY_DARK)
    return CodeCertificate(klass=klass, lambdas=lambdas, alpha=alpha,
                           entropy=entropy, residuals=residuals, tol=tol)


def _check_dims(channel: KrausChannel, code: Isometry):
    if code.ambient_dim != channel.dim:
        raise ShapeMismatchError(
            f"code lives in dimension {code.ambient_dim}, channel in {channel.dim}"
        )


@dataclass(frozen=True)
class RebaseAuditReport:
    """Stability of a Knill-Laflamme certificate under random Kraus rebasings."""

    trials: int
    baseline_class: ProtectionClass
    max_entropy_drift: float
    max_alpha_congruence_residual: float


def rebase_invariance_audit(channel: KrausChannel, code: Isometry, trials: int = 20,
                            seed: int = 0, tol: float = DEFAULT_TOL,
                            class_tol: float = 1e-9,
                            congruence_tol: float = 1e-10) -> RebaseAuditReport:
    """Check that class and entropy survive random changes of Kraus frame.

    Rebasing by a unitary ``u`` must keep the classification, move the
    entropy by at most ``class_tol`` and transform ``alpha`` exactly by
    congruence ``alpha -> u^dag alpha u`` (up to ``congruence_tol``).

    Raises
    ------
    NotCompletelyDarkError
        If the baseline certificate is below ``CompletelyDark`` (only the
        full cross-term class is frame independent).
    AuditFailedError
        On any violation; this indicates a genuine bug, not bad input.
    """
    baseline = check_knill_laflamme(channel, code, tol)
    if baseline.klass < ProtectionClass.COMPLETELY_DARK:
        raise NotCompletelyDarkError(
            f"audit requires a CompletelyDark baseline, got {baseline.klass.label}"
        )
    rng = np.random.default_rng(seed)
    worst_entropy = 0.0
    worst_congruence = 0.0
    for t in range(trials):
        u = haar_unitary(channel.num_kraus, rng)
        cert = check_knill_laflamme(channel.rebase(u), code, tol)
        if cert.klass != baseline.klass:
            raise AuditFailedError(
                f"trial {t}: class changed {baseline.klass.label} -> {cert.klass.label}"
            )
        drift = abs(cert.entropy - baseline.entropy)
        congruence = max_abs(cert.alpha - u.conj().T @ baseline.alpha @ u)
        worst_entropy = max(worst_entropy, drift)
        worst_congruence = max(worst_congruence, congruence)
        if drift > class_tol:
            raise AuditFailedError(f"trial {t}: entropy drift {drift:.3e}")
        if congruence > congruence_tol:
            raise AuditFailedError(f"trial {t}: alpha congruence residual {congruence:.3e}")
    return RebaseAuditReport(
        trials=trials,
        baseline_class=baseline.klass,
        max_entropy_drift=worst_entropy,
        max_alpha_congruence_residual=worst_congruence,
    )


# ---------------------------------------------------------------------------
# constructive families


def rank2_dark_code(channel: KrausChannel, tol: float = DEFAULT_TOL):
    """Dark code of dimension ``(N+1)//2`` for a channel with two Kraus operators.

    ``T = A_1^dag A_1`` and ``1 - T`` share every compression subspace, so
    compressing ``T`` to the midpoint of its rank-k range protects against
    both operators at once.  Returns ``(Isometry, CodeCertificate)``.
    """
    if channel.num_kraus != 2:
        raise WrongKrausCountError(
            f"rank-2 construction needs exactly 2 Kraus operators, got {channel.num_kraus}"
        )
    a1 = channel.kraus[0]
    t = a1.conj().T @ a1
    k = (channel.dim + 1) // 2
    interval = hermitian_rank_range(t, k, tol)
    cert = hermitian_compression(t, k, interval.midpoint, tol=tol)
    code = cert.isometry
    return code, check_darkness(channel, code, tol)


def biased_permutation_dark_code(channel: KrausChannel, tol: float = DEFAULT_TOL):
    """Mirror-pair dark code for a biased permutation channel.

    Recovers the bias rows from ``A_i^dag A_i`` (which must be diagonal),
    requires the mirrored row sums ``S[i, m] + S[i, N-1-m]`` to be constant
    per row, and builds the code from the uniform mirror pairs
    ``(e_m + e_{N-1-m}) / sqrt(2)``.  Compression values are half the row
    constants.  Returns ``(Isometry, CodeCertificate)``.
    """
    n = channel.dim
    if n % 2:
        raise OddDimensionError(f"mirror pairs need even dimension, got {n}")
    rows = []
    for i, a in enumerate(channel.kraus):
        m = a.conj().T @ a
        if max_abs(m - np.diag(np.diagonal(m))) > tol:
            raise SymmetryViolatedError(
                f"operator {i} is not permutation-weighted (A^dag A not diagonal)"
            )
        rows.append(np.diagonal(m).real)
    for i, row in enumerate(rows):
        diffs = np.diff(row)
        if not (np.all(diffs >= -tol) or np.all(diffs <= tol)):
            raise SymmetryViolatedError(f"bias row {i} is not monotonic")
        sums = row[: n // 2] + row[::-1][: n // 2]
        if max_abs(sums - sums[0]) > tol:
            raise SymmetryViolatedError(
                f"bias row {i} violates the mirror sum rule by {max_abs(sums - sums[0]):.3e}"
            )
    columns = []
    for m in range(n // 2):
        col = np.zeros(n, dtype=complex)
        col[m] = col[n - 1 - m] = 1.0 / np.sqrt(2.0)
        columns.append(col)
    code = Isometry(np.column_stack(columns))
    return code, check_darkness(channel, code, tol)


def product_code(code_a: Isometry, code_b: Isometry) -> Isometry:
    """Tensor product of two codes; dark for the product channel with
    compression values ``lambda_i * mu_j``."""
    return Isometry(tensor(code_a.matrix, code_b.matrix))


def biunitary_code(channel: KrausChannel, tol: float = DEFAULT_TOL):
    """Code for a mixture of two unitaries ``{sqrt(q) V_1, sqrt(1-q) V_2}``.

    Everything reduces to the relative rotation ``U = V_1^dag V_2``: a
    doubly degenerate eigenvalue of ``U`` yields a decoherence-free pair of
    eigenvectors, otherwise (in dimension 4) the chord intersection gives a
    completely dark code with environment state
    ``alpha = [[q, sqrt(q(1-q)) lam], [sqrt(q(1-q)) conj(lam), 1-q]]``.
    Returns ``(Isometry, CodeCertificate)``.

    Raises
    ------
    NotBiunitaryError
        If the channel is not a two-term mixture of unitaries.
    NoCodeError
        If the spectrum admits neither branch (non-degenerate, dimension != 4).
    """
    if channel.num_kraus != 2:
        raise NotBiunitaryError(
            f"expected 2 Kraus operators, got {channel.num_kraus}"
        )
    n = channel.dim
    weights = []
    rotations = []
    for i, a in enumerate(channel.kraus):
        gram = a.conj().T @ a
        q_i = float(np.trace(gram).real) / n
        if q_i <= tol or max_abs(gram - q_i * np.eye(n)) > tol:
            raise NotBiunitaryError(
                f"Kraus operator {i} is not proportional to a unitary"
            )
        weights.append(q_i)
        rotations.append(a / np.sqrt(q_i))
    q = weights[0]
    u = rotations[0].conj().T @ rotations[1]

    dec = eig_unitary(u, tol)
    cluster = _first_degenerate_cluster(dec.values)
    if cluster is not None:
        code = Isometry(dec.vectors[:, cluster[:2]])
    elif n == 4:
        code = unitary_rank2_compression(u, tol).isometry
    else:
        raise NoCodeError(
            f"non-degenerate spectrum in dimension {n}: no construction available"
        )
    return code, check_knill_laflamme(channel, code, tol)


def _first_degenerate_cluster(values: np.ndarray):
    """Indices of the first phase-ordered eigenvalue cluster of size >= 2."""
    n = values.shape[0]
    used = np.zeros(n, dtype=bool)
    for i in range(n):
        if used[i]:
            continue
        cluster = [j for j in range(n)
                   if abs(values[j] - values[i]) <= PHASE_DEGENERACY]
        if len(cluster) >= 2:
            return cluster
        used[i] = True
    return None


def triunitary_code(alpha_phase: float, xi_phase: float, code_size: int = 2,
                    frame=None, weights=(0.5, 0.25, 0.25),
                    tol: float = DEFAULT_TOL):
    """Completely dark code for a mixture of the identity and two commuting unitaries.

    The two rotations are built from the phase patterns
    ``U_A = diag(1, e^{-i alpha}, e^{i alpha})`` on a 3-level factor and
    ``U_B = diag(1, e^{i xi_2}, ..., e^{i xi_K})`` on a K-level factor
    (``xi_j`` spread evenly up to ``xi_phase``), as
    ``U_1 = U_A^dag (x) U_B`` and ``U_2 = U_A (x) U_B``.  Each code vector
    superposes one phase-ordered eigenvector triple of ``U_1`` with weights

        a_1 = 1 + 1 / (cos(alpha) - 1),   a_3 = a_5 = 1 / (2 - 2 cos(alpha)),

    compressing ``U_1`` and ``U_2`` to 0 and the relative rotation
    ``W = U_1^dag U_2`` to ``-1 - 2 cos(alpha)``.

    Parameters
    ----------
    alpha_phase : float
        Phase of the 3-level factor, required inside ``(pi/2, pi)``.
    xi_phase : float
        Largest phase of the K-level factor, required inside
        ``(0, min(alpha, 2 (pi - alpha)))`` (ignored for ``code_size = 1``).
    code_size : int
        K, the dimension of the protected subspace (ambient dimension 3K).
    frame : array_like, optional
        Unitary change of eigenbasis; the returned channel and code are
        conjugated by it.
    weights : tuple of float
        Mixing probabilities of ``(1, U_1, U_2)``.

    Returns
    -------
    (KrausChannel, Isometry, CodeCertificate)

    Raises
    ------
    PhaseOutOfRangeError
        If the phases violate the ordering constraints above.
    """
    if code_size < 1:
        raise ShapeMismatchError(f"code_size must be >= 1, got {code_size}")
    if not np.pi / 2.0 < alpha_phase < np.pi:
        raise PhaseOutOfRangeError(
            f"alpha must lie in (pi/2, pi), got {alpha_phase!r}"
        )
    xi_max = min(alpha_phase, 2.0 * (np.pi - alpha_phase))
    if code_size >= 2 and not 0.0 < xi_phase < xi_max:
        raise PhaseOutOfRangeError(
            f"xi must lie in (0, {xi_max!r}), got {xi_phase!r}"
        )
    big_k = code_size
    if big_k == 1:
        xi_list = np.array([0.0])
    else:
        xi_list = np.arange(big_k) * (xi_phase / (big_k - 1))

    u_a = np.diag([1.0, np.exp(-1j * alpha_phase), np.exp(1j * alpha_phase)])
    u_b = np.diag(np.exp(1j * xi_list))
    u1 = tensor(u_a.conj().T, u_b)
    u2 = tensor(u_a, u_b)
    w_rel = tensor(u_a @ u_a, np.eye(big_k))
    n = 3 * big_k
    if frame is not None:
        f = require_square(frame, "frame")
        if f.shape[0] != n or max_abs(f.conj().T @ f - np.eye(n)) > tol:
            raise NotUnitaryError(f"frame must be a {n} x {n} unitary")
        u1 = f @ u1 @ f.conj().T
        u2 = f @ u2 @ f.conj().T
        w_rel = f @ w_rel @ f.conj().T

    channel = ref_channel([np.eye(n), u1, u2], weights, tol=tol)

    cos_a = np.cos(alpha_phase)
    a1 = 1.0 + 1.0 / (cos_a - 1.0)
    a3 = 1.0 / (2.0 - 2.0 * cos_a)
    dec = eig_unitary(u1, tol)
    vecs = dec.vectors
    columns = []
    for l in range(big_k):
        columns.append(np.sqrt(a1) * vecs[:, l]
                       + np.sqrt(a3) * vecs[:, l + big_k]
                       + np.sqrt(a3) * vecs[:, l + 2 * big_k])
    code = Isometry(np.column_stack(columns))

    w_value = -1.0 - 2.0 * cos_a
    gate = max(tol, 100 * tol)
    for op, expected in ((u1, 0.0), (u2, 0.0), (w_rel, w_value)):
        residual = max_abs(code.compress(op) - expected * np.eye(big_k))
        if residual > gate:
            raise CertificateError(
                f"compression residual {residual:.3e} exceeds {gate:.3e}"
            )
    cert = check_knill_laflamme(channel, code, tol)
    if cert.klass < ProtectionClass.COMPLETELY_DARK:  # pragma: no cover - by construction
        raise CertificateError("construction failed to reach CompletelyDark")
    return channel, code, cert
