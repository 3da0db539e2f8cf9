"""Exception hierarchy used across the package.

Every failure mode that callers are expected to catch gets its own class so
tests and the CLI can distinguish "your input is malformed" from "the
mathematics says no".  ``DarkspaceError`` is the common base.
"""


class DarkspaceError(Exception):
    """Base class for all package-specific errors."""


class ShapeMismatchError(DarkspaceError):
    """Operands have incompatible or non-square shapes."""


# ---------------------------------------------------------------------------
# matrix kernel


class NotHermitianError(DarkspaceError):
    """Input fails the Hermitian residual gate."""


class NotUnitaryError(DarkspaceError):
    """Input fails the unitarity residual gate."""


class NoConvergenceError(DarkspaceError):
    """Eigensolver failed to reach the requested residual."""


class NotCommutingError(DarkspaceError):
    """A family of operators is not mutually commuting (or not normal)."""


# ---------------------------------------------------------------------------
# channels


class NotTracePreservingError(DarkspaceError):
    """Kraus operators do not sum to the identity."""


class BadWeightsError(DarkspaceError):
    """Mixture weights are not a probability vector."""


class NotStochasticError(DarkspaceError):
    """Column sums of a bias matrix differ from one, or entries are negative."""


class BadPermutationError(DarkspaceError):
    """A one-line permutation array is not a bijection on 0..N-1."""


# ---------------------------------------------------------------------------
# numerical ranges / compressions


class LambdaOutOfRangeError(DarkspaceError):
    """Requested compression value lies outside the attainable interval."""


class DegeneratePairMismatchError(DarkspaceError):
    """A degenerate eigenvalue pair cannot represent the requested value."""


class DegenerateSpectrumError(DarkspaceError):
    """Chord construction needs a non-degenerate unitary spectrum."""


class ParallelChordsError(DarkspaceError):
    """Both chord pairings are (numerically) parallel; no intersection."""


class NotFoundError(DarkspaceError):
    """Search exhausted without finding a joint compression."""


# ---------------------------------------------------------------------------
# code finders / certification


class WrongKrausCountError(DarkspaceError):
    """Construction requires a specific number of Kraus operators."""


class SymmetryViolatedError(DarkspaceError):
    """Bias matrix lacks the mirrored row structure the code needs."""


class OddDimensionError(DarkspaceError):
    """Mirror-pair codes need an even ambient dimension."""


class NotBiunitaryError(DarkspaceError):
    """Channel is not a two-term mixture of unitaries."""


class NoCodeError(DarkspaceError):
    """No code of the requested size exists for this spectrum."""


class PhaseOutOfRangeError(DarkspaceError):
    """Phase parameters violate the ordering constraints of the construction."""


class CertificateError(DarkspaceError):
    """A certificate failed its own residual validation."""


# ---------------------------------------------------------------------------
# recovery / audits


class NotDarkError(DarkspaceError):
    """Weak decoding needs a dark code in the given Kraus frame."""


class NotCompletelyDarkError(DarkspaceError):
    """Strong decoding needs the full cross-term (Knill-Laflamme) conditions."""


class AlphaNotPSDError(DarkspaceError):
    """Code correlation matrix has a significantly negative eigenvalue."""


class AuditFailedError(DarkspaceError):
    """An internal consistency audit found a violation (likely a bug)."""


# ---------------------------------------------------------------------------
# simulation


class ZeroProbabilityDrawError(DarkspaceError):
    """A sampled outcome had (numerically) zero probability."""
