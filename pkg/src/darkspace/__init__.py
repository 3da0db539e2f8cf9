"""Dark subspaces, correctable codes and decoders for Kraus channels.

A subspace is *dark* for a noisy channel when every environment outcome is
equally likely for every state stored in it, so the measurement record leaks
nothing about the stored state.  Stronger classes (*completely dark*,
*decoherence free*) additionally admit exact recovery.  This package finds
such subspaces through rank-k numerical ranges, certifies them, builds the
matching decoders, and checks everything again on sampled trajectories.
"""

from .channels import (
    Instrument,
    KrausChannel,
    StinespringDilation,
    biased_permutation_channel,
    permutation_matrix,
    random_kraus_channel,
    ref_channel,
    tensor_channel,
)
from .codes import (
    CodeCertificate,
    ProtectionClass,
    RebaseAuditReport,
    biased_permutation_dark_code,
    biunitary_code,
    check_darkness,
    check_knill_laflamme,
    product_code,
    rank2_dark_code,
    rebase_invariance_audit,
    triunitary_code,
    von_neumann_entropy,
)
from .errors import *  # noqa: F401,F403 -- small, curated error module
from .linalg import (
    DEFAULT_TOL,
    EigenDecomposition,
    Isometry,
    adjoint,
    eig_hermitian,
    eig_unitary,
    haar_isometry,
    haar_unitary,
    max_abs,
    random_hermitian,
    random_unit_vector,
    simultaneous_diagonalization,
    tensor,
)
from .numrange import (
    CompressionCertificate,
    PlanarRegion,
    RealInterval,
    certify_compression,
    hermitian_compression,
    hermitian_rank_range,
    joint_compression,
    unitary_rank2_compression,
    unitary_rank_range_outer,
)
from .recovery import (
    ConjugateAuditReport,
    Decoder,
    RoundtripReport,
    build_strong_decoder,
    build_weak_decoder,
    conjugate_compression_audit,
    verify_roundtrip,
)
from .simulator import (
    TrajectoryConfig,
    TrajectoryReport,
    run_darkness_experiment,
    run_restoration_experiment,
    sample_outcome,
)

__version__ = "0.1.0"
