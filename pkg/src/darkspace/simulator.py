"""Monte-Carlo checks of darkness and recovery on sampled trajectories.

Two seeded experiments complement the algebraic certificates:

* the *darkness* experiment samples environment outcomes for code states and
  tests that the outcome distribution matches the certified compression
  values and does not depend on which code state was sent (pooled chi-square
  plus pairwise frequency comparison across five fixed states at four
  standard deviations);
* the *restoration* experiment runs the weak protocol end to end (encode,
  one channel outcome, outcome-matched correction, re-encode) and records
  the worst and mean overlap fidelity with the input.

Randomness is counter based: every trial owns a Philox stream keyed by
``(seed, stream_index)``, so a report is a pure function of its
configuration, bit for bit, regardless of execution order.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from .channels import Instrument, KrausChannel
from .codes import check_darkness
from .errors import ShapeMismatchError, ZeroProbabilityDrawError
from .linalg import DEFAULT_TOL, Isometry, random_unit_vector
from .recovery import Decoder

#: Outcome probabilities below this are "numerically zero" for sampling.
PROBABILITY_FLOOR = 1e-150

#: Largest tolerated pairwise frequency deviation, in standard deviations.
SIGMA_GATE = 4.0

#: Chi-square p-values below this fail the darkness experiment.
P_VALUE_FLOOR = 1e-4


@dataclass(frozen=True)
class TrajectoryConfig:
    """Inputs of a sampling experiment.

    ``input_state`` is a logical vector (length = code dimension) used for
    every trial; when ``None``, each trial draws a fresh Haar-random code
    state.  ``trials`` counts the primary sample; the darkness experiment
    additionally spends ``trials // 5`` draws on each of five fixed states
    for the state-independence gate.
    """

    trials: int
    seed: int
    input_state: np.ndarray | None = None
    tol: float = DEFAULT_TOL


@dataclass(frozen=True)
class TrajectoryReport:
    """Counts and verdicts of a sampling experiment (JSON-friendly)."""

    kind: str
    trials: int
    seed: int
    outcome_counts: np.ndarray
    expected_probabilities: np.ndarray
    chi_square: float | None = None
    p_value: float | None = None
    degrees_of_freedom: int | None = None
    max_pairwise_sigma: float | None = None
    min_fidelity: float | None = None
    mean_fidelity: float | None = None
    passed: bool = False
    notes: tuple = field(default_factory=tuple)

    def __post_init__(self):
        self.outcome_counts.setflags(write=False)
        self.expected_probabilities.setflags(write=False)


def _stream(seed: int, index: int) -> np.random.Generator:
    key = np.array([np.uint64(seed), np.uint64(index)], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def sample_outcome(instrument: Instrument, state, rng: np.random.Generator):
    """Draw one environment outcome for ``state``.

    Returns ``(index, post_state, probability)`` where ``post_state`` is the
    normalised conditional state ``A_i psi / ||A_i psi||``.

    Raises
    ------
    ZeroProbabilityDrawError
        If the drawn outcome has numerically vanishing probability (this
        cannot happen through the inverse-CDF draw unless the distribution
        itself is broken).
    """
    psi = np.asarray(state, dtype=complex).reshape(-1)
    probs = instrument.outcome_probabilities(psi)
    total = probs.sum()
    if total <= PROBABILITY_FLOOR:
        raise ZeroProbabilityDrawError("state is annihilated by every Kraus operator")
    cumulative = np.cumsum(probs / total)
    draw = rng.random()
    index = int(np.searchsorted(cumulative, draw, side="right"))
    index = min(index, probs.shape[0] - 1)
    while probs[index] <= PROBABILITY_FLOOR and index > 0:
        index -= 1
    if probs[index] <= PROBABILITY_FLOOR:
        raise ZeroProbabilityDrawError(f"outcome {index} has zero probability")
    post = instrument.channel.kraus[index] @ psi
    return index, post / np.linalg.norm(post), float(probs[index])


def _logical_state(code: Isometry, config: TrajectoryConfig, rng) -> np.ndarray:
    if config.input_state is not None:
        chi = np.asarray(config.input_state, dtype=complex).reshape(-1)
        if chi.shape[0] != code.code_dim:
            raise ShapeMismatchError(
                f"input state must have the code dimension {code.code_dim}"
            )
        return chi / np.linalg.norm(chi)
    return random_unit_vector(code.code_dim, rng)


def run_darkness_experiment(instrument: Instrument, code: Isometry,
                            config: TrajectoryConfig) -> TrajectoryReport:
    """Sample outcomes on code states and test state independence.

    The pooled histogram over ``config.trials`` Haar-random code states is
    chi-squared against the certified compression values; five fixed code
    states (``config.trials // 5`` draws each) are compared pairwise per
    outcome at four standard deviations.  With ``config.input_state`` set,
    only the chi-square part runs on that single state.
    """
    channel = instrument.channel
    if code.ambient_dim != channel.dim:
        raise ShapeMismatchError("code does not match the channel dimension")
    cert = check_darkness(channel, code, config.tol)
    expected = np.array(cert.lambdas, dtype=float)
    expected = expected / expected.sum()
    m = channel.num_kraus
    notes = []
    if cert.klass.label != "Dark":
        notes.append(f"certificate class is {cert.klass.label}")

    counts = np.zeros(m, dtype=np.int64)
    for t in range(config.trials):
        rng = _stream(config.seed, t)
        psi = code.encode(_logical_state(code, config, rng))
        index, _, _ = sample_outcome(instrument, psi, rng)
        counts[index] += 1

    # chi-square over outcomes of nonzero expected probability
    live = expected > 1e-12
    anomaly = int(counts[~live].sum())
    if anomaly:
        notes.append(f"{anomaly} draws landed on zero-probability outcomes")
    chi = float(np.sum((counts[live] - config.trials * expected[live]) ** 2
                       / (config.trials * expected[live])))
    dof = int(live.sum()) - 1
    p_value = float(stats.chi2.sf(chi, dof)) if dof > 0 else 1.0

    # state-independence: five fixed code states, pairwise frequencies
    max_sigma = None
    if config.input_state is None and config.trials >= 5:
        per_state = config.trials // 5
        batch_counts = np.zeros((5, m), dtype=np.int64)
        for s in range(5):
            state_rng = _stream(config.seed, 2**32 + s)
            chi_s = random_unit_vector(code.code_dim, state_rng)
            psi_s = code.encode(chi_s)
            for t in range(per_state):
                rng = _stream(config.seed, 2**48 + s * 2**33 + t)
                index, _, _ = sample_outcome(instrument, psi_s, rng)
                batch_counts[s, index] += 1
        max_sigma = 0.0
        for s in range(5):
            for r in range(s + 1, 5):
                for i in range(m):
                    pooled = (batch_counts[s, i] + batch_counts[r, i]) / (2 * per_state)
                    if pooled in (0.0, 1.0):
                        continue
                    sigma = np.sqrt(pooled * (1.0 - pooled) * (2.0 / per_state))
                    diff = abs(batch_counts[s, i] - batch_counts[r, i]) / per_state
                    max_sigma = max(max_sigma, diff / sigma)

    passed = (p_value > P_VALUE_FLOOR and anomaly == 0
              and (max_sigma is None or max_sigma <= SIGMA_GATE))
    return TrajectoryReport(
        kind="darkness",
        trials=config.trials,
        seed=config.seed,
        outcome_counts=counts,
        expected_probabilities=expected,
        chi_square=chi,
        p_value=p_value,
        degrees_of_freedom=dof,
        max_pairwise_sigma=max_sigma,
        passed=bool(passed),
        notes=tuple(notes),
    )


def run_restoration_experiment(source, code: Isometry, decoder: Decoder,
                               config: TrajectoryConfig,
                               fidelity_floor: float = 1.0 - 1e-9) -> TrajectoryReport:
    """Run the weak protocol per trial and report the fidelity statistics.

    Each trial encodes a state, samples one environment outcome ``l``,
    applies the matching correction ``D_l``, re-encodes through ``C`` and
    records ``|<psi_in | psi_out>|^2``.
    """
    instrument = source if isinstance(source, Instrument) else Instrument(source)
    channel = instrument.channel
    if decoder.mode != "weak":
        raise ShapeMismatchError("restoration trajectories need an outcome-indexed (weak) decoder")
    if decoder.ambient_dim != channel.dim or decoder.code_dim != code.code_dim:
        raise ShapeMismatchError("decoder/channel/code dimensions disagree")

    m = channel.num_kraus
    counts = np.zeros(m, dtype=np.int64)
    fidelities = np.empty(config.trials)
    for t in range(config.trials):
        rng = _stream(config.seed, t)
        chi_t = _logical_state(code, config, rng)
        psi = code.encode(chi_t)
        index, post, _ = sample_outcome(instrument, psi, rng)
        counts[index] += 1
        corrected = decoder.operators[index] @ post
        norm = np.linalg.norm(corrected)
        if norm <= PROBABILITY_FLOOR:
            raise ZeroProbabilityDrawError(
                f"correction for outcome {index} annihilated the state"
            )
        fidelities[t] = abs(np.vdot(chi_t, corrected / norm)) ** 2

    cert = check_darkness(channel, code, config.tol)
    expected = np.array(cert.lambdas, dtype=float)
    expected = expected / expected.sum()
    min_f = float(fidelities.min())
    return TrajectoryReport(
        kind="restoration",
        trials=config.trials,
        seed=config.seed,
        outcome_counts=counts,
        expected_probabilities=expected,
        min_fidelity=min_f,
        mean_fidelity=float(fidelities.mean()),
        passed=bool(min_f >= fidelity_floor),
    )
