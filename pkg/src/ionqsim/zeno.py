"""Quantum Zeno experiment engine.

Survival and net-transition formulas for a resonantly driven two-level
system under repeated projective probing, plus trajectory simulators
for the fractionated pi-pulse protocol and for long alternating
drive/probe sequences with run-length statistics.

All drives are resonant (the protocol nulls the detuning), so between
probes the state is a z-eigenstate rotated by the pulse area theta.
From an eigenstate a probe outcome flips with probability
sin^2(theta/2), which lets whole trajectories be sampled exactly with
one uniform draw per probe.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .bloch import DetectionModel, as_generator


@dataclass(frozen=True)
class ZenoConfig:
    """Fractionated pi-pulse protocol parameters.

    n_fractions pulses of equal area total_area/n_fractions alternate
    with projective probes of the z basis.  probe_gap is carried as
    metadata only (the hyperfine qubit does not dephase during gaps).
    """

    n_fractions: int
    sequences: int
    total_area: float = math.pi
    probe_gap: float = 3e-3
    detection: DetectionModel = field(default_factory=DetectionModel.ideal)
    prep_efficiency: float = 1.0

    def __post_init__(self):
        if self.n_fractions < 1:
            raise ValueError(f"n_fractions must be >= 1, got {self.n_fractions}")
        if self.sequences < 1:
            raise ValueError(f"sequences must be >= 1, got {self.sequences}")
        if not (0.0 < self.prep_efficiency <= 1.0):
            raise ValueError(f"prep_efficiency must lie in (0, 1], got {self.prep_efficiency}")


@dataclass(frozen=True)
class Trajectory:
    """Ordered record of on/off observations plus its provenance."""

    results: np.ndarray        # bool array, True = "on"
    seed: int | None
    config: dict

    def __len__(self):
        return int(self.results.size)


def survival_probability(theta_per_step: float, q) -> float:
    """P_00 = cos^(2q)(theta/2): probability of q consecutive equal
    outcomes under drive steps of area theta between probes."""
    if np.any(np.asarray(q) < 0):
        raise ValueError("q must be >= 0")
    c2 = math.cos(0.5 * theta_per_step) ** 2
    return c2 ** np.asarray(q) if np.ndim(q) else float(c2**q)


def net_transition_probability(theta_total: float, n: int) -> float:
    """P_e1 = (1 - cos^n(theta/n)) / 2: ensemble net transition
    probability after n nonselective probes (intermediate back-and-forth
    transitions included)."""
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    return 0.5 * (1.0 - math.cos(theta_total / n) ** n)


def _flip_probability(theta: float) -> float:
    return math.sin(0.5 * theta) ** 2


def _observe(true_on: np.ndarray, detection: DetectionModel, rng) -> np.ndarray:
    """Vectorized detection of an array of true z-eigenstates."""
    if detection.on_mean is not None:
        means = np.where(true_on, detection.on_mean, detection.off_mean)
        counts = rng.poisson(means)
        return counts > detection.threshold
    if detection.eta0 == 1.0 and detection.eta1 == 1.0:
        return true_on.copy()
    p_on = np.where(true_on, detection.eta1, 1.0 - detection.eta0)
    return rng.random(true_on.shape) < p_on


def simulate_fractionated_pi(config: ZenoConfig, seed) -> tuple[float, np.ndarray]:
    """Run the fractionated pi-pulse protocol.

    Each sequence prepares |0> (with prep_efficiency), then alternates
    n_fractions resonant pulses of area total_area/n_fractions with
    projective z probes read out through the detection model.  Returns
    (survival_frequency, records) where records is a (sequences,
    n_fractions) bool array of observations and survival_frequency is
    the fraction of all-"off" sequences.
    """
    rng = as_generator(seed)
    n, seq = config.n_fractions, config.sequences
    p_flip = _flip_probability(config.total_area / n)

    # draw order: preparation, drive flips, detection
    prepared_wrong = rng.random(seq) >= config.prep_efficiency
    flips = rng.random((seq, n)) < p_flip
    true_on = (prepared_wrong[:, None].astype(np.int64) + np.cumsum(flips, axis=1)) % 2 == 1
    records = _observe(true_on, config.detection, rng)
    survival = float(np.mean(~records.any(axis=1)))
    return survival, records


def corrected_survival(raw_frequency: float, config: ZenoConfig) -> float:
    """Undo preparation and read-out losses in an all-"off" frequency.

    A surviving sequence is observed all-"off" only if it was prepared
    correctly and every one of its n true "off" results was read
    correctly, so the raw frequency is rescaled by
    1 / (prep_efficiency * eta0^n).  False-"off" read-outs of escaped
    sequences are neglected (they enter at order 1 - eta1).
    """
    n = config.n_fractions
    scale = config.prep_efficiency * config.detection.eta0**n
    return raw_frequency / scale


def simulate_alternating(theta_per_step: float, n_pairs: int, seed,
                         detection: DetectionModel | None = None) -> Trajectory:
    """Simulate n_pairs of (drive pulse of area theta, projective probe).

    The ion starts in |0>; each probe collapses the state, so the true
    outcome sequence is a two-state Markov chain with flip probability
    sin^2(theta/2) per pair.  Results are "on"/"off" observations.
    """
    if n_pairs < 1:
        raise ValueError(f"n_pairs must be >= 1, got {n_pairs}")
    rng = as_generator(seed)
    detection = detection or DetectionModel.ideal()
    flips = rng.random(n_pairs) < _flip_probability(theta_per_step)
    true_on = np.cumsum(flips) % 2 == 1
    results = _observe(true_on, detection, rng)
    config = {
        "theta_per_step": theta_per_step,
        "n_pairs": n_pairs,
        "detection": (detection.eta0, detection.eta1),
    }
    return Trajectory(results=results, seed=seed if np.isscalar(seed) else None,
                      config=config)


def run_length_distribution(trajectory: Trajectory) -> dict[int, float]:
    """Normalized distribution U(q) of maximal runs of q equal results.

    The trailing run is truncated by the end of the record and is
    excluded from the counts.  U(q)/U(1) estimates P_00(q-1).
    """
    results = np.asarray(trajectory.results)
    if results.size == 0:
        raise ValueError("trajectory is empty")
    boundaries = np.flatnonzero(results[1:] != results[:-1])
    # runs that end at a boundary are complete; the final run is dropped
    run_lengths = np.diff(np.concatenate([[-1], boundaries]))
    if run_lengths.size == 0:
        return {}
    counts = np.bincount(run_lengths)
    total = run_lengths.size
    return {int(q): counts[q] / total for q in range(1, counts.size) if counts[q] > 0}


def run_length_ratio(dist: dict[int, float], q: int) -> float:
    """U(q)/U(1), the empirical estimator of P_00(q-1)."""
    if 1 not in dist:
        raise ValueError("distribution has no runs of length 1")
    return dist.get(q, 0.0) / dist[1]
