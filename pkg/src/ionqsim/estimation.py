"""Bayesian adaptive (self-learning) qubit state estimation.

The state of knowledge is a probability density w(theta, phi) per unit
solid angle on the Bloch sphere, discretized on a Gauss-Legendre x
uniform-phi product grid.  Measuring along direction m and seeing the
qubit there multiplies w by the overlap |<m|theta,phi>|^2 =
(1 + u.m)/2 (Bayes rule).  The fidelity of a candidate estimate n is
F(n) = integral of w(u) (1 + u.n)/2, which is linear in n, so

    F_opt = (1 + |S|)/2   at direction S/|S|,   S = mean Bloch vector.

Weighting the post-measurement optima by the outcome probabilities
collapses the expected mean fidelity to

    Fbar(m) = 1/2 + (|S + Q m| + |S - Q m|)/4,

with Q the second-moment matrix of w.  Both identities follow from the
Born overlap alone; the moments are evaluated with the grid quadrature.
"""

import math
from dataclasses import dataclass

import numpy as np

from .bloch import PureState, Z_PLUS, as_generator
from .sphere import SphereGrid, default_grid, maximize_on_sphere

FOUR_PI = 4.0 * math.pi


class DegenerateUpdateError(ArithmeticError):
    """Raised when conditioning on an outcome of (numerically) zero probability."""


def as_direction(direction) -> np.ndarray:
    """Coerce a PureState, (theta, phi) pair, or 3-vector to a unit vector."""
    if isinstance(direction, PureState):
        return direction.bloch()
    arr = np.asarray(direction, dtype=float)
    if arr.shape == (2,):
        return PureState(*arr).bloch()
    if arr.shape != (3,):
        raise ValueError(f"direction must be a PureState, (theta, phi), or 3-vector, got shape {arr.shape}")
    norm = np.linalg.norm(arr)
    if not (0.99 < norm < 1.01):
        raise ValueError(f"direction vector must be unit length, got |m|={norm}")
    return arr / norm


@dataclass(frozen=True)
class SphereDistribution:
    """Immutable density snapshot w(theta_k, phi_k) on a quadrature grid."""

    grid: SphereGrid
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.shape != (self.grid.size,):
            raise ValueError(f"values shape {v.shape} does not match grid size {self.grid.size}")
        if np.any(v < -1e-12) or not np.all(np.isfinite(v)):
            raise ValueError("density values must be finite and non-negative")
        object.__setattr__(self, "values", v)
        v.flags.writeable = False

    @property
    def integral(self) -> float:
        return self.grid.integrate(self.values)

    def normalized(self) -> "SphereDistribution":
        total = self.integral
        if total <= 0.0:
            raise DegenerateUpdateError("density integrates to zero")
        return SphereDistribution(self.grid, self.values / total)

    def mean_vector(self) -> np.ndarray:
        """First moment S = <u> of the normalized density."""
        wv = self.grid.weights * self.values
        return (wv @ self.grid.units) / self.integral

    def second_moment(self) -> np.ndarray:
        """Second moment Q = <u u^T> of the normalized density."""
        wv = self.grid.weights * self.values
        u = self.grid.units
        return (u.T * wv) @ u / self.integral


def uniform_prior(grid_spec=None) -> SphereDistribution:
    """The ignorance prior w = 1/(4 pi)."""
    if grid_spec is None:
        grid = default_grid()
    elif isinstance(grid_spec, SphereGrid):
        grid = grid_spec
    else:
        grid = SphereGrid.build(*grid_spec)
    return SphereDistribution(grid, np.full(grid.size, 1.0 / FOUR_PI))


def outcome_probability(dist: SphereDistribution, direction) -> float:
    """Probability of finding the qubit along `direction`, integrated
    over the current state of knowledge."""
    m = as_direction(direction)
    s_bar = dist.mean_vector()
    return 0.5 * (1.0 + float(s_bar @ m))


def bayes_update(dist: SphereDistribution, direction, outcome: int) -> SphereDistribution:
    """Condition the density on a projective result along `direction`.

    outcome +1 keeps the direction, -1 uses its antipode.  The returned
    snapshot is renormalized.
    """
    if outcome not in (+1, -1):
        raise ValueError(f"outcome must be +1 or -1, got {outcome}")
    m = outcome * as_direction(direction)
    likelihood = 0.5 * (1.0 + dist.grid.units @ m)
    posterior = dist.values * likelihood
    norm = dist.grid.integrate(posterior)
    if norm <= 1e-300:
        raise DegenerateUpdateError("observed outcome has zero probability under the prior")
    return SphereDistribution(dist.grid, posterior / norm)


def fidelity_map(dist: SphereDistribution):
    """Return F(theta, phi), the fidelity of candidate estimates.

    The map is (1 + u(theta, phi) . S)/2 with S the posterior mean; it
    accepts scalars or arrays.
    """
    s_bar = dist.mean_vector()

    def fidelity(theta, phi):
        st = np.sin(theta)
        u = np.stack([st * np.cos(phi), st * np.sin(phi), np.cos(theta) * np.ones_like(st)], axis=-1)
        return 0.5 * (1.0 + u @ s_bar)

    return fidelity


def estimate_state(dist: SphereDistribution) -> tuple[np.ndarray, float]:
    """Best estimate and its fidelity F_opt = max F(theta, phi).

    The fidelity map is linear in the candidate direction, so the argmax
    is the normalized posterior mean.  A flat map (|S| ~ 0, e.g. the
    uniform prior) is tie-broken to the first grid node in (theta, phi)
    lexicographic order.
    """
    s_bar = dist.mean_vector()
    norm = float(np.linalg.norm(s_bar))
    if norm < 1e-12:
        return dist.grid.units[0].copy(), 0.5
    return s_bar / norm, 0.5 * (1.0 + norm)


def expected_mean_fidelity(dist: SphereDistribution, candidate_direction) -> float:
    """Expected post-measurement optimal fidelity for a candidate axis.

    Fbar(m) = p(m) F_opt(posterior | m) + p(-m) F_opt(posterior | -m);
    by construction it is symmetric under m <-> -m.
    """
    m = as_direction(candidate_direction)
    s_bar = dist.mean_vector()
    q = dist.second_moment()
    qm = q @ m
    return 0.5 + 0.25 * (np.linalg.norm(s_bar + qm) + np.linalg.norm(s_bar - qm))


def optimal_next_direction(dist: SphereDistribution, coarse: int = 400,
                           refine_rounds: int = 2) -> np.ndarray:
    """Measurement axis maximizing the expected mean fidelity.

    Coarse Fibonacci sweep plus local refinement; a flat objective
    (fresh uniform prior, where any axis is equally good) returns the
    canonical +z.  Antipodal ties are broken to the upper hemisphere.
    """
    s_bar = dist.mean_vector()
    q = dist.second_moment()

    def objective(dirs):
        qm = dirs @ q.T
        plus = np.linalg.norm(s_bar[None, :] + qm, axis=1)
        minus = np.linalg.norm(s_bar[None, :] - qm, axis=1)
        return 0.5 + 0.25 * (plus + minus)

    best, _, flat = maximize_on_sphere(objective, coarse=coarse, rounds=refine_rounds)
    if flat:
        return Z_PLUS.copy()
    if best[2] < 0 or (best[2] == 0 and (best[1] < 0 or (best[1] == 0 and best[0] < 0))):
        best = -best
    return best


@dataclass(frozen=True)
class ImperfectionParams:
    """Depolarization plus detection bias, in Bloch form.

    lam is the depolarizing probability (shrinks s by 1 - 2*lam) and
    delta_eta = (eta1 - eta0)/2 shifts s_z by 2*delta_eta.  The
    combination must keep the image inside the unit ball.
    """

    lam: float = 0.0
    delta_eta: float = 0.0

    def __post_init__(self):
        if not (0.0 <= self.lam <= 0.5):
            raise ValueError(f"lam must lie in [0, 1/2], got {self.lam}")
        if not (-0.25 <= self.delta_eta <= 0.25):
            raise ValueError(f"delta_eta must lie in [-1/4, 1/4], got {self.delta_eta}")
        if abs(1.0 - 2.0 * self.lam) + 2.0 * abs(self.delta_eta) > 1.0 + 1e-12:
            raise ValueError("imperfection parameters push pure states outside the unit ball")

    @classmethod
    def ideal(cls) -> "ImperfectionParams":
        return cls(0.0, 0.0)


def apply_imperfections(s: np.ndarray, params: ImperfectionParams) -> np.ndarray:
    """Bloch image of rho -> (1-2 lam) rho + lam I + delta_eta sigma_z."""
    shrink = 1.0 - 2.0 * params.lam
    out = np.array([shrink * s[0], shrink * s[1], shrink * s[2] + 2.0 * params.delta_eta])
    if np.linalg.norm(out) > 1.0 + 1e-9:
        raise ValueError("imperfection map produced a Bloch vector outside the unit ball")
    return out


@dataclass(frozen=True)
class StrategyConfig:
    """Which measurement directions to use and how hard to optimize."""

    kind: str                     # self_learning | random | fixed_axes
    n_measurements: int = 1
    coarse_points: int = 400
    refine_rounds: int = 2

    KINDS = ("self_learning", "random", "fixed_axes")

    def __post_init__(self):
        if self.kind not in self.KINDS:
            raise ValueError(f"unknown strategy kind {self.kind!r}; choose from {self.KINDS}")
        if self.n_measurements < 1:
            raise ValueError(f"n_measurements must be >= 1, got {self.n_measurements}")


@dataclass(frozen=True)
class EstimationTrajectory:
    """Record of one estimation run: axes chosen, raw outcomes, seed."""

    true_state: np.ndarray
    directions: np.ndarray     # (n, 3)
    outcomes: np.ndarray       # (n,) of +/-1
    seed: int | None
    strategy: str


_FIXED_AXES = np.array([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]])


def random_direction(rng) -> np.ndarray:
    """Uniform direction w.r.t. the sphere's area measure."""
    z = rng.uniform(-1.0, 1.0)
    phi = rng.uniform(0.0, 2.0 * math.pi)
    r = math.sqrt(max(0.0, 1.0 - z * z))
    return np.array([r * math.cos(phi), r * math.sin(phi), z])


def _resolve_strategy(strategy, n) -> StrategyConfig:
    if isinstance(strategy, StrategyConfig):
        if n is None:
            return strategy
        return StrategyConfig(strategy.kind, n, strategy.coarse_points, strategy.refine_rounds)
    return StrategyConfig(str(strategy), n if n is not None else 1)


def run_estimation(true_state, n=None, strategy="self_learning",
                   imperfections: ImperfectionParams | None = None,
                   seed=None, grid: SphereGrid | None = None):
    """Estimate one qubit state from n single-copy measurements.

    Each measurement consumes a fresh copy of the intended pure state
    passed through the imperfection channel; the Bayesian update itself
    assumes ideal conditions (as the experiment's algorithm did).
    Returns (estimate, fidelity, trajectory) with fidelity
    cos^2(gamma/2) against the intended pure state.
    """
    cfg = _resolve_strategy(strategy, n)
    imperfections = imperfections or ImperfectionParams.ideal()
    rng = as_generator(seed)
    target = as_direction(true_state)
    transmitted = apply_imperfections(target, imperfections)

    dist = uniform_prior(grid)
    directions = np.empty((cfg.n_measurements, 3))
    outcomes = np.empty(cfg.n_measurements, dtype=int)
    for k in range(cfg.n_measurements):
        if cfg.kind == "self_learning":
            m = optimal_next_direction(dist, cfg.coarse_points, cfg.refine_rounds)
        elif cfg.kind == "random":
            m = random_direction(rng)
        else:
            m = _FIXED_AXES[k % 3]
        p_plus = 0.5 * (1.0 + float(transmitted @ m))
        outcome = 1 if rng.random() < p_plus else -1
        dist = bayes_update(dist, m, outcome)
        directions[k] = m
        outcomes[k] = outcome

    estimate, _ = estimate_state(dist)
    fidelity = 0.5 * (1.0 + float(estimate @ target))
    traj = EstimationTrajectory(
        true_state=target, directions=directions, outcomes=outcomes,
        seed=seed if np.isscalar(seed) else None, strategy=cfg.kind,
    )
    return estimate, fidelity, traj


def mean_fidelity_experiment(num_states: int, n: int, strategy="self_learning",
                             imperfections: ImperfectionParams | None = None,
                             seed=None, grid: SphereGrid | None = None):
    """Mean estimation fidelity over an ensemble of random pure states.

    States are drawn uniformly on the sphere (area measure); each state
    gets its own RNG stream derived from the master seed.  Returns
    (mean, stderr, fidelities).
    """
    if num_states < 1:
        raise ValueError(f"num_states must be >= 1, got {num_states}")
    master = as_generator(seed)
    state_seeds = master.integers(0, 2**63, size=num_states, dtype=np.uint64)
    grid = grid or default_grid()

    fidelities = np.empty(num_states)
    for i in range(num_states):
        child = np.random.default_rng(int(state_seeds[i]))
        target = random_direction(child)
        _, fidelities[i], _ = run_estimation(
            target, n, strategy, imperfections, seed=child, grid=grid)
    mean = float(np.mean(fidelities))
    stderr = float(np.std(fidelities, ddof=1) / math.sqrt(num_states)) if num_states > 1 else 0.0
    return mean, stderr, fidelities


def optimal_fidelity_bound(n: int) -> float:
    """(N+1)/(N+2), the collective-measurement optimum for N copies."""
    return (n + 1) / (n + 2)
