"""Affine qubit channels s' = M s + v and their tomography.

Channels act on Bloch vectors; phase damping shrinks the components
transverse to its axis by 1 - 2*lambda, depolarization shrinks
everything, rotations are orthogonal M.  Tomography reconstructs
(M, v) from the probabilities P_ij of reading +i after sending the +j
eigenstate through the box:

    M_ij = 2 P_ij - P_iz - P_i(-z)
    v_i  = P_iz + P_i(-z) - 1
"""

import math
from dataclasses import dataclass

import numpy as np

from .bloch import as_generator
from .sphere import fibonacci_sphere, rotation_matrix

_AXES = {
    "x": np.array([1.0, 0.0, 0.0]),
    "y": np.array([0.0, 1.0, 0.0]),
    "z": np.array([0.0, 0.0, 1.0]),
}
_PREPARATIONS = ("x", "y", "z", "-z")


class ChannelInvalidError(ValueError):
    """An affine map sent a state outside the Bloch ball."""


@dataclass(frozen=True)
class AffineChannel:
    """A qubit channel in Bloch form: 3x3 matrix m plus offset v."""

    m: np.ndarray
    v: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.m, dtype=float)
        v = np.asarray(self.v, dtype=float)
        if m.shape != (3, 3) or v.shape != (3,):
            raise ValueError(f"need a 3x3 matrix and 3-vector, got {m.shape} and {v.shape}")
        object.__setattr__(self, "m", m)
        object.__setattr__(self, "v", v)
        m.flags.writeable = False
        v.flags.writeable = False

    def __call__(self, s: np.ndarray) -> np.ndarray:
        return self.m @ np.asarray(s, dtype=float) + self.v

    def is_physical(self, samples: int = 1000, tol: float = 1e-9) -> bool:
        """Necessary ball-containment check on sampled unit inputs."""
        images = fibonacci_sphere(samples) @ self.m.T + self.v
        return bool(np.max(np.linalg.norm(images, axis=1)) <= 1.0 + tol)


def identity_channel() -> AffineChannel:
    return AffineChannel(np.eye(3), np.zeros(3))


def axis_from_polar(theta: float, phi: float = 0.0) -> np.ndarray:
    st = math.sin(theta)
    return np.array([st * math.cos(phi), st * math.sin(phi), math.cos(theta)])


def _unit_axis(axis) -> np.ndarray:
    axis = np.asarray(axis, dtype=float)
    norm = np.linalg.norm(axis)
    if norm < 1e-12:
        raise ValueError("axis must be a nonzero vector")
    return axis / norm


def phase_damping(lam: float, axis=(0.0, 0.0, 1.0)) -> AffineChannel:
    """Shrink the plane normal to `axis` by 1 - 2*lam; the axis itself
    is untouched.  For axis = z this is diag(1-2lam, 1-2lam, 1)."""
    if not (0.0 <= lam <= 0.5):
        raise ValueError(f"lam must lie in [0, 1/2], got {lam}")
    n = _unit_axis(axis)
    r = _rotation_from_z(n)
    m = r @ np.diag([1.0 - 2.0 * lam, 1.0 - 2.0 * lam, 1.0]) @ r.T
    return AffineChannel(m, np.zeros(3))


def depolarizing(lam: float) -> AffineChannel:
    """s -> (1 - 2*lam) s."""
    if not (0.0 <= lam <= 0.5):
        raise ValueError(f"lam must lie in [0, 1/2], got {lam}")
    return AffineChannel((1.0 - 2.0 * lam) * np.eye(3), np.zeros(3))


def rotation_channel(axis, angle: float) -> AffineChannel:
    return AffineChannel(rotation_matrix(_unit_axis(axis), angle), np.zeros(3))


def affine_shift(v) -> AffineChannel:
    """Pure displacement of the ball (building block for amplitude-damping
    style maps; combine with contractions to stay physical)."""
    return AffineChannel(np.eye(3), np.asarray(v, dtype=float))


def _rotation_from_z(n: np.ndarray) -> np.ndarray:
    """Rotation taking +z to the unit vector n."""
    c = float(n[2])
    if c > 1.0 - 1e-12:
        return np.eye(3)
    if c < -1.0 + 1e-12:
        return np.diag([1.0, -1.0, -1.0])
    axis = np.cross([0.0, 0.0, 1.0], n)
    axis /= np.linalg.norm(axis)
    return rotation_matrix(axis, math.acos(max(-1.0, min(1.0, c))))


def compose(first: AffineChannel, second: AffineChannel) -> AffineChannel:
    """Channel applying `first` and then `second`."""
    return AffineChannel(second.m @ first.m, second.m @ first.v + second.v)


def apply(channel: AffineChannel, s: np.ndarray, tol: float = 1e-9) -> np.ndarray:
    """M s + v, guarding the Bloch ball."""
    out = channel(s)
    if np.linalg.norm(out) > 1.0 + tol:
        raise ChannelInvalidError(
            f"channel output left the Bloch ball: |s'| = {np.linalg.norm(out)}")
    return out


def _prepared_state(label: str) -> np.ndarray:
    if label == "-z":
        return -_AXES["z"]
    return _AXES[label]


def _born(s_out: np.ndarray, axis_label: str) -> float:
    return 0.5 * (1.0 + float(s_out @ _AXES[axis_label]))


def _as_map(black_box):
    if not callable(black_box):
        raise TypeError("black box must be an AffineChannel or a state -> state callable")
    return black_box


def tomography_exact(black_box) -> AffineChannel:
    """Reconstruct (M, v) from exact Born probabilities.

    Sends the +x, +y, +z, -z eigenstates through the box and measures
    each output along x, y, z.  black_box may be an AffineChannel or any
    state -> state callable that is affine on the ball.
    """
    box = _as_map(black_box)
    probs = {
        (i, j): _born(box(_prepared_state(j)), i)
        for j in _PREPARATIONS for i in "xyz"
    }
    return _assemble(probs)


def _assemble(probs: dict) -> AffineChannel:
    m = np.empty((3, 3))
    v = np.empty(3)
    for row, i in enumerate("xyz"):
        p_z, p_mz = probs[(i, "z")], probs[(i, "-z")]
        v[row] = p_z + p_mz - 1.0
        for col, j in enumerate("xyz"):
            m[row, col] = 2.0 * probs[(i, j)] - p_z - p_mz
    return AffineChannel(m, v)


@dataclass(frozen=True)
class TomographyErrors:
    """1-sigma binomial error propagated to each reconstructed entry."""

    m_err: np.ndarray
    v_err: np.ndarray


def tomography_sampled(black_box, shots_per_setting: int, seed) -> tuple[AffineChannel, TomographyErrors]:
    """Tomography from finite counts.

    Each of the 12 (preparation, analysis axis) settings is sampled
    shots_per_setting times; probabilities become relative frequencies
    and the per-entry standard errors follow from binomial propagation
    through the linear reconstruction formulas.
    """
    if shots_per_setting < 1:
        raise ValueError(f"shots_per_setting must be >= 1, got {shots_per_setting}")
    rng = as_generator(seed)
    box = _as_map(black_box)
    freqs, variances = {}, {}
    for j in _PREPARATIONS:
        out = box(_prepared_state(j))
        for i in "xyz":
            p = _born(out, i)
            k = rng.binomial(shots_per_setting, p)
            f = k / shots_per_setting
            freqs[(i, j)] = f
            variances[(i, j)] = f * (1.0 - f) / shots_per_setting
    channel = _assemble(freqs)
    m_err = np.empty((3, 3))
    v_err = np.empty(3)
    for row, i in enumerate("xyz"):
        var_z = variances[(i, "z")] + variances[(i, "-z")]
        v_err[row] = math.sqrt(var_z)
        for col, j in enumerate("xyz"):
            if j == "z":
                # M_iz = P_iz - P_i(-z): the 2P_ij and -P_iz terms share
                # one frequency, so only two independent samples enter
                m_err[row, col] = math.sqrt(var_z)
            else:
                m_err[row, col] = math.sqrt(4.0 * variances[(i, j)] + var_z)
    return channel, TomographyErrors(m_err=m_err, v_err=v_err)


def channel_from_spec(spec: dict) -> AffineChannel:
    """Build a channel from a JSON-style spec dict.

    Variants: phase_damping {lambda, axis: [theta, phi]},
    depolarizing {lambda}, rotation {axis: [theta, phi], angle},
    composition {parts: [spec, ...]} (applied in list order), and
    raw {m: 3x3, v: 3} which must pass the ball-containment check.
    Unknown keys are rejected.
    """
    if not isinstance(spec, dict):
        raise ValueError("channel spec must be a JSON object")
    variant = spec.get("variant")
    allowed = {
        "phase_damping": {"variant", "lambda", "axis"},
        "depolarizing": {"variant", "lambda"},
        "rotation": {"variant", "axis", "angle"},
        "composition": {"variant", "parts"},
        "raw": {"variant", "m", "v"},
    }
    if variant not in allowed:
        raise ValueError(f"unknown channel variant {variant!r}")
    extra = set(spec) - allowed[variant]
    if extra:
        raise ValueError(f"unknown keys in channel spec: {sorted(extra)}")

    if variant == "phase_damping":
        axis = spec.get("axis", [0.0, 0.0])
        return phase_damping(float(spec["lambda"]), axis_from_polar(*map(float, axis)))
    if variant == "depolarizing":
        return depolarizing(float(spec["lambda"]))
    if variant == "rotation":
        axis = spec.get("axis", [0.0, 0.0])
        return rotation_channel(axis_from_polar(*map(float, axis)), float(spec["angle"]))
    if variant == "composition":
        parts = spec.get("parts", [])
        if not parts:
            raise ValueError("composition needs a non-empty parts list")
        channel = channel_from_spec(parts[0])
        for part in parts[1:]:
            channel = compose(channel, channel_from_spec(part))
        return channel
    channel = AffineChannel(np.array(spec["m"], dtype=float), np.array(spec["v"], dtype=float))
    if not channel.is_physical():
        raise ChannelInvalidError("raw (m, v) maps some pure states outside the Bloch ball")
    return channel
