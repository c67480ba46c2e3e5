"""Sphere discretization and search utilities.

The quadrature grid is a product rule: Gauss-Legendre nodes in
cos(theta) times a uniform trapezoid rule in phi.  Densities produced
by Bayesian updates are trigonometric polynomials of low degree, so
this rule integrates them to machine precision.
"""

import math
from dataclasses import dataclass, field

import numpy as np

GOLDEN_ANGLE = math.pi * (3.0 - math.sqrt(5.0))


@dataclass(frozen=True)
class SphereGrid:
    """Product quadrature grid on the unit sphere.

    Nodes are ordered row-major with theta ascending (outer index) and
    phi ascending (inner index), so node 0 is the lexicographically
    smallest (theta, phi) pair.
    """

    thetas: np.ndarray        # (n_theta,) colatitudes, ascending
    phis: np.ndarray          # (n_phi,) azimuths, ascending from 0
    weights: np.ndarray       # (n_theta*n_phi,) solid-angle weights, sum 4*pi
    units: np.ndarray = field(repr=False)  # (K, 3) node unit vectors

    @classmethod
    def build(cls, n_theta: int = 64, n_phi: int = 128) -> "SphereGrid":
        if n_theta * n_phi < 8:
            raise ValueError(f"grid too coarse: {n_theta}x{n_phi} nodes (need >= 8)")
        x, w = np.polynomial.legendre.leggauss(n_theta)
        order = np.argsort(-x)            # cos(theta) descending => theta ascending
        x, w = x[order], w[order]
        thetas = np.arccos(x)
        phis = np.arange(n_phi) * (2.0 * math.pi / n_phi)
        weights = np.repeat(w, n_phi) * (2.0 * math.pi / n_phi)
        st = np.sin(thetas)[:, None]
        ux = (st * np.cos(phis)[None, :]).ravel()
        uy = (st * np.sin(phis)[None, :]).ravel()
        uz = np.repeat(x, n_phi)
        units = np.column_stack([ux, uy, uz])
        return cls(thetas=thetas, phis=phis, weights=weights, units=units)

    @property
    def size(self) -> int:
        return self.weights.size

    def node_angles(self) -> np.ndarray:
        """(K, 2) array of (theta, phi) per node, in node order."""
        t = np.repeat(self.thetas, self.phis.size)
        p = np.tile(self.phis, self.thetas.size)
        return np.column_stack([t, p])

    def integrate(self, values: np.ndarray) -> float:
        return float(np.dot(self.weights, values))


_DEFAULT_GRID = None


def default_grid() -> SphereGrid:
    """Shared 64x128 grid; cached since builds are not free."""
    global _DEFAULT_GRID
    if _DEFAULT_GRID is None:
        _DEFAULT_GRID = SphereGrid.build()
    return _DEFAULT_GRID


def fibonacci_sphere(n: int) -> np.ndarray:
    """n roughly equidistributed unit vectors (golden-angle spiral)."""
    i = np.arange(n)
    z = 1.0 - (2.0 * i + 1.0) / n
    r = np.sqrt(np.maximum(0.0, 1.0 - z * z))
    phi = i * GOLDEN_ANGLE
    return np.column_stack([r * np.cos(phi), r * np.sin(phi), z])


def fibonacci_cap(center: np.ndarray, radius: float, n: int) -> np.ndarray:
    """n unit vectors covering the spherical cap of angular radius
    `radius` around `center` (golden-angle spiral in the cap)."""
    i = np.arange(n)
    cos_r = math.cos(min(radius, math.pi))
    z = 1.0 - (1.0 - cos_r) * (2.0 * i + 1.0) / (2.0 * n)
    r = np.sqrt(np.maximum(0.0, 1.0 - z * z))
    phi = i * GOLDEN_ANGLE
    pts = np.column_stack([r * np.cos(phi), r * np.sin(phi), z])
    return pts @ _frame_to(center).T


def _frame_to(direction: np.ndarray) -> np.ndarray:
    """Rotation matrix mapping +z to the given unit direction."""
    d = np.asarray(direction, dtype=float)
    z = np.array([0.0, 0.0, 1.0])
    c = float(np.dot(z, d))
    if c > 1.0 - 1e-12:
        return np.eye(3)
    if c < -1.0 + 1e-12:
        return np.diag([1.0, -1.0, -1.0])
    axis = np.cross(z, d)
    axis /= np.linalg.norm(axis)
    angle = math.acos(max(-1.0, min(1.0, c)))
    return rotation_matrix(axis, angle)


def rotation_matrix(axis: np.ndarray, angle: float) -> np.ndarray:
    """Right-handed rotation matrix about a unit axis (Rodrigues form)."""
    x, y, z = np.asarray(axis, dtype=float)
    c, s = math.cos(angle), math.sin(angle)
    cc = 1.0 - c
    return np.array([
        [c + x * x * cc, x * y * cc - z * s, x * z * cc + y * s],
        [y * x * cc + z * s, c + y * y * cc, y * z * cc - x * s],
        [z * x * cc - y * s, z * y * cc + x * s, c + z * z * cc],
    ])


def maximize_on_sphere(objective, coarse: int = 400, rounds: int = 2,
                       cap_points: int = 96, shrink: float = 0.2):
    """Maximize a batch objective over unit directions.

    objective maps an (n, 3) array of unit vectors to an (n,) array of
    values.  A coarse Fibonacci sweep locates the basin, then `rounds`
    local cap grids shrink around the running best.  Returns
    (direction, value, flat) where flat reports whether the coarse sweep
    was constant to within 1e-6 (degenerate objective).
    """
    pts = fibonacci_sphere(coarse)
    vals = objective(pts)
    flat = float(np.max(vals) - np.min(vals)) < 1e-6
    k = int(np.argmax(vals))
    best, best_val = pts[k], float(vals[k])
    radius = 2.0 * math.sqrt(4.0 * math.pi / coarse)
    for _ in range(rounds):
        cand = fibonacci_cap(best, radius, cap_points)
        cand /= np.linalg.norm(cand, axis=1)[:, None]
        vals = objective(cand)
        k = int(np.argmax(vals))
        if vals[k] > best_val:
            best, best_val = cand[k], float(vals[k])
        radius *= shrink
    return best, best_val, flat
