"""Analytic immersion catalog and pointwise surface geometry.

Every immersion in the catalog carries hand-coded exact first and second
partial derivatives, so all downstream geometric quantities (metric, second
fundamental form, Christoffel symbols, Gaussian curvature, area density) are
free of numerical differentiation error.  The flat plate is the exact
reference configuration: its geometry evaluates bitwise to 0 and 1.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from functools import cached_property
from types import MappingProxyType

import numpy as np

from .grid import Grid

DEGENERACY_THRESHOLD = 1e-12

_CATALOG = {
    "plate": {},
    "paraboloid": {"t": 0.0, "kappa1": 1.0, "kappa2": 1.0},
    "cylinder_patch": {"t": 0.0},
    "sinusoidal_bump": {"t": 0.0, "m1": 1.0, "m2": 1.0},
}

# Name of the flattening parameter per family: t -> 0 recovers the plate.
SCALE_PARAM = "t"


class ImmersionError(Exception):
    """Raised when a map fails to be an immersion (degenerate tangents)."""


@dataclass(frozen=True)
class Immersion:
    """A catalog surface patch over the rectangle (0, L1) x (0, L2).

    kind selects the family (plate | paraboloid | cylinder_patch |
    sinusoidal_bump); params hold its real parameters.  Families are chosen
    so that every second derivative is analytic and symmetric, and so that
    the scale parameter t interpolates linearly (in C2 distance) to the
    plate at t = 0.
    """

    kind: str
    L1: float = 1.0
    L2: float = 1.0
    params: MappingProxyType = None

    def __post_init__(self):
        if self.kind not in _CATALOG:
            raise ValueError(
                f"unknown immersion kind {self.kind!r}; "
                f"expected one of {sorted(_CATALOG)}"
            )
        defaults = dict(_CATALOG[self.kind])
        given = dict(self.params or {})
        unknown = set(given) - set(defaults)
        if unknown:
            raise ValueError(
                f"unknown parameter(s) {sorted(unknown)} for immersion "
                f"kind {self.kind!r}"
            )
        defaults.update(given)
        if self.kind == "cylinder_patch" and defaults["t"] < 0:
            raise ValueError("cylinder_patch curvature t must be >= 0")
        object.__setattr__(self, "params", MappingProxyType(defaults))

    def with_scale(self, t: float) -> "Immersion":
        """Family member with the flattening parameter replaced by t."""
        if self.kind == "plate":
            if t != 0.0:
                raise ValueError("the plate has no scale parameter")
            return self
        new = dict(self.params)
        new[SCALE_PARAM] = t
        return replace(self, params=new)

    def check_point(self, y: np.ndarray) -> None:
        y = np.asarray(y, dtype=float)
        y1, y2 = y[..., 0], y[..., 1]
        if np.any(y1 < 0) or np.any(y1 > self.L1) or np.any(y2 < 0) or np.any(y2 > self.L2):
            raise ValueError("evaluation point outside the closed domain rectangle")

    def evaluate(self, y: np.ndarray):
        """Value, gradient, and Hessian of the immersion at points y.

        y has shape (..., 2); returns (value, grad, hess) with shapes
        (..., 3), (..., 2, 3), and (..., 2, 2, 3).  The Hessian is stored
        with both index orders filled from the same analytic expression, so
        hess[..., 0, 1, :] == hess[..., 1, 0, :] holds identically.
        """
        self.check_point(y)
        return self._evaluate_unchecked(np.asarray(y, dtype=float))

    def _evaluate_unchecked(self, y: np.ndarray):
        y1, y2 = y[..., 0], y[..., 1]
        base = y.shape[:-1]
        value = np.zeros(base + (3,))
        grad = np.zeros(base + (2, 3))
        hess = np.zeros(base + (2, 2, 3))
        value[..., 0] = y1
        value[..., 1] = y2
        grad[..., 0, 0] = 1.0
        grad[..., 1, 1] = 1.0
        p = self.params

        if self.kind == "plate":
            pass
        elif self.kind == "paraboloid":
            t, k1, k2 = p["t"], p["kappa1"], p["kappa2"]
            value[..., 2] = 0.5 * t * (k1 * y1**2 + k2 * y2**2)
            grad[..., 0, 2] = t * k1 * y1
            grad[..., 1, 2] = t * k2 * y2
            hess[..., 0, 0, 2] = t * k1
            hess[..., 1, 1, 2] = t * k2
        elif self.kind == "cylinder_patch":
            t = p["t"]
            if t > 0:
                # sin(t y)/t and (1 - cos(t y))/t written via sinc for a
                # smooth limit into the plate at t = 0
                value[..., 0] = y1 * np.sinc(t * y1 / np.pi)
                value[..., 2] = 0.5 * t * y1**2 * np.sinc(0.5 * t * y1 / np.pi) ** 2
                grad[..., 0, 0] = np.cos(t * y1)
                grad[..., 0, 2] = np.sin(t * y1)
                hess[..., 0, 0, 0] = -t * np.sin(t * y1)
                hess[..., 0, 0, 2] = t * np.cos(t * y1)
        elif self.kind == "sinusoidal_bump":
            t, m1, m2 = p["t"], p["m1"], p["m2"]
            k1 = m1 * np.pi / self.L1
            k2 = m2 * np.pi / self.L2
            s1, c1 = np.sin(k1 * y1), np.cos(k1 * y1)
            s2, c2 = np.sin(k2 * y2), np.cos(k2 * y2)
            value[..., 2] = t * s1 * s2
            grad[..., 0, 2] = t * k1 * c1 * s2
            grad[..., 1, 2] = t * k2 * s1 * c2
            hess[..., 0, 0, 2] = -t * k1**2 * s1 * s2
            hess[..., 0, 1, 2] = t * k1 * k2 * c1 * c2
            hess[..., 1, 0, 2] = hess[..., 0, 1, 2]
            hess[..., 1, 1, 2] = -t * k2**2 * s1 * s2

        return value, grad, hess


def eval_immersion(imm: Immersion, y) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Analytic (value, grad, hess) of the immersion at a point in the domain."""
    return imm.evaluate(np.asarray(y, dtype=float))


def unit_normal(grad: np.ndarray) -> np.ndarray:
    """Positively oriented unit normal from the two tangent vectors.

    Raises ImmersionError when the tangents are (numerically) parallel.
    """
    cross = np.cross(grad[..., 0, :], grad[..., 1, :])
    norm = np.linalg.norm(cross, axis=-1)
    if np.any(norm < DEGENERACY_THRESHOLD):
        raise ImmersionError(
            "degenerate immersion: |d1 theta x d2 theta| below "
            f"{DEGENERACY_THRESHOLD:g}"
        )
    return cross / norm[..., None]


def fundamental_forms(grad: np.ndarray, hess: np.ndarray, normal: np.ndarray):
    """First and second fundamental forms, inverse metric, and area density.

    Returns (a, a_inv, sqrt_a, b) where a[..., alpha, beta] is the metric,
    a_inv its exact 2x2 inverse, sqrt_a = |d1 theta x d2 theta|, and
    b[..., alpha, beta] the normal projection of the Hessian.
    """
    a = np.einsum("...ak,...bk->...ab", grad, grad)
    det = a[..., 0, 0] * a[..., 1, 1] - a[..., 0, 1] * a[..., 1, 0]
    if np.any(det <= DEGENERACY_THRESHOLD**2):
        raise ImmersionError("singular metric: det(a) not positive")
    a_inv = np.empty_like(a)
    a_inv[..., 0, 0] = a[..., 1, 1] / det
    a_inv[..., 1, 1] = a[..., 0, 0] / det
    a_inv[..., 0, 1] = -a[..., 0, 1] / det
    a_inv[..., 1, 0] = -a[..., 1, 0] / det
    cross = np.cross(grad[..., 0, :], grad[..., 1, :])
    sqrt_a = np.linalg.norm(cross, axis=-1)
    b = np.einsum("...k,...abk->...ab", normal, hess)
    return a, a_inv, sqrt_a, b


def christoffel(grad: np.ndarray, hess: np.ndarray, a_inv: np.ndarray) -> np.ndarray:
    """Surface Christoffel symbols Gamma[..., sigma, alpha, beta].

    Contracts the contravariant tangent vectors a^sigma = a^{sigma nu} d_nu
    theta against the Hessian; symmetry in (alpha, beta) is inherited from
    the Hessian.
    """
    tangent_dot_hess = np.einsum("...nk,...abk->...nab", grad, hess)
    return np.einsum("...sn,...nab->...sab", a_inv, tangent_dot_hess)


def christoffel_from_metric(grad: np.ndarray, hess: np.ndarray, a_inv: np.ndarray) -> np.ndarray:
    """Christoffel symbols from the metric-only (Koszul) formula.

    Independent cross-check for the tangential symbols: uses the analytic
    derivatives of the metric, d_c a_{ab} = hess_{ca}.grad_b + grad_a.hess_{cb}.
    """
    da = np.einsum("...cak,...bk->...cab", hess, grad) + np.einsum(
        "...ak,...cbk->...cab", grad, hess
    )
    koszul = 0.5 * (
        np.einsum("...anb->...nab", da)
        + np.einsum("...bna->...nab", da)
        - np.einsum("...nab->...nab", da)
    )
    return np.einsum("...sn,...nab->...sab", a_inv, koszul)


def gaussian_curvature(a_inv: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Gaussian curvature as the determinant of the shape-operator matrix."""
    m = np.einsum("...as,...sb->...ab", a_inv, b)
    return m[..., 0, 0] * m[..., 1, 1] - m[..., 0, 1] * m[..., 1, 0]


@dataclass
class SurfaceGeometry:
    """All pointwise geometric quantities of an immersion on a grid."""

    grid: Grid
    a: np.ndarray        # metric, (n1, n2, 2, 2)
    a_inv: np.ndarray    # inverse metric
    b: np.ndarray        # second fundamental form
    gamma: np.ndarray    # Christoffel symbols, (n1, n2, sigma, alpha, beta)
    sqrt_a: np.ndarray   # area density
    K: np.ndarray        # Gaussian curvature

    @cached_property
    def is_flat(self) -> bool:
        return bool(
            np.all(self.b == 0.0)
            and np.all(self.gamma == 0.0)
            and np.all(self.sqrt_a == 1.0)
        )


def surface_quantities(imm: Immersion, y: np.ndarray):
    """All pointwise geometric quantities at an arbitrary point array.

    Returns (a, a_inv, b, gamma, sqrt_a, K), each with the leading shape of
    y; raises ImmersionError naming the first offending point index when the
    tangents degenerate.
    """
    _, grad, hess = imm.evaluate(y)
    try:
        normal = unit_normal(grad)
        a, a_inv, sqrt_a, b = fundamental_forms(grad, hess, normal)
    except ImmersionError as exc:
        cross = np.cross(grad[..., 0, :], grad[..., 1, :])
        bad = np.argwhere(np.linalg.norm(cross, axis=-1) < DEGENERACY_THRESHOLD)
        where = tuple(bad[0]) if len(bad) else "unknown"
        raise ImmersionError(f"{exc} at node {where}") from None
    gamma = christoffel(grad, hess, a_inv)
    K = gaussian_curvature(a_inv, b)
    return a, a_inv, b, gamma, sqrt_a, K


def geometry_field(imm: Immersion, grid: Grid) -> SurfaceGeometry:
    """Evaluate every geometric quantity of the immersion at the grid nodes."""
    if not (np.isclose(imm.L1, grid.L1) and np.isclose(imm.L2, grid.L2)):
        raise ValueError("grid rectangle does not match the immersion domain")
    y = np.stack([grid.y1, grid.y2], axis=-1)
    a, a_inv, b, gamma, sqrt_a, K = surface_quantities(imm, y)
    return SurfaceGeometry(grid=grid, a=a, a_inv=a_inv, b=b, gamma=gamma,
                           sqrt_a=sqrt_a, K=K)


def cell_geometry(imm: Immersion, grid: Grid) -> SurfaceGeometry:
    """Geometric quantities at the cell midpoints (membrane collocation)."""
    if not (np.isclose(imm.L1, grid.L1) and np.isclose(imm.L2, grid.L2)):
        raise ValueError("grid rectangle does not match the immersion domain")
    y = np.stack(grid.cell_centers, axis=-1)
    a, a_inv, b, gamma, sqrt_a, K = surface_quantities(imm, y)
    return SurfaceGeometry(grid=grid, a=a, a_inv=a_inv, b=b, gamma=gamma,
                           sqrt_a=sqrt_a, K=K)


def c2_distance(imm: Immersion, ref: Immersion, grid: Grid) -> float:
    """Grid-sampled surrogate of the C2 distance between two immersions.

    Max over nodes of |theta - ref| plus the Euclidean norms of the first
    derivative differences and of the three distinct second derivative
    differences.
    """
    if not (np.isclose(imm.L1, ref.L1) and np.isclose(imm.L2, ref.L2)):
        raise ValueError("immersions live on different domains")
    y = np.stack([grid.y1, grid.y2], axis=-1)
    v1, g1, h1 = imm.evaluate(y)
    v2, g2, h2 = ref.evaluate(y)
    total = np.linalg.norm(v1 - v2, axis=-1)
    for alpha in range(2):
        total += np.linalg.norm(g1[..., alpha, :] - g2[..., alpha, :], axis=-1)
    for alpha, beta in ((0, 0), (0, 1), (1, 1)):
        total += np.linalg.norm(
            h1[..., alpha, beta, :] - h2[..., alpha, beta, :], axis=-1
        )
    return float(np.max(total))
