"""Two-dimensional elasticity tensor of the shallow-shell energy.

The tensor couples the contravariant metric of the middle surface with two
material coefficients.  Besides building and contracting it, this module
verifies its positive-definiteness empirically through the smallest
eigenvalue of its Voigt representation, which is the coercivity constant the
whole energy argument rests on.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .geometry import SurfaceGeometry

# Voigt basis scaled so the Euclidean norm of the strain vector equals the
# componentwise sum of squares over the full symmetric 2x2 matrix.
_ISQ2 = 1.0 / np.sqrt(2.0)
VOIGT_BASIS = np.array(
    [
        [[1.0, 0.0], [0.0, 0.0]],
        [[0.0, 0.0], [0.0, 1.0]],
        [[0.0, _ISQ2], [_ISQ2, 0.0]],
    ]
)


@dataclass(frozen=True)
class Material:
    """Elastic coefficients and half-thickness of the shell."""

    lam: float
    mu: float
    eps: float

    def __post_init__(self):
        if self.lam < 0:
            raise ValueError("lambda must be >= 0")
        if self.mu <= 0:
            raise ValueError("mu must be > 0")
        if self.eps <= 0:
            raise ValueError("half-thickness eps must be > 0")

    @property
    def bulk_factor(self) -> float:
        return 4.0 * self.lam * self.mu / (self.lam + 2.0 * self.mu)


def build_tensor(a_inv: np.ndarray, mat: Material) -> np.ndarray:
    """Elasticity tensor A^{abst} from the inverse metric.

    Works pointwise (input shape (2, 2)) or on node fields (..., 2, 2); the
    result gains four trailing tensor indices.  All 16 components are stored;
    the symmetries are asserted by tests rather than exploited.
    """
    c = mat.bulk_factor
    term_bulk = c * np.einsum("...ab,...st->...abst", a_inv, a_inv)
    term_shear = 2.0 * mat.mu * (
        np.einsum("...as,...bt->...abst", a_inv, a_inv)
        + np.einsum("...at,...bs->...abst", a_inv, a_inv)
    )
    return term_bulk + term_shear


def flat_tensor(mat: Material) -> np.ndarray:
    """The plate tensor: the elasticity tensor at the Euclidean metric."""
    return build_tensor(np.eye(2), mat)


def contract(tensor: np.ndarray, s: np.ndarray, t: np.ndarray):
    """Full contraction A^{abst} s_{st} t_{ab}; bilinear and symmetric."""
    return np.einsum("...abst,...st,...ab->...", tensor, s, t)


def trace_decomposition(a_inv: np.ndarray, s: np.ndarray, mat: Material):
    """Split the elastic quadratic form at strain s into two traces.

    Returns (isotropic, deviatoric): the bulk factor times the squared
    metric trace of s, and 4 mu times the trace of the squared shape matrix
    m = a_inv s.  Their sum equals contract(build_tensor(a_inv, mat), s, s);
    at the plate metric the deviatoric part reduces to 4 mu times the
    Frobenius norm of s.
    """
    m = np.einsum("...sa,...ab->...sb", a_inv, s)
    tr = m[..., 0, 0] + m[..., 1, 1]
    iso = mat.bulk_factor * tr**2
    dev = 4.0 * mat.mu * np.einsum("...ab,...ba->...", m, m)
    return iso, dev


def voigt_matrix(tensor: np.ndarray) -> np.ndarray:
    """Symmetric 3x3 Voigt representation of the quadratic form A:t:t.

    Uses the scaled basis (t11, t22, sqrt(2) t12) so that eigenvalues bound
    the form against the plain componentwise sum of squares.
    """
    return np.einsum("...abst,pst,qab->...pq", tensor, VOIGT_BASIS, VOIGT_BASIS)


def positivity_gap(field: SurfaceGeometry, mat: Material) -> float:
    """Empirical coercivity constant of the weighted elasticity tensor.

    Minimum over nodes of the smallest eigenvalue of the Voigt matrix of
    A^{abst} sqrt(a); a positive value realizes the positive-definiteness
    bound with the area density included.
    """
    tensor = build_tensor(field.a_inv, mat)
    weighted = tensor * field.sqrt_a[..., None, None, None, None]
    eigs = np.linalg.eigvalsh(voigt_matrix(weighted))
    gap = float(eigs.min())
    if gap <= 0:
        raise RuntimeError(
            "elasticity tensor lost positive-definiteness "
            f"(min eigenvalue {gap:g}); geometry and material are inconsistent"
        )
    return gap
