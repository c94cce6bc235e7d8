"""The map phi_k into CP^(k^2 - 1) by the degree-k basis sections.

Coordinates are the k^2 products theta_k^p(s + omega t, omega) theta_k^q(x + i y, i)
in (p, q) lexicographic order.  Derivatives use central differences; an
analytic jet built from the heat equation serves as a cross-check.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .bundles import GENERATORS, Bundle, gamma_action, omega, omega_derivative
from .errors import AllSectionsVanish
from .sampling import cube_grid
from .theta_core import DEFAULT_POLICY, TruncationPolicy, theta_degree_basis_all
from .theta_m import base_sections, basis_sections, fiber_argument

__all__ = [
    "ProjectivePoint",
    "RankReport",
    "EquivarianceReport",
    "InjectivityReport",
    "phi_k",
    "phi_k_coords",
    "fs_distance",
    "fs_distance_matrix",
    "coordinate_derivatives",
    "jacobian_tilde",
    "jacobian_tilde_analytic",
    "rank_check",
    "equivariance_check",
    "injectivity_scan",
]

VANISH_TOL = 1e-12
_UNIT = np.eye(4)


@dataclass(frozen=True, eq=False)
class ProjectivePoint:
    """Homogeneous coordinates; two points are equal when their FS distance is zero."""

    coords: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.coords, dtype=complex)
        if c.ndim != 1 or not np.any(c != 0):
            raise ValueError("a projective point needs a nonzero coordinate vector")
        object.__setattr__(self, "coords", c)

    def normalized(self) -> np.ndarray:
        return self.coords / np.linalg.norm(self.coords)

    def same_as(self, other: "ProjectivePoint", tol: float = 1e-12) -> bool:
        return fs_distance(self, other) < tol


@dataclass
class RankReport:
    point: tuple[float, float, float, float]
    singular_values: list[float]
    rank_at_tol: int
    pivot: int
    fs_singular_values: list[float] = field(default_factory=list)
    tolerance: float = 1e-6


@dataclass
class EquivarianceReport:
    generator: str
    induced_ratios: list[complex]
    is_projectively_scalar: bool
    spread: float
    pattern_spread: float
    tolerance: float
    points_used: int


@dataclass
class InjectivityReport:
    min_offdiagonal_fs_distance: float
    closest_pair: tuple[int, int]
    collisions: list[tuple[int, int, float]]
    n_points: int
    tolerance: float


def phi_k_coords(bundle: Bundle, k: int, p, policy: TruncationPolicy = DEFAULT_POLICY) -> np.ndarray:
    """Raw homogeneous coordinates, shape (..., k^2); raises if all vanish somewhere."""
    V = basis_sections(bundle, k, p, policy)
    norms = np.linalg.norm(V, axis=-1)
    if np.any(norms < VANISH_TOL):
        bad = np.asarray(p, dtype=float).reshape(-1, 4)[np.argmin(norms.reshape(-1))]
        raise AllSectionsVanish(f"all degree-{k} sections vanish at {tuple(bad)}")
    return V


def phi_k(bundle: Bundle, k: int, p, policy: TruncationPolicy = DEFAULT_POLICY) -> ProjectivePoint:
    p = np.asarray(p, dtype=float)
    if p.shape != (4,):
        raise ValueError("phi_k takes a single point; use phi_k_coords for batches")
    return ProjectivePoint(phi_k_coords(bundle, k, p, policy))


def _fs_from_unit(u: np.ndarray, v: np.ndarray) -> np.ndarray:
    """FS distance between unit vectors (last axis); atan2 form is accurate near 0 and pi/2."""
    ip = np.sum(np.conj(u) * v, axis=-1)
    perp = v - ip[..., None] * u
    return np.arctan2(np.linalg.norm(perp, axis=-1), np.abs(ip))


def fs_distance(P, Q) -> float:
    """arccos(|<P, Q>| / (|P| |Q|)), in [0, pi/2]."""
    u = P.coords if isinstance(P, ProjectivePoint) else np.asarray(P, dtype=complex)
    v = Q.coords if isinstance(Q, ProjectivePoint) else np.asarray(Q, dtype=complex)
    nu, nv = np.linalg.norm(u), np.linalg.norm(v)
    if nu == 0 or nv == 0:
        raise ValueError("projective points must be nonzero")
    return float(_fs_from_unit(u / nu, v / nv))


def fs_distance_matrix(V: np.ndarray) -> np.ndarray:
    """Pairwise FS distances between the rows of V."""
    U = V / np.linalg.norm(V, axis=1, keepdims=True)
    G = np.clip(np.abs(U @ U.conj().T), 0.0, 1.0)
    D = np.arccos(G)
    # refine nearly coincident pairs where arccos loses precision
    close = np.argwhere(np.triu(G > 1 - 1e-6, 1))
    if close.size:
        d = _fs_from_unit(U[close[:, 0]], U[close[:, 1]])
        D[close[:, 0], close[:, 1]] = d
        D[close[:, 1], close[:, 0]] = d
    np.fill_diagonal(D, 0.0)
    return D


def coordinate_derivatives(bundle: Bundle, k: int, p, fd_step: float = 1e-5,
                           policy: TruncationPolicy = DEFAULT_POLICY) -> tuple[np.ndarray, np.ndarray]:
    """Section values Z (..., k^2) and central differences dZ (..., 4, k^2) in x, y, s, t."""
    p = np.asarray(p, dtype=float)
    Z = basis_sections(bundle, k, p, policy)
    shifts = fd_step * _UNIT
    plus = basis_sections(bundle, k, p[..., None, :] + shifts, policy)
    minus = basis_sections(bundle, k, p[..., None, :] - shifts, policy)
    return Z, (plus - minus) / (2 * fd_step)


def _tilde_rows(Z, dZ, w):
    dx, dy, ds, dt = (dZ[..., j, :] for j in range(4))
    w = np.asarray(w)[..., None]
    return np.stack([Z, dx - 1j * dy, ds + dt / w, dx + 1j * dy, ds - dt / w], axis=-2)


def jacobian_tilde(bundle: Bundle, k: int, p, fd_step: float = 1e-5,
                   policy: TruncationPolicy = DEFAULT_POLICY) -> np.ndarray:
    """5 x k^2 matrix: values, then (d_x - i d_y), (d_s + d_t/omega), (d_x + i d_y), (d_s - d_t/omega).

    The last row annihilates anything holomorphic in s + omega t, so it vanishes
    up to discretisation error.
    """
    p = np.asarray(p, dtype=float)
    Z, dZ = coordinate_derivatives(bundle, k, p, fd_step, policy)
    return _tilde_rows(Z, dZ, omega(bundle, p[..., 0]))


def jacobian_tilde_analytic(bundle: Bundle, k: int, p,
                            policy: TruncationPolicy = DEFAULT_POLICY) -> np.ndarray:
    """Same rows from term-wise derivatives of the series.

    The omega-derivative of the fiber factor F is F_zz / (4 pi i k) by the heat
    equation, so d_x F = omega'(x) (t F_z + F_zz / (4 pi i k)).
    """
    p = np.asarray(p, dtype=float)
    z, w = fiber_argument(bundle, p)
    F = theta_degree_basis_all(k, z, w, policy, 0)
    Fz = theta_degree_basis_all(k, z, w, policy, 1)
    Fzz = theta_degree_basis_all(k, z, w, policy, 2)
    G = base_sections(k, p, policy, 0)
    Gw = base_sections(k, p, policy, 1)
    wp = np.asarray(omega_derivative(bundle, p[..., 0]))[..., None]
    t = p[..., 3][..., None]

    def outer(f, g):
        out = f[..., :, None] * g[..., None, :]
        return out.reshape(out.shape[:-2] + (k * k,))

    fx = wp * (t * Fz + Fzz / (4j * np.pi * k))
    Z = outer(F, G)
    dx = outer(fx, G) + outer(F, Gw)
    dy = 1j * outer(F, Gw)
    ds = outer(Fz, G)
    dt = np.asarray(w)[..., None] * ds
    dZ = np.stack([dx, dy, ds, dt], axis=-2)
    return _tilde_rows(Z, dZ, w)


def _chart_jacobian(Z: np.ndarray, dZ: np.ndarray, pivot: int) -> np.ndarray:
    """Real (2(N-1)) x 4 Jacobian of w_i = Z_i / Z_pivot (i != pivot)."""
    zp = Z[pivot]
    dW = (dZ * zp - np.outer(dZ[:, pivot], Z)) / zp**2  # (4, N)
    dW = np.delete(dW, pivot, axis=1).T  # (N-1, 4)
    return np.concatenate([dW.real, dW.imag], axis=0)


def _fs_metric(Z: np.ndarray, dZ: np.ndarray) -> np.ndarray:
    """Pullback of the FS metric (real 4x4) from homogeneous coordinates."""
    n2 = np.vdot(Z, Z).real
    P = dZ - np.outer(dZ @ Z.conj(), Z) / n2
    return (P.conj() @ P.T).real / n2


def rank_check(bundle: Bundle, k: int, p, tolerance: float = 1e-6,
               policy: TruncationPolicy = DEFAULT_POLICY, fd_step: float = 1e-5,
               pivot: int | str = "max") -> RankReport:
    """Singular values of the affine-chart Jacobian of phi_k at p.

    ``pivot`` is "max" (largest |coordinate|), "second" or an explicit index.
    The chart singular values depend on the pivot; the rank does not.
    ``fs_singular_values`` are the square roots of the eigenvalues of the
    pulled-back FS metric, which are chart-free.
    """
    p = np.asarray(p, dtype=float)
    Z, dZ = coordinate_derivatives(bundle, k, p, fd_step, policy)
    if np.linalg.norm(Z) < VANISH_TOL:
        raise AllSectionsVanish(f"all degree-{k} sections vanish at {tuple(p)}")
    order = np.argsort(-np.abs(Z), kind="stable")
    if pivot == "max":
        piv = int(order[0])
    elif pivot == "second":
        piv = int(order[min(1, len(order) - 1)])
    else:
        piv = int(pivot)
    if Z.size == 1:
        sv = np.zeros(4)
        fs = np.zeros(4)
    else:
        J = _chart_jacobian(Z, dZ, piv)
        sv = np.zeros(4)
        s = np.linalg.svd(J, compute_uv=False)
        sv[: s.size] = s[:4]
        ev = np.clip(np.linalg.eigvalsh(_fs_metric(Z, dZ)), 0.0, None)
        fs = np.sqrt(ev)[::-1]
    return RankReport(
        point=tuple(float(v) for v in p),
        singular_values=[float(v) for v in sv],
        rank_at_tol=int(np.sum(sv > tolerance)),
        pivot=piv,
        fs_singular_values=[float(v) for v in fs],
        tolerance=tolerance,
    )


def equivariance_check(bundle: Bundle, k: int, gen: str, grid, tolerance: float = 1e-7,
                       policy: TruncationPolicy = DEFAULT_POLICY) -> EquivarianceReport:
    """Coordinatewise ratios sigma_i(g p) / sigma_i(p) over the grid.

    ``spread`` is the largest deviation of the ratios from their mean at a
    point, relative to the largest ratio there (zero when g acts by a projective scalar).  ``pattern_spread``
    measures how much the normalised pattern r_i / r_ref varies across the grid,
    so a constant diagonal action shows a large spread but a small pattern
    spread.  Coordinates with |sigma_i(p)| below 1e-8 times the largest are
    skipped.  The report is descriptive.
    """
    P = np.atleast_2d(np.asarray(grid, dtype=float))
    V = basis_sections(bundle, k, P, policy)
    W = basis_sections(bundle, k, gamma_action(GENERATORS[gen], P, bundle), policy)
    scale = np.max(np.abs(V), axis=1, keepdims=True)
    mask = np.abs(V) > 1e-8 * scale
    R = np.where(mask, W / np.where(mask, V, 1.0), np.nan)

    mean = np.nanmean(R, axis=1)
    dev = np.abs(R - mean[:, None]) / np.nanmax(np.abs(R), axis=1, keepdims=True)
    spread = float(np.nanmax(dev)) if np.any(mask) else float("nan")

    # reference coordinate: one that is usable at every point, if any
    usable = np.all(mask, axis=0)
    if np.any(usable):
        ref = int(np.argmax(usable))
        pattern = R / R[:, ref: ref + 1]
        centre = np.nanmean(pattern, axis=0)
        pattern_spread = float(np.nanmax(np.abs(pattern - centre)))
    else:
        pattern_spread = float("nan")
    first = R[0]
    return EquivarianceReport(
        generator=gen,
        induced_ratios=[complex(v) for v in first],
        is_projectively_scalar=bool(spread < tolerance),
        spread=spread,
        pattern_spread=pattern_spread,
        tolerance=tolerance,
        points_used=int(P.shape[0]),
    )


def injectivity_scan(bundle: Bundle, k: int, grid_n: int, policy: TruncationPolicy = DEFAULT_POLICY,
                     interior: bool = False, tolerance: float = 1e-6) -> InjectivityReport:
    """Pairwise FS distances of the images of a grid_n^4 grid on the cube.

    The half-open cube [0, 1)^4 contains exactly one point of every Gamma-orbit,
    so distinct grid points are distinct points of M.  ``interior=True`` uses
    cell centres instead of the i/n grid.  Collisions are pairs closer than
    ``tolerance``, sorted by index.
    """
    P = cube_grid(grid_n, interior=interior)
    n = P.shape[0]
    if k == 1:
        collisions = [(i, j, 0.0) for i in range(n) for j in range(i + 1, n)]
        return InjectivityReport(0.0, (0, 1) if n > 1 else (0, 0), collisions, n, tolerance)
    V = phi_k_coords(bundle, k, P, policy)
    D = fs_distance_matrix(V)
    iu = np.triu_indices(n, 1)
    d = D[iu]
    m = int(np.argmin(d)) if d.size else 0
    hits = np.nonzero(d < tolerance)[0]
    collisions = [(int(iu[0][h]), int(iu[1][h]), float(d[h])) for h in hits]
    return InjectivityReport(
        min_offdiagonal_fs_distance=float(d[m]) if d.size else float("inf"),
        closest_pair=(int(iu[0][m]), int(iu[1][m])) if d.size else (0, 0),
        collisions=collisions,
        n_points=n,
        tolerance=tolerance,
    )
