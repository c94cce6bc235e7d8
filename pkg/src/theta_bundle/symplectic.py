"""Pullback of Fubini-Study forms and the cohomology class it defines.

The fiber sections theta_k^p(s + omega t, omega) and the base sections
theta_k^q(x + i y, i) give two maps into CP^(k-1).  Pulling back the FS form
of each (normalised so a projective line has area 1) and adding gives a
closed 2-form on R^4 whose periods over the lattice tori should be k times
those of dx^dy + ds^dt.  The periods are compared with the integers obtained
from the multiplier logarithms.

In an affine chart w the FS form is (i / 2 pi) h_{i j} dw_i ^ dw_j-bar with
h_{i j} = ((1 + |w|^2) delta_{i j} - w_i-bar w_j) / (1 + |w|^2)^2, so on the
coordinate pair (e_a, e_b) it equals -(1/pi) Im sum h_{i j} d_a w_i conj(d_b w_j).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .bundles import GENERATORS, Bundle, gamma_action
from .errors import ChartDegenerate, NotACycle
from .theta_core import DEFAULT_POLICY, TruncationPolicy
from .theta_m import base_sections, fiber_sections, log_multiplier

__all__ = [
    "TwoFormMatrix",
    "CycleSpec",
    "ChernEvaluation",
    "PeriodResult",
    "CohomologyReport",
    "REFERENCE_FORM",
    "factor_derivatives",
    "fs_form_chart",
    "fs_form_homogeneous",
    "fs_pullback_field",
    "fs_pullback",
    "pfaffian",
    "nondegeneracy_check",
    "pfaffian_det_mismatch",
    "closedness_residual",
    "standard_cycle",
    "period_integral",
    "chern_pairing",
    "cohomology_class_report",
]

PIVOT_TOL = 1e-10
AXES = "xyst"
_UNIT = np.eye(4)


@dataclass(frozen=True, eq=False)
class TwoFormMatrix:
    """4x4 real antisymmetric matrix in the coordinate order (x, y, s, t)."""

    entries: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.entries, dtype=float)
        if m.shape != (4, 4):
            raise ValueError("a 2-form matrix is 4x4")
        scale = max(float(np.max(np.abs(m))), 1e-300)
        if np.max(np.abs(m + m.T)) > 1e-12 * scale:
            raise ValueError("matrix is not antisymmetric")
        object.__setattr__(self, "entries", m)

    def entry(self, a: str, b: str) -> float:
        return float(self.entries[AXES.index(a), AXES.index(b)])


REFERENCE_FORM = TwoFormMatrix(np.array([[0, 1, 0, 0], [-1, 0, 0, 0], [0, 0, 0, 1], [0, 0, -1, 0]], float))


def _fiber_values(bundle, k, P, policy):
    return fiber_sections(bundle, k, P, policy)


def _base_values(bundle, k, P, policy):
    return base_sections(k, P, policy)


def factor_derivatives(bundle: Bundle, k: int, p, fd_step: float = 1e-5,
                       policy: TruncationPolicy = DEFAULT_POLICY):
    """Values and central differences of the fiber and base section vectors.

    Returns ((F, dF), (G, dG)) with F, G of shape (..., k) and dF, dG of shape
    (..., 4, k) (derivative index in the order x, y, s, t).
    """
    p = np.asarray(p, dtype=float)
    out = []
    for fn in (_fiber_values, _base_values):
        V = fn(bundle, k, p, policy)
        plus = fn(bundle, k, p[..., None, :] + fd_step * _UNIT, policy)
        minus = fn(bundle, k, p[..., None, :] - fd_step * _UNIT, policy)
        out.append((V, (plus - minus) / (2 * fd_step)))
    return tuple(out)


def fs_form_chart(Z: np.ndarray, dZ: np.ndarray) -> np.ndarray:
    """FS form pulled back along Z, computed in the affine chart of the largest coordinate.

    Z has shape (..., N), dZ shape (..., 4, N); returns (..., 4, 4).
    """
    N = Z.shape[-1]
    if N == 1:
        return np.zeros(Z.shape[:-1] + (4, 4))
    piv = np.argmax(np.abs(Z), axis=-1)
    zp = np.take_along_axis(Z, piv[..., None], axis=-1)
    if np.any(np.abs(zp) < PIVOT_TOL):
        raise ChartDegenerate("pivot coordinate is numerically zero")
    dzp = np.take_along_axis(dZ, np.broadcast_to(piv[..., None, None], dZ.shape[:-1] + (1,)), axis=-1)
    w = Z / zp
    dw = (dZ * zp[..., None, :] - dzp * Z[..., None, :]) / (zp[..., None, :] ** 2)
    # drop the pivot column (w_piv = 1, dw_piv = 0) by zeroing it; it then contributes nothing
    keep = np.arange(N) != piv[..., None]
    w = np.where(keep, w, 0)
    dw = np.where(keep[..., None, :], dw, 0)
    r2 = np.sum(np.abs(w) ** 2, axis=-1)[..., None, None]
    # X_ab = sum h_ij dw_a,i conj(dw_b,j) with h = ((1+|w|^2) I - w-bar w^T) / (1+|w|^2)^2
    inner = np.einsum("...ai,...bi->...ab", dw, dw.conj())
    proj = np.einsum("...ai,...i->...a", dw, w.conj())
    X = ((1 + r2) * inner - proj[..., :, None] * proj.conj()[..., None, :]) / (1 + r2) ** 2
    return -X.imag / np.pi


def fs_form_homogeneous(Z: np.ndarray, dZ: np.ndarray) -> np.ndarray:
    """Same form from homogeneous coordinates, without choosing a chart.

    -(1/pi) Im h(d_a Z, d_b Z) with h(u, v) = (<u, v> |Z|^2 - <u, Z><Z, v>) / |Z|^4.
    """
    if Z.shape[-1] == 1:
        return np.zeros(Z.shape[:-1] + (4, 4))
    n2 = np.sum(np.abs(Z) ** 2, axis=-1)[..., None, None]
    inner = np.einsum("...ai,...bi->...ab", dZ, dZ.conj())
    proj = np.einsum("...ai,...i->...a", dZ, Z.conj())
    H = (inner * n2 - proj[..., :, None] * proj.conj()[..., None, :]) / n2**2
    return -H.imag / np.pi


def fs_pullback_field(bundle: Bundle, k: int, P, fd_step: float = 1e-5,
                      policy: TruncationPolicy = DEFAULT_POLICY, chart: bool = True) -> np.ndarray:
    """Pullback of the sum of the two FS forms at many points, shape (..., 4, 4)."""
    (F, dF), (G, dG) = factor_derivatives(bundle, k, P, fd_step, policy)
    form = fs_form_chart if chart else fs_form_homogeneous
    M = form(F, dF) + form(G, dG)
    return 0.5 * (M - np.swapaxes(M, -1, -2))


def fs_pullback(bundle: Bundle, k: int, p, fd_step: float = 1e-5,
                policy: TruncationPolicy = DEFAULT_POLICY) -> TwoFormMatrix:
    p = np.asarray(p, dtype=float)
    if p.shape != (4,):
        raise ValueError("fs_pullback takes a single point; use fs_pullback_field for batches")
    return TwoFormMatrix(fs_pullback_field(bundle, k, p, fd_step, policy))


def pfaffian(M) -> np.ndarray:
    """M01 M23 - M02 M13 + M03 M12 for (..., 4, 4) antisymmetric arrays."""
    M = np.asarray(M, dtype=float)
    return (M[..., 0, 1] * M[..., 2, 3] - M[..., 0, 2] * M[..., 1, 3] + M[..., 0, 3] * M[..., 1, 2])


def nondegeneracy_check(form: TwoFormMatrix) -> float:
    """Pfaffian of the form; nonzero exactly when the form is non-degenerate."""
    return float(pfaffian(form.entries))


def pfaffian_det_mismatch(form: TwoFormMatrix) -> float:
    """|Pf^2 - det| relative to max(Pf^2, |det|, scale^4); should sit at rounding level."""
    m = form.entries
    pf = pfaffian(m)
    det = float(np.linalg.det(m))
    scale = max(pf * pf, abs(det), float(np.max(np.abs(m))) ** 4, 1e-300)
    return abs(pf * pf - det) / scale


def closedness_residual(bundle: Bundle, k: int, p, fd_step: float = 1e-3,
                        policy: TruncationPolicy = DEFAULT_POLICY,
                        inner_step: float = 1e-5) -> float:
    """max over a < b < c of |d_a W_bc - d_b W_ac + d_c W_ab|, relative to max |W|.

    The outer derivatives are central differences with ``fd_step``; the form
    itself is built with ``inner_step``.  The residual is O(fd_step^2).
    """
    p = np.asarray(p, dtype=float)
    W0 = fs_pullback_field(bundle, k, p, inner_step, policy)
    plus = fs_pullback_field(bundle, k, p[None, :] + fd_step * _UNIT, inner_step, policy)
    minus = fs_pullback_field(bundle, k, p[None, :] - fd_step * _UNIT, inner_step, policy)
    dW = (plus - minus) / (2 * fd_step)  # dW[a] = d_a W
    worst = 0.0
    for a, b, c in ((0, 1, 2), (0, 1, 3), (0, 2, 3), (1, 2, 3)):
        val = dW[a, b, c] - dW[b, a, c] + dW[c, a, b]
        worst = max(worst, abs(float(val)))
    scale = max(float(np.max(np.abs(W0))), 1e-300)
    return worst / scale


_CYCLE_AXES = {("a", "b"): (0, 1), ("c", "d"): (2, 3), ("a", "c"): (0, 2), ("b", "d"): (1, 3)}


@dataclass(frozen=True)
class CycleSpec:
    """Torus swept by two commuting lattice translations from a base point.

    The square (u, v) -> base + u e_i + v e_j, with (i, j) the coordinates moved
    by the two generators, closes up into a torus in the quotient when the
    first generator maps the edge u = 0 to u = 1 and the second maps v = 0 to
    v = 1.  Both conditions are checked against a bundle by :meth:`validate`.
    """

    first: str
    second: str
    base: tuple[float, float, float, float] = (0.0, 0.0, 0.0, 0.0)

    @property
    def name(self) -> str:
        return f"T_{self.first}{self.second}"

    @property
    def axes(self) -> tuple[int, int]:
        try:
            return _CYCLE_AXES[(self.first, self.second)]
        except KeyError:
            raise NotACycle(f"no torus parametrisation for generators ({self.first}, {self.second})") from None

    def point(self, u, v) -> np.ndarray:
        u, v = np.broadcast_arrays(np.asarray(u, float), np.asarray(v, float))
        out = np.broadcast_to(np.asarray(self.base, float), u.shape + (4,)).copy()
        i, j = self.axes
        out[..., i] += u
        out[..., j] += v
        return out

    def validate(self, bundle: Bundle, samples: int = 7, tol: float = 1e-12) -> None:
        g1, g2 = GENERATORS[self.first], GENERATORS[self.second]
        if g1.mul(g2, bundle) != g2.mul(g1, bundle):
            raise NotACycle(f"{self.first} and {self.second} do not commute for {bundle}")
        r = (np.arange(samples) + 0.37) / samples
        gap1 = np.max(np.abs(gamma_action(g1, self.point(0.0, r), bundle) - self.point(1.0, r)))
        gap2 = np.max(np.abs(gamma_action(g2, self.point(r, 0.0), bundle) - self.point(r, 1.0)))
        if max(gap1, gap2) > tol:
            raise NotACycle(f"{self.name} does not close up at base point {self.base} for {bundle}")


def standard_cycle(name: str, base=(0.25, 0.35, 0.0, 0.0)) -> CycleSpec:
    """CycleSpec from a name such as "T_ab"."""
    gens = name.removeprefix("T_")
    if len(gens) != 2:
        raise ValueError(f"bad cycle name {name!r}")
    return CycleSpec(gens[0], gens[1], tuple(float(v) for v in base))


@dataclass
class PeriodResult:
    cycle: str
    value: float
    resolution: int


def period_integral(bundle: Bundle, k: int, cycle: CycleSpec, resolution: int = 100,
                    policy: TruncationPolicy = DEFAULT_POLICY, fd_step: float = 1e-5,
                    form: str = "pullback") -> float:
    """Integral of the 2-form over the cycle by the periodic trapezoid rule.

    ``form="reference"`` integrates dx^dy + ds^dt instead of the pullback.
    Nodes sit at cell centres, which avoids the lattice points.
    """
    cycle.validate(bundle)
    if resolution < 1:
        raise ValueError("resolution must be positive")
    i, j = cycle.axes
    g = (np.arange(resolution) + 0.5) / resolution
    U, V = np.meshgrid(g, g, indexing="ij")
    P = cycle.point(U, V).reshape(-1, 4)
    if form == "reference":
        vals = np.full(P.shape[0], REFERENCE_FORM.entries[i, j])
    elif form == "pullback":
        vals = np.empty(P.shape[0])
        chunk = 4096
        for lo in range(0, P.shape[0], chunk):
            W = fs_pullback_field(bundle, k, P[lo: lo + chunk], fd_step, policy)
            vals[lo: lo + chunk] = W[:, i, j]
    else:
        raise ValueError("form must be 'pullback' or 'reference'")
    return float(np.mean(vals))


@dataclass
class ChernEvaluation:
    cycle: CycleSpec
    value: float
    nearest_integer: int
    deviation: float
    branch_residual: float = 0.0


def chern_pairing(bundle: Bundle, cycle: CycleSpec, p=None,
                  policy: TruncationPolicy = DEFAULT_POLICY) -> ChernEvaluation:
    """f_mu(u) + f_lam(mu u) - f_lam(u) - f_mu(lam u) for the cycle's pair (lam, mu).

    The f are the continuous logarithms of :func:`~theta_bundle.theta_m.log_multiplier`.
    ``branch_residual`` is the imaginary part of the combination, which must
    vanish when the branches are consistent.
    """
    lam, mu = cycle.first, cycle.second
    g_lam, g_mu = GENERATORS[lam], GENERATORS[mu]
    if g_lam.mul(g_mu, bundle) != g_mu.mul(g_lam, bundle):
        raise NotACycle(f"{lam} and {mu} do not commute for {bundle}")
    u = np.asarray(cycle.base if p is None else p, dtype=float)
    # log_multiplier raises BranchAmbiguous on a cut
    val = (log_multiplier(bundle, mu, u, policy)
           + log_multiplier(bundle, lam, gamma_action(g_mu, u, bundle), policy)
           - log_multiplier(bundle, lam, u, policy)
           - log_multiplier(bundle, mu, gamma_action(g_lam, u, bundle), policy))
    val = complex(val)
    n = int(round(val.real))
    return ChernEvaluation(cycle, val.real, n, abs(val.real - n), abs(val.imag))


@dataclass
class CohomologyReport:
    bundle: str
    k: int
    resolution: int
    periods: dict[str, float]
    chern: dict[str, int]
    expected: dict[str, float]
    max_deviation: float
    tolerance: float
    verdict: str
    degenerate_factors: bool = False
    notes: list[str] = field(default_factory=list)


def cohomology_class_report(bundle: Bundle, k: int, resolution: int = 100,
                            policy: TruncationPolicy = DEFAULT_POLICY, tolerance: float = 1e-4,
                            base=(0.25, 0.35, 0.0, 0.0)) -> CohomologyReport:
    """Periods of the pullback against k times the Chern pairings.

    Uses T_ab and T_cd for every bundle, plus T_ac and T_bd when both close up
    (the unipotent type with B = I and A fixing the first basis vector).
    """
    names = ["T_ab", "T_cd"]
    notes = []
    for extra in ("T_ac", "T_bd"):
        try:
            standard_cycle(extra, base).validate(bundle)
            names.append(extra)
        except NotACycle:
            pass
    periods, chern, expected = {}, {}, {}
    for name in names:
        cyc = standard_cycle(name, base)
        periods[name] = period_integral(bundle, k, cyc, resolution, policy)
        ce = chern_pairing(bundle, cyc, policy=policy)
        chern[name] = ce.nearest_integer
        if ce.deviation > 1e-9:
            notes.append(f"{name}: multiplier combination {ce.value!r} is not an integer")
        expected[name] = float(k * ce.nearest_integer)
    dev = max(abs(periods[n] - expected[n]) for n in names)
    if k == 1:
        notes.append("k = 1: both factor maps land in CP^0, the pullback vanishes")
    return CohomologyReport(
        bundle=str(bundle),
        k=k,
        resolution=resolution,
        periods=periods,
        chern=chern,
        expected=expected,
        max_deviation=dev,
        tolerance=tolerance,
        verdict="pass" if dev < tolerance else "fail",
        degenerate_factors=(k == 1),
        notes=notes,
    )
