"""Theta functions on the total space and their automorphy factors.

``theta_m(p) = theta(s + omega(x) t, omega(x)) * theta(x + i y, i)`` on R^4.
Under a generator g of Gamma it picks up a nonzero factor e_g(p) (the
multiplier); the closed forms live in :func:`multiplier` and their continuous
logarithms in :func:`log_multiplier`.  Products of shifted copies and the
degree-k basis built from :func:`~theta_bundle.theta_core.theta_degree_basis`
give sections of the k-th tensor power.
"""

from __future__ import annotations

import cmath
from dataclasses import dataclass
from functools import lru_cache
from typing import Sequence

import numpy as np

from .bundles import GENERATORS, Bundle, GroupElement, gamma_action, omega, word_element
from .errors import BranchAmbiguous, ConstraintViolated, NearZeroBase
from .theta_core import (
    DEFAULT_POLICY,
    ModularMatrix,
    ThetaEvaluation,
    TruncationPolicy,
    modular_transform_check,
    theta11,
    theta_degree_basis,
    theta_degree_basis_all,
)

__all__ = [
    "ShiftPair",
    "SectionIndex",
    "fiber_argument",
    "theta_m",
    "zeta_constant",
    "multiplier",
    "log_multiplier",
    "element_multiplier",
    "element_log_multiplier",
    "word_multiplier",
    "verify_multiplier",
    "cocycle_check",
    "relator_check",
    "shifted_theta_m",
    "solve_shift_constraints",
    "product_section",
    "shift_transport_factor",
    "degree_law_residual",
    "fiber_sections",
    "base_sections",
    "basis_section",
    "basis_sections",
]

NEAR_ZERO = 1e-10


def _points(p) -> np.ndarray:
    p = np.asarray(p, dtype=float)
    if p.shape[-1] != 4:
        raise ValueError(f"points need a trailing axis of length 4, got shape {p.shape}")
    return p


def _product_eval(factors: Sequence[ThetaEvaluation]) -> ThetaEvaluation:
    """Product of evaluations; the bound is prod(|f| + tb) - prod(|f|)."""
    value = 1
    upper = 1
    exact = 1
    for f in factors:
        value = value * f.value
        upper = upper * (np.abs(f.value) + f.tail_bound)
        exact = exact * np.abs(f.value)
    terms = max(f.terms_used for f in factors)
    tail = upper - exact
    if np.ndim(value) == 0:
        return ThetaEvaluation(complex(value), terms, float(tail))
    return ThetaEvaluation(value, terms, tail)


def fiber_argument(bundle: Bundle, p) -> tuple[np.ndarray, np.ndarray]:
    """(s + omega(x) t, omega(x)) at p."""
    p = _points(p)
    w = omega(bundle, p[..., 0])
    return p[..., 2] + w * p[..., 3], w


def _base_argument(p) -> np.ndarray:
    return p[..., 0] + 1j * p[..., 1]


def theta_m(bundle: Bundle, p, policy: TruncationPolicy = DEFAULT_POLICY) -> ThetaEvaluation:
    p = _points(p)
    z, w = fiber_argument(bundle, p)
    return _product_eval([theta11(z, w, policy), theta11(_base_argument(p), 1j, policy)])


@lru_cache(maxsize=None)
def zeta_constant(bundle: Bundle, policy: TruncationPolicy = DEFAULT_POLICY) -> complex:
    """Constant factor of the a-multiplier, estimated once per bundle.

    It is the modular constant for the matrix (alpha, -beta; -gamma, delta)
    acting on the fiber period, times the -1 coming from the base factor.
    """
    x0 = 0.3
    tau = complex(omega(bundle, x0))
    M = ModularMatrix(bundle.alpha, -bundle.beta, -bundle.gamma, bundle.delta)
    samples = np.array([0.21 + 0.13j, 0.37 - 0.08j, -0.29 + 0.31j, 0.12 + 0.05j, 0.44 + 0.27j])
    check = modular_transform_check(samples, tau, M, policy)
    if check.max_residual > 1e-9:
        raise RuntimeError(f"modular ratio not constant for {bundle}: {check.max_residual:g}")
    return -check.zeta_estimate


def _a_factor(bundle: Bundle, x):
    return -bundle.gamma * omega(bundle, x) + bundle.delta


def multiplier(bundle: Bundle, gen: str, p, policy: TruncationPolicy = DEFAULT_POLICY):
    """Closed-form automorphy factor e_gen(p) with theta_m(gen p) = e_gen(p) theta_m(p)."""
    p = _points(p)
    if gen == "a":
        z, _ = fiber_argument(bundle, p)
        m = _a_factor(bundle, p[..., 0])
        out = zeta_constant(bundle, policy) * np.sqrt(m) * np.exp(-1j * np.pi * bundle.gamma * z * z / m)
    elif gen == "b":
        w = _base_argument(p)
        out = -bundle.b_sign * np.exp(-2j * np.pi * w + np.pi)
    elif gen == "c":
        out = np.full(p.shape[:-1], -1.0 + 0j)
    elif gen == "d":
        z, om = fiber_argument(bundle, p)
        out = -np.exp(-2j * np.pi * z - 1j * np.pi * om)
    else:
        raise ValueError(f"unknown generator {gen!r}")
    return out[()] if np.ndim(out) == 0 else out


def log_multiplier(bundle: Bundle, gen: str, p, policy: TruncationPolicy = DEFAULT_POLICY):
    """Continuous f_gen on R^4 with e_gen = exp(2 pi i f_gen).

    f_c = 1/2; f_d = 1/2 - (s + omega t) - omega/2;
    f_b = 1/2 - (x + i y) - i/2 for B = I and -(x + i y) - i/2 for B = -I;
    f_a = (Log zeta + Log(m)/2) / (2 pi i) - gamma (s + omega t)^2 / (2 m), m = -gamma omega + delta.
    Log(m) is continuous in x because m stays off the negative axis when gamma != 0
    and is constant when gamma = 0.
    """
    p = _points(p)
    if gen == "a":
        z, _ = fiber_argument(bundle, p)
        m = np.asarray(_a_factor(bundle, p[..., 0]))
        if bundle.gamma != 0 and np.any((m.real <= 0) & (np.abs(m.imag) < 1e-12)):
            raise BranchAmbiguous("-gamma omega + delta touches the negative real axis")
        zeta = zeta_constant(bundle, policy)
        out = (cmath.log(zeta) + 0.5 * np.log(m + 0j)) / (2j * np.pi) - bundle.gamma * z * z / (2 * m)
    elif gen == "b":
        w = _base_argument(p)
        out = (0.5 if bundle.b_sign == 1 else 0.0) - w - 0.5j
    elif gen == "c":
        out = np.full(p.shape[:-1], 0.5 + 0j)
    elif gen == "d":
        z, om = fiber_argument(bundle, p)
        out = 0.5 - z - om / 2
    else:
        raise ValueError(f"unknown generator {gen!r}")
    return out[()] if np.ndim(out) == 0 else out


def _power_multiplier(bundle, gen, n, p, policy):
    g = GENERATORS[gen]
    out = np.ones(p.shape[:-1], complex)
    q = p
    if n > 0:
        for _ in range(n):
            out = out * multiplier(bundle, gen, q, policy)
            q = gamma_action(g, q, bundle)
    else:
        ginv = g.inverse(bundle)
        for _ in range(-n):
            q = gamma_action(ginv, q, bundle)
            out = out / multiplier(bundle, gen, q, policy)
    return out, q


def word_multiplier(bundle: Bundle, word, p, policy: TruncationPolicy = DEFAULT_POLICY):
    """Multiplier of a word (syllables read left to right, rightmost acting first).

    Telescoped with e_{gh}(p) = e_g(h p) e_h(p).
    """
    q = _points(p)
    out = np.ones(q.shape[:-1], complex)
    for gen, n in reversed(list(word)):
        f, q = _power_multiplier(bundle, gen, n, q, policy)
        out = out * f
    return out[()] if out.ndim == 0 else out


def element_multiplier(bundle: Bundle, g: GroupElement, p, policy: TruncationPolicy = DEFAULT_POLICY):
    """Multiplier of a group element, telescoped along its normal form."""
    return word_multiplier(bundle, g.syllables(), p, policy)


def _as_element(g) -> GroupElement:
    return GENERATORS[g] if isinstance(g, str) else g


def verify_multiplier(bundle: Bundle, gen, p, policy: TruncationPolicy = DEFAULT_POLICY,
                      normalize: str = "base"):
    """|theta_m(g p) - e_g(p) theta_m(p)| / |theta_m(p)|.

    ``normalize="max"`` divides by max(|theta_m(g p)|, |e_g(p) theta_m(p)|)
    instead, which is the meaningful scale for long composite elements where
    theta_m(g p) can be many orders of magnitude larger than theta_m(p).
    """
    if normalize not in ("base", "max"):
        raise ValueError("normalize must be 'base' or 'max'")
    p = _points(p)
    g = _as_element(gen)
    base = theta_m(bundle, p, policy).value
    if np.any(np.abs(base) < NEAR_ZERO):
        raise NearZeroBase("theta_m vanishes numerically at a base point; perturb p")
    moved = theta_m(bundle, gamma_action(g, p, bundle), policy).value
    e = element_multiplier(bundle, g, p, policy)
    scale = np.abs(base) if normalize == "base" else np.maximum(np.abs(moved), np.abs(e * base))
    res = np.abs(moved - e * base) / scale
    return res[()] if np.ndim(res) == 0 else res


def _power_log_multiplier(bundle, gen, n, p, policy):
    g = GENERATORS[gen]
    out = np.zeros(p.shape[:-1], complex)
    q = p
    if n > 0:
        for _ in range(n):
            out = out + log_multiplier(bundle, gen, q, policy)
            q = gamma_action(g, q, bundle)
    else:
        ginv = g.inverse(bundle)
        for _ in range(-n):
            q = gamma_action(ginv, q, bundle)
            out = out - log_multiplier(bundle, gen, q, policy)
    return out, q


def element_log_multiplier(bundle: Bundle, g: GroupElement, p, policy: TruncationPolicy = DEFAULT_POLICY):
    """f_g with e_g = exp(2 pi i f_g), telescoped along the normal form.

    Unlike :func:`element_multiplier` this stays finite when e_g itself
    over- or underflows.
    """
    q = _points(p)
    out = np.zeros(q.shape[:-1], complex)
    for gen, n in reversed(g.syllables()):
        f, q = _power_log_multiplier(bundle, gen, n, q, policy)
        out = out + f
    return out[()] if out.ndim == 0 else out


def cocycle_check(bundle: Bundle, g1: GroupElement, g2: GroupElement, p,
                  policy: TruncationPolicy = DEFAULT_POLICY):
    """Relative residual |e_{g1}(g2 p) e_{g2}(p) / e_{g1 g2}(p) - 1|.

    Evaluated through the logarithms: with D = f_{g1}(g2 p) + f_{g2}(p) - f_{g1 g2}(p)
    the residual is |exp(2 pi i D) - 1|, D reduced modulo the integers first.
    """
    p = _points(p)
    g1, g2 = _as_element(g1), _as_element(g2)
    D = (element_log_multiplier(bundle, g1, gamma_action(g2, p, bundle), policy)
         + element_log_multiplier(bundle, g2, p, policy)
         - element_log_multiplier(bundle, g1.mul(g2, bundle), p, policy))
    D = D - np.round(D.real)
    res = np.abs(np.expm1(2j * np.pi * D))
    return res[()] if np.ndim(res) == 0 else res


def relator_check(bundle: Bundle, word, p, policy: TruncationPolicy = DEFAULT_POLICY):
    """For a word equal to the identity in Gamma: |e_word(p) - 1| (and the word must fix p)."""
    p = _points(p)
    g = word_element(word, bundle)
    if not g.is_identity():
        raise ValueError(f"word is not a relator: normal form {g}")
    res = np.abs(word_multiplier(bundle, word, p, policy) - 1.0)
    return res[()] if np.ndim(res) == 0 else res


@dataclass(frozen=True)
class ShiftPair:
    """Shift (lam, mu) acting by z -> z + lam on the fiber and w -> w + mu on the base."""

    lam: complex
    mu: complex


def shifted_theta_m(bundle: Bundle, shift: ShiftPair, p, policy: TruncationPolicy = DEFAULT_POLICY) -> ThetaEvaluation:
    p = _points(p)
    z, w = fiber_argument(bundle, p)
    return _product_eval([theta11(z + shift.lam, w, policy),
                          theta11(_base_argument(p) + shift.mu, 1j, policy)])


def solve_shift_constraints(alpha: complex, beta: complex) -> tuple[complex, complex]:
    """(gamma_s, delta_s) with alpha + beta + gamma_s + delta_s = 0 and the squares summing to 0.

    gamma_s, delta_s are the roots of x^2 + S x + (S^2 + alpha^2 + beta^2)/2 with S = alpha + beta.
    """
    S = alpha + beta
    disc = cmath.sqrt(S * S - 2 * (S * S + alpha * alpha + beta * beta))
    return (-S + disc) / 2, (-S - disc) / 2


def _check_constraints(bundle, shifts, tol):
    lam_sum = sum(s.lam for s in shifts)
    mu_sum = sum(s.mu for s in shifts)
    problems = []
    if abs(lam_sum) > tol:
        problems.append(f"sum of fiber shifts = {lam_sum:.3g} (|.| = {abs(lam_sum):.3g})")
    if abs(mu_sum) > tol:
        problems.append(f"sum of base shifts = {mu_sum:.3g} (|.| = {abs(mu_sum):.3g})")
    if bundle.gamma != 0:
        sq = sum(s.lam * s.lam for s in shifts)
        if abs(sq) > tol:
            problems.append(f"sum of squared fiber shifts = {sq:.3g} (|.| = {abs(sq):.3g})")
    if problems:
        raise ConstraintViolated("; ".join(problems))


def product_section(bundle: Bundle, shifts: Sequence[ShiftPair], p,
                    policy: TruncationPolicy = DEFAULT_POLICY, check: bool = True,
                    tol: float = 1e-10) -> ThetaEvaluation:
    """Product of shifted theta_m over the shift tuple.

    The fiber and base shifts must each sum to zero; for gamma != 0 the
    squared fiber shifts must also sum to zero.  ``check=False`` skips the
    validation (used for negative controls).
    """
    if not shifts:
        raise ValueError("need at least one shift")
    if check:
        _check_constraints(bundle, shifts, tol)
    return _product_eval([shifted_theta_m(bundle, s, p, policy) for s in shifts])


def shift_transport_factor(bundle: Bundle, gen: str, p):
    """Factor m_g with prod_j theta_m shifted by lam_j, evaluated at g p,
    equal to e_g(p)^k times the product with fiber shifts m_g lam_j at p.

    m_a = -gamma omega(x) + delta, m_b = +-1 (the sign of B), m_c = m_d = 1.
    """
    p = _points(p)
    if gen == "a":
        return _a_factor(bundle, p[..., 0])
    if gen == "b":
        return np.full(p.shape[:-1], float(bundle.b_sign) + 0j)
    if gen in ("c", "d"):
        return np.ones(p.shape[:-1], complex)
    raise ValueError(f"unknown generator {gen!r}")


def degree_law_residual(bundle: Bundle, shifts: Sequence[ShiftPair], gen: str, p,
                        policy: TruncationPolicy = DEFAULT_POLICY, transported: bool = False):
    """Relative residual of P(g p) = e_g(p)^k P(p) for the shifted product P.

    With ``transported=True`` the right-hand product uses the fiber shifts
    multiplied by :func:`shift_transport_factor`.
    """
    p = _points(p)
    k = len(shifts)
    moved = product_section(bundle, shifts, gamma_action(GENERATORS[gen], p, bundle), policy, check=False).value
    e = multiplier(bundle, gen, p, policy)
    if transported:
        m = shift_transport_factor(bundle, gen, p)
        z, w = fiber_argument(bundle, p)
        base = 1.0
        for s in shifts:
            base = base * theta11(z + m * s.lam, w, policy).value * theta11(_base_argument(p) + s.mu, 1j, policy).value
    else:
        base = product_section(bundle, shifts, p, policy, check=False).value
    expected = e**k * base
    scale = np.maximum(np.abs(moved), np.abs(expected))
    if np.any(scale < NEAR_ZERO):
        raise NearZeroBase("product section vanishes at a sample point")
    res = np.abs(moved - expected) / scale
    return res[()] if np.ndim(res) == 0 else res


@dataclass(frozen=True)
class SectionIndex:
    k: int
    p: int
    q: int

    def __post_init__(self):
        if self.k < 1 or not (0 <= self.p < self.k and 0 <= self.q < self.k):
            raise ValueError(f"invalid section index {self}")


def fiber_sections(bundle: Bundle, k: int, p, policy: TruncationPolicy = DEFAULT_POLICY,
                   order: int = 0) -> np.ndarray:
    """Degree-k fiber thetas theta_k^j(s + omega t, omega), stacked on the last axis."""
    z, w = fiber_argument(bundle, p)
    return theta_degree_basis_all(k, z, w, policy, order)


def base_sections(k: int, p, policy: TruncationPolicy = DEFAULT_POLICY, order: int = 0) -> np.ndarray:
    """Degree-k base thetas theta_k^j(x + i y, i), stacked on the last axis."""
    p = _points(p)
    return theta_degree_basis_all(k, _base_argument(p), 1j, policy, order)


def basis_section(bundle: Bundle, idx: SectionIndex, p, policy: TruncationPolicy = DEFAULT_POLICY) -> ThetaEvaluation:
    z, w = fiber_argument(bundle, p)
    p = _points(p)
    return _product_eval([theta_degree_basis(idx.k, idx.p, z, w, policy),
                          theta_degree_basis(idx.k, idx.q, _base_argument(p), 1j, policy)])


def basis_sections(bundle: Bundle, k: int, p, policy: TruncationPolicy = DEFAULT_POLICY) -> np.ndarray:
    """All k^2 basis sections in (p, q) lexicographic order on the last axis."""
    f = fiber_sections(bundle, k, p, policy)
    g = base_sections(k, p, policy)
    out = f[..., :, None] * g[..., None, :]
    return out.reshape(out.shape[:-2] + (k * k,))
