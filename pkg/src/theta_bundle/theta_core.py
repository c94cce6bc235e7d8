"""Classical one-variable theta functions with certified truncation.

Every series here has the shape

.. math:: \\sum_n (2\\pi i w c)^r \\exp(\\pi i \\tau w c^2 + 2\\pi i w c (z + b)),
          \\qquad c = n + a,

with weight ``w`` (the degree), characteristic ``[a, b]`` and derivative order
``r``.  The odd function :math:`\\theta_{11}` is ``w = 1, a = b = 1/2``; the
degree-``k`` basis is ``w = k, a = p/k + 1/2, b = 1/2``; the closed forms in
:mod:`theta_bundle.ku` use ``[0, 0]``.

The term magnitudes are Gaussian in ``c`` and centred at
``c0 = -Im z / Im tau``, so the summation window is taken symmetric around
``c0`` and widened until a geometric tail bound drops below the policy target.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy import integrate

from .errors import ContourThroughZero, InvalidTau, NonConvergent, SampleAtZero

__all__ = [
    "TruncationPolicy",
    "DEFAULT_POLICY",
    "ThetaEvaluation",
    "ModularMatrix",
    "ModularCheck",
    "theta_series",
    "theta11",
    "theta11_deriv",
    "theta_char",
    "theta_degree_basis",
    "theta_degree_basis_all",
    "modular_transform_check",
    "heat_equation_residual",
    "winding_number",
    "count_zeros_fundamental_domain",
]

#: Smallest Im(tau) accepted at the user-facing boundary (CLI/config).
MIN_IM_TAU = 0.05


@dataclass(frozen=True)
class TruncationPolicy:
    """Controls truncation of the theta series.

    Attributes
    ----------
    target_abs_error : float
        Absolute bound the discarded tail must satisfy.
    max_terms : int
        Maximal number of summed terms; exceeding it raises NonConvergent.
    """

    target_abs_error: float = 1e-15
    max_terms: int = 4001

    def __post_init__(self):
        if not (self.target_abs_error > 0):
            raise ValueError(f"target_abs_error must be positive, got {self.target_abs_error}")
        if int(self.max_terms) < 1:
            raise ValueError(f"max_terms must be >= 1, got {self.max_terms}")

    def tightened(self, factor: float = 1e-6) -> "TruncationPolicy":
        """A stricter policy, used for truncation-stability checks."""
        return TruncationPolicy(self.target_abs_error * factor, 4 * self.max_terms)


DEFAULT_POLICY = TruncationPolicy()


@dataclass(frozen=True)
class ThetaEvaluation:
    value: complex | np.ndarray
    terms_used: int
    tail_bound: float | np.ndarray


@dataclass(frozen=True)
class ModularMatrix:
    a: int
    b: int
    c: int
    d: int

    def __post_init__(self):
        if self.a * self.d - self.b * self.c != 1:
            raise ValueError(f"ad - bc must be 1 for {self}")

    def factor(self, tau):
        return self.c * tau + self.d

    def act(self, tau):
        return (self.a * tau + self.b) / (self.c * tau + self.d)


IDENTITY = ModularMatrix(1, 0, 0, 1)


@dataclass(frozen=True)
class ModularCheck:
    zeta_estimate: complex
    max_residual: float
    ratios: np.ndarray


def _as_result(value, terms, tail, scalar):
    if scalar:
        return ThetaEvaluation(complex(value), int(terms), float(tail))
    return ThetaEvaluation(value, int(terms), tail)


def _log_tail(A, c0abs, R, order, weight):
    """Log of the geometric tail bound for all omitted terms (both sides)."""
    log_g = A * (c0abs**2 - R**2)
    log_rho = -A * (2 * R + 1)
    if order:
        log_g = log_g + order * np.log(2 * np.pi * weight * (c0abs + R))
        log_rho = log_rho + order * np.log1p(1.0 / (c0abs + R))
    # monotone decay of the bounding envelope on [R, inf) is needed as well
    ok = (log_rho < 0) & (order < 2 * A * R * (c0abs + R))
    with np.errstate(over="ignore", divide="ignore"):
        out = np.log(2.0) + log_g - np.log1p(-np.exp(np.minimum(log_rho, -1e-300)))
    return np.where(ok, out, np.inf)


def theta_series(z, tau, weight: int = 1, char_a: float = 0.5, char_b: float = 0.5,
                 order: int = 0, policy: TruncationPolicy = DEFAULT_POLICY) -> ThetaEvaluation:
    """Evaluate the general weighted theta series (see module docstring).

    ``z`` and ``tau`` broadcast against each other.  The returned ``tail_bound``
    bounds the absolute truncation error of every entry.
    """
    scalar = np.ndim(z) == 0 and np.ndim(tau) == 0
    z, tau = np.broadcast_arrays(np.asarray(z, dtype=complex), np.asarray(tau, dtype=complex))
    v = tau.imag
    if np.any(~(v > 0)):
        raise InvalidTau(f"Im(tau) must be positive, got min {np.min(v) if v.size else v}")
    if order < 0:
        raise ValueError("order must be nonnegative")
    A = np.pi * weight * v
    c0 = -z.imag / v
    c0abs = np.abs(c0)
    log_target = math.log(policy.target_abs_error)
    n_max = (int(policy.max_terms) - 1) // 2

    if z.size == 0:
        return _as_result(np.zeros(z.shape, complex), 1, np.zeros(z.shape), scalar)
    # first guess from the Gaussian factor alone, then walk up
    guess = np.sqrt(c0abs**2 + max(0.0, -log_target + 1.0) / A)
    N = max(0, int(np.floor(np.max(guess))) - 2)
    while True:
        log_tail = _log_tail(A, c0abs, N + 0.5, order, weight)
        if np.max(log_tail) <= log_target:
            break
        N += 1
        if N > n_max:
            raise NonConvergent(
                f"tail bound above {policy.target_abs_error:g} with {policy.max_terms} terms "
                f"(min Im tau = {np.min(v):.3g})"
            )

    n0 = np.rint(c0 - char_a)
    c = (n0 + char_a)[..., None] + np.arange(-N, N + 1)
    zb = (z + char_b)[..., None]
    terms = np.exp(1j * np.pi * weight * tau[..., None] * c * c + 2j * np.pi * weight * c * zb)
    if order:
        terms = terms * (2j * np.pi * weight * c) ** order
    value = terms.sum(axis=-1)
    return _as_result(value, 2 * N + 1, np.exp(log_tail), scalar)


def theta11(z, tau, policy: TruncationPolicy = DEFAULT_POLICY) -> ThetaEvaluation:
    """The odd theta function (characteristic [1/2, 1/2]).

    Equal to ``exp(pi i z + pi i tau/4 + pi i/2) * sum_k exp(2 pi i k z + pi i k(k+1) tau + pi i k)``;
    it changes sign under ``z -> z + 1`` and vanishes on the lattice ``Z + tau Z``.
    """
    return theta_series(z, tau, 1, 0.5, 0.5, 0, policy)


def theta11_deriv(z, tau, order: int, policy: TruncationPolicy = DEFAULT_POLICY) -> ThetaEvaluation:
    """``order``-th z-derivative of :func:`theta11` by term-wise differentiation."""
    if int(order) < 1:
        raise ValueError(f"order must be >= 1, got {order}")
    return theta_series(z, tau, 1, 0.5, 0.5, int(order), policy)


def theta_char(a: float, b: float, z, tau, policy: TruncationPolicy = DEFAULT_POLICY,
               order: int = 0) -> ThetaEvaluation:
    """Theta with characteristic ``[a, b]``: ``sum_n exp(pi i tau (n+a)^2 + 2 pi i (n+a)(z+b))``."""
    return theta_series(z, tau, 1, a, b, order, policy)


def theta_degree_basis(k: int, p: int, z, tau, policy: TruncationPolicy = DEFAULT_POLICY,
                       order: int = 0) -> ThetaEvaluation:
    """``p``-th basis function of the degree-``k`` theta space.

    ``sum_n exp(pi i tau k (n + p/k + 1/2)^2 + 2 pi i k (n + p/k + 1/2)(z + 1/2))``.
    Reduces to :func:`theta11` for ``k = 1``.
    """
    if k < 1:
        raise ValueError(f"degree must be >= 1, got {k}")
    if not 0 <= p < k:
        raise ValueError(f"basis index must lie in [0, {k}), got {p}")
    return theta_series(z, tau, k, p / k + 0.5, 0.5, order, policy)


def theta_degree_basis_all(k: int, z, tau, policy: TruncationPolicy = DEFAULT_POLICY,
                           order: int = 0) -> np.ndarray:
    """All ``k`` basis functions stacked on a new trailing axis."""
    return np.stack([np.asarray(theta_degree_basis(k, p, z, tau, policy, order).value)
                     for p in range(k)], axis=-1)


ThetaFn = Callable[[complex, complex], complex]


def _theta11_value(z, tau, policy=DEFAULT_POLICY):
    return theta11(z, tau, policy).value


def modular_transform_check(z_samples: Sequence[complex], tau: complex, M: ModularMatrix,
                            policy: TruncationPolicy = DEFAULT_POLICY,
                            theta: Callable | None = None) -> ModularCheck:
    """Ratio ``theta(z/j, M tau) / (j^(1/2) exp(pi i c z^2 / j) theta(z, tau))`` with ``j = c tau + d``.

    The ratio is a constant of modulus one; its mean over the samples is
    returned as ``zeta_estimate`` and the largest deviation from the mean as
    ``max_residual``.  The square root is the principal branch.
    """
    theta = theta or (lambda z, t: _theta11_value(z, t, policy))
    z = np.asarray(z_samples, dtype=complex)
    j = M.factor(tau)
    if j == 0:
        raise ValueError("c tau + d vanishes")
    tau_new = M.act(tau)
    base = np.asarray(theta(z, tau))
    scale = np.max(np.abs(base)) if base.size else 1.0
    if np.any(np.abs(base) < 1e-10 * max(1.0, scale)):
        raise SampleAtZero("a sample sits on a zero of theta(., tau)")
    lhs = np.asarray(theta(z / j, tau_new))
    ratios = lhs / (cmath.sqrt(j) * np.exp(1j * np.pi * M.c * z * z / j) * base)
    zeta = complex(np.mean(ratios))
    return ModularCheck(zeta, float(np.max(np.abs(ratios - zeta))), ratios)


def heat_equation_residual(z: complex, tau: complex, fd_step: float,
                           policy: TruncationPolicy = DEFAULT_POLICY) -> float:
    """``|d theta/d tau - (1/(4 pi i)) d^2 theta/dz^2|`` with a central tau-difference."""
    if not tau.imag > fd_step:
        raise InvalidTau("Im(tau) must exceed the finite-difference step")
    h = fd_step
    dtau = (theta11(z, tau + h, policy).value - theta11(z, tau - h, policy).value) / (2 * h)
    d2z = theta11_deriv(z, tau, 2, policy).value
    return abs(dtau - d2z / (4j * np.pi))


def _edges(tau, offset):
    z0 = offset - (1 + tau) / 2
    corners = [z0, z0 + 1, z0 + 1 + tau, z0 + tau, z0]
    return list(zip(corners[:-1], corners[1:]))


def winding_number(tau: complex, policy: TruncationPolicy = DEFAULT_POLICY,
                   offset: complex = 0.0123 + 0.0217j, zero_tol: float = 1e-10) -> float:
    """Argument-principle integral of theta'/theta around a shifted fundamental cell."""
    if not tau.imag > 0:
        raise InvalidTau(f"Im(tau) must be positive, got {tau}")
    total = 0j
    for P, Q in _edges(tau, offset):
        probe = P + np.linspace(0.0, 1.0, 257) * (Q - P)
        if np.min(np.abs(theta11(probe, tau, policy).value)) < zero_tol:
            raise ContourThroughZero(f"|theta| < {zero_tol:g} on the edge {P} -> {Q}")
        dz = Q - P

        def integrand(t, part):
            z = P + t * dz
            val = theta11_deriv(z, tau, 1, policy).value / theta11(z, tau, policy).value * dz
            return val.real if part == 0 else val.imag

        re = integrate.quad(integrand, 0.0, 1.0, args=(0,), limit=200, epsabs=1e-11)[0]
        im = integrate.quad(integrand, 0.0, 1.0, args=(1,), limit=200, epsabs=1e-11)[0]
        total += re + 1j * im
    return (total / (2j * np.pi)).real


def count_zeros_fundamental_domain(tau: complex, policy: TruncationPolicy = DEFAULT_POLICY,
                                   offset: complex = 0.0123 + 0.0217j) -> int:
    """Number of zeros of theta(., tau) in a fundamental parallelogram, with multiplicity."""
    return int(round(winding_number(tau, policy, offset)))
