"""Heisenberg-type theta functions on the Kodaira-Thurston nilmanifold.

For integers k >= 1 and 0 <= m, n < 2k,

    ku(x, y, z, t) = exp(-2 pi i (m y - n (z + x y)) + sigma 4 pi i k z x)
                     * sum_{a, b} exp(2 pi i n y a - 4 pi i k (b y - z a - y (x + a)^2 / 2))
                       * exp(-2 pi (x + a)^2 - 2 pi (t + b)^2)

with sigma = ``prefactor_sign``.  With sigma = +1 the function obeys the four
pseudo-periodicity laws in :func:`ku_periodicity_residuals`; with sigma = -1
the laws in x, y and z fail.  For k = 1, m = n = 0 there is a closed
form in terms of theta[0, 0]:

    ku = exp(sigma 4 pi i z x + 2 pi i y x^2 - 2 pi x^2 - 2 pi t^2)
         * theta00(2 (z + (y + i) x), 2 (y + i)) * theta00(2 (-y + i t), 2 i).

:func:`ku_displayed_rhs` is the shorter product without the exp(2 pi i y x^2)
factor and with sigma = -1; it agrees with the series only where x y = 0.
"""

from __future__ import annotations

import math

import numpy as np

from .theta_core import DEFAULT_POLICY, ThetaEvaluation, TruncationPolicy, theta_char

__all__ = [
    "ku_theta",
    "ku_closed_form",
    "ku_displayed_rhs",
    "ku_cross_check",
    "ku_identity_residual",
    "ku_periodicity_residuals",
]


def _points(p) -> np.ndarray:
    p = np.asarray(p, dtype=float)
    if p.shape[-1] != 4:
        raise ValueError(f"points need a trailing axis of length 4, got shape {p.shape}")
    return p


def _gauss_tail(R: int) -> float:
    """Bound on sum_{|j| > R} exp(-2 pi (j + f)^2) for |f| <= 1/2, window centred on the peak."""
    # nearest excluded offsets are at distance >= R + 1/2
    d = R + 0.5
    return 2 * math.exp(-2 * math.pi * d * d) / (1 - math.exp(-2 * math.pi * (2 * d + 1)))


def ku_theta(p, k: int = 1, m: int = 0, n: int = 0, policy: TruncationPolicy = DEFAULT_POLICY,
             prefactor_sign: int = 1) -> ThetaEvaluation:
    """Double Gaussian series; the tail bound covers both truncated directions."""
    if k < 1 or not (0 <= m < 2 * k and 0 <= n < 2 * k):
        raise ValueError(f"need k >= 1 and 0 <= m, n < 2k, got k={k}, m={m}, n={n}")
    if prefactor_sign not in (1, -1):
        raise ValueError("prefactor_sign must be +1 or -1")
    p = _points(p)
    scalar = p.ndim == 1
    p = np.atleast_2d(p)
    x, y, z, t = (p[:, i] for i in range(4))

    # each 1-d weight has mass <= 1 + 2 sum exp(-2 pi j^2) < 1.01
    R = 1
    while True:
        tail1 = _gauss_tail(R)
        total = 2 * 1.01 * tail1 + tail1 * tail1
        if total <= policy.target_abs_error or 2 * R + 1 >= policy.max_terms:
            break
        R += 1
    j = np.arange(-R, R + 1)
    a = np.round(-x)[:, None] + j[None, :]
    b = np.round(-t)[:, None] + j[None, :]

    xa = x[:, None] + a
    fa = np.exp(2j * np.pi * n * y[:, None] * a
                + 4j * np.pi * k * (z[:, None] * a + y[:, None] * xa * xa / 2)
                - 2 * np.pi * xa * xa)
    tb = t[:, None] + b
    fb = np.exp(-4j * np.pi * k * b * y[:, None] - 2 * np.pi * tb * tb)
    pref = np.exp(-2j * np.pi * (m * y - n * (z + x * y)) + prefactor_sign * 4j * np.pi * k * z * x)
    value = pref * fa.sum(axis=1) * fb.sum(axis=1)
    if scalar:
        return ThetaEvaluation(complex(value[0]), 2 * R + 1, float(total))
    return ThetaEvaluation(value.reshape(p.shape[:-1]), 2 * R + 1, np.full(p.shape[:-1], total))


def _theta00(z, tau, policy):
    return np.asarray(theta_char(0.0, 0.0, z, tau, policy).value)


def _theta00_product(p, policy):
    x, y, z, t = (p[..., i] for i in range(4))
    return (_theta00(2 * (z + (y + 1j) * x), 2 * (y + 1j), policy)
            * _theta00(2 * (-y + 1j * t), 2j, policy))


def ku_closed_form(p, policy: TruncationPolicy = DEFAULT_POLICY, prefactor_sign: int = 1):
    """theta[0, 0] closed form of :func:`ku_theta` for k = 1, m = n = 0."""
    p = _points(p)
    x, y, z, t = (p[..., i] for i in range(4))
    out = np.exp(prefactor_sign * 4j * np.pi * z * x + 2j * np.pi * y * x * x
                 - 2 * np.pi * x * x - 2 * np.pi * t * t) * _theta00_product(p, policy)
    return out[()] if np.ndim(out) == 0 else out


def ku_displayed_rhs(p, policy: TruncationPolicy = DEFAULT_POLICY):
    """exp(-4 pi i z x - 2 pi t^2 - 2 pi x^2) theta00(2(z + (y + i) x), 2(y + i)) theta00(2(-y + i t), 2 i)."""
    p = _points(p)
    x, y, z, t = (p[..., i] for i in range(4))
    out = np.exp(-4j * np.pi * z * x - 2 * np.pi * t * t - 2 * np.pi * x * x) * _theta00_product(p, policy)
    return out[()] if np.ndim(out) == 0 else out


def _relative(lhs, rhs):
    scale = np.maximum(np.maximum(np.abs(lhs), np.abs(rhs)), 1e-300)
    r = np.abs(lhs - rhs) / scale
    return r[()] if np.ndim(r) == 0 else r


def ku_cross_check(p, policy: TruncationPolicy = DEFAULT_POLICY):
    """Relative residual between the short theta[0, 0] product and the series (sigma = -1)."""
    return _relative(ku_theta(p, policy=policy, prefactor_sign=-1).value, ku_displayed_rhs(p, policy))


def ku_identity_residual(p, policy: TruncationPolicy = DEFAULT_POLICY, prefactor_sign: int = 1):
    """Relative residual between the series and :func:`ku_closed_form` with the same sign."""
    return _relative(ku_theta(p, policy=policy, prefactor_sign=prefactor_sign).value,
                     ku_closed_form(p, policy, prefactor_sign))


def ku_periodicity_residuals(p, k: int = 1, m: int = 0, n: int = 0,
                             policy: TruncationPolicy = DEFAULT_POLICY,
                             prefactor_sign: int = 1) -> dict[str, np.ndarray]:
    """Residuals of the pseudo-periodicity laws

    f(x + 1, y, z, t) = f,
    f(x, y + 1, z - x, t) = exp(-2 pi i k x^2) f,
    f(x, y, z + 1, t) = exp(4 pi i k x) f,
    f(x, y, z, t + 1) = exp(4 pi i k y) f,

    each relative to max(|lhs|, |rhs|).  They hold for prefactor_sign = +1.
    """
    p = _points(p)
    x, y, z, t = (p[..., i] for i in range(4))

    def f(q):
        return ku_theta(q, k, m, n, policy, prefactor_sign).value

    base = f(p)
    moves = {
        "x+1": (np.stack([x + 1, y, z, t], -1), 1.0),
        "y+1,z-x": (np.stack([x, y + 1, z - x, t], -1), np.exp(-2j * np.pi * k * x * x)),
        "z+1": (np.stack([x, y, z + 1, t], -1), np.exp(4j * np.pi * k * x)),
        "t+1": (np.stack([x, y, z, t + 1], -1), np.exp(4j * np.pi * k * y)),
    }
    return {name: _relative(f(q), factor * base) for name, (q, factor) in moves.items()}
