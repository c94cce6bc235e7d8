"""T^2-bundles over T^2 with zero Euler class.

A bundle is fixed by a commuting pair {A, B} in SL(2, Z); its total space is
R^4 / Gamma with (x, y, s, t) coordinates and generators

    a: (x+1, y, A(s, t)),   b: (x, y+1, B(s, t)),
    c: (x, y, s+1, t),      d: (x, y, s, t+1).

Points are numpy arrays whose last axis holds (x, y, s, t).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path
from typing import Iterable

import numpy as np

from .errors import InvalidMonodromy, NonRealPower, Unclassified

__all__ = [
    "MonodromyPair",
    "Bundle",
    "HyperbolicData",
    "GroupElement",
    "GENERATORS",
    "TABLE_TAGS",
    "classify",
    "bundle_from_type",
    "table_representatives",
    "load_bundle_spec",
    "hyperbolic_data",
    "omega",
    "omega_derivative",
    "omega_transform_check",
    "gamma_action",
    "word_element",
    "relator_words",
    "left_invariant_coframe",
    "reduce_to_cube",
]

Matrix = tuple[tuple[int, int], tuple[int, int]]

TABLE_TAGS = ("A", "B1", "B2", "B3", "B4", "C", "D", "E", "F", "G")

I2: Matrix = ((1, 0), (0, 1))
MINUS_I2: Matrix = ((-1, 0), (0, -1))

_B_ROWS: dict[Matrix, str] = {
    ((0, -1), (1, -1)): "B1",
    ((0, -1), (1, 0)): "B2",
    ((1, -1), (1, 0)): "B3",
    MINUS_I2: "B4",
}
_DEFAULT_HYPERBOLIC: Matrix = ((2, 1), (1, 1))


def _as_matrix(m) -> Matrix:
    arr = np.asarray(m)
    if arr.shape != (2, 2):
        raise InvalidMonodromy(f"expected a 2x2 matrix, got shape {arr.shape}")
    if not np.all(arr == np.round(arr)):
        raise InvalidMonodromy(f"matrix entries must be integers: {m}")
    a = arr.astype(int)
    return ((int(a[0, 0]), int(a[0, 1])), (int(a[1, 0]), int(a[1, 1])))


def _np(m: Matrix) -> np.ndarray:
    return np.array(m, dtype=np.int64)


@dataclass(frozen=True)
class MonodromyPair:
    A: Matrix
    B: Matrix

    def __post_init__(self):
        A, B = _as_matrix(self.A), _as_matrix(self.B)
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "B", B)
        for name, m in (("A", A), ("B", B)):
            if round(np.linalg.det(_np(m))) != 1:
                raise InvalidMonodromy(f"det {name} != 1: {m}")
        if not np.array_equal(_np(A) @ _np(B), _np(B) @ _np(A)):
            raise InvalidMonodromy("A and B do not commute")


@dataclass(frozen=True)
class Bundle:
    """A classified bundle: a table row plus the concrete monodromy pair."""

    tag: str
    A: Matrix
    B: Matrix
    k: int | None = None

    @property
    def alpha(self) -> int:
        return self.A[0][0]

    @property
    def beta(self) -> int:
        return self.A[0][1]

    @property
    def gamma(self) -> int:
        return self.A[1][0]

    @property
    def delta(self) -> int:
        return self.A[1][1]

    @property
    def b_sign(self) -> int:
        """+1 when B = I, -1 when B = -I."""
        return self.B[0][0]

    @property
    def A_np(self) -> np.ndarray:
        return _np(self.A)

    @property
    def B_np(self) -> np.ndarray:
        return _np(self.B)

    def to_dict(self) -> dict:
        out = {"type": self.tag, "A": [list(r) for r in self.A], "B": [list(r) for r in self.B]}
        if self.k is not None:
            out["k"] = self.k
        return out

    def __str__(self):
        return self.tag if self.k is None else f"{self.tag}(k={self.k})"


def classify(pair: MonodromyPair) -> Bundle:
    """Match a monodromy pair against the rows of the bundle table.

    Rows are matched in their normal forms: B must be +-I and A must be one of
    the listed matrices, a unipotent (+-1, k; 0, +-1) with k != 0, or hyperbolic.
    """
    A, B = pair.A, pair.B
    tr = A[0][0] + A[1][1]
    unipotent_k = A[1][0] == 0 and A[0][1] != 0
    if B == I2:
        if A == I2:
            return Bundle("A", A, B)
        if A in _B_ROWS:
            return Bundle(_B_ROWS[A], A, B)
        if unipotent_k and A[0][0] == 1 and A[1][1] == 1:
            return Bundle("C", A, B, A[0][1])
        if unipotent_k and A[0][0] == -1 and A[1][1] == -1:
            return Bundle("D", A, B, A[0][1])
        if abs(tr) > 2:
            return Bundle("F", A, B)
    elif B == MINUS_I2:
        if unipotent_k and A[0][0] == 1 and A[1][1] == 1:
            return Bundle("E", A, B, A[0][1])
        if tr > 2:
            return Bundle("G", A, B)
    raise Unclassified(f"pair A={A}, B={B} matches no row of the table")


def bundle_from_type(tag: str, k: int | None = None, A=None) -> Bundle:
    """Build the table representative for ``tag``.

    ``k`` is required (and nonzero) for C, D, E.  F and G accept an explicit
    hyperbolic ``A`` and default to (2, 1; 1, 1).
    """
    tag = tag.upper()
    if tag not in TABLE_TAGS:
        raise Unclassified(f"unknown bundle type {tag!r}")
    if tag in ("C", "D", "E"):
        if k is None or int(k) == 0:
            raise Unclassified(f"type {tag} needs a nonzero parameter k")
        k = int(k)
    elif k is not None:
        raise Unclassified(f"type {tag} takes no parameter k")
    if A is not None and tag not in ("F", "G"):
        raise Unclassified(f"type {tag} has a fixed monodromy; pass A only for F or G")
    if tag == "A":
        pair = MonodromyPair(I2, I2)
    elif tag in ("B1", "B2", "B3", "B4"):
        pair = MonodromyPair(next(m for m, t in _B_ROWS.items() if t == tag), I2)
    elif tag == "C":
        pair = MonodromyPair(((1, k), (0, 1)), I2)
    elif tag == "D":
        pair = MonodromyPair(((-1, k), (0, -1)), I2)
    elif tag == "E":
        pair = MonodromyPair(((1, k), (0, 1)), MINUS_I2)
    else:
        pair = MonodromyPair(_as_matrix(A) if A is not None else _DEFAULT_HYPERBOLIC,
                             I2 if tag == "F" else MINUS_I2)
    out = classify(pair)
    if out.tag != tag:
        raise Unclassified(f"matrix {pair.A} does not belong to row {tag}")
    return out


def table_representatives() -> list[Bundle]:
    """One bundle per table row (k = 1 for the parametrised rows)."""
    return [bundle_from_type(t, 1 if t in ("C", "D", "E") else None) for t in TABLE_TAGS]


def load_bundle_spec(spec) -> Bundle:
    """Load ``{"A": .., "B": ..}`` or ``{"type": "C", "k": 1}`` from a dict, JSON string or path."""
    if isinstance(spec, (str, Path)):
        text = str(spec)
        if Path(text).is_file():
            text = Path(text).read_text()
        try:
            spec = json.loads(text)
        except json.JSONDecodeError as exc:
            raise Unclassified(f"bundle spec is not valid JSON: {exc}") from None
    if not isinstance(spec, dict):
        raise Unclassified("bundle spec must be a JSON object")
    if "type" in spec:
        A = spec.get("A") if spec["type"].upper() in ("F", "G") else None
        return bundle_from_type(spec["type"], spec.get("k"), A)
    if "A" in spec and "B" in spec:
        return classify(MonodromyPair(spec["A"], spec["B"]))
    raise Unclassified("bundle spec needs either 'type' or both 'A' and 'B'")


@dataclass(frozen=True)
class HyperbolicData:
    """Eigen-data of A^T: A^T e+ = lam e+, A^T e- = e-/lam, u+ v- - u- v+ = 1.

    For trace < -2 the eigenvalues are negative; ``lam`` is then the modulus
    and ``sign`` is -1.
    """

    lam: float
    u_plus: float
    v_plus: float
    u_minus: float
    v_minus: float
    sign: int = 1


@lru_cache(maxsize=None)
def hyperbolic_data(bundle: Bundle) -> HyperbolicData:
    """Closed-form eigensolve of A^T for a hyperbolic A."""
    al, be, ga, de = bundle.alpha, bundle.beta, bundle.gamma, bundle.delta
    tr = al + de
    if abs(tr) <= 2:
        raise ValueError(f"A is not hyperbolic for bundle {bundle}")
    sign = 1 if tr > 0 else -1
    root = math.sqrt(tr * tr - 4)
    mu_plus = (tr + sign * root) / 2  # eigenvalue with modulus > 1
    mu_minus = 1.0 / mu_plus

    def eigvec(mu):
        # A^T = [[al, ga], [be, de]]; (A^T - mu) (u, v) = 0
        if abs(ga) > 0:
            return np.array([ga, mu - al], dtype=float)
        return np.array([mu - de, be], dtype=float)

    e_plus, e_minus = eigvec(mu_plus), eigvec(mu_minus)
    e_plus /= np.linalg.norm(e_plus)
    det = e_plus[0] * e_minus[1] - e_minus[0] * e_plus[1]
    e_minus /= det
    return HyperbolicData(abs(mu_plus), float(e_plus[0]), float(e_plus[1]),
                          float(e_minus[0]), float(e_minus[1]), sign)


def omega(bundle: Bundle, x):
    """Fiber period as a function of the base coordinate x; Im omega > 0 throughout.

    Type A has no entry in the table and uses the constant i.
    """
    x = np.asarray(x, dtype=float)
    tag = bundle.tag
    if tag in ("B1", "B3"):
        out = np.full(x.shape, complex(-0.5, math.sqrt(3) / 2))
    elif tag in ("A", "B2", "B4"):
        out = np.full(x.shape, 1j)
    elif tag in ("C", "E"):
        out = -bundle.k * x + 1j
    elif tag == "D":
        out = bundle.k * x + 1j
    else:
        h = hyperbolic_data(bundle)
        lm, lp = h.lam ** (-x), h.lam**x
        out = (lm * h.v_plus + 1j * lp * h.v_minus) / (lm * h.u_plus + 1j * lp * h.u_minus)
    return out[()] if out.ndim == 0 else out


def omega_derivative(bundle: Bundle, x):
    """d omega / dx, in closed form."""
    x = np.asarray(x, dtype=float)
    tag = bundle.tag
    if tag in ("C", "E"):
        out = np.full(x.shape, -float(bundle.k) + 0j)
    elif tag == "D":
        out = np.full(x.shape, float(bundle.k) + 0j)
    elif tag in ("F", "G"):
        h = hyperbolic_data(bundle)
        L = math.log(h.lam)
        lm, lp = h.lam ** (-x), h.lam**x
        P1 = lm * h.u_plus + 1j * lp * h.u_minus
        P2 = lm * h.v_plus + 1j * lp * h.v_minus
        dP1 = L * (-lm * h.u_plus + 1j * lp * h.u_minus)
        dP2 = L * (-lm * h.v_plus + 1j * lp * h.v_minus)
        out = (dP2 * P1 - P2 * dP1) / (P1 * P1)
    else:
        out = np.zeros(x.shape, complex)
    return out[()] if out.ndim == 0 else out


def omega_transform_check(bundle: Bundle, p) -> tuple[float, float]:
    """Residuals of the Moebius law for omega and of the 1/(-gamma omega + delta) law for s + omega t."""
    p = np.asarray(p, dtype=float)
    x, s, t = p[..., 0], p[..., 2], p[..., 3]
    al, be, ga, de = bundle.alpha, bundle.beta, bundle.gamma, bundle.delta
    w0, w1 = omega(bundle, x), omega(bundle, x + 1)
    j = -ga * w0 + de
    res_omega = np.abs(w1 - (al * w0 - be) / j)
    s2, t2 = al * s + be * t, ga * s + de * t
    res_z = np.abs((s2 + w1 * t2) - (s + w0 * t) / j)
    return float(np.max(res_omega)), float(np.max(res_z))


def _int_power(m: np.ndarray, n: int) -> np.ndarray:
    if n < 0:
        m = np.array([[m[1, 1], -m[0, 1]], [-m[1, 0], m[0, 0]]], dtype=np.int64)
        n = -n
    return np.linalg.matrix_power(m, n)


@dataclass(frozen=True)
class GroupElement:
    """Normal form a^na b^nb c^nc d^nd of an element of Gamma.

    Acting on the left, the element sends (x, y, v) to
    (x + na, y + nb, A^na B^nb (v + (nc, nd))).
    """

    na: int = 0
    nb: int = 0
    nc: int = 0
    nd: int = 0

    def linear_part(self, bundle: Bundle) -> np.ndarray:
        return _int_power(bundle.A_np, self.na) @ _int_power(bundle.B_np, self.nb)

    def mul(self, other: "GroupElement", bundle: Bundle) -> "GroupElement":
        """Group product self * other (other acts first)."""
        L2inv = _int_power(other.linear_part(bundle), -1)
        w = np.array([other.nc, other.nd]) + L2inv @ np.array([self.nc, self.nd])
        return GroupElement(self.na + other.na, self.nb + other.nb, int(w[0]), int(w[1]))

    def inverse(self, bundle: Bundle) -> "GroupElement":
        w = -self.linear_part(bundle) @ np.array([self.nc, self.nd])
        return GroupElement(-self.na, -self.nb, int(w[0]), int(w[1]))

    def act(self, bundle: Bundle, p) -> np.ndarray:
        return gamma_action(self, p, bundle)

    def is_identity(self) -> bool:
        return self == IDENTITY_ELEMENT

    def syllables(self) -> list[tuple[str, int]]:
        """(generator, exponent) pairs, rightmost acting first."""
        return [(g, n) for g, n in (("a", self.na), ("b", self.nb), ("c", self.nc), ("d", self.nd)) if n]


IDENTITY_ELEMENT = GroupElement()
GENERATORS = {
    "a": GroupElement(1, 0, 0, 0),
    "b": GroupElement(0, 1, 0, 0),
    "c": GroupElement(0, 0, 1, 0),
    "d": GroupElement(0, 0, 0, 1),
}


def gamma_action(g: GroupElement, p, bundle: Bundle) -> np.ndarray:
    """Apply g to points p (last axis = x, y, s, t)."""
    p = np.asarray(p, dtype=float)
    L = g.linear_part(bundle).astype(float)
    v = p[..., 2:] + np.array([g.nc, g.nd], dtype=float)
    out = np.empty(p.shape)
    out[..., 0] = p[..., 0] + g.na
    out[..., 1] = p[..., 1] + g.nb
    out[..., 2:] = v @ L.T
    return out


def word_element(word: Iterable[tuple[str, int]], bundle: Bundle) -> GroupElement:
    """Normal form of a word given as (generator, exponent) syllables, read left to right."""
    out = IDENTITY_ELEMENT
    for gen, n in word:
        g = GENERATORS[gen]
        step = g if n > 0 else g.inverse(bundle)
        for _ in range(abs(n)):
            out = out.mul(step, bundle)
    return out


def relator_words(bundle: Bundle) -> dict[str, list[tuple[str, int]]]:
    """Defining relations of Gamma as words equal to the identity.

    [g, h] = g^-1 h^-1 g h; [a, c] = c^(1-delta) d^gamma, [a, d] = c^beta d^(1-alpha),
    plus [a, b] = 1, [c, d] = 1 and b c b^-1 = c^(+-1), b d b^-1 = d^(+-1).
    """
    al, be, ga, de = bundle.alpha, bundle.beta, bundle.gamma, bundle.delta
    sb = bundle.b_sign
    return {
        "[a,c]=c^(1-delta)d^gamma": [("a", -1), ("c", -1), ("a", 1), ("c", 1), ("d", -ga), ("c", de - 1)],
        "[a,d]=c^beta d^(1-alpha)": [("a", -1), ("d", -1), ("a", 1), ("d", 1), ("d", al - 1), ("c", -be)],
        "[a,b]=1": [("a", -1), ("b", -1), ("a", 1), ("b", 1)],
        "[c,d]=1": [("c", -1), ("d", -1), ("c", 1), ("d", 1)],
        "b c b^-1 = c^sign": [("b", 1), ("c", 1), ("b", -1), ("c", -sb)],
        "b d b^-1 = d^sign": [("b", 1), ("d", 1), ("b", -1), ("d", -sb)],
    }


def _is_int(v) -> bool:
    return float(v) == round(float(v))


def left_invariant_coframe(bundle: Bundle, x: float, y: float) -> np.ndarray:
    """Matrix M(x, y) = A^(-x) B^(-y) with (omega_1, omega_2)^T = M (ds, dt)^T.

    Real powers are taken only where a real logarithm exists: identity,
    unipotent A (A^(-x) = I - x (A - I)) and hyperbolic A with positive trace.
    Integer exponents always use exact integer powers.
    """
    x, y = float(x), float(y)
    if _is_int(y):
        By = _int_power(bundle.B_np, -int(round(y))).astype(float)
    elif bundle.b_sign == 1:
        By = np.eye(2)
    else:
        raise NonRealPower(f"(-I)^{-y} has no real value for non-integer y")

    A = bundle.A_np
    if _is_int(x):
        Ax = _int_power(A, -int(round(x))).astype(float)
    elif bundle.tag == "A":
        Ax = np.eye(2)
    elif bundle.tag in ("C", "E"):
        Ax = np.eye(2) - x * (A - np.eye(2))
    elif bundle.tag in ("F", "G") and bundle.alpha + bundle.delta > 2:
        h = hyperbolic_data(bundle)
        E = np.array([[h.u_plus, h.u_minus], [h.v_plus, h.v_minus]])  # columns: eigvecs of A^T
        lam_pow = np.diag([h.lam ** (-x), h.lam**x])
        # A^T = E diag(lam, 1/lam) E^-1  =>  A^-x = E^-T diag(lam^-x, lam^x) E^T
        Ax = np.linalg.inv(E).T @ lam_pow @ E.T
    else:
        raise NonRealPower(f"A^{-x} is not real for bundle {bundle} at non-integer x")
    return Ax @ By


def reduce_to_cube(bundle: Bundle, p, snap: float = 1e-9) -> np.ndarray:
    """Gamma-equivalent representative of p in the half-open cube [0, 1)^4.

    Coordinates within ``snap`` of an integer are snapped first so that
    boundary representatives identify consistently.
    """
    p = np.array(p, dtype=float)

    def fl(v):
        n = np.floor(v)
        r = v - n
        n = np.where(r > 1 - snap, n + 1, n)
        return n, np.where((r < snap) | (r > 1 - snap), n, v)

    nx, p[..., 0] = fl(p[..., 0])
    ny, p[..., 1] = fl(p[..., 1])
    out = np.empty(p.shape)
    flat_p = p.reshape(-1, 4)
    flat_nx, flat_ny = np.asarray(nx).reshape(-1), np.asarray(ny).reshape(-1)
    flat_out = out.reshape(-1, 4)
    for i in range(flat_p.shape[0]):
        g = GroupElement(-int(flat_nx[i]), -int(flat_ny[i]), 0, 0)
        q = gamma_action(g, flat_p[i], bundle)
        ns, q[2] = fl(q[2])
        nt, q[3] = fl(q[3])
        q[2] -= ns
        q[3] -= nt
        flat_out[i] = q
    return out
