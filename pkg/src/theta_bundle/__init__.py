"""Theta functions on T^2-bundles over T^2 with zero Euler class.

Series evaluation and classical identities live in :mod:`theta_core`, the
bundle table and lattice in :mod:`bundles`, sections and multipliers in
:mod:`theta_m`, the projective embedding in :mod:`embedding` and the pulled
back symplectic form in :mod:`symplectic`.  :mod:`cli` runs the verification
suites from the command line.
"""

__version__ = "0.1.0"

from .bundles import Bundle, bundle_from_type, classify, load_bundle_spec, omega, table_representatives
from .theta_core import DEFAULT_POLICY, ThetaEvaluation, TruncationPolicy, theta11
from .theta_m import multiplier, theta_m

__all__ = [
    "__version__",
    "Bundle",
    "bundle_from_type",
    "classify",
    "load_bundle_spec",
    "omega",
    "table_representatives",
    "DEFAULT_POLICY",
    "ThetaEvaluation",
    "TruncationPolicy",
    "theta11",
    "multiplier",
    "theta_m",
]
