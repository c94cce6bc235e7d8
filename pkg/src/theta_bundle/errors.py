"""Exception hierarchy for theta_bundle."""


class ThetaBundleError(Exception):
    """Base class for all library errors."""


class InvalidTau(ThetaBundleError, ValueError):
    """Period outside the upper half plane."""


class NonConvergent(ThetaBundleError, RuntimeError):
    """Series truncation could not meet the requested tail bound within max_terms."""


class SampleAtZero(ThetaBundleError, ValueError):
    """A sample point hits (numerically) a zero of the theta function."""


class ContourThroughZero(ThetaBundleError, ValueError):
    """The argument-principle contour passes too close to a zero."""


class Unclassified(ThetaBundleError, ValueError):
    """Monodromy pair does not match any row of the bundle table."""


class InvalidMonodromy(ThetaBundleError, ValueError):
    """Matrices are not a commuting pair in SL(2, Z)."""


class NonRealPower(ThetaBundleError, ValueError):
    """A real power of a matrix without a real logarithm was requested."""


class NearZeroBase(ThetaBundleError, ZeroDivisionError):
    """The section is numerically zero at the base point of a ratio check."""


class ConstraintViolated(ThetaBundleError, ValueError):
    """Shift tuple violates a summation constraint."""


class AllSectionsVanish(ThetaBundleError, ValueError):
    """Every homogeneous coordinate vanishes at the point."""


class ChartDegenerate(ThetaBundleError, ValueError):
    """Affine chart pivot coordinate is numerically zero."""


class BranchAmbiguous(ThetaBundleError, ValueError):
    """A logarithm argument sits on a branch cut."""


class NotACycle(ThetaBundleError, ValueError):
    """Generators do not commute or the parametrised square does not close up."""
