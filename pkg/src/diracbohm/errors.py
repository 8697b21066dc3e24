"""Exception types shared across the package."""


class DiracBohmError(Exception):
    """Base class for all errors raised by this package."""


class NearNodeError(DiracBohmError):
    """psi^dag psi fell below the node floor, so the guidance law is unusable."""


class ZeroSpinorError(DiracBohmError):
    """An operation that divides by psi^dag psi received a zero spinor."""


class NotUnitError(DiracBohmError):
    """A direction vector deviates from unit length beyond tolerance."""


class ZeroWaveVectorError(DiracBohmError):
    """Plane-wave spinor formulas divide by |k| and are singular at k = 0."""


class MixedMassError(DiracBohmError):
    """Superposed wave functions must share a single mass parameter."""


class NodeAtOriginError(DiracBohmError):
    """A momentum-space quadrature grid touches k = 0."""


class SingularSystemError(DiracBohmError):
    """A linear system expected to be regular was numerically singular."""


class StepFailureError(DiracBohmError):
    """The trajectory integrator could not meet its tolerances or sample cap."""


class DegenerateDensityError(DiracBohmError):
    """The sampling density is numerically zero over the requested region."""


class TooManyLostError(DiracBohmError):
    """Too large a fraction of transported trajectories had to be excluded."""


class ConfigError(DiracBohmError):
    """A scenario configuration failed schema validation."""
