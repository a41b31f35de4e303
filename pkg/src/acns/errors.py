"""Exception types raised across the package."""


class NegativePowerOfMeanMode(ValueError):
    """A negative (homogeneous) power was applied to a field with a mean mode."""


class CflViolation(RuntimeError):
    """The advective CFL number of an explicit substep exceeds one."""


class NonFinite(RuntimeError):
    """A spectral coefficient became NaN or infinite during time stepping."""


class NotSolenoidal(ValueError):
    """An incompressible operation received a velocity with nonzero divergence."""


class RelationViolated(ValueError):
    """Exponents do not satisfy the Sobolev embedding relation 2/p + 3/q = 4."""


class SupportOverflow(ValueError):
    """A test function's support does not fit inside the periodic box or time window."""


class SchemaError(ValueError):
    """Configuration failed validation; ``path`` names the offending field."""

    def __init__(self, path, message):
        self.path = path
        self.message = message
        super().__init__(f"{path}: {message}")
