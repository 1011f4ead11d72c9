"""Exception hierarchy shared by every module of the package."""


class OncovirusError(Exception):
    """Base class for all package errors."""


class InputError(OncovirusError, ValueError):
    """An argument violates an operation's precondition."""


class ConfigurationError(OncovirusError, ValueError):
    """A run or sweep configuration is inconsistent or unreadable."""


class UnsupportedConfigurationError(ConfigurationError):
    """The requested builder cannot handle this grid/parameter combination."""


class DomainError(InputError):
    """Parameters fall outside the region where a formula is defined."""


class NumericalError(OncovirusError, ArithmeticError):
    """An iterative method failed to converge or to bracket a root."""

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class BlowUpError(NumericalError):
    """The integrator produced a non-finite or runaway field."""

    def __init__(self, t, norm, field_name="?"):
        super().__init__(f"blow-up in {field_name} at t={t:.17g} (sup-norm {norm:.6g})", norm)
        self.t = t
        self.norm = norm
        self.field_name = field_name
