"""Exception types raised across the package."""


class JTWPAError(Exception):
    """Base class for all package errors."""

    #: short machine-readable tag used by the CLI error JSON
    code = "error"


class StopbandError(JTWPAError, ValueError):
    """A frequency lies inside a resonator stopband (no propagating wave)."""

    code = "stopband"

    def __init__(self, freq, message=None):
        self.freq = freq
        super().__init__(message or f"{freq / 1e9:.6f} GHz lies inside a stopband")


class OverdriveError(JTWPAError, ValueError):
    """Pump amplitude |beta| reached 0.25, i.e. pump current >= I_c."""

    code = "overdrive"


class IntegrationError(JTWPAError, RuntimeError):
    code = "integration"


class FitDivergence(JTWPAError, RuntimeError):
    code = "fit_divergence"


class IdentifiabilityError(JTWPAError, ValueError):
    """The data do not constrain all fit parameters."""

    code = "identifiability"


class TableRangeError(JTWPAError, ValueError):
    code = "table_range"


class TableRangeWarning(UserWarning):
    pass


class DegenerateData(JTWPAError, ValueError):
    code = "degenerate_data"


class NonPhysicalVariance(JTWPAError, ValueError):
    """Inferred device-output variance is negative beyond statistical noise."""

    code = "nonphysical_variance"


class LengthMismatch(JTWPAError, ValueError):
    code = "length_mismatch"


class QuantumBoundViolation(JTWPAError, ValueError):
    """Measurement efficiency above unity (system noise below ħω/2k_B)."""

    code = "quantum_bound"


class FrequencyMismatch(JTWPAError, ValueError):
    code = "frequency_mismatch"


class UnwrapError(JTWPAError, ValueError):
    code = "unwrap"


class ConfigError(JTWPAError, ValueError):
    code = "config"
