"""Exception types shared across the package."""


class FreqbinError(Exception):
    """Base class for all package-specific errors."""


class DomainError(FreqbinError, ValueError):
    """An argument lies outside the operation's documented domain."""


class ConfigurationError(FreqbinError, ValueError):
    """A config file, filter program, or scenario request is malformed."""


class NonPhysicalStateError(FreqbinError, ValueError):
    """A (p, V, phi) triple violates positivity of the density matrix."""


class PhaseGateError(FreqbinError, ValueError):
    """A waveplate stack does more than apply a relative phase."""


class FitError(FreqbinError, RuntimeError):
    """Nonlinear fit failed to converge from every start."""


class ReconstructionError(FreqbinError, RuntimeError):
    """Monte Carlo uncertainty propagation rejected too many draws."""
