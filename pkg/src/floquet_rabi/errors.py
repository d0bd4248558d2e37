"""Exception hierarchy shared by the solver modules and the CLI."""


class ConfigError(ValueError):
    """Invalid or inconsistent physical / truncation parameters."""


class SolverError(RuntimeError):
    """A numerical step failed or produced an untrustworthy result."""


class TruncationError(SolverError):
    """Sideband, Fourier or Fock truncation is too small for the requested accuracy."""


class UnsupportedWaveformError(ConfigError):
    """Requested an analytic construction that only exists for the sine waveform."""
