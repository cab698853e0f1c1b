"""Exception hierarchy shared across the toolkit."""


class VocalignError(Exception):
    """Base class for all toolkit errors."""


class AtomFileError(VocalignError):
    """Malformed or inconsistent atom file."""


class PairFileError(VocalignError):
    """Malformed pair file or unresolvable atom reference."""


class VectorFileError(VocalignError):
    """Malformed embedding vector file."""


class ConfigError(VocalignError):
    """Invalid experiment configuration."""


class TrainingError(VocalignError):
    """Training could not proceed (bad data, divergence, checkpoint mismatch)."""


class EncoderError(VocalignError):
    """A pluggable encoder failed or violated its contract."""
