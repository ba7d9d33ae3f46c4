"""Exception types shared across the package."""


class PhishlocError(Exception):
    """Base class for all package-specific errors."""


class DimensionError(PhishlocError, ValueError):
    """Tensor shapes are incompatible for the requested operation."""


class SequenceTooShortError(PhishlocError, ValueError):
    """Token axis is shorter than the convolution kernel."""


class ConfigError(PhishlocError, ValueError):
    """A configuration value is out of range or unknown."""


class EmptyEmailError(PhishlocError, ValueError):
    """An email has no usable text after normalization."""


class VocabularyError(PhishlocError, ValueError):
    """A token id falls outside the vocabulary."""


class TrainingDivergedError(PhishlocError, RuntimeError):
    """A loss became non-finite during training."""
