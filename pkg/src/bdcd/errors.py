"""Shared exception types."""


class BdcdError(Exception):
    """Base class for all package errors."""


class InvalidShapeError(BdcdError):
    """Tensor or layer received incompatible dimensions."""


class InvalidParameterError(BdcdError):
    """Out-of-range hyperparameter or option value."""


class EmptyDatasetError(BdcdError):
    """Dataset directory or item list holds no usable samples."""


class ImageDecodeError(BdcdError):
    """Image bytes could not be decoded."""


class ModelFormatError(BdcdError):
    """Model file violates the BDCM layout."""


class ModelVersionError(ModelFormatError):
    """Model file declares an unsupported format version."""


class ModelCorruptionError(ModelFormatError):
    """Model file checksum does not match its contents."""


class ServiceStartupError(BdcdError):
    """Inference service could not start on the requested address."""
