"""Exception hierarchy for data and math errors."""


class HoiError(Exception):
    """Base class for all package errors."""


class ZeroNorm(HoiError):
    """A vector with (near-)zero length cannot be normalized."""


class DimensionMismatch(HoiError):
    """Operands or stored tensors disagree on vector dimension."""


class PlaceholderMissing(HoiError):
    """A prompt template lacks a required placeholder token."""


class BadCount(HoiError):
    """A collection does not have the configured number of elements."""


class MissingCategory(HoiError):
    """A vocabulary category has no data in a manifest."""


class MissingSignature(HoiError):
    """No interaction signature loaded for a category."""


class MissingEmbedding(HoiError):
    """A required crop/union embedding is absent from a feature bundle."""

    def __init__(self, image_id, key):
        self.image_id = image_id
        self.key = key
        super().__init__(f"missing embedding for key {key!r} in image {image_id!r}")


class UnknownCategory(HoiError):
    """A category id outside the vocabulary was referenced."""


class EmptySplit(HoiError):
    """An aggregation split contains no evaluable categories."""


class BadMagic(HoiError):
    """Tensor file does not start with the expected magic bytes."""


class BadVersion(HoiError):
    """Tensor file declares an unsupported format version."""


class TruncatedPayload(HoiError):
    """Tensor payload size disagrees with the declared dimensions."""
