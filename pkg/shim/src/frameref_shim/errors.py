class ShimError(Exception):
    pass


class ModelLoadError(ShimError):
    """The configured model could not be loaded at startup."""


class BadRequest(ShimError):
    """Malformed judge request (empty fields, unknown template)."""
