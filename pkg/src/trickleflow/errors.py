"""Shared error types, mapped onto HTTP statuses by the API layer."""


class NotFoundError(KeyError):
    pass


class ConflictError(RuntimeError):
    pass


class GoneError(RuntimeError):
    """Entity existed but was deleted."""


class IntegrityError(RuntimeError):
    """Catalogue and filesystem disagree."""


class NoCapacityError(RuntimeError):
    """No registered machine has an eligible queue."""
