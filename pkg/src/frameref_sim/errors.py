"""Exception hierarchy shared by all modules.

``ValidationFailure`` subclasses map to CLI exit code 1 (bad inputs,
bad config, contract violations caught before work starts);
``RuntimeFailure`` subclasses map to exit code 2 (failures while doing
the work, e.g. a remote backend misbehaving).
"""


class SimError(Exception):
    """Base class for all package errors."""

    exit_code = 1


class ValidationFailure(SimError):
    exit_code = 1


class RuntimeFailure(SimError):
    exit_code = 2


# corpus
class MalformedRecord(ValidationFailure):
    pass


class SchemaViolation(ValidationFailure):
    pass


class UnknownFraming(ValidationFailure):
    pass


class UnknownLabel(ValidationFailure):
    pass


class DuplicateVariant(ValidationFailure):
    pass


class UnknownGroup(ValidationFailure):
    pass


# splitter
class EmptyIndex(ValidationFailure):
    pass


class InvalidRatios(ValidationFailure):
    pass


class CoverageMismatch(ValidationFailure):
    pass


# embedding store
class BadMagic(ValidationFailure):
    pass


class DimensionMismatch(ValidationFailure):
    pass


class TruncatedFile(ValidationFailure):
    pass


class NonFiniteVector(ValidationFailure):
    pass


class UnknownVariant(ValidationFailure):
    pass


class EmptyWindow(ValidationFailure):
    pass


class EmptyCandidates(ValidationFailure):
    pass


# personas
class LabelMismatch(ValidationFailure):
    pass


class EmptySequence(ValidationFailure):
    pass


class NonFiniteLogprob(ValidationFailure):
    pass


class MissingCell(ValidationFailure):
    pass


class Unfittable(ValidationFailure):
    pass


class InvalidTarget(ValidationFailure):
    pass


class Timeout(RuntimeFailure):
    pass


class ProtocolError(RuntimeFailure):
    pass


# environment
class PoolExhausted(RuntimeFailure):
    """Raised by claim selection when no unseen variants remain.

    The trajectory runner converts this into early termination; it only
    escapes to the caller if the pool is empty before the first step.
    """


class EmptyInput(ValidationFailure):
    pass


# cli / config
class ConfigParse(ValidationFailure):
    pass


class UnknownKey(ValidationFailure):
    pass


class DomainError(ValidationFailure):
    pass


class UnknownCommand(ValidationFailure):
    pass
