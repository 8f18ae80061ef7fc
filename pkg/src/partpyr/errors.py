"""Exception hierarchy for the retrieval engine."""


class PartPyrError(Exception):
    """Base class for all engine errors."""


class EmptyInput(PartPyrError):
    pass


class DegenerateInput(PartPyrError):
    pass


class InvalidZone(PartPyrError):
    pass


class UnknownScheme(PartPyrError):
    pass


class EmptyGroup(PartPyrError):
    pass


class SchemeMismatch(PartPyrError):
    pass


class EmptyQuery(PartPyrError):
    pass


class EmptyIndex(PartPyrError):
    pass


class DuplicateRecord(PartPyrError):
    pass


class MissingCategory(PartPyrError):
    pass


class VocabMissing(PartPyrError):
    pass


class InsufficientData(PartPyrError):
    pass
