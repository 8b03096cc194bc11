"""Exception hierarchy shared across the toolkit."""


class OntomatchError(Exception):
    """Base class for all toolkit errors."""


class ValidationError(OntomatchError):
    """Input data violates a documented invariant."""


class KbParseError(ValidationError):
    """A knowledge-base or alignment file could not be parsed.

    Carries the 1-based line number when the failure is line-local.
    """

    def __init__(self, message: str, line: int | None = None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class DuplicateIdError(ValidationError):
    """Two entities in one ontology share an id."""

    def __init__(self, entity_id: str):
        super().__init__(f"duplicate entity id: {entity_id!r}")
        self.entity_id = entity_id


class UnresolvableIdError(ValidationError):
    """A referenced entity id does not exist in its ontology."""

    def __init__(self, entity_id: str):
        super().__init__(f"unresolvable entity id: {entity_id!r}")
        self.entity_id = entity_id
