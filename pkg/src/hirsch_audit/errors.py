"""Exception hierarchy shared by every stage of the audit pipeline."""


class AuditError(Exception):
    """Base class for all errors raised by hirsch_audit."""


class EmptyProfileError(AuditError, ValueError):
    pass


class DuplicateKeyError(AuditError, ValueError):
    pass


class InsufficientDataError(AuditError, ValueError):
    pass


class ValidationError(AuditError, ValueError):
    pass


class ParseError(AuditError, ValueError):
    def __init__(self, message, path=None, line=None):
        self.path = path
        self.line = line
        where = ""
        if path is not None:
            where = f"{path}:"
        if line is not None:
            where += f"{line}:"
        super().__init__(f"{where} {message}" if where else message)


class UnidentifiableRecordError(AuditError, ValueError):
    pass


class AmbiguousMatchError(AuditError, ValueError):
    pass


class NeedsCitingDataError(AuditError, ValueError):
    pass


class UnknownPublicationError(AuditError, KeyError):
    def __str__(self):
        return str(self.args[0]) if self.args else ""
