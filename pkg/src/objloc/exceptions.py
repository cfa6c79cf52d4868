"""Exception hierarchy shared by every objloc module."""


class ObjlocError(Exception):
    """Base class for all objloc errors."""


class InvalidArgumentError(ObjlocError, ValueError):
    pass


class SchemaError(InvalidArgumentError):
    """A scene, pool snapshot or config file does not match its declared schema."""


class InconsistentPoolError(ObjlocError):
    """An association references an object id missing from its map."""


class InsufficientCorrespondencesError(ObjlocError, ValueError):
    pass


class DegenerateConfigurationError(ObjlocError, ValueError):
    pass


class InfeasibleSpecError(ObjlocError, ValueError):
    pass


class OracleTooLargeError(ObjlocError):
    pass
