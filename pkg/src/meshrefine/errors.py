"""Exception hierarchy shared by all meshrefine modules."""


class MeshError(Exception):
    """Base class for every error raised by meshrefine."""


class MeshStructureError(MeshError, IndexError):
    """Invalid connectivity: bad vertex index, repeated index in a triangle."""


class MeshDomainError(MeshError, ValueError):
    """A geometric quantity was requested outside its domain."""


class MeshParseError(MeshError, ValueError):
    """A mesh file could not be decoded.

    ``offset`` (byte position) or ``line`` (1-based) locate the failure when known.
    """

    def __init__(self, message, offset=None, line=None):
        super().__init__(message)
        self.offset = offset
        self.line = line


class ConfigError(MeshError, ValueError):
    """Invalid subdivision, corpus or sweep parameters."""


class InvariantError(MeshError, AssertionError):
    """A post-condition that should hold by construction was violated."""
