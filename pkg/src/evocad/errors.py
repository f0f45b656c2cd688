"""Exception types shared across the package.

Everything raised on purpose derives from EvocadError so callers can
catch one base class at the CLI boundary.  File-system failures are left
as the builtin OSError.
"""


class EvocadError(Exception):
    """Base class for all errors raised by this package."""


class MalformedStl(EvocadError):
    """STL bytes that cannot be decoded.  Carries the byte offset of the problem."""

    def __init__(self, message: str, offset: int = 0):
        super().__init__(f"{message} (byte offset {offset})")
        self.offset = offset


class DegenerateMesh(EvocadError):
    """Mesh with no faces or zero spatial extent where one is required."""


class NotWatertight(EvocadError):
    """Operation requires a closed 2-manifold surface and the mesh is not one."""


class EmptyCloud(EvocadError):
    """Point cloud with zero points where at least one is required."""


class EmptyUnion(EvocadError):
    """Voxel overlap requested but neither grid contains occupied cells."""


class CsgSyntaxError(EvocadError):
    """Unparseable program text.  Carries 1-based line and column."""

    def __init__(self, message: str, line: int = 0, col: int = 0):
        super().__init__(f"{message} (line {line}, col {col})")
        self.line = line
        self.col = col


class ConstraintError(EvocadError):
    """Program parsed but violates a semantic rule (hole placement, z-range...)."""


class TriangulationError(EvocadError):
    """Profile could not be turned into triangles."""


class EmptyResponse(EvocadError):
    """Model reply was empty or missing where code/content was expected."""


class BackendError(EvocadError):
    """Transport or protocol failure talking to a model backend."""


class MismatchedIds(EvocadError):
    """Rankings over different candidate id sets cannot be averaged."""


class MismatchedSampleSets(EvocadError):
    """Aggregation over runs that scored different sample sets."""


class EmptyDataset(EvocadError):
    """Benchmark directory contains no usable samples."""


class ProtocolError(EvocadError):
    """External runner sent a response that does not fit the line protocol."""
