"""Exception taxonomy shared by all modules."""


class MapperStabError(Exception):
    """Base class for all errors raised by this package."""


class FormatError(MapperStabError):
    """Malformed input data (ragged rows, undeclared format)."""


class ParseError(MapperStabError):
    """Input data that does not parse (non-numeric fields, bad JSON)."""


class ParameterError(MapperStabError):
    """Invalid parameter value (t=0, gain outside [0,1), K=0, ...)."""


class RangeError(MapperStabError):
    """Empty or unusable filter range."""


class DimensionError(MapperStabError):
    """Dimension mismatch between a filter/cover/cloud."""


class DomainError(MapperStabError):
    """Operands do not live on the same point domain."""


class CoverError(MapperStabError):
    """Operands were built over different covers."""


class ExtensionError(MapperStabError):
    """Voronoi extension from an empty sample."""


class GuardError(MapperStabError):
    """A brute-force guard (search-space cap) was exceeded."""


class ComputationError(MapperStabError):
    """A computation could not be completed (degenerate inputs)."""
