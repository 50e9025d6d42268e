"""Exception types shared across the package."""


class MurmurscopeError(Exception):
    """Base class for all package-specific errors."""


class FormatError(MurmurscopeError, ValueError):
    """Malformed or unsupported input file."""


class EmptyInputError(MurmurscopeError, ValueError):
    """Input contains no usable samples."""


class AlignmentError(MurmurscopeError, ValueError):
    """Series defined on incompatible grids or lengths."""


class ShapeParamError(MurmurscopeError, ValueError):
    """Shape parameters violate the contract for their diagnosis family."""


class ValidationError(MurmurscopeError, ValueError):
    """Configuration or user-supplied value failed validation."""


class StoreError(MurmurscopeError, ValueError):
    """Case store file is corrupt or unusable."""
