"""Figure rendering for heavyspin experiment outputs (read-only consumer)."""

__version__ = "0.1.0"

from .figures import FigureSpec, render
from .schema import KINDS, SchemaError

__all__ = ["FigureSpec", "render", "KINDS", "SchemaError", "__version__"]
