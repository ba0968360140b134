"""Instance generation and file I/O."""
from .generate import GenSpec, class_sizes, generate, grid_edges
from .io import InstanceFormatError, dumps, loads, read_instance, write_instance

__all__ = ["GenSpec", "class_sizes", "generate", "grid_edges", "InstanceFormatError",
           "dumps", "loads", "read_instance", "write_instance"]
