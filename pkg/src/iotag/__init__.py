"""Temporal logical attack graphs for enterprise networks with IoT devices."""

from importlib import resources
from pathlib import Path

__version__ = "0.1.0"


def corridor_path() -> Path:
    """Path of the bundled corridor scenario."""
    return Path(str(resources.files(__package__) / "data" / "corridor.scn"))
