"""Built-in test scene: a circle closing onto a centered black disk."""

from __future__ import annotations

from .flow import ChargeSet
from .geometry import circle
from .image import disk_field

DISK_SIZE = 256
DISK_RADIUS_PX = 40.0
START_RADIUS_PX = 100.0
# At 0.001 world units per pixel and dt = 1/N^2 a node crosses several
# pixels per step near the disk, so the scene uses a coarser raster scale.
DISK_SCALE = 0.005


def disk_scene(n: int = 64, scale: float = DISK_SCALE, charge: float = -1.0):
    """Return ``(field, initial_curve, charges)`` for the disk-matching scene."""
    field = disk_field(DISK_SIZE, DISK_RADIUS_PX, scale)
    initial = circle((0.0, 0.0), START_RADIUS_PX * scale, n)
    charges = ChargeSet.of((charge, (0.0, 0.0)))
    return field, initial, charges
