"""Cell grids over the model domains.

Angle axes span ``[0, 2*pi)`` and wrap; disk axes span ``[-1, 1]`` and only
cells whose center lies inside the unit disk are active; box axes span the
given bounds.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from math import pi
from typing import Optional, Tuple

import numpy as np

TWO_PI = 2 * pi

# axis kinds per domain: "a" angle (periodic), "d" disk coordinate, "b" box
DOMAIN_AXES = {
    "solid_torus": ("a", "d", "d"),
    "T2xD2": ("a", "a", "d", "d"),
}

MIN_RESOLUTION = 8


@dataclass(frozen=True)
class GridSpec:
    """Regular cell grid on a model domain.

    ``delta`` is the preimage thickness used by the fiber tracer; ``None``
    selects the automatic first-order rule there.  ``bounds`` is only used for
    the ``box`` domain.
    """

    resolution: Tuple[int, ...]
    domain: str = "T2xD2"
    delta: Optional[float] = None
    bounds: Optional[Tuple[Tuple[float, float], ...]] = None
    axis_kinds: Tuple[str, ...] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        res = tuple(int(r) for r in self.resolution)
        object.__setattr__(self, "resolution", res)
        if self.domain == "box":
            kinds = ("b",) * len(res)
            bounds = self.bounds or ((-1.0, 1.0),) * len(res)
            bounds = tuple((float(lo), float(hi)) for lo, hi in bounds)
            if len(bounds) != len(res):
                raise ValueError("box bounds must match the resolution length")
            if any(hi <= lo for lo, hi in bounds):
                raise ValueError(f"empty box bounds {bounds}")
            object.__setattr__(self, "bounds", bounds)
        elif self.domain in DOMAIN_AXES:
            kinds = DOMAIN_AXES[self.domain]
            if len(res) != len(kinds):
                raise ValueError(f"{self.domain} grid needs {len(kinds)} resolutions, got {len(res)}")
        else:
            raise ValueError(f"unknown domain kind {self.domain!r}")
        if any(r < MIN_RESOLUTION for r in res):
            raise ValueError(f"grid resolutions must be >= {MIN_RESOLUTION}, got {res}")
        if self.delta is not None and not self.delta > 0:
            raise ValueError(f"delta must be positive, got {self.delta}")
        object.__setattr__(self, "axis_kinds", kinds)

    @property
    def ndim(self) -> int:
        return len(self.resolution)

    @property
    def periodic(self) -> Tuple[bool, ...]:
        return tuple(k == "a" for k in self.axis_kinds)

    @property
    def disk_axes(self) -> Tuple[int, ...]:
        return tuple(i for i, k in enumerate(self.axis_kinds) if k == "d")

    @property
    def angle_axes(self) -> Tuple[int, ...]:
        return tuple(i for i, k in enumerate(self.axis_kinds) if k == "a")

    def axis_range(self, axis: int) -> Tuple[float, float]:
        kind = self.axis_kinds[axis]
        if kind == "a":
            return 0.0, TWO_PI
        if kind == "d":
            return -1.0, 1.0
        return self.bounds[axis]

    @property
    def spacing(self) -> np.ndarray:
        return np.array([(hi - lo) / n for (lo, hi), n in
                         zip((self.axis_range(i) for i in range(self.ndim)), self.resolution)])

    def centers_1d(self, axis: int) -> np.ndarray:
        lo, hi = self.axis_range(axis)
        n = self.resolution[axis]
        return lo + (np.arange(n) + 0.5) * (hi - lo) / n

    def nodes_1d(self, axis: int) -> np.ndarray:
        """Cell corner coordinates; a periodic axis has no duplicate end node."""
        lo, hi = self.axis_range(axis)
        n = self.resolution[axis]
        count = n if self.periodic[axis] else n + 1
        return lo + np.arange(count) * (hi - lo) / n

    @property
    def node_shape(self) -> Tuple[int, ...]:
        return tuple(n if per else n + 1 for n, per in zip(self.resolution, self.periodic))

    def cell_centers(self, indices: np.ndarray) -> np.ndarray:
        indices = np.asarray(indices)
        lo = np.array([self.axis_range(i)[0] for i in range(self.ndim)])
        return lo + (indices + 0.5) * self.spacing

    def all_centers(self) -> np.ndarray:
        """Centers of every cell, C-ordered, shape ``resolution + (ndim,)``."""
        mesh = np.meshgrid(*[self.centers_1d(i) for i in range(self.ndim)], indexing="ij")
        return np.stack(mesh, axis=-1)

    def all_nodes(self) -> np.ndarray:
        mesh = np.meshgrid(*[self.nodes_1d(i) for i in range(self.ndim)], indexing="ij")
        return np.stack(mesh, axis=-1)

    def active_mask(self) -> np.ndarray:
        """Cells belonging to the domain (center inside the unit disk on disk axes)."""
        mask = np.ones(self.resolution, dtype=bool)
        disk = self.disk_axes
        if disk:
            cx = self.centers_1d(disk[0])
            cy = self.centers_1d(disk[1])
            inside = (cx[:, None] ** 2 + cy[None, :] ** 2) < 1.0
            shape = [1] * self.ndim
            shape[disk[0]], shape[disk[1]] = len(cx), len(cy)
            mask = mask & inside.reshape(shape)
        return mask

    def to_dict(self) -> dict:
        out = {"domain": self.domain, "resolution": list(self.resolution),
               "delta": self.delta}
        if self.domain == "box":
            out["bounds"] = [list(b) for b in self.bounds]
        return out
