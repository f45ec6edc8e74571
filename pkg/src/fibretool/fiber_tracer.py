"""Grid approximations of fibers ``f^{-1}(w)`` of the model maps.

A fiber is approximated by the set of grid cells whose center lies close to
it, split into connected components under face adjacency (angle axes wrap
around).  On top of that sit the two counts that make the multiplicity
statements checkable: how many clusters a fiber leaves in a transverse
disk slice, and how many times a connected fiber winds around the core
circle before closing up.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components

from .errors import EmptyFiber, MultiComponent, NonTransverseSlice, ToleranceTooCoarse
from .grid import TWO_PI, GridSpec
from .model_maps import DEFAULT_RANK_TOL, MapId, evaluate, jacobian_exact, singular_values

__all__ = [
    "GridSpec", "FiberApproximation", "FiberStats", "trace_fiber",
    "slice_multiplicity", "core_winding", "fiber_stats",
]

CHUNK = 65536


def _target_vector(map_id: MapId, w) -> np.ndarray:
    if isinstance(w, complex) or np.isscalar(w):
        w = complex(w)
        vec = np.array([w.real, w.imag])
    else:
        vec = np.asarray(w, dtype=float).reshape(2)
    if map_id.kind in ("multiple_fiber", "seifert") and not np.hypot(*vec) < 1.0:
        raise EmptyFiber(f"target {vec.tolist()} lies outside the open unit disk")
    return vec


def _label_components(cells: np.ndarray, grid: GridSpec, axes: Sequence[int]) -> np.ndarray:
    """Component label per cell under face adjacency along ``axes``.

    Labels are numbered by first appearance in the (sorted) cell list.
    """
    m = len(cells)
    if m == 0:
        return np.zeros(0, dtype=int)
    shape = grid.resolution
    flat = np.ravel_multi_index(cells.T, shape)
    pos = np.full(int(np.prod(shape)), -1, dtype=np.int64)
    pos[flat] = np.arange(m)
    rows, cols = [], []
    for axis in axes:
        nbr = cells.copy()
        nbr[:, axis] += 1
        if grid.periodic[axis]:
            nbr[:, axis] %= shape[axis]
            ok = np.ones(m, dtype=bool)
        else:
            ok = nbr[:, axis] < shape[axis]
        j = np.full(m, -1, dtype=np.int64)
        j[ok] = pos[np.ravel_multi_index(nbr[ok].T, shape)]
        hit = j >= 0
        rows.append(np.flatnonzero(hit))
        cols.append(j[hit])
    r = np.concatenate(rows)
    c = np.concatenate(cols)
    graph = coo_matrix((np.ones(len(r), dtype=np.int8), (r, c)), shape=(m, m))
    _, raw = connected_components(graph, directed=False)
    _, first, inverse = np.unique(raw, return_index=True, return_inverse=True)
    order = np.argsort(np.argsort(first))
    return order[inverse]


@dataclass
class FiberApproximation:
    """Thickened preimage of one target value, split into components.

    ``cells`` are C-ordered multi-indices; ``labels[i]`` is the component of
    ``cells[i]``; ``singular[i]`` flags cells whose closure meets the rank
    deficient set.  ``delta`` is the value thickness actually realised, i.e.
    the largest ``|f(center) - w|`` over the selected cells.
    """

    map_id: MapId
    target: np.ndarray
    grid: GridSpec
    cells: np.ndarray
    labels: np.ndarray
    singular: np.ndarray
    delta: float
    mode: str

    @property
    def component_count(self) -> int:
        return int(self.labels.max()) + 1 if len(self.labels) else 0

    def component_cells(self, label: int) -> np.ndarray:
        return self.cells[self.labels == label]

    def to_dict(self) -> dict:
        sizes = np.bincount(self.labels, minlength=self.component_count)
        return {
            "map": self.map_id.to_dict(),
            "target": [float(v) for v in self.target],
            "grid": self.grid.to_dict(),
            "mode": self.mode,
            "delta": float(self.delta),
            "cell_count": int(len(self.cells)),
            "component_count": self.component_count,
            "component_sizes": [int(s) for s in sizes],
        }

    def write_csv(self, fh) -> None:
        """Cell centers with their component label, one row per cell."""
        centers = self.grid.cell_centers(self.cells)
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["component"] + [f"c{i}" for i in range(self.grid.ndim)])
        for lab, c in zip(self.labels, centers):
            writer.writerow([int(lab)] + [repr(float(v)) for v in c])


def _select(map_id: MapId, grid: GridSpec, target: np.ndarray, active: np.ndarray):
    """Indices of selected cells and their residuals ``|f(center) - w|``.

    With an explicit ``grid.delta`` the rule is ``|f - w| < delta``.  Otherwise a
    cell is kept when the Newton estimate of its center's distance to the
    fiber, measured in cell units, is at most half the cell diagonal.
    """
    idx = np.argwhere(active)
    keep, resid = [], []
    h = grid.spacing
    radius2 = grid.ndim / 4.0
    for lo in range(0, len(idx), CHUNK):
        ids = idx[lo:lo + CHUNK]
        X = grid.cell_centers(ids)
        r = evaluate(map_id, X) - target
        size = np.hypot(r[:, 0], r[:, 1])
        if grid.delta is not None:
            ok = size < grid.delta
        else:
            Js = jacobian_exact(map_id, X) * h
            A = Js @ np.swapaxes(Js, 1, 2)
            a, b, d = A[:, 0, 0], A[:, 0, 1], A[:, 1, 1]
            det = a * d - b * b
            with np.errstate(divide="ignore", invalid="ignore"):
                dist2 = (d * r[:, 0] ** 2 - 2 * b * r[:, 0] * r[:, 1] + a * r[:, 1] ** 2) / det
            ok = (det > 0) & (dist2 <= radius2)
        keep.append(ids[ok])
        resid.append(size[ok])
    return np.concatenate(keep), np.concatenate(resid)


def _cells_touch_singular(map_id: MapId, grid: GridSpec, cells: np.ndarray, tol: float) -> np.ndarray:
    """Whether the center or any corner of each cell has corank >= 1."""
    out = np.zeros(len(cells), dtype=bool)
    if len(cells) == 0:
        return out
    h = grid.spacing
    lo = np.array([grid.axis_range(i)[0] for i in range(grid.ndim)])
    samples = [grid.cell_centers(cells)]
    for offset in np.ndindex(*(2,) * grid.ndim):
        samples.append(lo + (cells + np.array(offset)) * h)
    for X in samples:
        out |= singular_values(map_id, X)[:, 1] <= tol
    return out


def trace_fiber(map_id: MapId, w, grid: GridSpec, *, allow_singular: bool = False,
                tol: float = DEFAULT_RANK_TOL) -> FiberApproximation:
    """Approximate ``f^{-1}(w)`` on ``grid``.

    Raises :class:`EmptyFiber` when no cell qualifies and
    :class:`ToleranceTooCoarse` when the thickened fiber reaches the singular
    set (unless ``allow_singular``).
    """
    if grid.ndim != map_id.dim:
        raise ValueError(f"grid has {grid.ndim} axes, {map_id.kind} needs {map_id.dim}")
    target = _target_vector(map_id, w)
    cells, resid = _select(map_id, grid, target, grid.active_mask())
    if len(cells) == 0:
        raise EmptyFiber(f"no cell of the grid maps near {target.tolist()}")
    singular = _cells_touch_singular(map_id, grid, cells, tol)
    if singular.any() and not allow_singular:
        raise ToleranceTooCoarse(
            f"{int(singular.sum())} selected cells meet the singular set; refine the grid or shrink delta")
    labels = _label_components(cells, grid, range(grid.ndim))
    mode = "value" if grid.delta is not None else "auto"
    return FiberApproximation(map_id, target, grid, cells, labels, singular,
                              float(resid.max()), mode)


def _slab_index(grid: GridSpec, axis: int, angle: float) -> int:
    n = grid.resolution[axis]
    return int(np.floor((angle % TWO_PI) / TWO_PI * n)) % n


def _slice_mask(fiber: FiberApproximation, fixed: Dict[int, int]) -> np.ndarray:
    mask = np.ones(len(fiber.cells), dtype=bool)
    for axis, i in fixed.items():
        mask &= fiber.cells[:, axis] == i
    return mask


def slice_multiplicity(fiber: FiberApproximation, angles: Optional[Sequence[float]] = None,
                       component: Optional[int] = None) -> int:
    """Number of separate clusters the fiber leaves in a fixed-angle disk slice.

    ``angles`` gives one value per angle axis of the domain (default all 0).
    """
    grid = fiber.grid
    axes = grid.angle_axes
    if not axes:
        raise ValueError("slices are taken at fixed angles; this domain has no angle axis")
    angles = [0.0] * len(axes) if angles is None else list(angles)
    if len(angles) != len(axes):
        raise ValueError(f"need {len(axes)} slice angles, got {len(angles)}")
    fixed = {ax: _slab_index(grid, ax, a) for ax, a in zip(axes, angles)}
    mask = _slice_mask(fiber, fixed)
    if component is not None:
        mask &= fiber.labels == component
    if np.any(fiber.singular[mask]):
        raise NonTransverseSlice(f"slice at angles {angles} meets singular cells")
    cells = fiber.cells[mask]
    if len(cells) == 0:
        return 0
    return int(_label_components(cells, grid, grid.disk_axes).max()) + 1


def core_winding(fiber: FiberApproximation, axis: Optional[int] = None,
                 fixed_angles: Optional[Sequence[float]] = None) -> int:
    """Degree with which a connected fiber covers the circle along ``axis``.

    Clusters in consecutive slabs along ``axis`` are linked when they share a
    face; following the links once around the circle permutes the clusters of
    the first slab, and the winding is the length of the cycle through the
    first of them.  Other angle axes are held at ``fixed_angles`` (default 0).
    """
    if fiber.component_count != 1:
        raise MultiComponent(f"fiber has {fiber.component_count} components")
    grid = fiber.grid
    angle_axes = grid.angle_axes
    if not angle_axes:
        raise ValueError("no circle direction to wind around")
    axis = angle_axes[-1] if axis is None else axis
    others = [a for a in angle_axes if a != axis]
    fixed_angles = [0.0] * len(others) if fixed_angles is None else list(fixed_angles)
    fixed = {ax: _slab_index(grid, ax, a) for ax, a in zip(others, fixed_angles)}
    base = fiber.cells[_slice_mask(fiber, fixed)]
    disk = list(grid.disk_axes)
    n = grid.resolution[axis]

    slabs: List[Dict[tuple, int]] = []
    for j in range(n):
        cells = base[base[:, axis] == j]
        if len(cells) == 0:
            raise NonTransverseSlice(f"fiber misses slab {j} along axis {axis}")
        labs = _label_components(cells, grid, disk)
        slabs.append({tuple(c[disk]): int(l) for c, l in zip(cells, labs)})

    def successor(j: int, cluster: int) -> int:
        nxt = slabs[(j + 1) % n]
        found = {nxt[key] for key, lab in slabs[j].items() if lab == cluster and key in nxt}
        if len(found) != 1:
            raise ToleranceTooCoarse(
                f"cluster {cluster} in slab {j} continues into {len(found)} clusters of the next slab")
        return found.pop()

    start = 0
    current = start
    winding = 0
    limit = max(slabs[0].values()) + 1
    while True:
        for j in range(n):
            current = successor(j, current)
        winding += 1
        if current == start:
            return winding
        if winding > limit:
            raise ToleranceTooCoarse("slab clusters do not close up into a cycle")


@dataclass(frozen=True)
class FiberStats:
    component_count: int
    slice_multiplicity: tuple
    core_winding: Optional[int]

    def to_dict(self) -> dict:
        return {"component_count": self.component_count,
                "slice_multiplicity": list(self.slice_multiplicity),
                "core_winding": self.core_winding}


def fiber_stats(fiber: FiberApproximation, angles: Optional[Sequence[float]] = None) -> FiberStats:
    """Counts for ``fiber``; winding is only defined for a connected fiber on a circle domain."""
    if not fiber.grid.angle_axes:
        return FiberStats(fiber.component_count, (), None)
    mults = tuple(slice_multiplicity(fiber, angles, component=c) for c in range(fiber.component_count))
    winding = core_winding(fiber) if fiber.component_count == 1 else None
    return FiberStats(fiber.component_count, mults, winding)
