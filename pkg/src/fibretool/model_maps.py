"""Closed-form model fibrations, their derivatives, and singular-set scans.

Real coordinates used throughout:

* ``multiple_fiber`` on T^2 x D^2: ``(xi1, xi2, x, y)`` with ``z = x + iy``
* ``seifert`` on a solid torus: ``(u, x, y)``
* ``fold_chart``: ``(t, x_1, ..., x_n)``
* ``psi_boundary`` on the boundary 3-torus: three angles

Maps into the disk return ``(Re, Im)`` pairs; the fold chart returns
``(t, sum s_i x_i^2)``; ``psi_boundary`` returns the three output angles.
Circle factors are handled as unit complex numbers so powers never meet a
branch cut.
"""
from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from itertools import product
from math import gcd
from typing import Optional, Sequence, Tuple

import numpy as np

from .errors import DimensionMismatch, NotCoprime, NotOnBoundary, StepTooLarge
from .grid import TWO_PI, GridSpec
from .surgery_algebra import SurgeryData

DEFAULT_RANK_TOL = 1e-8

REGULAR = "regular"
DEGENERATE_RANK0 = "degenerate_rank0"
FOLD_INDEFINITE = "fold_indefinite"
FOLD_DEFINITE = "fold_definite"
# rank-1 point whose restricted Hessian is itself degenerate (not a fold)
SINGULAR_UNCLASSIFIED = "singular_unclassified"
LABELS = (REGULAR, DEGENERATE_RANK0, FOLD_INDEFINITE, FOLD_DEFINITE, SINGULAR_UNCLASSIFIED)


@dataclass(frozen=True)
class TorusSolidPoint:
    xi1: float
    xi2: float
    z: complex

    def __post_init__(self):
        if abs(self.z) > 1 + 1e-12:
            raise ValueError(f"|z| = {abs(self.z)} > 1")
        object.__setattr__(self, "xi1", float(self.xi1) % TWO_PI)
        object.__setattr__(self, "xi2", float(self.xi2) % TWO_PI)

    def coords(self) -> np.ndarray:
        return np.array([self.xi1, self.xi2, self.z.real, self.z.imag])


@dataclass(frozen=True)
class SolidTorusPoint:
    u: float
    z: complex

    def __post_init__(self):
        if abs(self.z) > 1 + 1e-12:
            raise ValueError(f"|z| = {abs(self.z)} > 1")
        object.__setattr__(self, "u", float(self.u) % TWO_PI)

    def coords(self) -> np.ndarray:
        return np.array([self.u, self.z.real, self.z.imag])


@dataclass(frozen=True)
class FoldChartPoint:
    t: float
    x: Tuple[float, ...]

    def coords(self) -> np.ndarray:
        return np.array([self.t, *self.x], dtype=float)


@dataclass(frozen=True)
class MapId:
    """Identifier and parameters of one model map."""

    kind: str
    params: Tuple

    @classmethod
    def multiple_fiber(cls, p: int, k: int) -> "MapId":
        if p < 1:
            raise ValueError(f"multiple fiber needs p >= 1, got {p}")
        return cls("multiple_fiber", (int(p), int(k)))

    @classmethod
    def seifert(cls, p: int, q: int) -> "MapId":
        if p < 1:
            raise ValueError(f"seifert map needs p >= 1, got {p}")
        if gcd(p, q) != 1:
            raise NotCoprime(f"gcd({p}, {q}) != 1")
        return cls("seifert", (int(p), int(q)))

    @classmethod
    def psi_boundary(cls, data: SurgeryData) -> "MapId":
        if data.p < 1:
            raise ValueError("boundary gluing map needs p >= 1")
        return cls("psi_boundary", (data.p, data.q, data.k, data.center))

    @classmethod
    def fold_chart(cls, signs: Sequence[int]) -> "MapId":
        signs = tuple(int(s) for s in signs)
        if not signs or any(s not in (1, -1) for s in signs):
            raise ValueError(f"fold chart signs must be a nonempty +-1 vector, got {signs}")
        return cls("fold_chart", signs)

    @property
    def dim(self) -> int:
        return {"multiple_fiber": 4, "seifert": 3, "psi_boundary": 3}.get(self.kind, 1 + len(self.params))

    @property
    def out_dim(self) -> int:
        return 3 if self.kind == "psi_boundary" else 2

    @property
    def domain(self) -> str:
        return {"multiple_fiber": "T2xD2", "seifert": "solid_torus",
                "psi_boundary": "T3", "fold_chart": "box"}[self.kind]

    @property
    def disk_axes(self) -> Tuple[int, ...]:
        if self.kind == "multiple_fiber":
            return (2, 3)
        if self.kind == "seifert":
            return (1, 2)
        return ()

    def to_dict(self) -> dict:
        names = {"multiple_fiber": ("p", "k"), "seifert": ("p", "q"),
                 "psi_boundary": ("p", "q", "k", "center")}
        if self.kind == "fold_chart":
            return {"kind": self.kind, "signs": list(self.params)}
        return {"kind": self.kind, **dict(zip(names[self.kind], self.params))}


# ---------------------------------------------------------------- evaluation

def eval_multiple_fiber(p: int, k: int, pt: TorusSolidPoint) -> complex:
    """``xi2^k * z^p`` with ``xi2`` as a unit complex number."""
    return complex(np.exp(1j * k * pt.xi2) * pt.z ** p)


def eval_seifert(p: int, q: int, pt: SolidTorusPoint) -> complex:
    """``e^{-iqu} * z^p``; constant along the (p, q) Seifert fibers."""
    if gcd(p, q) != 1:
        raise NotCoprime(f"gcd({p}, {q}) != 1")
    return complex(np.exp(-1j * q * pt.u) * pt.z ** p)


def eval_psi(data: SurgeryData, pt: TorusSolidPoint) -> TorusSolidPoint:
    """Boundary gluing ``(xi1, xi2^c z^q, xi2^k z^p)`` with ``c = (qk+1)/p``."""
    if data.p < 1:
        raise ValueError("boundary gluing map needs p >= 1")
    if abs(abs(pt.z) - 1.0) > 1e-12:
        raise NotOnBoundary(f"|z| = {abs(pt.z)} is not 1")
    s2 = np.exp(1j * pt.xi2)
    w2 = s2 ** data.center * pt.z ** data.q
    w3 = s2 ** data.k * pt.z ** data.p
    return TorusSolidPoint(pt.xi1, float(np.angle(w2)), complex(w3))


def eval_fold_chart(signs: Sequence[int], pt: FoldChartPoint) -> Tuple[float, float]:
    if len(signs) != len(pt.x):
        raise DimensionMismatch(f"{len(signs)} signs for {len(pt.x)} coordinates")
    return (float(pt.t), float(sum(s * x * x for s, x in zip(signs, pt.x))))


def _as_points(map_id: MapId, pts) -> np.ndarray:
    if isinstance(pts, (TorusSolidPoint, SolidTorusPoint, FoldChartPoint)):
        pts = pts.coords()
    X = np.atleast_2d(np.asarray(pts, dtype=float))
    if X.shape[-1] != map_id.dim:
        raise DimensionMismatch(f"{map_id.kind} expects {map_id.dim} coordinates, got {X.shape[-1]}")
    return X


def _complex_value(map_id: MapId, X: np.ndarray) -> np.ndarray:
    if map_id.kind == "multiple_fiber":
        p, k = map_id.params
        return np.exp(1j * k * X[:, 1]) * (X[:, 2] + 1j * X[:, 3]) ** p
    p, q = map_id.params
    return np.exp(-1j * q * X[:, 0]) * (X[:, 1] + 1j * X[:, 2]) ** p


def _psi_unit_values(map_id: MapId, X: np.ndarray) -> np.ndarray:
    """The three output circle coordinates of the gluing as unit complex numbers."""
    p, q, k, c = map_id.params
    s1, s2, z = np.exp(1j * X[:, 0]), np.exp(1j * X[:, 1]), np.exp(1j * X[:, 2])
    return np.stack([s1, s2 ** c * z ** q, s2 ** k * z ** p], axis=-1)


def evaluate(map_id: MapId, pts) -> np.ndarray:
    """Vectorized evaluation, shape ``(N, out_dim)``.

    ``psi_boundary`` returns output angles in ``[0, 2*pi)``.
    """
    X = _as_points(map_id, pts)
    if map_id.kind == "fold_chart":
        signs = np.array(map_id.params, dtype=float)
        return np.stack([X[:, 0], (X[:, 1:] ** 2) @ signs], axis=-1)
    if map_id.kind == "psi_boundary":
        return np.mod(np.angle(_psi_unit_values(map_id, X)), TWO_PI)
    f = _complex_value(map_id, X)
    return np.stack([f.real, f.imag], axis=-1)


def jacobian_exact(map_id: MapId, pts) -> np.ndarray:
    """Closed-form derivative in real coordinates, shape ``(N, out_dim, dim)``."""
    X = _as_points(map_id, pts)
    n = X.shape[0]
    if map_id.kind == "fold_chart":
        J = np.zeros((n, 2, map_id.dim))
        J[:, 0, 0] = 1.0
        J[:, 1, 1:] = 2.0 * X[:, 1:] * np.array(map_id.params, dtype=float)
        return J
    if map_id.kind == "psi_boundary":
        p, q, k, c = map_id.params
        G = np.array([[1, 0, 0], [0, c, q], [0, k, p]], dtype=float)
        return np.broadcast_to(G, (n, 3, 3)).copy()

    if map_id.kind == "multiple_fiber":
        p, k = map_id.params
        phase = np.exp(1j * k * X[:, 1])
        z = X[:, 2] + 1j * X[:, 3]
        cols = [np.zeros(n, dtype=complex), 1j * k * phase * z ** p]
    else:
        p, q = map_id.params
        phase = np.exp(-1j * q * X[:, 0])
        z = X[:, 1] + 1j * X[:, 2]
        cols = [-1j * q * phase * z ** p]
    dz = p * phase * z ** (p - 1)
    cols += [dz, 1j * dz]
    C = np.stack(cols, axis=-1)
    return np.stack([C.real, C.imag], axis=1)


def jacobian_fd(map_id: MapId, pts, h: float = 1e-4) -> np.ndarray:
    """Central-difference derivative; an oracle for :func:`jacobian_exact`."""
    if not h > 0:
        raise ValueError(f"step must be positive, got {h}")
    X = _as_points(map_id, pts)
    if map_id.disk_axes:
        a, b = map_id.disk_axes
        r = np.hypot(X[:, a], X[:, b])
        if np.any(r > 1.0 - h):
            raise StepTooLarge(f"point within h={h} of the disk boundary (|z| = {r.max():.6g})")
    n, d = X.shape
    J = np.empty((n, map_id.out_dim, d))
    for j in range(d):
        E = np.zeros(d)
        E[j] = h
        if map_id.kind == "psi_boundary":
            ratio = _psi_unit_values(map_id, X + E) / _psi_unit_values(map_id, X - E)
            J[:, :, j] = np.angle(ratio) / (2 * h)
        else:
            J[:, :, j] = (evaluate(map_id, X + E) - evaluate(map_id, X - E)) / (2 * h)
    return J


def induced_homology(data: SurgeryData, samples: int = 256, base=(0.3, 1.1, 2.0)):
    """Integer matrix of the gluing on H_1(T^3), read off from winding numbers.

    Each coordinate circle through ``base`` is pushed through the multiplicative
    formula and the phase change of every output factor is accumulated.
    """
    map_id = MapId.psi_boundary(data)
    cols = []
    ts = np.linspace(0.0, TWO_PI, samples + 1)
    for j in range(3):
        X = np.tile(np.asarray(base, dtype=float), (samples + 1, 1))
        X[:, j] += ts
        W = _psi_unit_values(map_id, X)
        steps = np.angle(W[1:] / W[:-1])
        cols.append(np.rint(steps.sum(axis=0) / TWO_PI).astype(int))
    M = np.stack(cols, axis=1)
    return tuple(tuple(int(v) for v in row) for row in M)


# ------------------------------------------------------------- singularities

def worker_count(requested: Optional[int] = None) -> int:
    """Thread count for grid scans, capped by ``FIBRETOOL_THREADS``."""
    n = requested or os.cpu_count() or 1
    cap = os.environ.get("FIBRETOOL_THREADS")
    if cap:
        n = min(n, max(1, int(cap)))
    return max(1, n)


def singular_values(map_id: MapId, X: np.ndarray, workers: int = 1, chunk: int = 16384) -> np.ndarray:
    """Singular values ``(sigma1, sigma2)`` of the Jacobian at each row of ``X``.

    Chunks are evaluated independently and concatenated in order, so the result
    does not depend on ``workers``.
    """
    X = np.asarray(X, dtype=float).reshape(-1, map_id.dim)

    def run(lo):
        J = jacobian_exact(map_id, X[lo:lo + chunk])
        return np.linalg.svd(J, compute_uv=False)[:, :2]

    starts = range(0, len(X), chunk)
    if workers > 1 and len(X) > chunk:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(run, starts))
    else:
        parts = [run(lo) for lo in starts]
    if not parts:
        return np.zeros((0, 2))
    return np.concatenate(parts)


def _gather_corners(node_vals: np.ndarray, grid: GridSpec, offset) -> np.ndarray:
    idx = []
    for axis, (n, per) in enumerate(zip(grid.resolution, grid.periodic)):
        i = np.arange(n) + offset[axis]
        idx.append(i % n if per else i)
    return node_vals[np.ix_(*idx)]


def classify_rank1(map_id: MapId, x: np.ndarray, h: float = 1e-4, rel_tol: float = 1e-6) -> str:
    """Fold type at a corank-1 point.

    Takes the unit normal ``n`` to the image line of dF and the Hessian of
    ``n . F`` restricted to ker dF; mixed eigenvalue signs mean indefinite.
    """
    x = np.asarray(x, dtype=float)
    J = jacobian_exact(map_id, x)[0]
    U, _, Vt = np.linalg.svd(J)
    normal = U[:, 1]
    d = len(x)
    H = np.empty((d, d))
    for i in range(d):
        e = np.zeros(d)
        e[i] = h
        Jp = jacobian_exact(map_id, x + e)[0]
        Jm = jacobian_exact(map_id, x - e)[0]
        H[i] = normal @ (Jp - Jm) / (2 * h)
    H = 0.5 * (H + H.T)
    K = Vt[1:].T
    eig = np.linalg.eigvalsh(K.T @ H @ K)
    scale = max(1.0, float(np.abs(H).max()))
    if np.any(np.abs(eig) <= rel_tol * scale):
        return SINGULAR_UNCLASSIFIED
    if np.all(eig > 0) or np.all(eig < 0):
        return FOLD_DEFINITE
    return FOLD_INDEFINITE


@dataclass
class SingularityReport:
    """Per-cell classification of a grid scan, sorted by C-order cell index.

    ``points`` holds the sample (cell center or corner) where the Jacobian was
    most degenerate, ``sigma`` its two largest singular values.
    """

    map_id: MapId
    grid: GridSpec
    tolerance: float
    indices: np.ndarray
    points: np.ndarray
    sigma: np.ndarray
    labels: np.ndarray

    @property
    def rank(self) -> np.ndarray:
        return (self.sigma > self.tolerance).sum(axis=1)

    def counts(self) -> dict:
        return {lab: int(np.count_nonzero(self.labels == lab)) for lab in LABELS}

    def cells(self, label: str) -> np.ndarray:
        return self.indices[self.labels == label]

    def singular_mask(self) -> np.ndarray:
        return self.labels != REGULAR

    def to_dict(self, include_regular: bool = False) -> dict:
        keep = np.ones(len(self.labels), bool) if include_regular else self.singular_mask()
        samples = [
            {"cell": [int(i) for i in idx], "point": [float(v) for v in pt],
             "rank": int(rk), "sigma": [float(s) for s in sg], "classification": str(lab)}
            for idx, pt, rk, sg, lab in zip(self.indices[keep], self.points[keep],
                                            self.rank[keep], self.sigma[keep], self.labels[keep])
        ]
        return {"map": self.map_id.to_dict(), "grid": self.grid.to_dict(),
                "tolerance": self.tolerance, "cell_count": int(len(self.labels)),
                "counts": self.counts(), "samples": samples}


def cell_min_sigma(map_id: MapId, grid: GridSpec, workers: int = 1):
    """For every cell, the most degenerate sample among its center and corners.

    Returns ``(sigma, points)`` with shapes ``resolution + (2,)`` and
    ``resolution + (dim,)``.  Ties go to the center, then to corners in
    lexicographic offset order.
    """
    if grid.ndim != map_id.dim:
        raise DimensionMismatch(f"grid has {grid.ndim} axes, map needs {map_id.dim}")
    centers = grid.all_centers()
    nodes = grid.all_nodes()
    sig_c = singular_values(map_id, centers, workers).reshape(grid.resolution + (2,))
    sig_n = singular_values(map_id, nodes, workers).reshape(grid.node_shape + (2,))

    best_sig = sig_c
    best_pt = centers
    for offset in product((0, 1), repeat=grid.ndim):
        s = _gather_corners(sig_n, grid, offset)
        pt = _gather_corners(nodes, grid, offset)
        better = (s[..., 1] < best_sig[..., 1]) | (
            (s[..., 1] == best_sig[..., 1]) & (s[..., 0] < best_sig[..., 0]))
        best_sig = np.where(better[..., None], s, best_sig)
        best_pt = np.where(better[..., None], pt, best_pt)
    return best_sig, best_pt


def scan_singularities(map_id: MapId, grid: GridSpec, tol: float = DEFAULT_RANK_TOL,
                       workers: int = 1) -> SingularityReport:
    """Classify every active cell of ``grid`` by the rank of the Jacobian.

    A cell is regular when the smallest second singular value over its center
    and corners exceeds ``tol``; otherwise it is rank 0 (both values below
    ``tol``) or corank 1, in which case the fold type is decided by
    :func:`classify_rank1` at the most degenerate sample.
    """
    if map_id.kind == "psi_boundary":
        raise ValueError("the boundary gluing is a diffeomorphism; nothing to scan")
    if not tol > 0:
        raise ValueError(f"rank tolerance must be positive, got {tol}")
    sig, pts = cell_min_sigma(map_id, grid, workers)
    active = grid.active_mask()
    indices = np.argwhere(active)
    sig = sig[active]
    pts = pts[active]
    labels = np.full(len(indices), REGULAR, dtype=object)
    rank0 = sig[:, 0] <= tol
    labels[rank0] = DEGENERATE_RANK0
    for i in np.flatnonzero((sig[:, 1] <= tol) & ~rank0):
        labels[i] = classify_rank1(map_id, pts[i])
    return SingularityReport(map_id, grid, tol, indices, pts, sig, labels.astype(str))
