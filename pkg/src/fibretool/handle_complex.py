"""Fibered round-handle complexes replacing a multiple or exceptional fiber.

A :class:`PieceComplex` records the pieces filling the neighborhood (a collar
of the boundary, round handles, trivially fibered fillings), how their
boundaries are glued, and the base diagram: one fold circle per round handle,
nested outermost first, with the fiber type over each complementary region.
Region 0 is the annulus touching the boundary of the base disk.

:func:`validate_complex` replays the legal fiber transitions circle by circle
and checks the bookkeeping (gluings, Euler characteristic, multiplicities).
"""
from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from math import pi
from typing import List, Optional, Tuple

from .errors import InvalidMultiplicity

BOUNDARY_COLLAR = "boundary_collar"
ROUND_1 = "round_1_handle"
ROUND_2 = "round_2_handle"
TRIVIAL_SOLID_TORUS = "trivial_solid_torus"
TRIVIAL_T2XD2 = "trivial_T2xD2"
ROUND_KINDS = (ROUND_1, ROUND_2)

# product factors of each piece; chi(S^1) = chi(T^k) = 0, chi(disk) = 1
_FACTORS = {
    (BOUNDARY_COLLAR, 3): ("T2", "D1"),
    (BOUNDARY_COLLAR, 4): ("T3", "D1"),
    (ROUND_1, 3): ("S1", "D1", "D1"),
    (ROUND_1, 4): ("S1", "D1", "D1", "D1"),
    (ROUND_2, 4): ("S1", "D1", "D1", "D1"),
    (TRIVIAL_SOLID_TORUS, 3): ("S1", "D2"),
    (TRIVIAL_T2XD2, 4): ("T2", "D2"),
}
_FACTOR_CHI = {"S1": 0, "T2": 0, "T3": 0, "D1": 1, "D2": 1}
# boundaries of each piece other than the outer boundary of the collar
_INTERIOR_BOUNDARIES = {
    (BOUNDARY_COLLAR, 3): 1, (BOUNDARY_COLLAR, 4): 1,
    (ROUND_1, 3): 3, (ROUND_1, 4): 2, (ROUND_2, 4): 3,
    (TRIVIAL_SOLID_TORUS, 3): 1, (TRIVIAL_T2XD2, 4): 1,
}
# chi of the filled neighborhood: solid torus or T^2 x D^2
TARGET_CHI = {3: 0, 4: 0}


def piece_euler(kind: str, dimension: int) -> int:
    chi = 1
    for f in _FACTORS[(kind, dimension)]:
        chi *= _FACTOR_CHI[f]
    return chi


@dataclass(frozen=True, order=True)
class FiberComponent:
    """One component of a fiber: a circle (``genus=None``) or a closed surface."""

    genus: Optional[int]
    multiplicity: int

    def to_dict(self) -> dict:
        out = {"multiplicity": self.multiplicity}
        if self.genus is not None:
            out["genus"] = self.genus
        return out

    @classmethod
    def from_dict(cls, d: dict) -> "FiberComponent":
        return cls(d.get("genus"), int(d["multiplicity"]))


def _sort_key(c: FiberComponent):
    return (-1 if c.genus is None else c.genus, c.multiplicity)


@dataclass(frozen=True)
class RegionFiber:
    components: Tuple[FiberComponent, ...]

    def __post_init__(self):
        object.__setattr__(self, "components", tuple(sorted(self.components, key=_sort_key)))

    @classmethod
    def of(cls, *pairs) -> "RegionFiber":
        """Build from ``(genus, multiplicity)`` pairs."""
        return cls(tuple(FiberComponent(g, m) for g, m in pairs))

    @property
    def count(self) -> int:
        return len(self.components)

    @property
    def euler(self) -> int:
        """Euler characteristic of the fiber (circles contribute 0)."""
        return sum(0 if c.genus is None else 2 - 2 * c.genus for c in self.components)

    def to_list(self) -> list:
        return [c.to_dict() for c in self.components]

    @classmethod
    def from_list(cls, items) -> "RegionFiber":
        return cls(tuple(FiberComponent.from_dict(d) for d in items))


@dataclass(frozen=True)
class FiberedPiece:
    kind: str
    dimension: int
    label: str

    @property
    def euler(self) -> int:
        return piece_euler(self.kind, self.dimension)


@dataclass(frozen=True)
class Gluing:
    """Two pieces glued along a fibered boundary.

    ``multiplicity`` is the fiber multiplicity on that boundary; ``slope`` the
    fibering curve on a boundary torus, ``slope_verified`` whether it is
    attested rather than assumed by analogy with the p = 2 case.
    """

    piece_a: str
    boundary_a: str
    piece_b: str
    boundary_b: str
    multiplicity: int
    slope: Tuple[int, int]
    slope_verified: bool

    def to_dict(self) -> dict:
        return {"piece_a": self.piece_a, "boundary_a": self.boundary_a,
                "piece_b": self.piece_b, "boundary_b": self.boundary_b,
                "multiplicity": self.multiplicity, "slope": list(self.slope),
                "slope_verified": self.slope_verified}

    @classmethod
    def from_dict(cls, d: dict) -> "Gluing":
        return cls(d["piece_a"], d["boundary_a"], d["piece_b"], d["boundary_b"],
                   int(d["multiplicity"]), tuple(d["slope"]), bool(d["slope_verified"]))


@dataclass(frozen=True)
class FoldCircle:
    """Image of the fold locus of one round handle; ``stage`` counts handle pairs."""

    piece: str
    kind: str
    stage: int

    def to_dict(self) -> dict:
        return {"piece": self.piece, "kind": self.kind, "stage": self.stage}


@dataclass(frozen=True)
class PieceComplex:
    dimension: int
    multiplicity: int
    pieces: Tuple[FiberedPiece, ...]
    gluings: Tuple[Gluing, ...]
    base_diagram: Tuple[FoldCircle, ...]
    region_fibers: Tuple[RegionFiber, ...]

    @property
    def fold_circle_count(self) -> int:
        return len(self.base_diagram)

    @property
    def innermost(self) -> RegionFiber:
        return self.region_fibers[-1]

    def count(self, kind: str) -> int:
        return sum(1 for pc in self.pieces if pc.kind == kind)

    @property
    def euler(self) -> int:
        return sum(pc.euler for pc in self.pieces)

    def to_dict(self) -> dict:
        return {
            "dimension": self.dimension,
            "multiplicity": self.multiplicity,
            "pieces": [{"kind": pc.kind, "dimension": pc.dimension, "label": pc.label}
                       for pc in self.pieces],
            "gluings": [g.to_dict() for g in self.gluings],
            "fold_circles": [c.to_dict() for c in self.base_diagram],
            "region_fibers": [r.to_list() for r in self.region_fibers],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "PieceComplex":
        return cls(
            int(d["dimension"]), int(d["multiplicity"]),
            tuple(FiberedPiece(pc["kind"], int(pc["dimension"]), pc["label"]) for pc in d["pieces"]),
            tuple(Gluing.from_dict(g) for g in d["gluings"]),
            tuple(FoldCircle(c["piece"], c["kind"], int(c["stage"])) for c in d["fold_circles"]),
            tuple(RegionFiber.from_list(r) for r in d["region_fibers"]),
        )


def _boundary_slope(m: int) -> Tuple[int, int]:
    return (m, 1)


def build_exceptional_p1(p: int) -> PieceComplex:
    """Generic fibration on a neighborhood of a (p, 1) exceptional fiber.

    Each round 1-handle splits the multiplicity-m boundary torus into tori of
    multiplicity 1 and m-1; multiplicity-1 tori are filled by trivially fibered
    solid tori, giving p fillings in total.
    """
    if p < 1:
        raise InvalidMultiplicity(f"multiplicity must be >= 1, got {p}")
    dim = 3
    pieces = [FiberedPiece(BOUNDARY_COLLAR, dim, "collar")]
    gluings: List[Gluing] = []
    circles: List[FoldCircle] = []
    regions = [RegionFiber.of((None, p))]
    prev, prev_side, m = "collar", "inner", p
    fill = 0
    for i in range(1, p):
        r = f"R{i}"
        pieces.append(FiberedPiece(ROUND_1, dim, r))
        gluings.append(Gluing(prev, prev_side, r, "attach", m, _boundary_slope(m), i == 1))
        circles.append(FoldCircle(r, ROUND_1, i))
        fill += 1
        s = f"S{fill}"
        pieces.append(FiberedPiece(TRIVIAL_SOLID_TORUS, dim, s))
        gluings.append(Gluing(r, "split_1", s, "boundary", 1, (1, 1), p == 2))
        prev, prev_side, m = r, "split_rest", m - 1
        regions.append(RegionFiber.of(*([(None, 1)] * i), (None, p - i)))
    fill += 1
    s = f"S{fill}"
    pieces.append(FiberedPiece(TRIVIAL_SOLID_TORUS, dim, s))
    gluings.append(Gluing(prev, prev_side, s, "boundary", 1, (1, 1), p <= 2))
    return PieceComplex(dim, p, tuple(pieces), tuple(gluings), tuple(circles), tuple(regions))


def build_exceptional_21() -> PieceComplex:
    """The (2, 1) case: one round 1-handle and two trivial solid tori."""
    return build_exceptional_p1(2)


def build_multiple_fiber(p: int) -> PieceComplex:
    """Generic fibration replacing a multiplicity-p torus multiple fiber.

    Attaches p-1 pairs of 4-dimensional round 1- and 2-handles; the 1-handle
    raises the genus of one torus component, the following 2-handle splits the
    genus-2 component into two tori of multiplicities 1 and m-1.
    """
    if p < 1:
        raise InvalidMultiplicity(f"multiplicity must be >= 1, got {p}")
    dim = 4
    pieces = [FiberedPiece(BOUNDARY_COLLAR, dim, "collar")]
    gluings: List[Gluing] = []
    circles: List[FoldCircle] = []
    regions = [RegionFiber.of((1, p))]
    prev, prev_side, m = "collar", "inner", p
    fill = 0
    for i in range(1, p):
        ones = [(1, 1)] * (i - 1)
        r1, r2 = f"R1_{i}", f"R2_{i}"
        pieces.append(FiberedPiece(ROUND_1, dim, r1))
        gluings.append(Gluing(prev, prev_side, r1, "attach", m, _boundary_slope(m), i == 1))
        circles.append(FoldCircle(r1, ROUND_1, i))
        regions.append(RegionFiber.of(*ones, (2, m)))

        pieces.append(FiberedPiece(ROUND_2, dim, r2))
        gluings.append(Gluing(r1, "genus_2", r2, "attach", m, _boundary_slope(m), False))
        circles.append(FoldCircle(r2, ROUND_2, i))
        regions.append(RegionFiber.of(*ones, (1, 1), (1, m - 1)))

        fill += 1
        f = f"F{fill}"
        pieces.append(FiberedPiece(TRIVIAL_T2XD2, dim, f))
        gluings.append(Gluing(r2, "split_1", f, "boundary", 1, (1, 1), p == 2))
        prev, prev_side, m = r2, "split_rest", m - 1
    fill += 1
    f = f"F{fill}"
    pieces.append(FiberedPiece(TRIVIAL_T2XD2, dim, f))
    gluings.append(Gluing(prev, prev_side, f, "boundary", 1, (1, 1), p <= 2))
    return PieceComplex(dim, p, tuple(pieces), tuple(gluings), tuple(circles), tuple(regions))


# ---------------------------------------------------------------- validation

def transition_results(fiber: RegionFiber, kind: str, dimension: int) -> List[RegionFiber]:
    """Every fiber reachable from ``fiber`` by crossing one fold circle of ``kind``.

    3-D round 1-handle: a circle of multiplicity m >= 2 becomes circles of
    multiplicities 1 and m-1.  4-D round 1-handle: a torus of multiplicity
    m >= 2 becomes a genus-2 surface.  4-D round 2-handle: a genus-2 surface
    of multiplicity m >= 2 splits into tori of multiplicities 1 and m-1.
    """
    out = []
    comps = list(fiber.components)
    for i, c in enumerate(comps):
        rest = comps[:i] + comps[i + 1:]
        if c.multiplicity < 2:
            continue
        if dimension == 3 and kind == ROUND_1 and c.genus is None:
            new = [FiberComponent(None, 1), FiberComponent(None, c.multiplicity - 1)]
        elif dimension == 4 and kind == ROUND_1 and c.genus == 1:
            new = [FiberComponent(2, c.multiplicity)]
        elif dimension == 4 and kind == ROUND_2 and c.genus == 2:
            new = [FiberComponent(1, 1), FiberComponent(1, c.multiplicity - 1)]
        else:
            continue
        result = RegionFiber(tuple(rest + new))
        if result not in out:
            out.append(result)
    return out


@dataclass
class ValidationReport:
    checks: List[Tuple[str, bool, str]] = field(default_factory=list)

    def add(self, rule: str, ok: bool, detail: str = "") -> None:
        self.checks.append((rule, bool(ok), "" if ok else detail))

    @property
    def ok(self) -> bool:
        return all(ok for _, ok, _ in self.checks)

    @property
    def first_violation(self) -> Optional[str]:
        for rule, ok, detail in self.checks:
            if not ok:
                return f"{rule}: {detail}" if detail else rule
        return None

    def extend(self, other: "ValidationReport", prefix: str = "") -> None:
        for rule, ok, detail in other.checks:
            self.add(prefix + rule, ok, detail)

    def to_dict(self) -> dict:
        return {"ok": self.ok, "first_violation": self.first_violation,
                "checks": [{"rule": r, "ok": ok, "detail": d} for r, ok, d in self.checks]}


def check_fold_sequence(dimension: int, multiplicity: int, kinds, regions) -> ValidationReport:
    """Transition checks shared by piece complexes and BLF fold groups."""
    rep = ValidationReport()
    genus = None if dimension == 3 else 1
    boundary = RegionFiber.of((genus, multiplicity))
    rep.add("region_count", len(regions) == len(kinds) + 1,
            f"{len(regions)} regions for {len(kinds)} fold circles")
    rep.add("boundary_fiber", bool(regions) and regions[0] == boundary,
            f"outermost region must carry {boundary.to_list()}")
    for i, (kind, outer, inner) in enumerate(zip(kinds, regions, regions[1:])):
        legal = transition_results(outer, kind, dimension)
        rep.add(f"transition[{i}]", inner in legal,
                f"{kind} cannot turn {outer.to_list()} into {inner.to_list()}")
    if regions:
        inner = regions[-1]
        rep.add("innermost_multiplicity", all(c.multiplicity == 1 for c in inner.components),
                f"innermost fiber {inner.to_list()} is not trivially fibered")
        if dimension == 4:
            rep.add("innermost_genus", all(c.genus == 1 for c in inner.components),
                    f"innermost fiber {inner.to_list()} is not a union of tori")
        rep.add("innermost_count", inner.count == multiplicity,
                f"innermost fiber has {inner.count} components, expected {multiplicity}")
    return rep


def validate_complex(c: PieceComplex) -> ValidationReport:
    rep = ValidationReport()
    dims = {pc.dimension for pc in c.pieces}
    rep.add("dimension", dims == {c.dimension}, f"piece dimensions {sorted(dims)}")
    known = all((pc.kind, pc.dimension) in _FACTORS for pc in c.pieces)
    rep.add("piece_kinds", known, "a piece kind does not exist in this dimension")
    if not known:
        return rep
    rounds = [pc for pc in c.pieces if pc.kind in ROUND_KINDS]
    rep.add("fold_circle_count", len(rounds) == len(c.base_diagram),
            f"{len(c.base_diagram)} fold circles for {len(rounds)} round handles")
    rep.add("fold_circle_pieces",
            [pc.label for pc in rounds] == [fc.piece for fc in c.base_diagram]
            and all(fc.kind == pc.kind for fc, pc in zip(c.base_diagram, rounds)),
            "fold circles must follow the round handles in attachment order")
    rep.extend(check_fold_sequence(c.dimension, c.multiplicity,
                                   [fc.kind for fc in c.base_diagram], list(c.region_fibers)))

    rep.add("euler", c.euler == TARGET_CHI[c.dimension],
            f"pieces sum to chi = {c.euler}, expected {TARGET_CHI[c.dimension]}")

    labels = [pc.label for pc in c.pieces]
    rep.add("unique_labels", len(set(labels)) == len(labels), "duplicate piece labels")
    dangling = sorted({lab for g in c.gluings for lab in (g.piece_a, g.piece_b)} - set(labels))
    rep.add("gluing_pieces_exist", not dangling, f"gluings name missing pieces {dangling}")
    sides = Counter()
    for g in c.gluings:
        sides[(g.piece_a, g.boundary_a)] += 1
        sides[(g.piece_b, g.boundary_b)] += 1
    repeated = sorted(k for k, n in sides.items() if n > 1)
    rep.add("glued_once", not repeated, f"boundaries glued more than once: {repeated}")
    per_piece = Counter(p for p, _ in sides)
    bad = [pc.label for pc in c.pieces
           if per_piece[pc.label] != _INTERIOR_BOUNDARIES[(pc.kind, pc.dimension)]]
    rep.add("all_boundaries_glued", not bad, f"pieces with unglued or extra boundaries: {bad}")

    # every boundary produced by a splitting handle carries multiplicities {1, m-1}
    splitter = ROUND_1 if c.dimension == 3 else ROUND_2
    kinds = {pc.label: pc.kind for pc in c.pieces}
    ledger_ok = True
    for pc in c.pieces:
        if pc.kind != splitter:
            continue
        m_in = [g.multiplicity for g in c.gluings if g.piece_b == pc.label]
        outs = sorted(g.multiplicity for g in c.gluings if g.piece_a == pc.label)
        if len(m_in) != 1 or outs != sorted([1, m_in[0] - 1]):
            ledger_ok = False
            break
    rep.add("multiplicity_ledger", ledger_ok, "a splitting handle does not produce multiplicities {1, m-1}")
    fill = TRIVIAL_SOLID_TORUS if c.dimension == 3 else TRIVIAL_T2XD2
    fill_ok = all(g.multiplicity == 1 for g in c.gluings if kinds.get(g.piece_b) == fill)
    rep.add("trivial_fillings", fill_ok, "a trivial filling is glued to a multiple boundary")
    fills = c.count(fill)
    rep.add("filling_count", fills == c.multiplicity,
            f"{fills} trivial fillings, expected {c.multiplicity}")
    return rep


def replay_regions(dimension: int, multiplicity: int, kinds) -> List[RegionFiber]:
    """Region fibers obtained by always acting on the highest-multiplicity component."""
    genus = None if dimension == 3 else 1
    regions = [RegionFiber.of((genus, multiplicity))]
    for kind in kinds:
        options = transition_results(regions[-1], kind, dimension)
        if not options:
            raise ValueError(f"no legal {kind} transition from {regions[-1].to_list()}")
        regions.append(options[-1])
    return regions


# --------------------------------------------------------------------- movie

@dataclass(frozen=True)
class MovieChart:
    """One of the two embeddings of a 4-D round handle pair seen in a frame.

    ``interval`` is the theta range (G1: [-pi/4, pi/4], G2: the complement,
    written as [pi/4, 7pi/4]); ``singular_theta`` is where the handle's Morse
    point sits and ``source_phi`` the handle parameter whose slice carries it
    in the frame ``phi``.
    """

    pair: int
    role: str
    phi: float
    interval: Tuple[float, float]
    singular_theta: float

    @property
    def source_phi(self) -> float:
        return (self.phi - self.singular_theta) % (2 * pi)

    @property
    def length(self) -> float:
        return self.interval[1] - self.interval[0]

    def contains(self, theta: float) -> bool:
        lo, hi = self.interval
        t = (theta - lo) % (2 * pi) + lo
        return lo <= t <= hi

    def to_dict(self) -> dict:
        return {"pair": self.pair, "role": self.role, "phi": self.phi,
                "interval": list(self.interval), "singular_theta": self.singular_theta,
                "source_phi": self.source_phi}


def movie_slices(p: int, phi: float) -> List[MovieChart]:
    """G1/G2 charts of every round handle pair, in attachment order.

    In each frame the fold set of a handle is met once, by the slice with
    ``theta = singular_theta`` (0 for G1; the midpoint pi of the complement for
    G2, a placement convention).
    """
    if p < 2:
        raise InvalidMultiplicity(f"movie charts need p >= 2, got {p}")
    phi = float(phi) % (2 * pi)
    charts = []
    for i in range(1, p):
        charts.append(MovieChart(i, "G1", phi, (-pi / 4, pi / 4), 0.0))
        charts.append(MovieChart(i, "G2", phi, (pi / 4, 7 * pi / 4), pi))
    return charts


def _circ(x: float) -> float:
    return (x + pi) % (2 * pi) - pi


def charts_partition_circle(g1: MovieChart, g2: MovieChart, tol: float = 1e-12) -> bool:
    """True when the two intervals cover the circle and overlap only at endpoints."""
    (a0, a1), (b0, b1) = g1.interval, g2.interval
    total = g1.length + g2.length
    meet = abs(_circ(b0 - a1)) < tol and abs(_circ(a0 - b1)) < tol
    return abs(total - 2 * pi) < tol and meet and g1.length > 0 and g2.length > 0
