"""Critical images of broken Lefschetz fibrations on elliptic surfaces E(n)_{p,q}.

Both multiple fibers are replaced by the round-handle fibration of
:func:`fibretool.handle_complex.build_multiple_fiber`.  The base sphere is
drawn in one planar chart: the two groups of concentric fold circles sit left
and right of the origin and the Lefschetz critical values lie on an ellipse
around both groups.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from math import cos, gcd, hypot, pi, sin
from typing import Optional, Tuple

from . import canonical
from .errors import NotCoprime
from .handle_complex import (
    ROUND_KINDS, RegionFiber, ValidationReport, build_multiple_fiber, check_fold_sequence,
)

GROUP_OFFSET = 4.0
GROUP_RADIUS = 3.0
LEFSCHETZ_ELLIPSE = (9.0, 5.5)


@dataclass(frozen=True)
class EllipticSurfaceSpec:
    """E(n) with torus surgeries of multiplicities p and q on two regular fibers.

    ``lefschetz_count`` defaults to 12n; only n = 1 is attested, other values
    are configuration.
    """

    n: int
    p: int
    q: int
    lefschetz_count: Optional[int] = None

    def __post_init__(self):
        if self.n < 1 or self.p < 1 or self.q < 1:
            raise ValueError(f"need n, p, q >= 1, got {self.n}, {self.p}, {self.q}")
        if gcd(self.p, self.q) != 1:
            raise NotCoprime(f"gcd({self.p}, {self.q}) != 1")
        if self.lefschetz_count is None:
            object.__setattr__(self, "lefschetz_count", 12 * self.n)
        if self.lefschetz_count < 0:
            raise ValueError("lefschetz_count must be non-negative")

    @property
    def name(self) -> str:
        return f"E({self.n})_{{{self.p},{self.q}}}"


@dataclass(frozen=True)
class GroupCircle:
    kind: str
    radius: float
    stage: int

    def to_dict(self) -> dict:
        return {"kind": self.kind, "radius": self.radius, "stage": self.stage}


@dataclass(frozen=True)
class FoldGroup:
    """Concentric fold circles around one surgered fiber, outermost first.

    ``regions[i]`` lies just outside ``circles[i]`` and ``regions[i+1]`` just
    inside; ``regions[0]`` is the outer region seen relative to this
    neighborhood (one torus of the group's multiplicity).
    """

    multiplicity: int
    center: Tuple[float, float]
    circles: Tuple[GroupCircle, ...]
    regions: Tuple[RegionFiber, ...]

    @property
    def outer_radius(self) -> float:
        return self.circles[0].radius if self.circles else 0.0

    def to_dict(self) -> dict:
        return {
            "multiplicity": self.multiplicity,
            "center": list(self.center),
            "fold_circles": [
                dict(c.to_dict(), outer=self.regions[i].to_list(), inner=self.regions[i + 1].to_list())
                for i, c in enumerate(self.circles)
            ],
            "regions": [r.to_list() for r in self.regions],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "FoldGroup":
        return cls(
            int(d["multiplicity"]), (float(d["center"][0]), float(d["center"][1])),
            tuple(GroupCircle(c["kind"], float(c["radius"]), int(c["stage"])) for c in d["fold_circles"]),
            tuple(RegionFiber.from_list(r) for r in d["regions"]),
        )


@dataclass(frozen=True)
class BLFDiagram:
    n: int
    p: int
    q: int
    lefschetz_points: Tuple[Tuple[float, float], ...]
    fold_groups: Tuple[FoldGroup, ...]
    outer_fiber: RegionFiber = field(default_factory=lambda: RegionFiber.of((1, 1)))

    @property
    def fold_circle_count(self) -> int:
        return sum(len(g.circles) for g in self.fold_groups)

    def region_tree(self) -> list:
        """Regions of the base with their enclosing region; ``outer`` is the root."""
        nodes = [{"id": "outer", "parent": None, "fiber": self.outer_fiber.to_list()}]
        for gi, g in enumerate(self.fold_groups):
            parent = "outer"
            for j in range(1, len(g.regions)):
                rid = f"group{gi}.region{j}"
                nodes.append({"id": rid, "parent": parent, "fiber": g.regions[j].to_list()})
                parent = rid
        return nodes

    def to_dict(self) -> dict:
        return {
            "surface": {"n": self.n, "p": self.p, "q": self.q},
            "lefschetz_points": [list(pt) for pt in self.lefschetz_points],
            "fold_groups": [g.to_dict() for g in self.fold_groups],
            "fold_circle_count": self.fold_circle_count,
            "outer_fiber": self.outer_fiber.to_list(),
            "region_tree": self.region_tree(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "BLFDiagram":
        s = d["surface"]
        return cls(
            int(s["n"]), int(s["p"]), int(s["q"]),
            tuple((float(x), float(y)) for x, y in d["lefschetz_points"]),
            tuple(FoldGroup.from_dict(g) for g in d["fold_groups"]),
            RegionFiber.from_list(d["outer_fiber"]),
        )


def _fold_group(multiplicity: int, center) -> FoldGroup:
    c = build_multiple_fiber(multiplicity)
    m = c.fold_circle_count
    circles = tuple(GroupCircle(fc.kind, GROUP_RADIUS * (m - j) / m, fc.stage)
                    for j, fc in enumerate(c.base_diagram))
    return FoldGroup(multiplicity, center, circles, c.region_fibers)


def lefschetz_layout(count: int) -> Tuple[Tuple[float, float], ...]:
    a, b = LEFSCHETZ_ELLIPSE
    return tuple((a * cos(pi / 2 + 2 * pi * j / count), b * sin(pi / 2 + 2 * pi * j / count))
                 for j in range(count))


def build_blf(spec: EllipticSurfaceSpec) -> BLFDiagram:
    groups = (_fold_group(spec.p, (-GROUP_OFFSET, 0.0)), _fold_group(spec.q, (GROUP_OFFSET, 0.0)))
    return BLFDiagram(spec.n, spec.p, spec.q, lefschetz_layout(spec.lefschetz_count), groups)


def validate_blf(d: BLFDiagram, lefschetz_count: Optional[int] = None) -> ValidationReport:
    rep = ValidationReport()
    rep.add("coprime", gcd(d.p, d.q) == 1, f"gcd({d.p}, {d.q}) != 1")
    mults = tuple(g.multiplicity for g in d.fold_groups)
    rep.add("groups", mults == (d.p, d.q), f"fold groups have multiplicities {mults}, expected ({d.p}, {d.q})")
    expected = 2 * (d.p - 1) + 2 * (d.q - 1)
    rep.add("fold_circle_count", d.fold_circle_count == expected,
            f"{d.fold_circle_count} fold circles, expected {expected}")
    rep.add("outer_fiber", d.outer_fiber == RegionFiber.of((1, 1)),
            f"outer region must carry one regular torus, got {d.outer_fiber.to_list()}")
    for gi, g in enumerate(d.fold_groups):
        prefix = f"group{gi}."
        rep.add(prefix + "circle_count", len(g.circles) == 2 * (g.multiplicity - 1),
                f"{len(g.circles)} circles for multiplicity {g.multiplicity}")
        rep.add(prefix + "kinds", all(c.kind in ROUND_KINDS for c in g.circles), "unknown fold kind")
        radii = [c.radius for c in g.circles]
        rep.add(prefix + "nested", all(r > 0 for r in radii) and all(a > b for a, b in zip(radii, radii[1:])),
                f"radii {radii} are not strictly nested")
        rep.extend(check_fold_sequence(4, g.multiplicity, [c.kind for c in g.circles], list(g.regions)),
                   prefix)
    groups = list(d.fold_groups)
    for i in range(len(groups)):
        for j in range(i + 1, len(groups)):
            a, b = groups[i], groups[j]
            dist = hypot(a.center[0] - b.center[0], a.center[1] - b.center[1])
            rep.add(f"disjoint[{i},{j}]", dist > a.outer_radius + b.outer_radius,
                    f"fold groups {i} and {j} overlap")
    inside = [k for k, (x, y) in enumerate(d.lefschetz_points)
              for g in d.fold_groups
              if g.circles and hypot(x - g.center[0], y - g.center[1]) <= g.outer_radius]
    rep.add("lefschetz_placement", not inside,
            f"Lefschetz points {sorted(set(inside))} lie inside a fold group")
    if lefschetz_count is not None:
        rep.add("lefschetz_count", len(d.lefschetz_points) == lefschetz_count,
                f"{len(d.lefschetz_points)} Lefschetz points, expected {lefschetz_count}")
    return rep


def emit_json(d: BLFDiagram) -> str:
    return canonical.dumps(d.to_dict())


def parse_json(text: str) -> BLFDiagram:
    return BLFDiagram.from_dict(json.loads(text))


@dataclass(frozen=True)
class LayoutOptions:
    width: int = 800
    height: int = 480
    scale: float = 40.0
    mark_size: float = 6.0
    stroke_width: float = 2.0
    fold_color: str = "#d62728"
    lefschetz_color: str = "#1f77b4"
    background: str = "#ffffff"


def _n(x: float) -> str:
    s = f"{x:.2f}"
    return "0.00" if s == "-0.00" else s


def emit_svg(d: BLFDiagram, layout: LayoutOptions = LayoutOptions()) -> str:
    """SVG 1.1 drawing: red fold circles per group, blue x for each Lefschetz value."""
    L = layout
    cx0, cy0 = L.width / 2, L.height / 2

    def px(x, y):
        return _n(cx0 + x * L.scale), _n(cy0 - y * L.scale)

    title = f"Critical image of a broken Lefschetz fibration on E({d.n})_{{{d.p},{d.q}}}"
    lines = [
        '<?xml version="1.0" encoding="UTF-8" standalone="no"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{L.width}" height="{L.height}" '
        f'viewBox="0 0 {L.width} {L.height}">',
        f"  <title>{title}</title>",
        f'  <rect x="0" y="0" width="{L.width}" height="{L.height}" fill="{L.background}"/>',
    ]
    for gi, g in enumerate(d.fold_groups):
        lines.append(f'  <g id="fold-group-{gi}" class="fold-group" data-multiplicity="{g.multiplicity}" '
                     f'fill="none" stroke="{L.fold_color}" stroke-width="{_n(L.stroke_width)}">')
        x, y = px(*g.center)
        for c in g.circles:
            lines.append(f'    <circle class="fold {c.kind}" cx="{x}" cy="{y}" r="{_n(c.radius * L.scale)}"/>')
        lines.append("  </g>")
    lines.append(f'  <g id="lefschetz" stroke="{L.lefschetz_color}" stroke-width="{_n(L.stroke_width)}" '
                 f'stroke-linecap="round">')
    s = L.mark_size
    for x, y in d.lefschetz_points:
        X, Y = cx0 + x * L.scale, cy0 - y * L.scale
        lines.append(f'    <path class="lefschetz" d="M {_n(X - s)} {_n(Y - s)} L {_n(X + s)} {_n(Y + s)} '
                     f'M {_n(X - s)} {_n(Y + s)} L {_n(X + s)} {_n(Y - s)}"/>')
    lines.append("  </g>")
    lines.append("</svg>")
    return "\n".join(lines) + "\n"
