import dataclasses
import json
import xml.etree.ElementTree as ET
from math import gcd, hypot

import pytest
from hypothesis import given, strategies as st

from fibretool import canonical
from fibretool.blf_builder import (
    BLFDiagram, EllipticSurfaceSpec, LayoutOptions, build_blf, emit_json, emit_svg, parse_json,
    validate_blf,
)
from fibretool.errors import NotCoprime

SVG = "{http://www.w3.org/2000/svg}"


@pytest.fixture
def e123():
    return build_blf(EllipticSurfaceSpec(1, 2, 3))


def test_e123_counts(e123):
    assert len(e123.lefschetz_points) == 12
    assert [len(g.circles) for g in e123.fold_groups] == [2, 4]
    assert e123.fold_circle_count == 6
    assert validate_blf(e123, 12).ok


def test_e123_svg_golden(e123, golden):
    text = emit_svg(e123, LayoutOptions())
    assert text == (golden / "e1_2_3.svg").read_text()


def test_e123_json_golden(e123, golden):
    assert emit_json(e123) == (golden / "e1_2_3.diagram.json").read_text()


def test_svg_structure(e123):
    root = ET.fromstring(emit_svg(e123))
    assert root.get("width") == "800" and root.get("height") == "480"
    marks = root.findall(f".//{SVG}path[@class='lefschetz']")
    assert len(marks) == 12
    groups = root.findall(f"{SVG}g[@class='fold-group']")
    sizes = [len(g.findall(f"{SVG}circle")) for g in groups]
    assert sizes == [2, 4]
    for g in groups:
        assert g.get("stroke") == "#d62728"
        radii = [float(c.get("r")) for c in g.findall(f"{SVG}circle")]
        assert radii == sorted(radii, reverse=True) and len(set(radii)) == len(radii)
        # concentric
        assert len({(c.get("cx"), c.get("cy")) for c in g.findall(f"{SVG}circle")}) == 1


def test_svg_marks_stay_outside_fold_groups(e123):
    L = LayoutOptions()
    for x, y in e123.lefschetz_points:
        X, Y = L.width / 2 + x * L.scale, L.height / 2 - y * L.scale
        assert 0 < X < L.width and 0 < Y < L.height
        for g in e123.fold_groups:
            assert hypot(x - g.center[0], y - g.center[1]) > g.outer_radius


def test_json_round_trip(e123):
    text = emit_json(e123)
    assert parse_json(text) == e123
    assert emit_json(parse_json(text)) == text


def test_region_tree(e123):
    tree = e123.region_tree()
    ids = {n["id"] for n in tree}
    assert tree[0] == {"id": "outer", "parent": None, "fiber": [{"genus": 1, "multiplicity": 1}]}
    assert all(n["parent"] in ids for n in tree[1:])
    assert len(tree) == 1 + e123.fold_circle_count
    innermost = [n for n in tree if n["id"] == "group1.region4"][0]
    assert innermost["fiber"] == [{"genus": 1, "multiplicity": 1}] * 3


def test_rejections_and_defaults():
    with pytest.raises(NotCoprime):
        EllipticSurfaceSpec(1, 2, 4)
    with pytest.raises(ValueError):
        EllipticSurfaceSpec(0, 2, 3)
    assert EllipticSurfaceSpec(3, 1, 1).lefschetz_count == 36
    assert len(build_blf(EllipticSurfaceSpec(1, 2, 3, 5)).lefschetz_points) == 5


def test_validation_detects_bad_diagrams(e123):
    g0, g1 = e123.fold_groups
    overlapping = dataclasses.replace(e123, fold_groups=(g0, dataclasses.replace(g1, center=(0.0, 0.0))))
    rep = validate_blf(overlapping)
    assert not rep.ok and rep.first_violation.startswith("disjoint")
    inside = dataclasses.replace(e123, lefschetz_points=((-4.0, 0.0),))
    assert not validate_blf(inside).ok
    assert not validate_blf(e123, lefschetz_count=11).ok
    short = dataclasses.replace(g1, circles=g1.circles[:-1])
    assert not validate_blf(dataclasses.replace(e123, fold_groups=(g0, short))).ok


coprime_pair = st.tuples(st.integers(1, 15), st.integers(1, 15)).filter(lambda t: gcd(*t) == 1)


@given(st.integers(1, 4), coprime_pair)
def test_blf_invariants(n, pq):
    p, q = pq
    d = build_blf(EllipticSurfaceSpec(n, p, q))
    assert validate_blf(d, 12 * n).ok
    assert d.fold_circle_count == 2 * (p - 1) + 2 * (q - 1)
    assert BLFDiagram.from_dict(json.loads(emit_json(d))) == d


json_leaf = st.one_of(st.none(), st.booleans(), st.integers(-10**12, 10**12),
                      st.floats(allow_nan=False, allow_infinity=False), st.text(max_size=8))
json_value = st.recursive(json_leaf, lambda inner: st.one_of(
    st.lists(inner, max_size=4), st.dictionaries(st.text(max_size=6), inner, max_size=4)), max_leaves=20)


@given(json_value)
def test_canonical_json_round_trip(obj):
    text = canonical.dumps(obj)
    assert json.loads(text) == obj
    assert canonical.dumps(json.loads(text)) == text


def test_canonical_rejects_nan():
    with pytest.raises(ValueError):
        canonical.dumps({"x": float("nan")})


def test_write_atomic(tmp_path):
    path = tmp_path / "out.json"
    canonical.write_atomic(path, "abc\n")
    canonical.write_atomic(path, "def\n")
    assert path.read_text() == "def\n"
    assert [p.name for p in tmp_path.iterdir()] == ["out.json"]
