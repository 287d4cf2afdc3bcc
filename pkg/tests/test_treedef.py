import copy
import json
from importlib import resources
from pathlib import Path

import pytest
from hypothesis import given, strategies as st

from btlearn import treedef
from btlearn.core import Category, MemSequence, Priority, SUCCESS, TickContext
from btlearn.fire_nodes import fire_bindings
from btlearn.learning import LearningActionNode, LearningCompositeNode
from btlearn.treedef import (Bindings, NodeSpec, TreeDefError, TreeDocument, build_tree,
                             core_registry, load_tree, parse_tree_document, serialize_tree)

FIXTURES = Path(__file__).parent / "fixtures"


def fixture_texts():
    texts = {p.name: p.read_text(encoding="utf-8") for p in sorted(FIXTURES.glob("*.bt3.json"))}
    trees = resources.files("btlearn").joinpath("trees")
    for name in ("scenario1.bt3.json", "scenario2.bt3.json"):
        texts[name] = trees.joinpath(name).read_text(encoding="utf-8")
    return texts


def check_round_trips():
    texts = fixture_texts()
    for name, text in texts.items():
        doc = parse_tree_document(text)
        out = serialize_tree(doc)
        assert out == text, name
        assert parse_tree_document(out) == doc, name
        assert serialize_tree(parse_tree_document(out)) == out, name
    return len(texts)


def test_fixture_round_trips():
    assert check_round_trips() >= 4


def node(kind, children=None, child=None, **props):
    out = {"name": kind, "properties": props}
    if children is not None:
        out["children"] = children
    if child is not None:
        out["child"] = child
    return out


def document(root, **nodes):
    raw = {"title": "t", "root": root, "nodes": {}}
    for node_id, spec in nodes.items():
        raw["nodes"][node_id] = {"id": node_id, **spec}
    return raw


def valid():
    return document("seq",
                    seq=node("Sequence", ["has", "inv"]),
                    has=node("HasFire"),
                    inv=node("Inverter", child="go"),
                    go=node("ChangeRoom"))


def text_of(raw):
    return json.dumps(raw)


def test_base_document_is_valid():
    doc = parse_tree_document(text_of(valid()))
    assert doc.root_id == "seq" and doc.nodes["seq"].children == ("has", "inv")
    assert doc.nodes["inv"].children == ("go",)


def mutated(fn):
    raw = valid()
    fn(raw)
    return text_of(raw)


def _cycle_off_root(raw):
    raw["nodes"]["x"] = {"id": "x", **node("Sequence", ["y"])}
    raw["nodes"]["y"] = {"id": "y", **node("Inverter", child="x")}


REJECTIONS = {
    "E_SYNTAX": lambda: '{"title": "t", "root": ',
    "E_SCHEMA": lambda: mutated(lambda r: r.update(nodes=[])),
    "E_DUPLICATE_ID": lambda: text_of(valid())[:-2] + ', "go": {"id": "go", "name": "ChangeRoom"}}}',
    "E_ID_MISMATCH": lambda: mutated(lambda r: r["nodes"]["go"].update(id="went")),
    "E_UNKNOWN_KIND": lambda: mutated(lambda r: r["nodes"]["go"].update(name="Teleport")),
    "E_MISSING_ROOT": lambda: mutated(lambda r: r.update(root="nowhere")),
    "E_DANGLING_REFERENCE": lambda: mutated(
        lambda r: r["nodes"]["seq"]["children"].append("ghost")),
    "E_MULTI_PARENT": lambda: mutated(lambda r: r["nodes"]["seq"]["children"].append("go")),
    "E_CYCLE": lambda: mutated(lambda r: r["nodes"]["inv"].update(child="seq")),
    "E_UNREACHABLE": lambda: mutated(
        lambda r: r["nodes"].update(stray={"id": "stray", **node("SaveVictim")})),
    "E_ARITY": lambda: mutated(lambda r: r["nodes"]["seq"].update(children=[])),
}


def check_rejections():
    seen = {}
    for code, make in REJECTIONS.items():
        with pytest.raises(TreeDefError) as info:
            parse_tree_document(make())
        assert info.value.code == code, (code, str(info.value))
        seen[code] = str(info.value)
    assert len(set(REJECTIONS)) == len(REJECTIONS)
    return seen


def test_each_invariant_has_its_own_code():
    check_rejections()


@pytest.mark.parametrize("edit", [
    lambda r: r["nodes"]["inv"].update(child=None, children=["go"]),
    lambda r: r["nodes"]["go"].update(children=["has"]),
    lambda r: r["nodes"]["seq"].pop("children"),
])
def test_arity_variants(edit):
    raw = valid()
    edit(raw)
    raw["nodes"]["inv"] = {k: v for k, v in raw["nodes"]["inv"].items() if v is not None}
    with pytest.raises(TreeDefError) as info:
        parse_tree_document(text_of(raw))
    assert info.value.code == "E_ARITY"


def test_cycle_away_from_root():
    raw = valid()
    _cycle_off_root(raw)
    with pytest.raises(TreeDefError) as info:
        parse_tree_document(text_of(raw))
    assert info.value.code == "E_CYCLE"


def test_syntax_error_reports_position():
    with pytest.raises(TreeDefError, match=r"line 1 column \d+"):
        parse_tree_document('{"title": }')


def test_minimal_document():
    doc = parse_tree_document((FIXTURES / "minimal.bt3.json").read_text())
    assert list(doc.nodes) == ["go"]
    tree = build_tree(doc)
    assert len(tree) == 1


def test_parse_is_deterministic():
    text = fixture_texts()["scenario1.bt3.json"]
    assert parse_tree_document(text) == parse_tree_document(text.encode("utf-8"))


# -- generated documents ------------------------------------------------------------

KINDS = {"Sequence": Category.COMPOSITE, "Priority": Category.COMPOSITE,
         "Inverter": Category.DECORATOR, "Act": Category.ACTION, "Cond": Category.CONDITION}
scalars = st.one_of(st.booleans(), st.integers(-5, 5), st.text(max_size=4),
                    st.floats(allow_nan=False, allow_infinity=False))


@st.composite
def documents(draw):
    """Random well-formed trees over a small kind catalog."""
    n = draw(st.integers(1, 12))
    ids = draw(st.lists(st.text("abcxyz-_é", min_size=1, max_size=5), min_size=n, max_size=n,
                        unique=True))
    nodes = {}

    def grow(i, budget):
        # fills in ids[i:i + budget] as the subtree rooted at ids[i]
        if budget == 1:
            kind = draw(st.sampled_from(["Act", "Cond"]))
            kids = ()
            used = 1
        else:
            kind = draw(st.sampled_from(["Sequence", "Priority", "Inverter"]))
            if kind == "Inverter":
                kids = (ids[i + 1],)
                grow(i + 1, budget - 1)
                used = budget
            else:
                rest, pos, kids = budget - 1, i + 1, []
                while rest:
                    take = draw(st.integers(1, rest))
                    kids.append(ids[pos])
                    grow(pos, take)
                    pos += take
                    rest -= take
                kids = tuple(kids)
                used = budget
        props = draw(st.dictionaries(st.text("pq", min_size=1, max_size=2), scalars, max_size=2))
        title = draw(st.one_of(st.none(), st.text(max_size=6)))
        nodes[ids[i]] = NodeSpec(ids[i], kind, title, kids, props)
        return used

    grow(0, n)
    return TreeDocument(draw(st.text(max_size=8)), ids[0], nodes)


@given(documents())
def test_round_trip_property(doc):
    text = serialize_tree(doc, KINDS)
    again = parse_tree_document(text, KINDS)
    assert again.root_id == doc.root_id and again.title == doc.title
    assert again.nodes == doc.nodes
    assert serialize_tree(again, KINDS) == text


# -- building --------------------------------------------------------------------------


def test_build_three_nodes():
    raw = document("s", s=node("Sequence", ["a", "b"]), a=node("HasFire"), b=node("ChangeRoom"))
    tree = build_tree(parse_tree_document(text_of(raw)))
    assert len(tree) == 3 and tree.root_child.kind == "Sequence"


def test_unregistered_kind_named():
    raw = document("s", s=node("Sequence", ["a"]), a=node("Foo"))
    kinds = {**treedef.default_kinds(), "Foo": Category.ACTION}
    doc = parse_tree_document(text_of(raw), kinds)
    with pytest.raises(TreeDefError, match="Foo") as info:
        build_tree(doc)
    assert info.value.code == "E_UNREGISTERED_KIND"


BUILD_ERRORS = [
    ("E_MISSING_PROPERTY", node("Repeater", child="x")),
    ("E_PROPERTY_TYPE", node("Repeater", child="x", count="2")),
    ("E_PROPERTY_TYPE", node("Repeater", child="x", count=True)),
    ("E_INVALID_PROPERTY", node("Repeater", child="x", count=0)),
    ("E_INVALID_PROPERTY", node("Parallel", ["x"], success=2, failure=1)),
]


@pytest.mark.parametrize("code, spec", BUILD_ERRORS)
def test_build_errors(code, spec):
    doc = parse_tree_document(text_of(document("top", top=spec, x=node("ChangeRoom"))))
    with pytest.raises(TreeDefError) as info:
        build_tree(doc)
    assert info.value.code == code


def test_unknown_binding():
    raw = document("a", a=node("Action", action="dance"))
    with pytest.raises(TreeDefError) as info:
        build_tree(parse_tree_document(text_of(raw)), core_registry(), fire_bindings())
    assert info.value.code == "E_UNKNOWN_BINDING"


def test_scenario1_topology():
    doc = parse_tree_document(fixture_texts()["scenario1.bt3.json"])
    tree = build_tree(doc, bindings=fire_bindings())
    root = tree.root_child
    assert isinstance(root, Priority) and len(root.children) == 3
    assert isinstance(root.children[1], MemSequence)
    learners = [n for n in root.walk() if isinstance(n, (LearningActionNode, LearningCompositeNode))]
    assert [type(n) for n in learners] == [LearningActionNode]
    assert learners[0].actions == ["A", "B", "C"]


def test_scenario2_topology():
    doc = parse_tree_document(fixture_texts()["scenario2.bt3.json"])
    tree = build_tree(doc, bindings=fire_bindings())
    root = tree.root_child
    assert isinstance(root, LearningCompositeNode) and len(root.children) == 3
    assert isinstance(root.children[1], LearningActionNode)


def test_core_kinds_fixture_builds_and_ticks():
    bindings = Bindings(actions={"noop": lambda w: SUCCESS}, conditions={"always": lambda w: True})
    tree = load_tree(str(FIXTURES / "core_kinds.bt3.json"), core_registry(), bindings)
    assert len(tree) == 9
    assert tree["negate"].title == "Nicht gesehen"
    ctx = TickContext()
    statuses = [tree.tick(ctx) for _ in range(2)]
    # the repeater needs two ticks, so the parallel's success threshold waits a tick
    assert statuses[1] is SUCCESS


def test_registry_copy_is_independent():
    reg = core_registry()
    other = reg.copy()
    other.register("Extra", Category.ACTION, lambda spec, kids, b: None)
    assert "Extra" not in reg


def test_document_is_not_mutated_by_build():
    doc = parse_tree_document(fixture_texts()["scenario2.bt3.json"])
    before = copy.deepcopy(doc)
    build_tree(doc, bindings=fire_bindings())
    assert doc == before
