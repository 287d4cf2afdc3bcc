import itertools

import pytest

from btlearn.core import (Action, BehaviorTree, Blackboard, Condition, Inverter, MemPriority,
                          MemSequence, Parallel, Priority, Repeater, Sequence, Status,
                          TickContext, tick)
from helpers import E, F, R, S, Script, leaves


def run(node, ctx=None):
    ctx = ctx or TickContext()
    return BehaviorTree(node).tick(ctx), ctx


def test_single_leaves():
    assert run(Action("a", lambda w: S))[0] is S
    assert run(Condition("c", lambda w: False))[0] is F

    def boom(world):
        raise RuntimeError("fault")

    assert run(Action("a", boom))[0] is E
    assert run(Condition("c", boom))[0] is E


def test_condition_never_running():
    for value in (True, False, 0, 1, "", "x"):
        assert run(Condition("c", lambda w, v=value: v))[0] in (S, F)


def test_tick_counter_increments_once_per_root_tick():
    tree = BehaviorTree(Sequence("seq", leaves(S, R)))
    ctx = TickContext()
    for i in range(5):
        tree.tick(ctx)
        assert ctx.tick_counter == i + 1


# -- short circuit ----------------------------------------------------------


def check_short_circuit():
    cases = [
        (Sequence, (S, S, S), S, [1, 1, 1]),
        (Sequence, (S, F, S), F, [1, 1, 0]),
        (Sequence, (R, S, S), R, [1, 0, 0]),
        (Priority, (F, S, F), S, [1, 1, 0]),
        (Priority, (F, F, F), F, [1, 1, 1]),
        (Priority, (R, F, F), R, [1, 0, 0]),
    ]
    for cls, statuses, want, calls in cases:
        kids = leaves(*statuses)
        status, ctx = run(cls("root", kids))
        assert status is want, (cls.kind, statuses)
        assert [k.calls for k in kids] == calls, (cls.kind, statuses)
        assert [ctx.tick_counts.get(k.id, 0) for k in kids] == calls


def test_short_circuit():
    check_short_circuit()


# -- memory composites --------------------------------------------------------


def check_memory_resumption():
    # MemSequence: [S, R] -> RUNNING, then resume at child 1
    a, b = Script("a", S), Script("b", R, S)
    node = MemSequence("m", [a, b])
    tree, ctx = BehaviorTree(node), TickContext()
    assert tree.tick(ctx) is R
    assert ctx.blackboard.get("m", "running_child") == 1
    assert tree.tick(ctx) is S
    assert a.calls == 1 and b.calls == 2
    assert ctx.blackboard.keys_for("m") == []

    # resumed child fails -> FAILURE, and the next tick starts over at child 0
    a, b = Script("a", S), Script("b", R, F, S)
    tree, ctx = BehaviorTree(MemSequence("m", [a, b])), TickContext()
    assert [tree.tick(ctx) for _ in range(3)] == [R, F, S]
    assert a.calls == 2 and b.calls == 3

    # MemPriority: [F, R] -> RUNNING, resume at 1
    a, b = Script("a", F), Script("b", R, S)
    tree, ctx = BehaviorTree(MemPriority("p", [a, b])), TickContext()
    assert tree.tick(ctx) is R
    assert tree.tick(ctx) is S
    assert a.calls == 1 and ctx.blackboard.keys_for("p") == []

    a, b = Script("a", F), Script("b", R, F)
    tree, ctx = BehaviorTree(MemPriority("p", [a, b])), TickContext()
    assert [tree.tick(ctx), tree.tick(ctx)] == [R, F]
    assert a.calls == 1


def test_memory_resumption():
    check_memory_resumption()


@pytest.mark.parametrize("i", [0, 1, 2, 3])
def test_memory_skips_earlier_children(i):
    kids = [Script(f"c{j}", S) for j in range(i)] + [Script(f"c{i}", R, R, S)]
    kids.append(Script("last", S))
    tree, ctx = BehaviorTree(MemSequence("m", kids)), TickContext()
    statuses = [tree.tick(ctx) for _ in range(3)]
    assert statuses == [R, R, S]
    assert all(k.calls == 1 for k in kids[:i])


def test_memory_cleared_on_error():
    tree, ctx = BehaviorTree(MemSequence("m", [Script("a", S), Script("b", R, E)])), TickContext()
    tree.tick(ctx)
    assert tree.tick(ctx) is E
    assert ctx.blackboard.keys_for("m") == []


def test_plain_sequence_has_no_memory():
    a, b = Script("a", S), Script("b", R, S)
    tree, ctx = BehaviorTree(Sequence("s", [a, b])), TickContext()
    tree.tick(ctx)
    tree.tick(ctx)
    assert a.calls == 2


# -- parallel ---------------------------------------------------------------


def check_parallel_thresholds():
    cases = [
        ((S, F, S, R, R), 2, 4, S),
        ((F, F, S), 3, 2, F),
        ((S, F, R), 2, 3, R),
        # both thresholds met in one tick: SUCCESS is checked first
        ((S, F), 1, 1, S),
    ]
    for statuses, s_th, f_th, want in cases:
        kids = leaves(*statuses)
        status, _ = run(Parallel("par", kids, s_th, f_th))
        assert status is want, (statuses, s_th, f_th)
        assert all(k.calls == 1 for k in kids)


def test_parallel_thresholds():
    check_parallel_thresholds()


def test_parallel_threshold_bounds():
    with pytest.raises(ValueError):
        Parallel("p", leaves(S, S), 3, 1)
    with pytest.raises(ValueError):
        Parallel("p", leaves(S, S), 1, 0)


def test_parallel_is_stateless():
    node = Parallel("p", leaves(S, R, F), 2, 2)
    tree, ctx = BehaviorTree(node), TickContext()
    assert tree.tick(ctx) is tree.tick(ctx) is R


# -- duality ------------------------------------------------------------------


def check_duality(max_n=4):
    count = 0
    for n in range(1, max_n + 1):
        for statuses in itertools.product((S, F), repeat=n):
            left, _ = run(Priority("p", leaves(*statuses)))
            inverted = [Inverter(f"i{k}", [c]) for k, c in enumerate(leaves(*statuses))]
            right, _ = run(Inverter("top", [Sequence("s", inverted)]))
            assert left is right, statuses
            count += 1
    return count


def test_duality_exhaustive():
    assert check_duality() == 2 + 4 + 8 + 16


# -- error dominance ------------------------------------------------------------


def _passing(kind):
    """Sibling status that lets each composite kind reach the next child."""
    return F if kind in ("Priority", "MemPriority") else S


def check_error_dominance():
    makers = {
        "Sequence": lambda kids: Sequence("x", kids),
        "Priority": lambda kids: Priority("x", kids),
        "MemSequence": lambda kids: MemSequence("x", kids),
        "MemPriority": lambda kids: MemPriority("x", kids),
        "Parallel": lambda kids: Parallel("x", kids, len(kids), len(kids)),
    }
    for kind, make in makers.items():
        for pos in range(3):
            kids = [Script(f"k{i}", _passing(kind)) for i in range(3)]
            kids[pos] = Script(f"k{pos}", E)
            status, _ = run(make(kids))
            assert status is E, (kind, pos)
            assert all(k.calls == 0 for k in kids[pos + 1:]), (kind, pos)
    # the leaf deep under every kind of node
    for outer in makers:
        for inner in makers:
            inner_node = makers[inner]([Script("a", _passing(inner)), Script("err", E)])
            inner_node.id = "inner"
            wrapped = Repeater("rep", [Inverter("inv", [inner_node])], count=2)
            sibling = Script("sib", _passing(outer))
            status, _ = run(makers[outer]([sibling, wrapped]))
            assert status is E, (outer, inner)


def test_error_dominance():
    check_error_dominance()


# -- decorators ---------------------------------------------------------------


@pytest.mark.parametrize("child, want", [(S, F), (F, S), (R, R), (E, E)])
def test_inverter(child, want):
    assert run(Inverter("i", [Script("c", child)]))[0] is want


@pytest.mark.parametrize("count, script, want", [
    (1, (S,), [S]),
    (3, (S,), [R, R, S]),
    (2, (R, S, S), [R, R, S]),
    (2, (F,), [R, F]),
])
def test_repeater(count, script, want):
    tree, ctx = BehaviorTree(Repeater("r", [Script("c", *script)], count=count)), TickContext()
    assert [tree.tick(ctx) for _ in want] == want
    assert ctx.blackboard.keys_for("r") == []


def test_repeater_rejects_zero():
    with pytest.raises(ValueError):
        Repeater("r", [Script("c")], count=0)


# -- structure ------------------------------------------------------------------


def test_arity_checked_at_construction():
    with pytest.raises(ValueError):
        Sequence("s", [])
    with pytest.raises(ValueError):
        Inverter("i", leaves(S, S))
    with pytest.raises(ValueError):
        Inverter("i", [])


def test_tree_rejects_duplicates_and_shared_children():
    with pytest.raises(ValueError, match="duplicate"):
        BehaviorTree(Sequence("s", [Script("a"), Script("a")]))
    shared = Script("a")
    with pytest.raises(ValueError, match="parent"):
        BehaviorTree(Sequence("s", [shared, shared]))
    with pytest.raises(ValueError):
        BehaviorTree([Script("a"), Script("b")])


def test_tree_index_and_parents():
    inner = Sequence("inner", [Script("a")])
    tree = BehaviorTree(Priority("top", [inner, Script("b")]))
    assert len(tree) == 4
    assert tree.parent_of("a") == "inner"
    assert tree.parent_of("top") is None
    assert tree["b"].id == "b"


def test_blackboard_is_per_node():
    bb = Blackboard()
    bb.set("n1", "k", 1)
    bb.set("n2", "k", 2)
    assert bb.get("n1", "k") == 1 and bb.get("n2", "k") == 2
    bb.delete("n1", "k")
    assert bb.get("n1", "k") is None and bb.keys_for("n2") == ["k"]


def test_abandoned_running_node_is_halted():
    # the guard flips after the first tick, so the running branch is skipped
    flag = {"on": True}
    busy = Script("busy", R)
    mem = MemSequence("mem", [Script("ok", S), busy])
    tree = BehaviorTree(Priority("top", [
        Sequence("guarded", [Condition("guard", lambda w: flag["on"]), mem]),
        Script("idle", S),
    ]))
    ctx = TickContext()
    assert tree.tick(ctx) is R
    flag["on"] = False
    assert tree.tick(ctx) is S
    assert busy.halts == 1
    assert ctx.blackboard.keys_for("mem") == []


def test_trace_records_every_tick():
    ctx = TickContext(record_trace=True)
    tree = BehaviorTree(Sequence("s", leaves(S, F)))
    tick(tree, ctx)
    assert ctx.trace == [(0, "c0", "SUCCESS"), (0, "c1", "FAILURE"), (0, "s", "FAILURE")]


def test_bad_status_type_is_rejected():
    with pytest.raises(TypeError):
        run(Action("a", lambda w: "SUCCESS"))


def test_status_terminal_flag():
    assert {s for s in Status if s.terminal} == {S, F}
