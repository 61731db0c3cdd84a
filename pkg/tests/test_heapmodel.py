import copy
import itertools

import pytest

from conftest import FIGURES, run_states
from leakscan.heapmodel import (CALLER, EventKind, ForestViolation, GlobalOwner, Heap, HeapParent, ObjState,
                                OwnershipEvent, ParamSlot, Pattern, check_trace)
from leakscan.symex.values import HeapRef


def test_first_allocation():
    h = Heap()
    oid = h.allocate(None)
    assert oid == 0
    assert h[0].refcount == 1 and h[0].owners == {CALLER} and not h[0].escaped
    assert [e.kind for e in h.trace] == [EventKind.ALLOCATE]


def test_distinct_ids_and_condition():
    h = Heap()
    a, b = h.allocate(None), h.allocate(None, condition=("c",))
    assert a != b
    assert h[b].alloc_condition == ("c",)


def test_free():
    h = Heap()
    a = h.allocate(None)
    h.free_object(a)
    assert h[a].state is ObjState.FREED and h[a].refcount == 0
    assert CALLER not in h[a].owners


def test_double_free_is_a_diagnostic():
    h = Heap()
    a = h.allocate(None)
    h.free_object(a)
    h.free_object(a)
    assert h.diagnostics == ["double free of object 0"]
    assert sum(e.kind is EventKind.FREE for e in h.trace) == 1


def test_cascade_frees_sole_child():
    h = Heap()
    p, c = h.allocate(None), h.allocate(None)
    h.attach_inner(p, "f", c)
    h.free_object(p)
    assert not h[c].allocated and h[c].refcount == 0
    assert [(e.kind, e.obj, e.cascade) for e in h.trace if e.kind is EventKind.FREE] == [
        (EventKind.FREE, p, False), (EventKind.FREE, c, True)]


def test_cascade_keeps_copied_child():
    h = Heap()
    p, c = h.allocate(None), h.allocate(None)
    h.attach_inner(p, "f", c)
    h.copy_ref(c)
    h.free_object(p)
    assert h[c].allocated and h[c].refcount == 1
    assert HeapParent(p) not in h[c].owners


def test_copy_and_drop():
    h = Heap()
    a = h.allocate(None)
    h.copy_ref(a)
    assert h[a].refcount == 2
    h.copy_ref(a)
    assert h[a].refcount == 3
    h.drop_ref(a)
    h.drop_ref(a)
    assert h[a].refcount == 1 and h[a].allocated
    h.drop_ref(a)
    assert h[a].refcount == 0 and not h[a].allocated


def test_copy_after_free_is_a_diagnostic():
    h = Heap()
    a = h.allocate(None)
    h.free_object(a)
    h.copy_ref(a)
    assert h[a].refcount == 0
    assert "use after free" in h.diagnostics[0]


def test_drop_cascades():
    h = Heap()
    p, c = h.allocate(None), h.allocate(None)
    h.attach_inner(p, "f", c)
    h.drop_ref(p)
    assert not h[p].allocated and not h[c].allocated


def test_store_global():
    h = Heap()
    a = h.allocate(None)
    h.store_global(a, "g")
    assert GlobalOwner("g") in h[a].owners and h[a].escaped and h[a].refcount == 2


def test_release_global_never_frees():
    h = Heap()
    a = h.allocate(None)
    h.store_global(a, "g")
    h.release_global(a, "g")
    assert h[a].refcount == 1 and h[a].allocated
    assert GlobalOwner("g") not in h[a].owners
    h.free_object(a)
    b = h.allocate(None)
    h.store_global(b, "g")
    h.drop_ref(b)
    h.release_global(b, "g")
    assert h[b].refcount == 1 and h[b].allocated


def test_store_param():
    h = Heap()
    a = h.allocate(None)
    h.store_param(a, "*pdec")
    assert ParamSlot("*pdec") in h[a].owners and h[a].escaped and h[a].refcount == 1


def test_return_marks_escape():
    h = Heap()
    a = h.allocate(None)
    h.record_return(a)
    assert h[a].escaped
    assert [e.kind for e in h.trace] == [EventKind.ALLOCATE, EventKind.RETURN, EventKind.TRANSFER]


def test_attach_dec_alloc_shape():
    h = Heap()
    dp, frame, pkt = h.allocate(None), h.allocate(None), h.allocate(None)
    h.attach_inner(dp, "frame", frame)
    h.attach_inner(dp, "pkt", pkt)
    assert h[dp].children == {"frame": frame, "pkt": pkt}
    assert h.ancestors(pkt) == [dp]


def test_forest_violations():
    h = Heap()
    a, b, c = h.allocate(None), h.allocate(None), h.allocate(None)
    h.attach_inner(a, "f", b)
    with pytest.raises(ForestViolation):
        h.attach_inner(c, "f", b)
    with pytest.raises(ForestViolation):
        h.attach_inner(b, "g", a)


def test_copy_is_independent():
    h = Heap()
    a = h.allocate(None)
    g = h.copy()
    g.free_object(a)
    assert h[a].allocated and len(h.trace) == 1


# ------------------------------------------------------------------ patterns


def test_aror_examples():
    h = Heap()
    a = h.allocate(None)
    assert not check_trace(h.trace, Pattern.AROR)
    h.record_return(a)
    assert check_trace(h.trace, Pattern.AROR)
    assert check_trace(h.trace, "AROR")


def test_acr_rejects_a_bad_copy():
    trace = [OwnershipEvent(EventKind.ALLOCATE, 0, refcount=1, owners=frozenset({CALLER})),
             OwnershipEvent(EventKind.COPY, 0, refcount=3, owners=frozenset({CALLER}))]
    assert not check_trace(trace, Pattern.ACR)
    trace[1] = OwnershipEvent(EventKind.COPY, 0, refcount=2, owners=frozenset({CALLER}))
    assert check_trace(trace, Pattern.ACR)


def test_aror_rejects_freed_with_refs():
    trace = [OwnershipEvent(EventKind.ALLOCATE, 0, refcount=1, owners=frozenset({CALLER})),
             OwnershipEvent(EventKind.RETURN, 0, refcount=1, owners=frozenset({CALLER})),
             OwnershipEvent(EventKind.TRANSFER, 0, detail="Caller", refcount=1, owners=frozenset({CALLER})),
             OwnershipEvent(EventKind.FREE, 0, refcount=1, freed=True)]
    assert not check_trace(trace, Pattern.AROR)
    assert not check_trace(trace, Pattern.DAOR)


# Hand-checked rows. Ops act on objects allocated up front; "attach" hangs
# object 1 under object 0.
P = list(Pattern)
TABLE = [
    # ops, AROR IAROR DAOR DAOOR AGOR DAGOR ACR
    ((1, []), (0, 0, 1, 1, 0, 1, 1)),
    ((1, [("ret", 0)]), (1, 0, 1, 1, 0, 1, 1)),
    ((1, [("free", 0)]), (0, 0, 1, 1, 0, 1, 1)),
    ((1, [("ret", 0), ("free", 0)]), (1, 0, 1, 1, 0, 1, 1)),
    ((1, [("glob", 0)]), (0, 0, 1, 1, 1, 0, 1)),
    ((1, [("glob", 0), ("free", 0)]), (0, 0, 1, 1, 1, 1, 1)),
    ((1, [("glob", 0), ("unglob", 0)]), (0, 0, 1, 1, 1, 0, 1)),
    ((1, [("copy", 0)]), (0, 0, 1, 1, 0, 1, 1)),
    ((1, [("copy", 0), ("ret", 0), ("free", 0)]), (1, 0, 1, 1, 0, 1, 1)),
    ((2, [("attach",), ("ret", 0)]), (1, 1, 1, 1, 0, 1, 1)),
    ((2, [("attach",), ("ret", 0), ("free", 0)]), (1, 1, 1, 1, 0, 1, 1)),
    ((2, [("attach",), ("copy", 1), ("ret", 0), ("free", 0)]), (1, 1, 1, 1, 0, 1, 1)),
    ((2, [("attach",), ("free", 1)]), (0, 0, 1, 1, 0, 1, 1)),
    ((2, [("attach",), ("copy", 1), ("free", 1)]), (0, 0, 1, 0, 0, 1, 1)),
    ((2, [("attach",), ("glob", 1), ("free", 0)]), (0, 0, 1, 1, 1, 0, 1)),
    ((2, [("ret", 0), ("free", 0)]), (1, 0, 1, 1, 0, 1, 1)),
]


def play(n, ops):
    """Run ops on a real heap; None when an op is outside its precondition."""
    h = Heap()
    for _ in range(n):
        h.allocate(None)
    for op in ops:
        if op[0] == "attach":
            if not (h[0].allocated and h[1].allocated) or h[1].parent is not None:
                return None
            h.attach_inner(0, "f", 1)
        else:
            kind, oid = op
            {"free": h.free_object, "copy": h.copy_ref, "ret": h.record_return,
             "glob": lambda o: h.store_global(o, "g"), "unglob": lambda o: h.release_global(o, "g")}[kind](oid)
        assert h.check_invariants() == [], (ops, h.check_invariants())
        for o in h.objects.values():
            assert o.refcount >= 0
            assert o.allocated or o.refcount == 0
    for e in h.trace:
        assert e.refcount >= 0 and (not e.freed or e.refcount == 0)
    return h


@pytest.mark.parametrize("row", TABLE, ids=lambda r: ",".join(map(str, r[0][1])) or "alloc")
def test_truth_table_rows(row):
    (n, ops), expected = row
    h = play(n, ops)
    got = tuple(int(check_trace(h.trace, p)) for p in P)
    assert got == expected


# Reference semantics over operations rather than events.  Each step is one
# operation that opens an instant (attach folds into the step before, ops
# on a freed object do nothing), and every step keeps the full
# state of every object afterwards.


class RefModel:
    def __init__(self, n):
        self.objs = {}
        self.steps = []
        for i in range(n):
            self.objs[i] = {"rc": 1, "freed": False, "owners": {"C"}, "parent": None, "kids": set()}
            self._step({("alloc", i, False)})

    def _step(self, evs):
        self.steps.append({"ev": set(evs), "state": copy.deepcopy(self.objs)})

    def _fold(self, evs=()):
        self.steps[-1]["ev"] |= set(evs)
        self.steps[-1]["state"] = copy.deepcopy(self.objs)

    def _free(self, i, cascade, evs):
        o = self.objs[i]
        o["rc"], o["freed"] = 0, True
        o["owners"].discard("C")
        evs.add(("free", i, cascade))
        if o["parent"] is not None:
            self.objs[o["parent"]]["kids"].discard(i)
            o["owners"].discard(("H", o["parent"]))
            o["parent"] = None
        for k in sorted(o["kids"]):
            c = self.objs[k]
            c["parent"] = None
            c["owners"].discard(("H", i))
            if not c["freed"]:
                if c["rc"] == 1:
                    self._free(k, True, evs)
                else:
                    c["rc"] -= 1
        o["kids"] = set()

    def apply(self, op):
        if op[0] == "attach":
            self.objs[0]["kids"].add(1)
            self.objs[1]["parent"] = 0
            self.objs[1]["owners"].add(("H", 0))
            self._fold()
            return
        kind, i = op
        o = self.objs[i]
        if o["freed"]:
            return
        if kind == "unglob":
            if "G" in o["owners"]:
                o["owners"].discard("G")
                o["rc"] = max(1, o["rc"] - 1)
                self._step({("unglob", i, False)})
            return
        evs = {(kind, i, False)}
        if kind == "free":
            self._free(i, False, evs)
            self.steps.append({"ev": evs, "state": copy.deepcopy(self.objs)})
            return
        if kind == "copy":
            o["rc"] += 1
        elif kind == "ret":
            o["owners"].add("C")
        elif kind == "glob":
            o["owners"].add("G")
            o["rc"] += 1
        self._step(evs)

    # pattern readings

    def _alloc_step(self, i):
        return next(k for k, s in enumerate(self.steps) if ("alloc", i, False) in s["ev"])

    def _free_iff_zero(self, i, start):
        return all(s["state"][i]["freed"] == (s["state"][i]["rc"] == 0) for s in self.steps[start:])

    def _creates(self, i, kind, owner):
        a = self._alloc_step(i)
        if self.steps[a]["state"][i]["rc"] != 1:
            return False
        hit = any((kind, i, False) in s["ev"] and owner in s["state"][i]["owners"] for s in self.steps[a:])
        return hit and self._free_iff_zero(i, a)

    def _direct_frees(self, i):
        return [k for k, s in enumerate(self.steps) if ("free", i, False) in s["ev"]]

    def aror(self):
        return any(self._creates(i, "ret", "C") for i in self.objs)

    def agor(self):
        return any(self._creates(i, "glob", "G") for i in self.objs)

    def iaror(self):
        for p, q in itertools.permutations(self.objs, 2):
            a = self._alloc_step(q)
            if self.steps[a]["state"][q]["rc"] != 1:
                continue
            if not any(("ret", p, False) in s["ev"] and ("H", p) in s["state"][q]["owners"]
                       for s in self.steps[a:]):
                continue
            ok = True
            for k in self._direct_frees(p):
                before, after = self.steps[k - 1]["state"][q]["rc"], self.steps[k]["state"][q]["rc"]
                if before < 1 or after != before - 1:
                    ok = False
            if ok:
                return True
        return False

    def daor(self):
        for k, s in enumerate(self.steps):
            for ev in s["ev"]:
                if ev[0] == "free":
                    st = s["state"][ev[1]]
                    if not (st["rc"] == 0 and st["freed"] and "C" not in st["owners"]):
                        return False
        return True

    def daoor(self):
        for q in self.objs:
            for k in self._direct_frees(q):
                prev = self.steps[k - 1]["state"][q]
                parents = [o[1] for o in prev["owners"] if isinstance(o, tuple)]
                if not parents:
                    continue
                if self.steps[k]["state"][q]["rc"] != prev["rc"] - 1:
                    return False
                if any("C" not in self.steps[k]["state"][p]["owners"] for p in parents):
                    return False
        return True

    def dagor(self):
        for i in self.objs:
            for k, s in enumerate(self.steps):
                if i in s["state"] and "G" in s["state"][i]["owners"]:
                    if not any(t["state"][i]["freed"] for t in self.steps[k:]):
                        return False
        return True

    def acr(self):
        for k, s in enumerate(self.steps):
            for ev in s["ev"]:
                if ev[0] == "copy" and s["state"][ev[1]]["rc"] != self.steps[k - 1]["state"][ev[1]]["rc"] + 1:
                    return False
        return True

    def verdicts(self):
        return {Pattern.AROR: self.aror(), Pattern.IAROR: self.iaror(), Pattern.DAOR: self.daor(),
                Pattern.DAOOR: self.daoor(), Pattern.AGOR: self.agor(), Pattern.DAGOR: self.dagor(),
                Pattern.ACR: self.acr()}


KINDS = ["free", "copy", "ret", "glob", "unglob"]


def all_sequences(n, max_len=4):
    ops = [(k, i) for k in KINDS for i in range(n)] + ([("attach",)] if n == 2 else [])
    for length in range(max_len + 1):
        yield from itertools.product(ops, repeat=length)


@pytest.mark.parametrize("n", [1, 2])
def test_exhaustive_agreement_with_reference(n):
    checked = 0
    for ops in all_sequences(n):
        h = play(n, ops)
        if h is None:
            continue
        ref = RefModel(n)
        for op in ops:
            ref.apply(op)
        want = ref.verdicts()
        for p in P:
            assert check_trace(h.trace, p) == want[p], (ops, p)
        checked += 1
    assert checked > (100 if n == 1 else 5000)


def test_reference_matches_table():
    for (n, ops), expected in TABLE:
        ref = RefModel(n)
        for op in ops:
            ref.apply(op)
        assert tuple(int(ref.verdicts()[p]) for p in P) == expected, ops


# -------------------------------------------------------- engine soundness


def test_engine_paths_follow_patterns():
    src = (FIGURES / "fig6_acl_merge.mc").read_text()
    states, _ = run_states(src, "ACLMergeSelectorArguments")
    returned = 0
    for st in states:
        assert check_trace(st.heap.trace, Pattern.DAOR)
        assert st.heap.check_invariants() == []
        if isinstance(st.ret, HeapRef) and st.heap[st.ret.obj].allocated:
            returned += 1
            assert check_trace(st.heap.trace, Pattern.AROR)
    assert returned > 0
