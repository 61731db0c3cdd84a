import json

import pytest
from hypothesis import given, settings, strategies as st

from conftest import FIGURES
from leakscan.config import AnalysisConfig
from leakscan.frontend import load_program, program_from_sources
from leakscan.graphs import build_call_graph
from leakscan.oracle import enumerate_runs, generate
from leakscan.paths import AccessPath, FunctionType
from leakscan.summaries import (DecodeError, FunctionSummary, decode_summaries, encode_summaries,
                                generate_summaries, merge, seed_summaries)


def summarize(src, **kw):
    prog = program_from_sources({"t.mc": src})
    return generate_summaries(prog, build_call_graph(prog), AnalysisConfig(), **kw)


def figure_store(*names, **kw):
    prog = load_program([FIGURES / n for n in names])
    return generate_summaries(prog, build_call_graph(prog), AnalysisConfig(), **kw)


def test_seeds():
    s = seed_summaries()
    assert s.get("malloc").function_type is FunctionType.ALLOCATOR
    assert s.get("malloc").ret_objects == [AccessPath.ret()]
    assert s.get("free").function_type is FunctionType.DEALLOCATOR
    assert [p.index for p in s.get("free").freed_params] == [0]
    r = s.get("realloc")
    assert r.function_type is FunctionType.BOTH and r.ret_objects and r.freed_params
    assert not any(x.conditional for x in s.entries.values())


def test_dec_alloc_summary():
    store = figure_store("fig4_dec_alloc.mc")
    assert store.get("dec_alloc").to_json() == {
        "name": "dec_alloc", "function_type": "Allocator", "ret_objects": [],
        "para_objects": ["pdec", "pdec->frame", "pdec->pkt"], "freed_params": [], "conditional": False}


def test_acl_merge_summary():
    s = figure_store("fig6_acl_merge.mc").get("ACLMergeSelectorArguments")
    assert s.function_type is FunctionType.ALLOCATOR
    assert s.ret_objects == [AccessPath.ret()] and s.conditional


def test_plain_deallocator():
    s = summarize("void g(int *q) { free(q); }").get("g")
    assert s.function_type is FunctionType.DEALLOCATOR
    assert [p.render() for p in s.freed_params] == ["q"] and not s.conditional


def test_fig1_chain_after_four_rounds():
    store = figure_store("fig1_v3_addr.mc", "fig1_tasn_new.mc", keep_history=True)
    fourth = store.history[3]
    for name in ("asn1_item_ex_new", "ASN1_item_ex_new", "ASN1_item_new", "IPAddressOrRange_new"):
        assert fourth[name].allocates, name
    assert store.get("IPAddressOrRange_new").ret_objects == [AccessPath.ret()]


def test_no_seed_calls_leaves_seeds():
    store = summarize("int f(int x) { return x + 1; }\nint g(int y) { return f(y); }")
    assert store.entries == seed_summaries().entries


def test_field_paths_are_distinct():
    src = """
    struct P { int *a; int *b; };
    void fill(struct P *p) { p->a = malloc(4); p->b = malloc(4); }
    """
    s = summarize(src).get("fill")
    # a param path names the slot it points at, so p.a is (*p).a
    assert [p.render() for p in s.para_objects] == ["p.a", "p.b"]


def test_conditional_free():
    s = summarize("void g(int *q, int k) { if (k) free(q); }").get("g")
    assert s.function_type is FunctionType.DEALLOCATOR and s.conditional


def test_wrapper_nests_callee_objects():
    src = (FIGURES / "fig4_dec_alloc.mc").read_text() + """
    int open_dec(DecoderPriv **out, void *sch)
    {
        return dec_alloc(out, sch, 0);
    }
    """
    s = summarize(src).get("open_dec")
    assert [p.render() for p in s.para_objects] == ["out", "out->frame", "out->pkt"]


def test_escape_only_summary():
    src = """
    struct N { int v; };
    struct N *slot;
    void keep(struct N *n) { slot = n; }
    """
    s = summarize(src).get("keep")
    assert s.function_type is FunctionType.NONE
    assert [p.render() for p in s.escaped_params] == ["n"]
    rows = {r["name"]: r for r in json.loads(encode_summaries(summarize(src)))}
    assert rows["keep"]["escaped_params"] == ["n"]
    assert "escaped_params" not in rows["malloc"]


def test_monotone_across_rounds():
    store = figure_store("fig1_v3_addr.mc", "fig1_tasn_new.mc", keep_history=True)
    for before, after in zip(store.history, store.history[1:]):
        for name, s in before.items():
            assert s.objects() <= after[name].objects()


def test_merge_rule():
    r, p = [AccessPath.ret()], [AccessPath.param(0, "a")]
    old = FunctionSummary("f", ret_objects=r, conditional=True)
    assert merge(old, FunctionSummary("f", ret_objects=r, conditional=False)).conditional is False
    grown = merge(FunctionSummary("f", ret_objects=r), FunctionSummary("f", para_objects=p, conditional=False))
    assert grown.ret_objects == r and grown.para_objects == p
    assert merge(FunctionSummary("f", ret_objects=r, conditional=True),
                 FunctionSummary("f", para_objects=p)).conditional is True


def test_budget_trip_is_logged():
    src = "int c(void);\nint *f(void) { int *p = malloc(4);" + " if (c()) p = p;" * 12 + " return p; }"
    prog = program_from_sources({"t.mc": src})
    store = generate_summaries(prog, build_call_graph(prog), AnalysisConfig(path_budget=16))
    assert any("budget" in d for d in store.diagnostics)
    assert store.get("f") is None


# ------------------------------------------------------------------- JSON


def test_empty_store_encodes_to_empty_list():
    from leakscan.summaries import SummaryStore
    assert encode_summaries(SummaryStore()) == "[]"


def test_round_trip_figures():
    store = figure_store("fig4_dec_alloc.mc")
    again = decode_summaries(encode_summaries(store), store.params)
    assert again.entries == store.snapshot()
    assert encode_summaries(again) == encode_summaries(store)


@pytest.mark.parametrize("text, where", [
    ("{", "line 1"),
    ("{}", "$"),
    ('[{"name": 3}]', "$[0]"),
    ('[{"name": "f", "bogus": 1}]', "$[0]"),
    ('[{"name": "f", "ret_objects": ["a"]}]', "$[0].ret_objects[0]"),
    ('[{"name": "f", "para_objects": ["x->"]}]', "$[0].para_objects[0]"),
    ('[{"name": "f", "ret_objects": ["return"], "function_type": "Deallocator"}]', "$[0]"),
    ('[{"name": "f"}, {"name": "f"}]', "$[1]"),
    ('[{"name": "f", "conditional": "yes"}]', "$[0]"),
])
def test_decode_errors_carry_location(text, where):
    with pytest.raises(DecodeError) as exc:
        decode_summaries(text, {"f": ("x",)})
    assert exc.value.location.startswith(where)


NAMES = ("a", "b", "c")
steps = st.lists(st.one_of(st.just(("*", "")), st.tuples(st.just("->"), st.sampled_from(["f", "g"])),
                           st.tuples(st.just("."), st.sampled_from(["f", "g"]))), max_size=2).map(tuple)
param_paths = st.builds(lambda i, s: AccessPath.param(i, NAMES[i], s), st.integers(0, 2), steps)
summaries = st.builds(
    lambda name, r, p, f, g, c, e: FunctionSummary(name, r, p, f, g, c, e),
    st.sampled_from(["f0", "f1", "f2", "f3"]),
    st.lists(st.builds(AccessPath.ret, steps), max_size=2),
    st.lists(param_paths, max_size=3),
    st.lists(param_paths, max_size=2),
    st.lists(st.builds(AccessPath.glob, st.sampled_from(["g", "h"]), steps), max_size=2),
    st.booleans(),
    st.lists(param_paths, max_size=2),
)


@settings(max_examples=200, deadline=None)
@given(st.lists(summaries, max_size=4, unique_by=lambda s: s.name))
def test_round_trip_random(rows):
    from leakscan.summaries import SummaryStore
    store = SummaryStore()
    for s in rows:
        store.entries[s.name] = s.normalized()
    params = {s.name: NAMES for s in rows}
    again = decode_summaries(encode_summaries(store), params)
    assert again.entries == store.entries


# ----------------------------------------------------------------- oracle


def _oracle_allocates(program, fn):
    kept = {"returned", "stored through a parameter", "global"}
    return any(reason in kept for run in enumerate_runs(program, fn) if not run.dead
               for reason in run.escapes.values())


@settings(max_examples=120, deadline=None)
@given(st.integers(min_value=0, max_value=10 ** 6))
def test_helper_allocators_match_oracle(seed):
    prog = program_from_sources({"g.mc": generate(seed).source})
    store = generate_summaries(prog, build_call_graph(prog), AnalysisConfig())
    for fn in prog.functions:
        if fn != "entry":
            assert store.is_allocator(fn) == _oracle_allocates(prog, fn), fn
