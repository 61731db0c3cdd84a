from hypothesis import given, settings, strategies as st

from conftest import FIGURES, analyze, run_states
from leakscan.checker import LOCAL, Escaped, Finding, check_path, dedupe, escape_analysis, global_slot_check
from leakscan.frontend.lexer import Span
from leakscan.symex.solver import Verdict


def only_object(src, fn):
    states, _ = run_states(src, fn)
    (state,) = states
    (obj,) = state.heap.objects.values()
    return obj, state


def test_dec_alloc_object_escapes_through_param():
    src = (FIGURES / "fig4_dec_alloc.mc").read_text()
    states, _ = run_states(src, "dec_alloc")
    ok = [s for s in states if len([o for o in s.heap.objects.values() if o.allocated]) == 3]
    assert ok
    for s in ok:
        for o in s.heap.objects.values():
            assert escape_analysis(o, s) == Escaped("StoredToParam")


def test_collection_call_escape():
    src = """
    struct L { int n; };
    struct L *gList;
    void list_insert(struct L *l, int *p);
    void f(void) { int *p = malloc(4); list_insert(gList, p); }
    """
    obj, state = only_object(src, "f")
    assert escape_analysis(obj, state) == Escaped("GlobalCollectionCall", "list_insert")


def test_collection_name_needs_global_argument():
    src = "void list_insert(int *l, int *p);\nvoid f(int *l) { int *p = malloc(4); list_insert(l, p); }"
    obj, state = only_object(src, "f")
    assert escape_analysis(obj, state) == LOCAL


def test_collection_name_match_is_case_insensitive():
    src = """
    int *registry;
    void Registry_ADD(int **r, int *p);
    void f(void) { int *p = malloc(4); Registry_ADD(&registry, p); }
    """
    obj, state = only_object(src, "f")
    assert escape_analysis(obj, state) == Escaped("GlobalCollectionCall", "Registry_ADD")


def test_unmoved_object_is_local():
    obj, state = only_object("void f(void) { int *p = malloc(4); }", "f")
    assert escape_analysis(obj, state) == LOCAL
    assert len(check_path(state, "f")) == 1


def test_returned_object_escapes():
    obj, state = only_object("int *f(void) { int *p = malloc(4); return p; }", "f")
    assert escape_analysis(obj, state) == Escaped("ReturnedValue")
    assert check_path(state, "f") == []


def test_child_of_escaped_parent_is_not_a_leak():
    src = """
    struct N { int *d; };
    struct N *f(void) { struct N *n = malloc(8); n->d = malloc(4); return n; }
    """
    _, _, findings = analyze(src)
    assert findings == []


def test_frame_ack_findings():
    _, _, findings = analyze((FIGURES / "fig5_frame_ack.mc").read_text(), name="fig5_frame_ack.mc")
    (f,) = findings
    assert f.function == "frame_ack"
    assert "ossl_quic_wire_decode_frame_ack() == 0" in f.trigger
    assert f.confidence == "high"


GLOBAL_OVERWRITE = "int *g;\nvoid f(void) { g = malloc(4); g = malloc(8); }"


def test_global_overwrite_leaks_first_object():
    states, _ = run_states(GLOBAL_OVERWRITE, "f")
    (state,) = states
    found = global_slot_check(state, "f")
    assert len(found) == 1
    assert found[0].alloc_site.offset == GLOBAL_OVERWRITE.index("malloc(4)")
    _, _, findings = analyze(GLOBAL_OVERWRITE)
    assert [f.alloc_site.offset for f in findings] == [GLOBAL_OVERWRITE.index("malloc(4)")]


def test_global_store_alone_is_not_a_leak():
    _, _, findings = analyze("int *g;\nvoid f(void) { g = malloc(4); }")
    assert findings == []


def test_global_store_then_free_is_not_a_leak():
    _, _, findings = analyze("int *g;\nvoid f(void) { g = malloc(4); free(g); }")
    assert findings == []


def test_global_overwrite_after_copy_to_param_is_not_a_leak():
    _, _, findings = analyze("int *g;\nvoid f(int **out) { g = malloc(4); *out = g; g = malloc(8); }")
    assert findings == []


def span(offset, length=3):
    return Span("a.mc", offset, length)


def finding(site, trigger, path=(0,), confidence="high"):
    return Finding("f", span(site), "p", trigger, [span(o) for o in path], confidence=confidence,
                   verdict=Verdict.SAT if confidence == "high" else Verdict.UNKNOWN)


def test_dedupe_three_paths_one_site():
    out = dedupe([finding(10, "a", (5,)), finding(10, "b", (1,)), finding(10, "c", (3,))])
    (f,) = out
    assert f.trigger == "b" and f.alternates == ["b", "c", "a"]


def test_dedupe_distinct_sites_and_empty():
    assert len(dedupe([finding(10, "a"), finding(20, "a")])) == 2
    assert dedupe([]) == []


def test_dedupe_prefers_sat_witness():
    (f,) = dedupe([finding(10, "u", (1,), "low"), finding(10, "s", (9,))])
    assert f.trigger == "s" and f.confidence == "high"
    (g,) = dedupe([finding(10, "u", (1,), "low")])
    assert g.confidence == "low"


findings_st = st.lists(st.builds(finding, st.sampled_from([10, 20, 30]), st.sampled_from("abcd"),
                                 st.lists(st.integers(0, 5), max_size=3).map(tuple),
                                 st.sampled_from(["high", "low"])), max_size=8)


@settings(max_examples=200, deadline=None)
@given(findings_st)
def test_dedupe_idempotent(cands):
    once = dedupe(cands)
    assert dedupe(once) == once
    assert len({f.key() for f in once}) == len(once)
