import json
import re
import subprocess
import sys

import pytest

from conftest import CORPUS, FIGURES
from leakscan.cli import main
from leakscan.driver import (ManifestError, Report, ingest_manifest, manifest_from_dict, render_html,
                             run_pipeline)
from leakscan.driver.pipeline import PHASES

CORPUS_MANIFESTS = sorted(m for m in CORPUS.glob("*/*.json")
                          if not m.name.endswith(".expected.json") and m.parent.name != "figures")


def write_manifest(tmp_path, raw):
    p = tmp_path / "m.json"
    p.write_text(json.dumps(raw))
    return p


def test_two_file_manifest():
    m = ingest_manifest(FIGURES / "fig1_asn1.json")
    assert len(m.files) == 2 and m.name


@pytest.mark.parametrize("raw, needle", [
    ({"name": "x", "files": []}, "files"),
    ({"name": "x", "files": ["a.mc"], "config": {"loop_bnd": 2}}, "loop_bnd"),
    ({"name": "x", "files": ["nope.mc"]}, "nope.mc"),
    ({"files": ["a.mc"]}, "name"),
    ({"name": "x", "files": ["a.mc"], "extra": 1}, "extra"),
    ({"name": "x", "files": ["a.mc"], "config": {"loop_bound": 0}}, "loop_bound"),
    ([1, 2], "object"),
])
def test_manifest_errors(tmp_path, raw, needle):
    (tmp_path / "a.mc").write_text("int f() { return 0; }")
    with pytest.raises(ManifestError) as exc:
        ingest_manifest(write_manifest(tmp_path, raw))
    assert needle in str(exc.value)


def test_manifest_not_json(tmp_path):
    p = tmp_path / "m.json"
    p.write_text("{")
    with pytest.raises(ManifestError):
        ingest_manifest(p)


def test_fig1_project_report():
    r = run_pipeline(ingest_manifest(FIGURES / "fig1_asn1.json"))
    (f,) = r.report.findings
    assert f["function"] == "make_addressPrefix"
    assert {w["file"] for w in f["witness"]} == {str(FIGURES / "fig1_v3_addr.mc"), str(FIGURES / "fig1_tasn_new.mc")}


def test_leak_free_fixture():
    r = run_pipeline(ingest_manifest(FIGURES / "fig4_dec_alloc.json"))
    assert r.report.findings == []
    assert r.report.statistics["summary_allocators"] > 0


def test_phase_accounting():
    t = run_pipeline(ingest_manifest(FIGURES / "fig5_frame_ack.json")).report.timing_ms
    assert all(t[p] >= 0 for p in PHASES)
    assert abs(sum(t[p] for p in PHASES) - t["total"]) <= max(0.01 * t["total"], 0.002)


def test_findings_sorted():
    m = manifest_from_dict({"name": "all", "files": [str(p) for p in sorted(CORPUS.glob("early_exit/*.mc"))]})
    fs = run_pipeline(m).report.findings
    keys = [(f["alloc_site"]["file"], f["alloc_site"]["offset"]) for f in fs]
    assert keys == sorted(keys) and len(fs) >= 6


def test_deterministic_json():
    m = ingest_manifest(FIGURES / "fig1_asn1.json")
    a, b = run_pipeline(m).report.to_json(), run_pipeline(m).report.to_json()
    for d in (a, b):
        d.pop("timing_ms")
    assert json.dumps(a, sort_keys=True) == json.dumps(b, sort_keys=True)


def test_report_round_trip():
    rep = run_pipeline(ingest_manifest(FIGURES / "fig5_frame_ack.json"), dump_traces=True).report
    again = Report.from_json(json.loads(rep.dumps()))
    assert again == rep and again.dumps() == rep.dumps()
    assert rep.traces["frame_ack"]


def test_html_is_self_contained():
    rep = run_pipeline(ingest_manifest(FIGURES / "fig5_frame_ack.json")).report
    page = render_html(rep)
    assert page.startswith("<!DOCTYPE html>")
    assert not re.search(r"(src|href)\s*=|@import|url\(", page)
    assert "ossl_quic_wire_decode_frame_ack() == 0" in page


def test_summaries_in_skips_modeling(tmp_path):
    out = tmp_path / "s.json"
    manifest = str(FIGURES / "fig5_frame_ack.json")
    assert main(["analyze", manifest, "--summaries-out", str(out), "--out", str(tmp_path / "a.json")]) == 1
    assert main(["analyze", manifest, "--summaries-in", str(out), "--out", str(tmp_path / "b.json")]) == 1
    a, b = (json.loads((tmp_path / n).read_text()) for n in ("a.json", "b.json"))
    assert a["findings"] == b["findings"]


@pytest.mark.parametrize("manifest", CORPUS_MANIFESTS, ids=lambda p: f"{p.parent.name}/{p.stem}")
def test_corpus_matches_sidecars(manifest):
    expected = json.loads(manifest.with_suffix(".expected.json").read_text())
    got: dict = {}
    for f in run_pipeline(ingest_manifest(manifest)).findings:
        got.setdefault(f.function, []).append(f.alloc_site.offset)
    for fn, sites in expected["entries"].items():
        assert sorted(got.get(fn, [])) == sorted(s["offset"] for s in sites), fn


# ---------------------------------------------------------------------- CLI


def test_cli_exit_codes(tmp_path, capsys):
    assert main(["analyze", str(FIGURES / "fig4_dec_alloc.json")]) == 0
    assert main(["analyze", str(FIGURES / "fig5_frame_ack.json")]) == 1
    assert main(["analyze", str(tmp_path / "missing.json")]) == 2
    assert "cannot read manifest" in capsys.readouterr().err


def test_cli_parse_error_exits_2(tmp_path, capsys):
    (tmp_path / "bad.mc").write_text("int f( { }")
    m = write_manifest(tmp_path, {"name": "bad", "files": ["bad.mc"]})
    assert main(["analyze", str(m)]) == 2
    assert "leakscan: error:" in capsys.readouterr().err


def test_cli_html_and_callgraph(tmp_path):
    page, dot = tmp_path / "r.html", tmp_path / "cg.dot"
    code = main(["analyze", str(FIGURES / "fig1_asn1.json"), "--report", "html", "--out", str(page),
                 "--emit-callgraph", str(dot)])
    assert code == 1
    assert "make_addressPrefix" in page.read_text()
    assert '"make_addressPrefix" -> "IPAddressOrRange_new"' in dot.read_text()


def test_cli_overrides_reach_config(tmp_path):
    out = tmp_path / "r.json"
    main(["analyze", str(FIGURES / "fig4_dec_alloc.json"), "--loop-bound", "7", "--out", str(out)])
    assert json.loads(out.read_text())["config"]["loop_bound"] == 7


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "leakscan", "analyze", str(FIGURES / "fig5_frame_ack.json")],
                          capture_output=True, text=True)
    assert proc.returncode == 1
    assert json.loads(proc.stdout)["statistics"]["findings"] == 1
