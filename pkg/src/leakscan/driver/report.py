"""Report emission: canonical JSON and a self-contained HTML page."""
from __future__ import annotations

import html
from pathlib import Path

from .pipeline import Report

_STYLE = """
body { font-family: sans-serif; margin: 2em; color: #222; }
table { border-collapse: collapse; }
td, th { border: 1px solid #bbb; padding: 2px 8px; text-align: left; }
pre { background: #f4f4f4; padding: 6px; overflow-x: auto; }
.low { color: #a60; }
.high { color: #a00; }
"""


def render_html(report: Report) -> str:
    r = report.to_json()
    e = html.escape
    out = ["<!DOCTYPE html>", "<html><head><meta charset=\"utf-8\">",
           f"<title>leakscan: {e(r['manifest']['name'])}</title>",
           f"<style>{_STYLE}</style></head><body>",
           f"<h1>Leak report for {e(r['manifest']['name'])}</h1>",
           f"<p>leakscan {e(r['version'])}, {len(r['findings'])} finding(s)</p>",
           "<h2>Phases</h2><table><tr><th>phase</th><th>ms</th></tr>"]
    for k, v in r["timing_ms"].items():
        out.append(f"<tr><td>{e(k)}</td><td>{v}</td></tr>")
    out.append("</table><h2>Statistics</h2><table>")
    for k, v in r["statistics"].items():
        out.append(f"<tr><td>{e(k)}</td><td>{e(str(v))}</td></tr>")
    out.append("</table><h2>Findings</h2>")
    for i, f in enumerate(r["findings"], 1):
        site = f["alloc_site"]
        out.append(f"<h3 class=\"{e(f['confidence'])}\">#{i} {e(f['function'])}: "
                   f"{e(site['file'])}:{site.get('line', '?')} ({e(f['confidence'])} confidence)</h3>")
        out.append(f"<p>Leaked object: <code>{e(f['leaked_path'])}</code></p>")
        out.append(f"<p>Trigger: <code>{e(f['trigger'])}</code></p>")
        if len(f["alternates"]) > 1:
            out.append("<p>Other triggers:</p><ul>")
            out += [f"<li><code>{e(t)}</code></li>" for t in f["alternates"] if t != f["trigger"]]
            out.append("</ul>")
        out.append("<pre>")
        last = None
        for w in f["witness"]:
            key = (w["file"], w.get("line"))
            if key == last:
                continue
            last = key
            out.append(e(f"{w['file']}:{w.get('line', '?')}: {w.get('excerpt', '')}"))
        out.append("</pre>")
    if r["diagnostics"]:
        out.append("<h2>Diagnostics</h2><ul>")
        out += [f"<li>{e(d)}</li>" for d in r["diagnostics"]]
        out.append("</ul>")
    out.append("</body></html>")
    return "\n".join(out) + "\n"


def emit_report(report: Report, fmt: str, out) -> None:
    text = report.dumps() if fmt == "json" else render_html(report)
    if out is None:
        print(text, end="")
        return
    Path(out).write_text(text, encoding="utf-8")
