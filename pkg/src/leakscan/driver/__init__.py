from .pipeline import Manifest, ManifestError, Report, ingest_manifest, manifest_from_dict, run_pipeline
from .report import emit_report, render_html

__all__ = ["Manifest", "ManifestError", "Report", "emit_report", "ingest_manifest",
           "manifest_from_dict", "render_html", "run_pipeline"]
