"""The one-command pipeline.

Every stage -- ingest, cluster, synth (both engines), eval, and the
window/order sensitivity sweep -- runs from a single JSON config via the
CLI.  This script shells out exactly the way a user would.

Run from the repository root:  python demos/05_cli_pipeline.py
"""

import json
import subprocess
import sys
from pathlib import Path

REPO = Path(__file__).resolve().parents[1]
OUT = Path(__file__).resolve().parent / "out" / "pipeline"

command = [
    sys.executable,
    "-m",
    "seqsynth",
    "pipeline",
    "--config",
    str(REPO / "fixtures" / "pipeline.json"),
    "--output",
    str(OUT),
]
print("running:", " ".join(command))
subprocess.run(command, check=True)

manifest = json.loads((OUT / "pipeline_manifest.json").read_text())
print("\nstage timings (seconds):")
for stage, seconds in manifest["timings_seconds"].items():
    print(f"  {stage:<8} {seconds:.2f}")

summary = json.loads((OUT / "cluster" / "cluster_summary.json").read_text())
print(f"\nclusters: k={summary['k']}, sizes {summary['sizes_desc']}")

report = json.loads((OUT / "eval" / "report.json").read_text())
print("\nper-state KS p-values for individual durations:")
for state in report["states"]:
    row = report["individual_durations"][state]
    cells = ", ".join(
        f"{m}: p={row[m]['p']:.3g}" for m in report["methods"]
    )
    print(f"  state {state}: {cells}")

sweep = json.loads((OUT / "sweep" / "sweep.json").read_text())
print(f"\nsweep grid: {[(c['delta'], c['order']) for c in sweep['cells']]}")
print(f"all artifacts under {OUT}")
