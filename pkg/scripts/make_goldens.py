#!/usr/bin/env python3
"""Regenerate the golden reports in tests/golden/ from configs/.

Run after any intentional change to the pipeline; review the diff before
committing.
"""

import shutil
import sys
import tempfile
from pathlib import Path

REPO = Path(__file__).resolve().parent.parent
sys.path.insert(0, str(REPO / "src"))

from pmclab.cli import main  # noqa: E402

RUNS = ["robin_disk", "neumann_disk", "neumann_infeasible", "robin_ellipse",
        "ball3d_robin"]

golden = REPO / "tests" / "golden"
golden.mkdir(parents=True, exist_ok=True)
for name in RUNS:
    with tempfile.TemporaryDirectory() as td:
        code = main(["verify", "--config",
                     str(REPO / "configs" / f"{name}.json"), "--out", td])
        shutil.copy(Path(td) / "report.json",
                    golden / f"{name}.report.json")
        print(f"{name}: exit {code} -> tests/golden/{name}.report.json")
