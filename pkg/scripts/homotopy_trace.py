#!/usr/bin/env python3
"""Walk the homotopy family on the ellipse and print the per-step critical
point census.  Usage: python scripts/homotopy_trace.py [H] [alpha]"""

import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from pmclab.assembly import ProblemSpec            # noqa: E402
from pmclab.geometry import make_ellipse, triangulate  # noqa: E402
from pmclab.solver import homotopy_solve            # noqa: E402

H = float(sys.argv[1]) if len(sys.argv) > 1 else 0.5
alpha = float(sys.argv[2]) if len(sys.argv) > 2 else 1.0

domain = make_ellipse(1.3, 0.7)
mesh = triangulate(domain, 0.05)
spec = ProblemSpec.robin(H, alpha)
schedule = [round(0.1 * k, 10) for k in range(11)]
field, trace = homotopy_solve(mesh, spec, schedule)

print(f"ellipse 1.3 x 0.7, Robin alpha={alpha}, H={H}, "
      f"{mesh.n_vertices} vertices")
print(f"{'t':>5} {'minima':>7} {'saddles':>8} {'morse':>6} "
      f"{'location':>22} {'det':>10}")
for s in trace.steps:
    r = s.records[0]
    loc = f"({r.location[0]:+.4f}, {r.location[1]:+.4f})"
    print(f"{s.t:5.2f} {s.n_minima:7d} {s.n_saddles:8d} {str(s.morse_ok):>6} "
          f"{loc:>22} {r.gauss_curvature:10.4f}")
