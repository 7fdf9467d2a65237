from __future__ import annotations

import argparse
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from qutrit_qrg.io_formats import boundaries_to_dict, write_gnuplot, write_json, write_scan_csv  # noqa: E402
from qutrit_qrg.phase_scan import scan_delta  # noqa: E402
from qutrit_qrg.utils.logger import setup_logger  # noqa: E402

log = setup_logger("qutrit_qrg.reproduce")

# (name, D, delta range, depths)
RUNS = [
    ("d0", 0.0, (0.0, 2.0), [9, 10]),
    ("d2p5", 2.5, (0.0, 4.0), [9, 10, 11]),
    ("d1p4", 1.4, (0.0, 3.0), [14, 15, 16]),
]


def main() -> int:
    ap = argparse.ArgumentParser(prog="reproduce_figures")
    ap.add_argument("--out-dir", default="out", help="Directory for CSV/JSON/gnuplot files")
    ap.add_argument("--points", type=int, default=400)
    ap.add_argument("--jobs", type=int, default=1)
    ap.add_argument("--refine-tol", dest="refine_tol", type=float, default=1e-4)
    args = ap.parse_args()

    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    for name, d, (lo, hi), depths in RUNS:
        scan = scan_delta(d, lo, hi, args.points, depths, jobs=args.jobs, refine_tol=args.refine_tol)
        csv_path = out_dir / f"{name}.csv"
        write_scan_csv(scan, str(csv_path))
        write_json(boundaries_to_dict(scan), str(csv_path.with_suffix(".boundaries.json")))
        write_gnuplot(str(csv_path), scan.depths, d)
        found = ", ".join(f"{b.delta_c:.5f} ({b.kind})" for b in scan.boundaries) or "none"
        print(f"D={d:g} depths={scan.depths} boundaries: {found}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
