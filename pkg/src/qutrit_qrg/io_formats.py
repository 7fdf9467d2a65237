from __future__ import annotations

import json
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional

import numpy as np
import pandas as pd

from .errors import TensorFormatError
from .invariants import InvariantSet
from .phase_scan import ScanResult
from .rg_flow import FlowTrajectory
from .spin_block import BlockSolution, EDReport, OperatorReport
from .tensor_core import Tensor333, tensor_from_coefficients

SCAN_COLUMNS = ["delta", "depth", "J_n", "delta_n", "D_n", "abs_I6", "status"]
FLOAT_FORMAT = "%.16e"


def _numbers(raw: Any, key: str) -> List[float]:
    if not isinstance(raw, list):
        raise TensorFormatError(f'"{key}" must be a list of 27 numbers')
    if len(raw) != 27:
        raise TensorFormatError(f'"{key}" has {len(raw)} entries, expected 27')
    out = []
    for i, v in enumerate(raw):
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            raise TensorFormatError(f'"{key}"[{i}] is not a number: {v!r}', index=i)
        out.append(float(v))
    return out


def parse_tensor_json(text: str) -> Tensor333:
    """{"re": [27 numbers], "im": [27 numbers]} in row-major (i, j, k) order; "im" optional."""
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as e:
        raise TensorFormatError(f"invalid tensor JSON: {e}") from e
    if not isinstance(raw, dict) or "re" not in raw:
        raise TensorFormatError('tensor JSON must be an object with an "re" list')
    re = _numbers(raw["re"], "re")
    im = _numbers(raw["im"], "im") if raw.get("im") is not None else [0.0] * 27
    return tensor_from_coefficients(np.asarray(re) + 1j * np.asarray(im))


def load_tensor_json(path: str) -> Tensor333:
    return parse_tensor_json(Path(path).read_text(encoding="utf-8"))


def tensor_to_dict(t: Tensor333) -> Dict[str, List[float]]:
    flat = t.flatten()
    return {"re": [float(v) for v in flat.real], "im": [float(v) for v in flat.imag]}


def dump_tensor_json(t: Tensor333) -> str:
    return json.dumps(tensor_to_dict(t))


def _cplx(z: complex) -> Dict[str, float]:
    z = complex(z)
    return {"re": z.real, "im": z.imag}


def invariants_to_dict(inv: InvariantSet, floor: float = 1e-12) -> Dict[str, Any]:
    return {
        "i6": _cplx(inv.i6),
        "i9": _cplx(inv.i9),
        "i12": _cplx(inv.i12),
        "j12": _cplx(inv.j12),
        "delta333": _cplx(inv.delta333),
        "scale": inv.scale,
        "genuine": inv.is_genuine(floor),
    }


def block_to_dict(
    sol: BlockSolution,
    operators: Optional[OperatorReport] = None,
    ed: Optional[EDReport] = None,
) -> Dict[str, Any]:
    out: Dict[str, Any] = {
        "delta": sol.delta,
        "D": sol.d,
        "eps0": sol.eps0,
        "eps1": sol.eps1,
        "a": sol.a,
        "b": sol.b,
        "c": sol.c,
        "d": sol.d_coef,
        "e": sol.e,
        "n0": sol.n0,
        "n1": sol.n1,
        "x_ren": sol.x_ren,
        "z_ren": sol.z_ren,
        "x_ren_sq": sol.x_ren ** 2,
        "z_ren_sq": sol.z_ren ** 2,
        "abs_I6": sol.abs_i6(),
    }
    if operators is not None or ed is not None:
        verify: Dict[str, Any] = {}
        devs = []
        if operators is not None:
            verify["operators"] = {
                "isometry": operators.isometry,
                "eigen_residual": operators.eigen_residual,
                "energy": operators.energy,
                **operators.spin,
            }
            devs.append(operators.max_deviation)
        if ed is not None:
            verify["ed"] = {
                "eps0": ed.eps0,
                "eps1": ed.eps1,
                "eps0_deviation": ed.eps0_deviation,
                "eps1_deviation": ed.eps1_deviation,
                "doublet_splitting": ed.doublet_splitting,
                "psi0_deviation": ed.psi0_deviation,
            }
            devs.append(ed.max_deviation)
        verify["max_deviation"] = max(devs)
        out["verify"] = verify
    return out


def trajectory_records(traj: FlowTrajectory) -> List[Dict[str, Any]]:
    """One record per step; the final record carries the trajectory status."""
    out = []
    last = len(traj.steps) - 1
    for s in traj.steps:
        c = s.couplings
        rec: Dict[str, Any] = {
            "n": s.n,
            "chain_length": s.chain_length,
            "block_size": s.block_size,
            "J": c.j,
            "delta": c.delta,
            "D": c.d,
        }
        if s.block is not None:
            rec.update({
                "eps0": s.block.eps0,
                "eps1": s.block.eps1,
                "x_ren": s.block.x_ren,
                "z_ren": s.block.z_ren,
                "abs_I6": s.block.abs_i6(),
            })
        else:
            rec["abs_I6"] = None
        rec["status"] = traj.status if s.n == last else "ok"
        if s.n == last and traj.reason:
            rec["reason"] = traj.reason
        out.append(rec)
    return out


def trajectory_json_lines(traj: FlowTrajectory) -> str:
    return "".join(json.dumps(r) + "\n" for r in trajectory_records(traj))


def scan_frame(scan: ScanResult) -> pd.DataFrame:
    rows = [
        (p.delta, p.depth, p.j_n, p.delta_n, p.d_n, p.abs_i6, p.status)
        for row in scan.points
        for p in row
    ]
    df = pd.DataFrame(rows, columns=SCAN_COLUMNS)
    return df.astype({"depth": "int64"})


def scan_csv(scan: ScanResult) -> str:
    return scan_frame(scan).to_csv(index=False, float_format=FLOAT_FORMAT, na_rep="nan", lineterminator="\n")


def write_scan_csv(scan: ScanResult, path: str) -> None:
    Path(path).write_text(scan_csv(scan), encoding="utf-8")


def boundaries_to_dict(scan: ScanResult) -> Dict[str, Any]:
    return {
        "D": scan.d,
        "depths": list(scan.depths),
        "points": int(len(scan.grid)),
        "delta_range": [float(scan.grid[0]), float(scan.grid[-1])],
        "skipped": sorted({p.delta for p in scan.skipped()}),
        "boundaries": [
            {"delta_c": b.delta_c, "kind": b.kind, "depths": [b.depth_lo, b.depth_hi]}
            for b in scan.boundaries
        ],
    }


def write_json(data: Dict[str, Any], path: str) -> None:
    Path(path).write_text(json.dumps(data, indent=2) + "\n", encoding="utf-8")


def gnuplot_script(csv_path: str, depths: Iterable[int], d: float) -> str:
    """Plot |I6| against delta, one curve per depth, reading the scan CSV."""
    name = Path(csv_path).name
    plots = [
        f"'{name}' using (column(\"depth\")=={k} && strcol(\"status\") eq \"ok\" ? column(\"delta\") : 1/0)"
        f":(column(\"abs_I6\")) with lines title 'n={k}'"
        for k in depths
    ]
    lines = [
        "set datafile separator ','",
        "set xlabel 'Delta'",
        "set ylabel '|I_6|'",
        f"set title 'D = {d:g}'",
        "set terminal pngcairo size 900,600",
        f"set output '{Path(name).stem}.png'",
        "plot " + ", \\\n     ".join(plots),
        "",
    ]
    return "\n".join(lines)


def write_gnuplot(csv_path: str, depths: Iterable[int], d: float, path: Optional[str] = None) -> str:
    out = path or str(Path(csv_path).with_suffix(".gp"))
    Path(out).write_text(gnuplot_script(csv_path, depths, d), encoding="utf-8")
    return out
