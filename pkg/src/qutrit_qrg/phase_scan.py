"""Fixed-D sweeps of |I6| over delta at several RG depths; crossings, peaks, phase labels."""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np

from .errors import FlowTerminated, NoBracket, WindowError
from .rg_flow import FIXED_POINT_TOL, i6_after_steps, rg_trajectory
from .spin_block import SINGULAR_TOL, Couplings
from .utils.logger import setup_logger
from .utils.time_utils import elapsed_s, now_ms

log = setup_logger("qutrit_qrg.phase_scan")

HALDANE_FLOOR = 1e-6
FLAT_TOL = 1e-10
PEAK_WINDOW = 5
PEAK_FACTOR = 2.0
PEAK_REL_FLOOR = 1e-6
# a crossing counts only if the deepest curve moves by this fraction of its height nearby
STRUCTURE_FRACTION = 0.5
SAMPLE_TOL = 1e-12
PEAK_SAMPLES = 101
ZOOM_POINTS = 11
MAX_BISECTIONS = 200

HALDANE = "Haldane"
NON_HALDANE = "non-Haldane"
UNLABELED = "Unlabeled"


@dataclass(frozen=True)
class PointResult:
    delta: float
    depth: int
    j_n: float
    delta_n: float
    d_n: float
    abs_i6: float
    status: str

    @property
    def ok(self) -> bool:
        return self.status == "ok"


@dataclass(frozen=True)
class Boundary:
    delta_c: float
    kind: str  # crossing | peak | drop
    depth_lo: int
    depth_hi: int


@dataclass(frozen=True)
class Crossing:
    delta_c: float
    samples: Tuple[Tuple[float, float], ...] = ()  # (delta, |I6| at depth_hi) visited by the bisection


@dataclass
class ScanResult:
    d: float
    grid: np.ndarray
    depths: List[int]
    points: List[List[PointResult]]  # [grid index][depth index]
    boundaries: List[Boundary] = field(default_factory=list)

    @property
    def values(self) -> np.ndarray:
        """|I6| with shape (len(depths), len(grid)); NaN marks skipped points."""
        out = np.full((len(self.depths), len(self.grid)), np.nan)
        for i, row in enumerate(self.points):
            for k, p in enumerate(row):
                if p.ok:
                    out[k, i] = p.abs_i6
        return out

    def curve(self, depth: int) -> np.ndarray:
        return self.values[self.depths.index(depth)]

    def skipped(self) -> List[PointResult]:
        return [p for row in self.points for p in row if not p.ok]


def evaluate_point(
    delta: float,
    d: float,
    depths: Sequence[int],
    j: float = 1.0,
    tol: float = SINGULAR_TOL,
    fixed_point_tol: float = FIXED_POINT_TOL,
) -> List[PointResult]:
    """One trajectory to max(depths), read off at every requested depth."""
    traj = rg_trajectory(Couplings(j, delta, d), max(depths), tol=tol, fixed_point_tol=fixed_point_tol)
    out: List[PointResult] = []
    for depth in depths:
        if depth < len(traj.steps):
            s = traj.steps[depth]
            c = s.couplings
            if s.block is not None:
                out.append(PointResult(delta, depth, c.j, c.delta, c.d, s.block.abs_i6(), "ok"))
                continue
            out.append(PointResult(delta, depth, c.j, c.delta, c.d, float("nan"), traj.status))
        else:
            out.append(PointResult(delta, depth, float("nan"), float("nan"), float("nan"), float("nan"), traj.status))
    return out


def _grid_map(fn: Callable[[float], List[PointResult]], grid: Sequence[float], jobs: int) -> List[List[PointResult]]:
    if jobs <= 1:
        return [fn(x) for x in grid]
    with ThreadPoolExecutor(max_workers=jobs) as ex:
        return list(ex.map(fn, grid))


def scan_delta(
    d: float,
    delta_min: float,
    delta_max: float,
    points: int,
    depths: Sequence[int],
    jobs: int = 1,
    j: float = 1.0,
    tol: float = SINGULAR_TOL,
    fixed_point_tol: float = FIXED_POINT_TOL,
    refine_tol: Optional[float] = 1e-4,
    flat_tol: float = FLAT_TOL,
    haldane_floor: float = HALDANE_FLOOR,
) -> ScanResult:
    if not delta_min < delta_max:
        raise ValueError(f"delta_min ({delta_min}) must be < delta_max ({delta_max})")
    if points < 2:
        raise ValueError(f"points must be >= 2, got {points}")
    if not depths:
        raise ValueError("depths must be nonempty")
    if any(int(k) < 0 for k in depths):
        raise ValueError(f"depths must be >= 0, got {list(depths)}")
    if jobs < 1:
        raise ValueError(f"jobs must be >= 1, got {jobs}")

    depths = sorted({int(k) for k in depths})
    grid = np.linspace(delta_min, delta_max, points)
    t0 = now_ms()
    log.info(f"SCAN d={d} points={points} depths={depths} range=[{delta_min}, {delta_max}] jobs={jobs}")

    def fn(x: float) -> List[PointResult]:
        return evaluate_point(float(x), d, depths, j=j, tol=tol, fixed_point_tol=fixed_point_tol)

    rows = _grid_map(fn, grid, jobs)
    scan = ScanResult(d=float(d), grid=grid, depths=depths, points=rows)

    skipped = {p.delta for p in scan.skipped()}
    if skipped:
        log.warning(f"SCAN d={d}: {len(skipped)} grid points hit a singular block and were skipped")

    if refine_tol is not None:
        scan = replace(scan, boundaries=detect_boundaries(
            scan, refine_tol=refine_tol, flat_tol=flat_tol, j=j, tol=tol, haldane_floor=haldane_floor,
        ))
    log.info(f"SCAN d={d} done in {elapsed_s(t0):.2f}s boundaries={[round(b.delta_c, 6) for b in scan.boundaries]}")
    return scan


def _safe_i6(delta: float, d: float, depth: int, j: float, singular_tol: float) -> float:
    try:
        return i6_after_steps(delta, d, depth, j=j, tol=singular_tol)
    except FlowTerminated:
        return float("nan")


def locate_crossing(
    d: float,
    depth_lo: int,
    depth_hi: int,
    bracket: Tuple[float, float],
    tol: float = 1e-4,
    j: float = 1.0,
    singular_tol: float = SINGULAR_TOL,
    sample_tol: float = SAMPLE_TOL,
) -> Crossing:
    """Bisect g(delta) = |I6|_lo - |I6|_hi on the bracket down to width `tol`.

    The bisection goes on to `sample_tol` without moving the reported midpoint,
    recording the deeper curve at each visited delta: a peak narrower than the
    scan grid only shows up in those samples.
    """
    a, b = float(min(bracket)), float(max(bracket))
    if tol <= 0.0:
        raise ValueError(f"tol must be > 0, got {tol}")
    samples: List[Tuple[float, float]] = []

    def g(x: float) -> float:
        hi = i6_after_steps(x, d, depth_hi, j=j, tol=singular_tol)
        samples.append((x, hi))
        return i6_after_steps(x, d, depth_lo, j=j, tol=singular_tol) - hi

    ga, gb = g(a), g(b)
    if ga == 0.0:
        return Crossing(a, tuple(samples))
    if gb == 0.0:
        return Crossing(b, tuple(samples))
    if np.sign(ga) == np.sign(gb):
        raise NoBracket(a, b, ga, gb)

    x: Optional[float] = None
    stop = min(tol, sample_tol)
    for _ in range(MAX_BISECTIONS):
        if x is None and b - a < tol:
            x = 0.5 * (a + b)
        if b - a < stop:
            break
        m = 0.5 * (a + b)
        try:
            gm = g(m)
        except FlowTerminated:
            if x is None:
                raise
            break
        if gm == 0.0:
            if x is None:
                x = m
            break
        if np.sign(gm) == np.sign(ga):
            a, ga = m, gm
        else:
            b = m
    if x is None:
        x = 0.5 * (a + b)
    return Crossing(x, tuple(samples))


def _refine_max(f: Callable[[float], float], a: float, b: float, tol: float, points: int = ZOOM_POINTS) -> float:
    """Zoom in on the largest sample of f over [a, b] until the interval is narrower than tol."""
    best = 0.5 * (a + b)
    for _ in range(MAX_BISECTIONS):
        xs = np.linspace(a, b, points)
        ys = np.array([f(float(x)) for x in xs])
        if not np.isfinite(ys).any():
            break
        k = int(np.nanargmax(ys))
        best = float(xs[k])
        if b - a < tol:
            break
        a, b = float(xs[max(k - 1, 0)]), float(xs[min(k + 1, points - 1)])
    return best


def diminishing_peak(
    d: float,
    depth_lo: int,
    depth_hi: int,
    bracket: Tuple[float, float],
    tol: float = 1e-4,
    j: float = 1.0,
    singular_tol: float = SINGULAR_TOL,
    samples: int = PEAK_SAMPLES,
    factor: float = PEAK_FACTOR,
) -> Optional[float]:
    """Interior maximum of the depth_hi curve on the bracket that sits below depth_lo.

    The maximum must stand `factor` above at least one bracket end. Returns None
    when the bracket holds no such peak.
    """
    a, b = float(min(bracket)), float(max(bracket))
    xs = np.linspace(a, b, samples)
    ys = np.array([_safe_i6(float(x), d, depth_hi, j, singular_tol) for x in xs])
    if not np.isfinite(ys).any():
        return None
    k = int(np.nanargmax(ys))
    top = float(ys[k])
    if not 0 < k < samples - 1 or not top > 0.0:
        return None
    ends = ys[[0, -1]]
    if np.isfinite(ends).any() and top < factor * float(np.nanmin(ends)):
        return None
    if not _safe_i6(float(xs[k]), d, depth_lo, j, singular_tol) > top:
        return None
    return _refine_max(lambda x: _safe_i6(x, d, depth_hi, j, singular_tol), float(xs[k - 1]), float(xs[k + 1]), tol)


def find_crossing(
    d: float,
    depth_lo: int,
    depth_hi: int,
    bracket: Tuple[float, float],
    tol: float = 1e-4,
    j: float = 1.0,
    singular_tol: float = SINGULAR_TOL,
) -> float:
    """Crossing of the depth_lo and depth_hi curves on the bracket.

    Where the curves do not cross, a peak of the deeper curve that shrinks with
    depth marks the transition instead; NoBracket only when neither is found.
    """
    try:
        return locate_crossing(d, depth_lo, depth_hi, bracket, tol=tol, j=j, singular_tol=singular_tol).delta_c
    except NoBracket:
        x = diminishing_peak(d, depth_lo, depth_hi, bracket, tol=tol, j=j, singular_tol=singular_tol)
        if x is None:
            raise
        log.info(f"no crossing on {tuple(bracket)} at D={d}; diminishing peak at {x:.6f}")
        return x


def classify_transition(
    scan: ScanResult,
    delta_c: float,
    window: int = PEAK_WINDOW,
    factor: float = PEAK_FACTOR,
    samples: Sequence[Tuple[float, float]] = (),
) -> str:
    """`peak` if the deepest curve rises to >= factor x both window edges inside the window, else `drop`.

    `samples` are extra (delta, |I6|) readings of the deepest depth off the grid.
    """
    grid = scan.grid
    if not grid[0] <= delta_c <= grid[-1]:
        raise WindowError(f"delta_c={delta_c} outside the scanned range [{grid[0]}, {grid[-1]}]")
    i = int(np.argmin(np.abs(grid - delta_c)))
    lo, hi = i - window, i + window
    if lo < 0 or hi >= len(grid):
        raise WindowError(f"window of +/-{window} points around delta_c={delta_c} leaves the grid")

    y = scan.curve(scan.depths[-1])[lo:hi + 1]
    if np.isnan(y[0]) or np.isnan(y[-1]):
        raise WindowError(f"window around delta_c={delta_c} ends on a skipped point")
    inner = [float(v) for v in y[1:-1] if np.isfinite(v)]
    inner += [float(v) for x, v in samples if grid[lo] < x < grid[hi] and np.isfinite(v)]
    if not inner:
        return "drop"
    top = max(inner)
    if top > 0.0 and top >= factor * y[0] and top >= factor * y[-1]:
        return "peak"
    return "drop"


def phase_label(
    delta: float,
    d: float,
    depth: int,
    zero_tol: float = HALDANE_FLOOR,
    j: float = 1.0,
) -> str:
    try:
        v = i6_after_steps(delta, d, depth, j=j)
    except FlowTerminated as e:
        log.debug(f"phase_label({delta}, {d}, {depth}): {e}")
        return UNLABELED
    return HALDANE if v > zero_tol else NON_HALDANE


def _sign_changes(g: np.ndarray, flat_tol: float) -> List[Tuple[int, int]]:
    """Grid index pairs (i, i + 1) around a sign change of g; (i, i) where g vanishes on the grid."""
    out = []
    n = len(g)
    for i in range(n - 1):
        a, b = g[i], g[i + 1]
        if not (np.isfinite(a) and np.isfinite(b)) or max(abs(a), abs(b)) < flat_tol:
            continue
        if np.sign(a) * np.sign(b) < 0:
            out.append((i, i + 1))
    for i in range(1, n - 1):
        if g[i] != 0.0:
            continue
        a, b = g[i - 1], g[i + 1]
        if not (np.isfinite(a) and np.isfinite(b)) or max(abs(a), abs(b)) < flat_tol:
            continue
        if np.sign(a) * np.sign(b) < 0:
            out.append((i, i))
    return sorted(out)


def _has_structure(scan: ScanResult, delta: float, window: int = PEAK_WINDOW,
                   fraction: float = STRUCTURE_FRACTION) -> bool:
    """Deepest curve rises or falls by `fraction` of its height within +/-window points of delta."""
    y = scan.curve(scan.depths[-1])
    i = int(np.argmin(np.abs(scan.grid - delta)))
    seg = y[max(i - window, 0):i + window + 1]
    seg = seg[np.isfinite(seg)]
    if seg.size == 0:
        return False
    top = float(seg.max())
    return top > 0.0 and top - float(seg.min()) >= fraction * top


def locate_peaks(
    scan: ScanResult,
    depth: int,
    floor: float = 0.0,
    rel_floor: float = PEAK_REL_FLOOR,
    window: int = PEAK_WINDOW,
    factor: float = PEAK_FACTOR,
    both_sides: bool = True,
) -> List[float]:
    """Grid positions of sharp local maxima of one depth curve.

    A maximum must clear `floor` and `rel_floor` times the curve's largest value,
    and stand `factor` above both window edges (one edge if not `both_sides`).
    """
    y = scan.curve(depth)
    if not np.isfinite(y).any():
        return []
    floor = max(floor, rel_floor * float(np.nanmax(y)))
    out = []
    for i in range(window, len(y) - window):
        v = y[i]
        if not np.isfinite(v) or v <= floor:
            continue
        seg = y[i - window:i + window + 1]
        if np.any(np.isnan(seg)) or v < np.max(seg):
            continue
        edges = (seg[0], seg[-1])
        if v >= factor * (max(edges) if both_sides else min(edges)):
            out.append(float(scan.grid[i]))
    return out


def _kind(scan: ScanResult, x: float, samples: Sequence[Tuple[float, float]] = ()) -> str:
    try:
        return classify_transition(scan, x, samples=samples)
    except WindowError as e:
        log.debug(f"boundary at {x:.6f} left unclassified: {e}")
        return "crossing"


def detect_boundaries(
    scan: ScanResult,
    refine_tol: float = 1e-4,
    flat_tol: float = FLAT_TOL,
    j: float = 1.0,
    tol: float = SINGULAR_TOL,
    haldane_floor: float = HALDANE_FLOOR,
) -> List[Boundary]:
    """Crossings of the two deepest curves, each refined by bisection and classified.

    A crossing counts only where the deepest curve rises or falls nearby; two
    nearly equal plateaus crossing each other are not a boundary. A peak of the
    deepest curve that shrinks with depth and has no crossing next to it is a
    boundary of its own. A single-depth scan has no crossings; its sharp peaks
    above `haldane_floor` are reported instead.
    """
    if len(scan.depths) == 1:
        depth = scan.depths[0]
        return [Boundary(x, "peak", depth, depth) for x in locate_peaks(scan, depth, floor=haldane_floor)]

    lo_depth, hi_depth = scan.depths[-2], scan.depths[-1]
    grid = scan.grid
    vals = scan.values
    g = vals[-2] - vals[-1]
    reach = (PEAK_WINDOW + 1) * float(grid[1] - grid[0])
    out: List[Boundary] = []

    def taken(x: float) -> bool:
        return any(abs(x - b.delta_c) <= reach for b in out)

    for i, k in _sign_changes(g, flat_tol):
        a, b = float(grid[i]), float(grid[k])
        if not _has_structure(scan, 0.5 * (a + b)):
            log.debug(f"crossing on [{a}, {b}] lies on a plateau; ignored")
            continue
        samples: Sequence[Tuple[float, float]] = ()
        if i == k:
            x = a
        else:
            try:
                c = locate_crossing(scan.d, lo_depth, hi_depth, (a, b), tol=refine_tol, j=j, singular_tol=tol)
                x, samples = c.delta_c, c.samples
            except (NoBracket, FlowTerminated) as e:
                x = a + (b - a) * abs(g[i]) / (abs(g[i]) + abs(g[k]))
                log.warning(f"refinement on [{a}, {b}] failed ({e}); using linear interpolation {x:.6f}")
        if taken(x):
            continue
        out.append(Boundary(x, _kind(scan, x, samples), lo_depth, hi_depth))

    for x in locate_peaks(scan, hi_depth, both_sides=False):
        i = int(np.argmin(np.abs(grid - x)))
        if not vals[-2][i] > vals[-1][i] or taken(x):
            continue
        a, b = float(grid[i - 1]), float(grid[i + 1])
        x = _refine_max(lambda v: _safe_i6(v, scan.d, hi_depth, j, tol), a, b, refine_tol)
        log.info(f"diminishing peak at {x:.6f} (D={scan.d}) without a crossing")
        out.append(Boundary(x, "peak", lo_depth, hi_depth))
    return sorted(out, key=lambda bd: bd.delta_c)


def bracket_boundary(
    scan: ScanResult,
    bracket: Tuple[float, float],
    tol: float = 1e-4,
    j: float = 1.0,
    singular_tol: float = SINGULAR_TOL,
) -> Boundary:
    """One boundary of the two deepest scan depths on `bracket`, refined and classified."""
    if len(scan.depths) < 2:
        raise ValueError("a bracketed boundary needs at least two depths")
    lo, hi = scan.depths[-2], scan.depths[-1]
    try:
        c = locate_crossing(scan.d, lo, hi, bracket, tol=tol, j=j, singular_tol=singular_tol)
    except NoBracket:
        x = diminishing_peak(scan.d, lo, hi, bracket, tol=tol, j=j, singular_tol=singular_tol)
        if x is None:
            raise
        return Boundary(x, "peak", lo, hi)
    return Boundary(c.delta_c, _kind(scan, c.delta_c, c.samples), lo, hi)
