from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

from .errors import FlowTerminated, RootFindingError, SingularBlock
from .invariants import invariant_I6
from .spin_block import SINGULAR_TOL, BlockSolution, Couplings, block_solution
from .utils.logger import setup_logger

log = setup_logger("qutrit_qrg.rg_flow")

X_REN_FLOOR = 1e-9
FIXED_POINT_TOL = 1e-12
COMPLETED = "completed"


def _advance(c: Couplings, sol: BlockSolution, step: int) -> Couplings:
    x2 = sol.x_ren * sol.x_ren
    if abs(sol.x_ren) <= X_REN_FLOOR:
        raise FlowTerminated(step, f"X_ren vanishes ({sol.x_ren!r})")
    j = x2 * c.j
    delta = (sol.z_ren * sol.z_ren / x2) * c.delta
    d = (sol.eps1 - sol.eps0) / x2
    if not all(math.isfinite(v) for v in (j, delta, d)):
        raise FlowTerminated(step, f"non-finite couplings (J={j}, delta={delta}, D={d})")
    if j <= 0.0:
        raise FlowTerminated(step, f"J underflowed to {j!r}")
    return Couplings(j, delta, d)


def rg_step(c: Couplings, tol: float = SINGULAR_TOL) -> Couplings:
    """One QRG step: J' = X^2 J, delta' = (Z^2/X^2) delta, D' = (eps1 - eps0)/X^2."""
    try:
        sol = block_solution(c.delta, c.d, tol)
    except (SingularBlock, RootFindingError) as e:
        raise FlowTerminated(0, str(e)) from e
    return _advance(c, sol, 0)


@dataclass(frozen=True)
class FlowStep:
    n: int
    couplings: Couplings
    block: Optional[BlockSolution]

    @property
    def chain_length(self) -> int:
        return 3 ** (self.n + 1)

    @property
    def block_size(self) -> int:
        return 3 ** self.n

    def abs_i6(self) -> Optional[float]:
        return None if self.block is None else self.block.abs_i6()


@dataclass
class FlowTrajectory:
    steps: List[FlowStep] = field(default_factory=list)
    status: str = COMPLETED
    reason: str = ""

    @property
    def completed(self) -> bool:
        return self.status == COMPLETED

    def last_solved(self) -> int:
        """Index of the last step that carries a BlockSolution, -1 if none."""
        for s in reversed(self.steps):
            if s.block is not None:
                return s.n
        return -1

    def at(self, n: int) -> FlowStep:
        if n < len(self.steps):
            return self.steps[n]
        raise FlowTerminated(self.last_solved(), f"trajectory ends before step {n} ({self.status})")


def _solve(c: Couplings, tol: float) -> Tuple[Optional[BlockSolution], str]:
    try:
        return block_solution(c.delta, c.d, tol), ""
    except (SingularBlock, RootFindingError) as e:
        return None, str(e)


def rg_trajectory(
    c: Couplings,
    n_steps: int,
    tol: float = SINGULAR_TOL,
    fixed_point_tol: float = FIXED_POINT_TOL,
) -> FlowTrajectory:
    if n_steps < 0:
        raise ValueError(f"n_steps must be >= 0, got {n_steps}")

    traj = FlowTrajectory()
    sol, why = _solve(c, tol)
    traj.steps.append(FlowStep(0, c, sol))
    if sol is None:
        traj.status, traj.reason = "singular-at-step-0", why
        return traj

    n = 0
    while n < n_steps:
        try:
            nxt = _advance(c, sol, n)
        except FlowTerminated as e:
            traj.status, traj.reason = f"singular-at-step-{n}", e.reason
            log.debug(f"flow ({traj.steps[0].couplings.delta}, {traj.steps[0].couplings.d}) stopped: {e}")
            return traj
        n += 1
        if math.hypot(nxt.delta - c.delta, nxt.d - c.d) < fixed_point_tol:
            # converged: carry (delta, D, block) forward, J keeps scaling
            x2 = sol.x_ren * sol.x_ren
            j = nxt.j
            while n <= n_steps:
                traj.steps.append(FlowStep(n, Couplings(j, c.delta, c.d), sol))
                j *= x2
                n += 1
            return traj
        c = nxt
        sol, why = _solve(c, tol)
        traj.steps.append(FlowStep(n, c, sol))
        if sol is None:
            traj.status, traj.reason = f"singular-at-step-{n}", why
            return traj
    return traj


def i6_after_steps(
    delta: float,
    d: float,
    n: int,
    j: float = 1.0,
    cross_check: bool = False,
    tol: float = SINGULAR_TOL,
) -> float:
    """|I6| of psi0 built from the block solution at the step-n couplings."""
    traj = rg_trajectory(Couplings(j, delta, d), n, tol=tol)
    step = traj.at(n)
    if step.block is None:
        raise FlowTerminated(traj.last_solved(), traj.reason or traj.status)
    value = step.block.abs_i6()
    if cross_check:
        omega = abs(invariant_I6(step.block.psi0()))
        if abs(omega - value) > 1e-10 * max(value, 1e-300) and abs(omega - value) > 1e-15:
            raise RuntimeError(f"closed-form |I6|={value!r} disagrees with Omega-process {omega!r}")
    return value
