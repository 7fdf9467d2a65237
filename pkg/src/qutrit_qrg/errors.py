from __future__ import annotations

from typing import Optional, Sequence


class TensorFormatError(ValueError):
    def __init__(self, message: str, index: Optional[int] = None):
        super().__init__(message)
        self.index = index


class ZeroTensorError(ValueError):
    pass


class SingularMatrixError(ValueError):
    def __init__(self, message: str, leg: Optional[int] = None):
        super().__init__(message)
        self.leg = leg


class OmegaResidueError(ValueError):
    """Omega-process result still depends on a variable group."""

    def __init__(self, group: str, degree: int):
        super().__init__(f"non-scalar residue: group {group} keeps degree {degree}")
        self.group = group
        self.degree = degree


class RootFindingError(RuntimeError):
    def __init__(self, message: str, roots: Sequence[complex] = ()):
        super().__init__(message)
        self.roots = list(roots)


class SingularBlock(ArithmeticError):
    """A block-solution denominator fell below tolerance."""

    def __init__(self, denominator: str, value: float):
        super().__init__(f"singular block: {denominator} = {value!r}")
        self.denominator = denominator
        self.value = value


class FlowTerminated(RuntimeError):
    def __init__(self, step: int, reason: str):
        super().__init__(f"flow terminated at step {step}: {reason}")
        self.step = step
        self.reason = reason


class NoBracket(ValueError):
    def __init__(self, lo: float, hi: float, g_lo: float, g_hi: float):
        super().__init__(f"no sign change on [{lo}, {hi}]: g={g_lo!r}, {g_hi!r}")
        self.lo = lo
        self.hi = hi
        self.g_lo = g_lo
        self.g_hi = g_hi


class WindowError(ValueError):
    pass
