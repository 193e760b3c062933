"""Oracle runs and field comparison shared by all engines and tests."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .grid import FillPattern, GridDims, TwoGrid
from .kernel import sweep_naive

REL_TOL = 1e-13  # reordered double summation over desk-scale trajectories
_DENOM_FLOOR = 1e-300


def oracle(dims: GridDims, pattern: FillPattern, levels: int) -> TwoGrid:
    """``levels`` naive sweeps from the given initial pattern."""
    grid = TwoGrid(dims, pattern)
    for _ in range(levels):
        sweep_naive(grid)
    return grid


def oracle_trajectory(dims: GridDims, pattern: FillPattern,
                      levels: int) -> list[np.ndarray]:
    """Interior snapshots after 0, 1, ..., levels naive sweeps."""
    grid = TwoGrid(dims, pattern)
    states = [grid.interior().copy()]
    for _ in range(levels):
        sweep_naive(grid)
        states.append(grid.interior().copy())
    return states


@dataclass(frozen=True)
class Comparison:
    max_abs: float
    max_rel: float
    location: tuple[int, int, int]
    bitwise: bool
    passed: bool
    tol: float

    def __str__(self):
        tag = "bitwise" if self.bitwise else f"max_rel={self.max_rel:.3e}"
        verdict = "PASS" if self.passed else f"FAIL at {self.location}"
        return f"{verdict} ({tag}, tol={self.tol:.0e})"


def _as_array(field) -> np.ndarray:
    if isinstance(field, np.ndarray):
        return field
    return field.interior()


def compare(a, b, tol: float = REL_TOL) -> Comparison:
    """Relative L-infinity comparison of two equal-extent fields."""
    av = _as_array(a)
    bv = _as_array(b)
    if av.shape != bv.shape:
        raise ValueError(f"extent mismatch {av.shape} vs {bv.shape}")
    diff = np.abs(av - bv)
    denom = np.maximum(np.maximum(np.abs(av), np.abs(bv)), _DENOM_FLOOR)
    rel = diff / denom
    flat = int(np.argmax(rel))
    loc = tuple(int(c) for c in np.unravel_index(flat, rel.shape))
    max_rel = float(rel[loc])
    max_abs = float(diff[loc])
    bitwise = bool(np.array_equal(av.view(np.uint64), bv.view(np.uint64)))
    return Comparison(max_abs=max_abs, max_rel=max_rel, location=loc,
                      bitwise=bitwise, passed=max_rel <= tol, tol=tol)


def check_maximum_principle(before: np.ndarray, after: np.ndarray,
                            ghost_shell: np.ndarray | None = None) -> bool:
    """Updated interior values must lie within the previous level's range
    (interior plus boundary shell)."""
    lo = float(before.min())
    hi = float(before.max())
    if ghost_shell is not None:
        lo = min(lo, float(ghost_shell.min()))
        hi = max(hi, float(ghost_shell.max()))
    return bool(after.min() >= lo and after.max() <= hi)
