"""Jacobi basics: sweeps, fill patterns, and the comparison oracle.

The 6-point Jacobi stencil replaces every interior cell by the mean of
its face neighbors.  This script runs the plain sweep on a heated-wall
problem and shows the two invariants the whole package leans on: linear
fields are exact fixed points, and every update obeys the maximum
principle.
"""

from stencilpipe import FillPattern, GridDims, allocate, compare
from stencilpipe.kernel import sweep_naive
from stencilpipe.verify import check_maximum_principle

dims = GridDims(16, 16, 16)

# Hot wall at the low-x boundary, everything else cold.
grid = allocate(dims, "twogrid", FillPattern.hotplate())
for sweep in range(200):
    sweep_naive(grid)
print("hotplate after 200 sweeps:")
print(f"  cell next to the hot wall : {grid.value_at(0, 8, 8):.4f}")
print(f"  center cell               : {grid.value_at(8, 8, 8):.4f}")
print(f"  cell at the far cold wall : {grid.value_at(15, 8, 8):.4f}")

# A linear temperature profile is already harmonic: sweeping changes nothing.
linear = allocate(dims, "twogrid", FillPattern.linear())
start = linear.interior().copy()
for _ in range(64):
    sweep_naive(linear)
print("\nlinear field after 64 sweeps:",
      compare(start, linear))

# Random data stays inside the range of the previous level (plus boundary).
rnd = allocate(dims, "twogrid", FillPattern.random(2024))
before = rnd.full_view().copy()
sweep_naive(rnd)
print("maximum principle on random data:",
      "holds" if check_maximum_principle(before, rnd.interior()) else "BROKEN")
