"""Jacobi point update and the serial sweep variants.

``sweep_naive`` is the correctness oracle for every other engine in the
package.  All variants share one per-cell summation order,
((x-)+(x+)) + ((y-)+(y+)) + ((z-)+(z+)) then * 1/6, so results agree
bitwise whenever only the traversal order differs.
"""

from __future__ import annotations

import numpy as np

from .grid import CompressedGrid, GridError, TwoGrid

ONE_SIXTH = 1.0 / 6.0


def stencil_point(xm, xp, ym, yp, zm, zp) -> float:
    """Mean of the six face neighbors in the fixed summation order."""
    return ((xm + xp) + (ym + yp) + (zm + zp)) * ONE_SIXTH


def _sh(s: slice, d: int) -> slice:
    return slice(s.start + d, s.stop + d)


def stencil_region(src: np.ndarray, center) -> np.ndarray:
    """Evaluate the stencil for every cell addressed by ``center`` slices."""
    cz, cy, cx = center
    return (
        (src[cz, cy, _sh(cx, -1)] + src[cz, cy, _sh(cx, 1)])
        + (src[cz, _sh(cy, -1), cx] + src[cz, _sh(cy, 1), cx])
        + (src[_sh(cz, -1), cy, cx] + src[_sh(cz, 1), cy, cx])
    ) * ONE_SIXTH


def update_region(src: np.ndarray, dst: np.ndarray, ghost: int, lo, hi) -> None:
    """dst[region] = stencil(src) for the logical box [lo, hi) in (z,y,x) order."""
    center = tuple(slice(l + ghost, h + ghost) for l, h in zip(lo, hi))
    dst[center] = stencil_region(src, center)


def sweep_naive(grid: TwoGrid) -> None:
    """One full Jacobi sweep: non-current <- stencil(current), then swap."""
    d = grid.dims
    update_region(grid.current, grid.other, d.ghost, (0, 0, 0), d.shape)
    grid.swap()


def block_edges(extent: int, block: int) -> list[int]:
    """1D block boundaries 0, block, 2*block, ..., extent."""
    if not 1 <= block:
        raise GridError(f"block extent must be >= 1, got {block}")
    edges = list(range(0, extent, block))
    edges.append(extent)
    return edges


def sweep_spatial_blocked(grid: TwoGrid, bs: tuple[int, int, int]) -> None:
    """Spatially blocked sweep; block size given as (bx, by, bz).

    Traversal is z outer, y middle, x inner over blocks.  Bitwise equal to
    ``sweep_naive`` because the per-cell arithmetic is unchanged.
    """
    d = grid.dims
    bx, by, bz = bs
    for b, n in zip((bx, by, bz), (d.nx, d.ny, d.nz)):
        if not 1 <= b <= n:
            raise GridError(f"block size {bs} outside interior extents")
    ez = block_edges(d.nz, bz)
    ey = block_edges(d.ny, by)
    ex = block_edges(d.nx, bx)
    src, dst = grid.current, grid.other
    for iz in range(len(ez) - 1):
        for iy in range(len(ey) - 1):
            for ix in range(len(ex) - 1):
                update_region(src, dst, d.ghost,
                              (ez[iz], ey[iy], ex[ix]),
                              (ez[iz + 1], ey[iy + 1], ex[ix + 1]))
    grid.swap()


def _refresh_compressed_ghosts(grid: CompressedGrid, lo, hi, o_read: int) -> None:
    """Rewrite Dirichlet ghost faces adjacent to [lo, hi) at the read level.

    The ghost ring travels with the shifting origin, and a given array cell
    serves different logical boundary cells at different levels, so the
    boundary values must be restored right before each block update that
    touches the domain edge.
    """
    n = grid.dims.shape
    base = o_read + 1
    for d in range(3):
        for boundary, touches in ((-1, lo[d] == 0), (n[d], hi[d] == n[d])):
            if not touches:
                continue
            blo = list(lo)
            bhi = list(hi)
            blo[d] = boundary
            bhi[d] = boundary + 1
            sl = tuple(slice(l + base, h + base) for l, h in zip(blo, bhi))
            grid.data[sl] = grid.pattern.evaluate(blo, bhi)


def update_region_compressed(grid: CompressedGrid, lo, hi, o_read: int,
                             direction: int) -> None:
    """One time level over [lo, hi), reading at offset ``o_read`` and writing
    one layer off in ``direction`` (-1 on odd node sweeps, +1 on even ones).

    The right-hand side is materialized before assignment, which matches the
    sequential monotone-traversal semantics (forward with shift -1, reverse
    with shift +1): no cell that a later update reads is overwritten early.
    """
    if direction not in (-1, 1):
        raise GridError(f"direction must be -1 or +1, got {direction}")
    _refresh_compressed_ghosts(grid, lo, hi, o_read)
    base = o_read + 1
    center = tuple(slice(l + base, h + base) for l, h in zip(lo, hi))
    dst = tuple(slice(l + base + direction, h + base + direction)
                for l, h in zip(lo, hi))
    grid.data[dst] = stencil_region(grid.data, center)


def update_block(grid, lo, hi, level: int = 1, direction: int = -1) -> None:
    """Update one region for one time level.

    Two-grid mode: level parity selects source/destination (level 1 reads
    the current array); no swap is performed.  Compressed mode: reads at the
    offset implied by ``level`` relative to the current origin and writes at
    the shifted location; origin bookkeeping is the caller's job (see
    ``CompressedGrid.shift_origin``).
    """
    d = grid.dims
    for l, h, n in zip(lo, hi, d.shape):
        if l > h:
            raise GridError(f"malformed region {lo}..{hi}")
    if isinstance(grid, TwoGrid):
        for l, h, n in zip(lo, hi, d.shape):
            if l < -d.ghost + 1 or h > n + d.ghost - 1:
                raise GridError("region escapes allocation")
        arrays = (grid.current, grid.other)
        src = arrays[(level - 1) % 2]
        dst = arrays[level % 2]
        update_region(src, dst, d.ghost, lo, hi)
    else:
        o_read = grid.offset + direction * (level - 1)
        update_region_compressed(grid, lo, hi, o_read, direction)
