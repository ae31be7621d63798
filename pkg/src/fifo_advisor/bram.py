"""Block RAM cost model and depth candidate pruning.

Models BRAM_18K primitives as configured by the FPGA toolchain: each 18Kb
block can be shaped as 1Kx18, 2Kx9, 4Kx4, 8Kx2 or 16Kx1.  A FIFO of depth d
and width w bits is packed greedily from the widest shape down.  Words may
be stored in columns wider than the data when that uses fewer blocks (an
8-bit word in a 9-bit column, say), so the model tries every padding up to
the next multiple of 18 bits and keeps the cheapest.  FIFOs with depth <= 2
or a total of at most 1024 bits are implemented as shift registers and use
no BRAM at all.

Because the cost is a step function of depth, only depths just below a cost
step (plus the upper bound itself) are worth evaluating.  ``breakpoints``
enumerates those candidate depths.
"""

from __future__ import annotations

from functools import lru_cache

from .trace import TraceProgram, FifoConfig, upper_bounds

# (depth, width) configurations of one BRAM_18K block, widest first.
BRAM_SHAPES = ((1024, 18), (2048, 9), (4096, 4), (8192, 2), (16384, 1))

# Total size (depth * width bits) at or below which a FIFO becomes a shift
# register instead of BRAM.
SHIFT_REGISTER_BITS = 1024


def is_shift_register(depth: int, width: int) -> bool:
    """True when a FIFO of this shape uses no BRAM (registers instead)."""
    return depth <= 2 or depth * width <= SHIFT_REGISTER_BITS


def _column_packed(depth: int, width: int) -> int:
    """Blocks used when the word is stored at exactly ``width`` bits.

    For each shape, take full columns of that width, then let one
    partially-used block absorb the remaining bits if its depth suffices.
    """
    n = 0
    w = width
    for shape_depth, shape_width in BRAM_SHAPES:
        n += (w // shape_width) * -(-depth // shape_depth)
        w = w % shape_width
        if w > 0 and depth <= shape_depth:
            n += 1
            w = 0
    return n


@lru_cache(maxsize=None)
def fifo_bram_count(depth: int, width: int) -> int:
    """Number of BRAM_18K blocks consumed by one FIFO of depth x width bits.

    Tries the declared width and every padded width up to the next multiple
    of 18 and returns the cheapest packing.  Stopping there is safe: a
    multiple of 18 packs as whole 1Kx18 columns, and padding further always
    adds at least one more such column.
    """
    if is_shift_register(depth, width):
        return 0
    widest = 18 * -(-width // 18)
    return min(_column_packed(depth, w) for w in range(width, widest + 1))


def config_bram_count(program: TraceProgram, config: FifoConfig) -> int:
    """Total BRAM blocks for a full depth assignment."""
    return sum(
        fifo_bram_count(config.depths[f.id], f.bitwidth) for f in program.fifos
    )


def breakpoints(width: int, upper: int, lower: int = 2) -> list[int]:
    """Candidate depths in [lower, upper] for a FIFO of the given width.

    A depth d is a candidate when growing it by one would cost more BRAM,
    or when d is the upper bound (so the largest depth stays available).
    Computed by dense scan; cost evaluation is cheap and upper bounds are
    trace-sized.
    """
    if upper < lower:
        raise ValueError(f"upper bound {upper} below lower bound {lower}")
    out = []
    cost = fifo_bram_count(lower, width)
    for d in range(lower, upper + 1):
        if d == upper:
            out.append(d)
            break
        nxt = fifo_bram_count(d + 1, width)
        if nxt > cost:
            out.append(d)
        cost = nxt
    return out


def program_breakpoints(program: TraceProgram) -> list[list[int]]:
    """Per-FIFO candidate depth lists, using each FIFO's upper bound."""
    bounds = upper_bounds(program)
    return [breakpoints(f.bitwidth, bounds[f.id]) for f in program.fifos]
