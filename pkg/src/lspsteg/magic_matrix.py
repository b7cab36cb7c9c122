"""8x8x8 magic cube used to map LSP index triples onto 6-bit keys.

Every axis-aligned 8x8 plane and every aligned 4x4x4 sub-cube holds each
value 0..63 exactly once.  The cube is tiled periodically over the
256x256x256 index space of the three LSP sub-codebooks.
"""

from dataclasses import dataclass
from functools import cached_property
from typing import List, NamedTuple

import numpy as np

from .errors import DomainError

SIZE = 8
HALF = 4
N_VALUES = 64
SPACE = 256
SEED_MAX = 2**64 - 1
# window of patterns 1-3 spans [origin-3, origin+4]
WINDOW_LOW = 3


class Coord3(NamedTuple):
    x: int
    y: int
    z: int


class PatternMatch(NamedTuple):
    pattern_id: int
    coord: Coord3
    sq_distance: int


def _base_cells():
    c = np.arange(SIZE)
    x, y, z = np.meshgrid(c, c, c, indexing="ij")
    xh, xl = x // HALF, x % HALF
    yh, yl = y // HALF, y % HALF
    zh, zl = z // HALF, z % HALF
    d2 = (xl + 2 * yh + zh + xh) % 4
    d1 = (yl + 2 * xh + zh + yh) % 4
    d0 = (zl + 2 * xh + yh + zh) % 4
    return (16 * d2 + 4 * d1 + d0).astype(np.uint8)


BASE_CELLS = _base_cells()
BASE_CELLS.setflags(write=False)


@dataclass(frozen=True, eq=False)
class MagicMatrix:
    """Immutable 8x8x8 cube of values in [0, 63] plus its generation seed."""

    cells: np.ndarray
    seed: int = 0

    def __post_init__(self):
        cells = np.array(self.cells, dtype=np.int64)
        if cells.shape != (SIZE, SIZE, SIZE):
            raise DomainError(f"cells must have shape (8, 8, 8), got {cells.shape}")
        if cells.min() < 0 or cells.max() >= N_VALUES:
            raise DomainError("cell values must lie in [0, 63]")
        cells = cells.astype(np.uint8)
        cells.setflags(write=False)
        object.__setattr__(self, "cells", cells)
        if not 0 <= int(self.seed) <= SEED_MAX:
            raise DomainError(f"seed out of 64-bit range: {self.seed}")
        object.__setattr__(self, "seed", int(self.seed))

    def __eq__(self, other):
        if not isinstance(other, MagicMatrix):
            return NotImplemented
        return self.seed == other.seed and np.array_equal(self.cells, other.cells)

    def __hash__(self):
        return hash((self.seed, self.cells.tobytes()))

    @cached_property
    def is_valid(self) -> bool:
        return validate(self).passed

    @cached_property
    def lookup(self):
        """Inverse tables: where each key sits in every plane and sub-cube."""
        if not self.is_valid:
            raise DomainError("matrix violates the permutation constraints")
        c = self.cells.astype(np.int64)
        ar = np.arange(SIZE)
        # plane_x[xr, key] -> (yr, zr) etc.
        plane_x = np.empty((SIZE, N_VALUES, 2), dtype=np.int64)
        plane_y = np.empty((SIZE, N_VALUES, 2), dtype=np.int64)
        plane_z = np.empty((SIZE, N_VALUES, 2), dtype=np.int64)
        a, b = np.meshgrid(ar, ar, indexing="ij")
        for r in range(SIZE):
            plane_x[r, c[r].ravel()] = np.stack([a.ravel(), b.ravel()], axis=1)
            plane_y[r, c[:, r].ravel()] = np.stack([a.ravel(), b.ravel()], axis=1)
            plane_z[r, c[:, :, r].ravel()] = np.stack([a.ravel(), b.ravel()], axis=1)
        cube = np.empty((2, 2, 2, N_VALUES, 3), dtype=np.int64)
        h = np.arange(HALF)
        dx, dy, dz = (g.ravel() for g in np.meshgrid(h, h, h, indexing="ij"))
        for cx in range(2):
            for cy in range(2):
                for cz in range(2):
                    block = c[cx * HALF:(cx + 1) * HALF,
                              cy * HALF:(cy + 1) * HALF,
                              cz * HALF:(cz + 1) * HALF]
                    cube[cx, cy, cz, block.ravel()] = np.stack([dx, dy, dz], axis=1)
        return {"x": plane_x, "y": plane_y, "z": plane_z, "cube": cube}


@dataclass
class ValidationReport:
    passed: bool
    violations: List[str]
    checked: int = 32

    @property
    def satisfied(self) -> int:
        return self.checked - len(self.violations)

    def summary(self) -> str:
        return f"{self.satisfied}/{self.checked} constraints satisfied"


def _check_seed(seed):
    seed = int(seed)
    if not 0 <= seed <= SEED_MAX:
        raise DomainError(f"seed out of 64-bit range: {seed}")
    return seed


def generate(seed: int = 0) -> MagicMatrix:
    """Build a valid cube keyed by ``seed``.

    A fixed base cube (cyclic shifts of base-4 digits) is relabeled with a
    seeded permutation of 0..63.  Relabeling maps permutations to
    permutations, so every constraint survives.
    """
    seed = _check_seed(seed)
    perm = np.random.default_rng(seed).permutation(N_VALUES)
    return MagicMatrix(perm[BASE_CELLS], seed)


def relabel(m: MagicMatrix, permutation) -> MagicMatrix:
    perm = np.asarray(permutation, dtype=np.int64)
    if sorted(perm.tolist()) != list(range(N_VALUES)):
        raise DomainError("relabeling must be a permutation of 0..63")
    return MagicMatrix(perm[m.cells], m.seed)


def _is_perm(values):
    return np.array_equal(np.sort(values.ravel()), np.arange(N_VALUES))


def validate(m) -> ValidationReport:
    """Check all 24 planes and 8 aligned sub-cubes; name every failure."""
    cells = np.asarray(m.cells if isinstance(m, MagicMatrix) else m)
    if cells.shape != (SIZE, SIZE, SIZE):
        raise DomainError(f"cells must have shape (8, 8, 8), got {cells.shape}")
    violations = []
    for axis, name in enumerate("xyz"):
        for i in range(SIZE):
            if not _is_perm(np.take(cells, i, axis=axis)):
                violations.append(f"plane {name}={i}")
    for cx in (0, HALF):
        for cy in (0, HALF):
            for cz in (0, HALF):
                block = cells[cx:cx + HALF, cy:cy + HALF, cz:cz + HALF]
                if not _is_perm(block):
                    violations.append(f"cube ({cx},{cy},{cz})")
    return ValidationReport(not violations, violations)


def _check_coord(c):
    if len(c) != 3:
        raise DomainError(f"coordinate must have three components, got {c!r}")
    out = []
    for v in c:
        v = int(v)
        if not 0 <= v < SPACE:
            raise DomainError(f"coordinate component {v} outside [0, 255]")
        out.append(v)
    return Coord3(*out)


def magic_expand(m: MagicMatrix, c) -> int:
    """Value of the periodically expanded 256^3 cube at ``c``."""
    x, y, z = _check_coord(c)
    return int(m.cells[x % SIZE, y % SIZE, z % SIZE])


def _window_coord(origin, residue):
    # unique coordinate in [origin-3, origin+4] congruent to residue (mod 8)
    start = origin - WINDOW_LOW
    return int((start + (int(residue) - start) % SIZE) % SPACE)


def sq_distance(a, b) -> int:
    """Squared Euclidean distance between two index triples.

    Plain index differences: the codebooks are not periodic, so a window
    that wrapped past 0 or 255 lands far away in codeword space and must
    score as far away.
    """
    return sum((int(p) - int(q)) ** 2 for p, q in zip(a, b))


def search_patterns(m: MagicMatrix, origin, key: int) -> List[PatternMatch]:
    """Locate ``key`` in each of the four search neighbourhoods of ``origin``.

    Patterns 1-3 are 8x8 windows with x, y or z held fixed; pattern 4 is the
    aligned 4x4x4 block containing the origin.  Windows wrap modulo 256,
    which keeps exactly one match per window; a wrapped match carries its
    true (large) distance.
    """
    origin = _check_coord(origin)
    key = int(key)
    if not 0 <= key < N_VALUES:
        raise DomainError(f"key {key} outside [0, 63]")
    t = m.lookup
    ox, oy, oz = origin

    yr, zr = t["x"][ox % SIZE, key]
    c1 = Coord3(ox, _window_coord(oy, yr), _window_coord(oz, zr))
    xr, zr = t["y"][oy % SIZE, key]
    c2 = Coord3(_window_coord(ox, xr), oy, _window_coord(oz, zr))
    xr, yr = t["z"][oz % SIZE, key]
    c3 = Coord3(_window_coord(ox, xr), _window_coord(oy, yr), oz)

    bx, by, bz = (v // HALF * HALF for v in origin)
    dx, dy, dz = t["cube"][(bx % SIZE) // HALF, (by % SIZE) // HALF,
                           (bz % SIZE) // HALF, key]
    c4 = Coord3(bx + int(dx), by + int(dy), bz + int(dz))

    return [PatternMatch(i, c, sq_distance(origin, c))
            for i, c in enumerate((c1, c2, c3, c4), start=1)]

