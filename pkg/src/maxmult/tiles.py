"""Time-frequency tiles, trees, and the greedy size decomposition.

A tile pairs a long dyadic time interval (length above one hundred in
separation-normalized units) with the frequency interval of matching
reciprocal width around one of the system frequencies, so every tile has
time-frequency area one.  A tree is a set of tiles at a single frequency
whose time intervals nest under the top; a tile collection is convex when
it contains every tile squeezed between two of its members at the same
frequency.

The size of a tile measures how much of f lives on it: the L2 norm of a
band projection around the tile frequency, localized to the time interval
by a high power of the reciprocal-distance cutoff, normalized by the root
interval length.  The paper-facing sup over all adapted multipliers is
replaced by a two-element dictionary (wide plateau bump and sharp band
indicator); the greedy machinery only needs the functional to be
consistent, and the dictionary value is a lower bound for the full sup.

On top of the size sit the greedy tree selection at a threshold, the
halving decomposition into strata of comparable size, the combinatorial
counting partition of a tree top (maximal dyadic intervals whose triple
contains no tile interval), the boundary weights built from the counting
sets, the tree variation operator driven by window coefficients, and the
exceptional-set bookkeeping for indicator inputs.

Chains for the variation operators contain only the tiles whose time
interval actually holds the point, ordered from the coarsest interval
down.  Tiles not containing the point are skipped rather than recorded as
zeros; this keeps per-stratum variation values exactly equal to the
aggregate over their unique trees, which the audits assert bitwise.
"""

import json
import math
import warnings
from dataclasses import dataclass

import numpy as np

from .grid import (DyadicGrid, DyadicInterval, Signal, fourier_project,
                   hl_maximal, interval_sample_range, lp_norm,
                   periodic_distance)
from .multipliers import FrequencySystem
from .variation import rvar_norm
from .windows import WindowSystem, coefficient_field

MIN_TILE_LENGTH = 100.0
SIZE_FLOOR_FACTOR = 2.0 ** -20
WEIGHT_DROP = 1e-30


@dataclass(frozen=True, order=True)
class Tile:
    """One area-one rectangle: time interval index at scale k, frequency n.

    The order (k, index, n) is the selection order: coarsest time interval
    first, then leftmost, then lowest frequency.
    """

    k: int
    index: int
    n: int

    def __post_init__(self):
        if 2.0 ** -self.k <= MIN_TILE_LENGTH:
            raise ValueError(
                f"tile interval 2^{-self.k} must exceed {MIN_TILE_LENGTH}")
        if self.index < 0 or self.n < 0:
            raise ValueError("index and frequency must be nonnegative")

    @property
    def interval(self) -> DyadicInterval:
        return DyadicInterval(self.k, self.index)

    @property
    def freq_width(self) -> float:
        return 2.0 ** self.k

    def freq_interval(self, system: FrequencySystem) -> tuple:
        lam = system.lambdas[self.n]
        half = self.freq_width / 2
        return (lam - half, lam + half)


@dataclass(frozen=True)
class Tree:
    """Tiles at one frequency nested under a top tile."""

    top: Tile
    tiles: tuple

    def __post_init__(self):
        tiles = tuple(sorted(set(self.tiles)))
        object.__setattr__(self, "tiles", tiles)
        if not tiles:
            raise ValueError("a tree needs at least one tile")
        ti = self.top.interval
        for s in tiles:
            if s.n != self.top.n:
                raise ValueError("tree tiles must share the top frequency")
            if not ti.contains(s.interval):
                raise ValueError("tree tiles must nest under the top interval")

    @property
    def interval(self) -> DyadicInterval:
        return self.top.interval


@dataclass(frozen=True)
class TileSet:
    """Canonical tile tuple with a convexity certificate."""

    tiles: tuple
    convex: bool

    @classmethod
    def from_tiles(cls, tiles) -> "TileSet":
        canon = tuple(sorted(set(tiles)))
        return cls(canon, check_convex(canon))


def _tile_tuple(tiles) -> tuple:
    if isinstance(tiles, TileSet):
        return tiles.tiles
    if isinstance(tiles, Tree):
        return tiles.tiles
    return tuple(sorted(set(tiles)))


def check_convex(tiles) -> bool:
    """True iff no tile is missing between two members at one frequency.

    Walks each member's ancestor chain upward; after the first missing
    ancestor no coarser ancestor may be present, otherwise the missing one
    sits between two members.
    """
    tiles = _tile_tuple(tiles)
    by_n = {}
    for s in tiles:
        by_n.setdefault(s.n, set()).add((s.k, s.index))
    for n, members in by_n.items():
        k_min = min(k for k, _ in members)
        for k, idx in members:
            missing = False
            for up in range(k - 1, k_min - 1, -1):
                if (up, idx >> (k - up)) in members:
                    if missing:
                        return False
                else:
                    missing = True
    return True


def convex_closure(tiles) -> TileSet:
    """Smallest convex superset: fill the gaps along ancestor chains.

    One upward pass per tile suffices: any tile between two members is an
    ancestor of the lower one below some coarser member, and tiles added
    this way never create new gaps.
    """
    tiles = _tile_tuple(tiles)
    by_n = {}
    for s in tiles:
        by_n.setdefault(s.n, set()).add((s.k, s.index))
    out = set(tiles)
    for n, members in by_n.items():
        k_min = min(k for k, _ in members)
        for k, idx in members:
            pending = []
            for up in range(k - 1, k_min - 1, -1):
                node = (up, idx >> (k - up))
                if node in members:
                    for kk, ii in pending:
                        out.add(Tile(kk, ii, n))
                    pending = []
                else:
                    pending.append(node)
    canon = tuple(sorted(out))
    return TileSet(canon, True)


# ---------------------------------------------------------------------------
# Size functional


def _chi_base(grid: DyadicGrid, length: float, power: float) -> np.ndarray:
    """(1 + dist/length)^-power around sample zero, periodic distance."""
    x = grid.points()
    d = periodic_distance(x, 0.0, grid.length)
    return (1.0 + d / length) ** -power


def _center_shift(grid: DyadicGrid, interval: DyadicInterval) -> int:
    """Sample index of the interval center (exact for tile-size intervals)."""
    shift = interval.center / grid.spacing
    if shift != round(shift):
        raise ValueError("interval center falls between samples")
    return int(round(shift)) % grid.num_samples


def _size_multipliers(system: FrequencySystem, k: int, n: int) -> list:
    """The two-element adapted dictionary on the band around (k, n).

    First a plateau bump: one on the tile frequency interval, cosine
    squared ramp down to zero at the boundary of its tenfold dilate.
    Second the sharp indicator of the tile frequency interval.
    """
    dual = system.grid.dual()
    m = dual.num_samples
    width = 2.0 ** k
    j0 = int(round(system.lambdas[n] / dual.spacing)) % m
    h = int(math.floor(5 * width / dual.spacing))
    if 2 * h + 1 > m:
        raise ValueError("tenfold frequency interval wraps the grid")
    rel = np.arange(-h, h + 1)
    off = np.abs(rel * dual.spacing)
    plateau = np.zeros(off.shape)
    plateau[off <= width / 2] = 1.0
    ramp = (off > width / 2) & (off < 5 * width)
    plateau[ramp] = np.cos(np.pi * (off[ramp] - width / 2) / (9 * width)) ** 2
    sharp = (off <= width / 2).astype(np.float64)
    out = []
    for vals in (plateau, sharp):
        full = np.zeros(m)
        full[(j0 + rel) % m] = vals
        out.append(full)
    return out


def tile_sizes(tiles, f: Signal, system: FrequencySystem) -> dict:
    """Size of every tile, batched over shared (frequency, scale) groups."""
    tiles = _tile_tuple(tiles)
    grid = f.grid
    if grid != system.grid:
        raise ValueError("signal grid does not match the system grid")
    groups = {}
    for s in tiles:
        groups.setdefault((s.n, s.k), []).append(s)
    sizes = {}
    for (n, k), members in groups.items():
        base = _chi_base(grid, 2.0 ** -k, 20.0)
        best = {s: 0.0 for s in members}
        for mult in _size_multipliers(system, k, n):
            g2 = np.abs(fourier_project(f, mult).values) ** 2
            for s in members:
                w = np.roll(base, _center_shift(grid, s.interval))
                val = math.sqrt(float(np.sum(g2 * w)) * grid.spacing)
                best[s] = max(best[s], val / math.sqrt(s.interval.length))
        sizes.update(best)
    return sizes


def tile_size(tile: Tile, f: Signal, system: FrequencySystem) -> float:
    return tile_sizes((tile,), f, system)[tile]


def set_size(tiles, f: Signal, system: FrequencySystem) -> float:
    tiles = _tile_tuple(tiles)
    if not tiles:
        return 0.0
    return max(tile_sizes(tiles, f, system).values())


def tree_size(tree: Tree, f: Signal, system: FrequencySystem) -> float:
    return set_size(tree.tiles, f, system)


def size_maximal_bound(tree: Tree, f: Signal,
                       system: FrequencySystem) -> tuple:
    """(tree size, sup over tiles of inf over the interval of Mf).

    The size should stay within a small factor of the bound; the audits
    track the worst ratio.
    """
    mf = hl_maximal(f).values.real
    bound = 0.0
    for s in tree.tiles:
        lo, hi = interval_sample_range(f.grid, s.interval)
        bound = max(bound, float(np.min(mf[lo:hi])))
    return tree_size(tree, f, system), bound


# ---------------------------------------------------------------------------
# Greedy selection and the size decomposition


@dataclass(frozen=True)
class Selection:
    forest: tuple
    residual: tuple
    threshold: float
    bessel_ratio: float


def select_trees(tiles, f: Signal, system: FrequencySystem, lam: float,
                 sizes: dict | None = None) -> Selection:
    """Greedily extract maximal trees whose top size exceeds lam.

    The next top is always the qualifying tile with the coarsest time
    interval, ties broken leftmost then lowest frequency; its tree takes
    every remaining tile at the same frequency nested under it.  Every
    tile left behind has size at most lam.
    """
    tiles = _tile_tuple(tiles)
    if sizes is None:
        sizes = tile_sizes(tiles, f, system)
    top_size = max((sizes[s] for s in tiles), default=0.0)
    if top_size > 2 * lam:
        raise ValueError(f"set size {top_size} exceeds twice the threshold {lam}")
    remaining = set(tiles)
    forest = []
    while True:
        qualifying = [s for s in remaining if sizes[s] > lam]
        if not qualifying:
            break
        top = min(qualifying)
        members = {s for s in remaining
                   if s.n == top.n and top.interval.contains(s.interval)}
        forest.append(Tree(top, tuple(sorted(members))))
        remaining -= members
    fnorm = lp_norm(f, 2)
    sum_tops = sum(t.interval.length for t in forest)
    ratio = sum_tops * lam ** 2 / fnorm ** 2 if fnorm > 0 else 0.0
    return Selection(tuple(forest), tuple(sorted(remaining)), lam, ratio)


def top_rectangles_disjoint(forest, system: FrequencySystem) -> bool:
    """Pairwise disjointness of the top time intervals times tenfold bands."""
    rects = []
    for tree in forest:
        iv = tree.interval
        lam = system.lambdas[tree.top.n]
        half = 5 * tree.top.freq_width
        rects.append((iv.left, iv.right, lam - half, lam + half))
    for i in range(len(rects)):
        for j in range(i + 1, len(rects)):
            a, b = rects[i], rects[j]
            time_overlap = a[0] < b[1] and b[0] < a[1]
            freq_overlap = a[2] < b[3] and b[2] < a[3]
            if time_overlap and freq_overlap:
                return False
    return True


@dataclass(frozen=True)
class SizeStratum:
    """One level of the halving decomposition: disjoint trees of comparable size."""

    m: int | None
    threshold: float
    forest: tuple
    convex: bool
    bessel_ratio: float

    @property
    def tiles(self) -> tuple:
        out = []
        for tree in self.forest:
            out.extend(tree.tiles)
        return tuple(sorted(out))


@dataclass(frozen=True)
class SizeDecomposition:
    strata: tuple
    sigma0: float
    input_convex: bool

    @property
    def tiles(self) -> tuple:
        out = []
        for st in self.strata:
            out.extend(st.tiles)
        return tuple(sorted(out))


def _threshold_free_cover(tiles) -> tuple:
    """Disjoint trees covering every tile, tops chosen in selection order."""
    remaining = set(_tile_tuple(tiles))
    forest = []
    while remaining:
        top = min(remaining)
        members = {s for s in remaining
                   if s.n == top.n and top.interval.contains(s.interval)}
        forest.append(Tree(top, tuple(sorted(members))))
        remaining -= members
    return tuple(forest)


def size_decompose(tiles, f: Signal, system: FrequencySystem,
                   floor_factor: float = SIZE_FLOOR_FACTOR) -> SizeDecomposition:
    """Split a tile set into strata of halving size by repeated selection.

    The first threshold is half the power of two just above the set size;
    each round extracts the trees above the threshold and passes the
    residual (whose size the selection postcondition halves) to the next.
    Tiles surviving to the floor, including any of size zero, come back as
    one final stratum of threshold-free cover trees.
    """
    tiles = _tile_tuple(tiles)
    input_convex = check_convex(tiles)
    if not input_convex:
        warnings.warn("tile set is not convex; stratum convexity is incidental")
    if not tiles:
        return SizeDecomposition((), 0.0, input_convex)
    sizes = tile_sizes(tiles, f, system)
    sigma0 = max(sizes.values())
    strata = []
    remaining = tiles
    if sigma0 > 0.0:
        mant, exp = math.frexp(sigma0)
        m = -exp + (1 if mant == 0.5 else 0)
        if not sigma0 <= 2.0 ** -m < 2 * sigma0:
            raise AssertionError("initial level misses the size bracket")
        while remaining and 2.0 ** -m >= sigma0 * floor_factor:
            lam = 2.0 ** -(m + 1)
            sel = select_trees(remaining, f, system, lam, sizes)
            if sel.forest:
                union = tuple(sorted(t for tree in sel.forest for t in tree.tiles))
                strata.append(SizeStratum(m, lam, sel.forest,
                                          check_convex(union), sel.bessel_ratio))
            remaining = sel.residual
            m += 1
    if remaining:
        forest = _threshold_free_cover(remaining)
        union = tuple(sorted(t for tree in forest for t in tree.tiles))
        strata.append(SizeStratum(None, 0.0, forest, check_convex(union), 0.0))
    return SizeDecomposition(tuple(strata), sigma0, input_convex)


# ---------------------------------------------------------------------------
# Counting partition, counting sets, flanks, weights


def counting_partition(tree: Tree) -> tuple:
    """Maximal dyadic subintervals of the top whose triple holds no tile interval.

    Splits downward from the top; a node is a member exactly when its
    threefold dilate contains none of the tile intervals.  The members
    partition the top interval, and the recursion always terminates
    because a short enough triple cannot contain any tile interval.
    """
    ivs = [s.interval for s in tree.tiles]
    bounds = [(iv.left, iv.right) for iv in ivs]

    def qualifies(node: DyadicInterval) -> bool:
        lo = node.left - node.length
        hi = node.right + node.length
        return not any(lo <= a and b <= hi for a, b in bounds)

    members = []
    stack = [tree.interval]
    while stack:
        node = stack.pop()
        if qualifies(node):
            members.append(node)
        else:
            stack.extend(node.children())
    return tuple(sorted(members, key=lambda iv: iv.left))


@dataclass(frozen=True)
class CountingSets:
    """Levelwise unions of fine counting intervals and their components.

    For level j the set collects the members shorter than 2^-j; it is
    always a union of full dyadic blocks of length 2^-j, so component
    endpoints are exact multiples of 2^-j.  The flank intervals hang just
    outside each component endpoint at scale-j width; within the left
    family (and within the right family) they are pairwise disjoint
    across all levels and components.
    """

    tree: Tree
    members: tuple
    levels: tuple
    components: dict

    def boundary_points(self, j: int) -> np.ndarray:
        comps = self.components.get(j, ())
        pts = []
        for a, b in comps:
            pts.extend((a, b))
        return np.asarray(pts, dtype=np.float64)

    def left_flanks(self) -> list:
        out = []
        for j in self.levels:
            for a, _ in self.components.get(j, ()):
                out.append((j, a - 2.0 ** (-j - 1), a - 2.0 ** (-j - 2)))
        return out

    def right_flanks(self) -> list:
        out = []
        for j in self.levels:
            for _, b in self.components.get(j, ()):
                out.append((j, b + 2.0 ** (-j - 2), b + 2.0 ** (-j - 1)))
        return out

    def counting_sum(self) -> float:
        return sum(2.0 ** -j * len(self.boundary_points(j))
                   for j in self.levels)

    def counting_ratio(self) -> float:
        return self.counting_sum() / self.tree.interval.length


def counting_sets(tree: Tree) -> CountingSets:
    members = counting_partition(tree)
    k_top = tree.top.k
    k_max = max(iv.k for iv in members)
    levels = tuple(range(k_top, k_max))
    components = {}
    for j in levels:
        fine = [iv for iv in members if iv.k > j]
        comps = []
        for iv in fine:
            if comps and comps[-1][1] == iv.left:
                comps[-1][1] = iv.right
            else:
                comps.append([iv.left, iv.right])
        block = 2.0 ** -j
        for a, b in comps:
            if (a / block) != round(a / block) or ((b - a) / block) != round((b - a) / block):
                raise AssertionError("component is not a union of full level blocks")
        components[j] = tuple((a, b) for a, b in comps)
    return CountingSets(tree, members, levels, components)


def flanks_disjoint(csets: CountingSets) -> bool:
    """Exact pairwise disjointness within the left and right flank families."""
    for flanks in (csets.left_flanks(), csets.right_flanks()):
        spans = [(a, b) for _, a, b in flanks]
        spans.sort()
        for (a1, b1), (a2, b2) in zip(spans, spans[1:]):
            if a2 < b1:  # open intervals: sharing an endpoint is fine
                return False
    return True


def boundary_weight(csets: CountingSets, j: int, grid: DyadicGrid) -> Signal:
    """Sum over levels of distance decay from the component boundary points.

    Level j2 contributes with weight 2^(-|j2-j|/100); individual terms
    below the floating drop threshold are zeroed, which changes integrals
    by far less than any reported tolerance.
    """
    x = grid.points()
    total = np.zeros(grid.num_samples)
    for j2 in csets.levels:
        pts = csets.boundary_points(j2)
        if pts.size == 0:
            continue
        decay = 2.0 ** (-abs(j2 - j) / 100)
        d = periodic_distance(x[:, None], pts[None, :], grid.length)
        terms = decay * (1.0 + 2.0 ** j2 * d) ** -100
        terms[terms < WEIGHT_DROP] = 0.0
        total += terms.sum(axis=1)
    return Signal(grid, total)


def tree_weight(tree: Tree, grid: DyadicGrid,
                csets: CountingSets | None = None) -> Signal:
    """Piecewise-constant tile weight: per tile, the boundary weight at its
    scale integrated against the squared localization cutoff, spread over
    the tile interval.
    """
    if csets is None:
        csets = counting_sets(tree)
    mu_cache = {}
    total = np.zeros(grid.num_samples)
    for s in tree.tiles:
        if s.k not in mu_cache:
            mu_cache[s.k] = boundary_weight(csets, s.k, grid).values.real
        base = _chi_base(grid, s.interval.length, 2.0)
        chi2 = np.roll(base, _center_shift(grid, s.interval))
        const = float(np.sum(mu_cache[s.k] * chi2)) * grid.spacing
        lo, hi = interval_sample_range(grid, s.interval)
        total[lo:hi] += const / s.interval.length
    return Signal(grid, total)


def local_weight_ratio(tree: Tree, weight: Signal) -> float:
    """Max over dyadic subintervals of the top of mean weight integral.

    The bounded-ratio property is the quantitative form of the counting
    estimate; the audits track the worst constant.
    """
    grid = weight.grid
    lo, hi = interval_sample_range(grid, tree.interval)
    seg = weight.values[lo:hi].real * grid.spacing
    best = 0.0
    count = hi - lo
    width = 1
    while width <= count:
        sums = seg.reshape(-1, width).sum(axis=1)
        best = max(best, float(np.max(sums)) / (width * grid.spacing))
        width *= 2
    return best


def dyadic_bmo(f: Signal) -> float:
    """Max over all dyadic cells of the mean deviation from the cell mean."""
    vals = f.values
    best = 0.0
    per = 1
    while per <= vals.size:
        cells = vals.reshape(-1, per)
        means = cells.mean(axis=1, keepdims=True)
        dev = np.abs(cells - means).mean(axis=1)
        best = max(best, float(np.max(dev)))
        per *= 2
    return best


# ---------------------------------------------------------------------------
# Tree variation


def _single_freq_variation(tiles_n, f: Signal, wsys: WindowSystem,
                           r: float) -> np.ndarray:
    """Pointwise variation of the containing-tile coefficient chain, one frequency."""
    grid = f.grid
    out = np.zeros(grid.num_samples)
    if not tiles_n:
        return out
    fields = {}
    spans = []
    for s in tiles_n:
        if s.k not in fields:
            fields[s.k] = coefficient_field(f, wsys, s.n, s.k)
        lo, hi = interval_sample_range(grid, s.interval)
        spans.append((lo, hi, complex(fields[s.k][s.index])))
    cuts = sorted({0, grid.num_samples} | {lo for lo, _, _ in spans}
                  | {hi for _, hi, _ in spans})
    for a, b in zip(cuts, cuts[1:]):
        chain = [c for lo, hi, c in spans if lo <= a and b <= hi]
        if chain:
            out[a:b] = rvar_norm(np.asarray(chain, dtype=np.complex128), r)
    return out


def tree_variation_field(tree: Tree, f: Signal, wsys: WindowSystem,
                         r: float) -> Signal:
    """Variation over the tree's scale chain of window coefficients, per point."""
    if r <= 2:
        raise ValueError("tree variation needs r > 2")
    return Signal(f.grid, _single_freq_variation(tree.tiles, f, wsys, r))


def collection_variation_field(tiles, f: Signal, wsys: WindowSystem,
                               r: float) -> Signal:
    """l2 over frequencies of the per-frequency containing-chain variation."""
    if r <= 2:
        raise ValueError("collection variation needs r > 2")
    tiles = _tile_tuple(tiles)
    by_n = {}
    for s in tiles:
        by_n.setdefault(s.n, []).append(s)
    acc = np.zeros(f.grid.num_samples)
    for n in sorted(by_n):
        acc += _single_freq_variation(tuple(sorted(by_n[n])), f, wsys, r) ** 2
    return Signal(f.grid, np.sqrt(acc))


def tree_variation_ratio(tree: Tree, f: Signal, system: FrequencySystem,
                         wsys: WindowSystem, r: float, t: float = 6.0) -> dict:
    """Report ||V_T f||_t against |I_T|^(1/t) times the tree size."""
    field = tree_variation_field(tree, f, wsys, r)
    num = lp_norm(field, t)
    size = tree_size(tree, f, system)
    denom = tree.interval.length ** (1.0 / t) * size
    return {"variation_norm": num, "size_bound": denom,
            "ratio": num / denom if denom > 0 else 0.0}


# ---------------------------------------------------------------------------
# Exceptional sets for indicator inputs


@dataclass(frozen=True)
class ExceptionalReport:
    lam: float
    eps: float
    measure_f: float
    measure_e: float
    measure_e_bound: float
    measure_eprime: float
    off_max: float
    off_bound: float
    survivors_convex: bool
    identity_exact: bool
    strata_rows: tuple

    @property
    def margin(self) -> float:
        if self.off_max == 0.0:
            return math.inf
        return self.off_bound / self.off_max


def exceptional_analysis(tiles, member_mask, lam: float, eps: float,
                         system: FrequencySystem, wsys: WindowSystem,
                         r: float, maximal_constant: float = 0.125,
                         measure_exponent: float = 2.0) -> ExceptionalReport:
    """Run the full indicator-input pipeline and verify its two bounds.

    member_mask is the boolean sample mask of the set F.  The first
    exceptional set thresholds the maximal function of the indicator at a
    small multiple of lam; tiles whose interval sits inside it are
    removed, the survivors are decomposed by size, and each tree
    contributes the set where its variation beats lam^(1/2-eps) scaled by
    the stratum level.  Off both exceptional sets the total variation of
    the survivors must stay below lam^(1-eps) sqrt(N); the report carries
    the worst value and the margins.
    """
    if not 0 < lam < 1:
        raise ValueError("threshold must lie in (0, 1)")
    tiles = _tile_tuple(tiles)
    grid = system.grid
    mask = np.asarray(member_mask, dtype=bool)
    if mask.shape != (grid.num_samples,):
        raise ValueError("member mask must have one entry per sample")
    f = Signal(grid, mask.astype(np.float64))
    measure_f = float(mask.sum()) * grid.spacing

    mf = hl_maximal(f).values.real
    e_mask = mf >= maximal_constant * lam
    measure_e = float(e_mask.sum()) * grid.spacing
    e_bound = 2.0 * maximal_constant ** -measure_exponent * measure_f / lam ** measure_exponent

    survivors = []
    for s in tiles:
        lo, hi = interval_sample_range(grid, s.interval)
        if not e_mask[lo:hi].all():
            survivors.append(s)
    survivors = tuple(survivors)
    survivors_convex = check_convex(survivors)

    decomp = size_decompose(survivors, f, system)
    eprime = np.zeros(grid.num_samples, dtype=bool)
    identity_exact = True
    rows = []
    last_m = 0
    for st in decomp.strata:
        m_eff = st.m if st.m is not None else last_m + 1
        last_m = m_eff
        thr = lam ** (0.5 - eps) * 2.0 ** (-m_eff / 2)
        per_n = {}
        for tree in st.forest:
            vt = tree_variation_field(tree, f, wsys, r).values.real
            lo, hi = interval_sample_range(grid, tree.interval)
            sel = np.zeros(grid.num_samples, dtype=bool)
            sel[lo:hi] = vt[lo:hi] > thr
            eprime |= sel
            if tree.top.n not in per_n:
                per_n[tree.top.n] = np.zeros(grid.num_samples)
            per_n[tree.top.n] += vt ** 2
        agg = np.zeros(grid.num_samples)
        for n in sorted(per_n):
            agg += per_n[n]
        stratum_field = collection_variation_field(st.tiles, f, wsys, r).values.real
        if not np.array_equal(stratum_field, np.sqrt(agg)):
            identity_exact = False
        rows.append((st.threshold, st.m, len(st.forest),
                     sum(t.interval.length for t in st.forest), st.bessel_ratio))
    measure_eprime = float(eprime.sum()) * grid.spacing

    off = ~(e_mask | eprime)
    total = collection_variation_field(survivors, f, wsys, r).values.real
    off_max = float(total[off].max()) if off.any() else 0.0
    off_bound = lam ** (1.0 - eps) * math.sqrt(system.size)
    return ExceptionalReport(lam, eps, measure_f, measure_e, e_bound,
                             measure_eprime, off_max, off_bound,
                             survivors_convex, identity_exact, tuple(rows))


# ---------------------------------------------------------------------------
# Serialization and suite generation


def tile_to_dict(tile: Tile) -> dict:
    return {"k": tile.k, "index": tile.index, "n": tile.n}


def tile_from_dict(data: dict) -> Tile:
    return Tile(int(data["k"]), int(data["index"]), int(data["n"]))


def tileset_to_json(tiles, path: str | None = None) -> dict:
    ts = tiles if isinstance(tiles, TileSet) else TileSet.from_tiles(_tile_tuple(tiles))
    data = {"tiles": [tile_to_dict(s) for s in ts.tiles], "convex": ts.convex}
    if path is not None:
        with open(path, "w") as fh:
            json.dump(data, fh, sort_keys=True, indent=1)
            fh.write("\n")
    return data


def tileset_from_json(source) -> TileSet:
    if isinstance(source, (str, bytes)):
        with open(source) as fh:
            data = json.load(fh)
    else:
        data = source
    tiles = tuple(sorted(tile_from_dict(d) for d in data["tiles"]))
    return TileSet(tiles, check_convex(tiles))


def forest_to_json(forest) -> list:
    return [{"top": tile_to_dict(tree.top),
             "member_tiles": [tile_to_dict(s) for s in tree.tiles]}
            for tree in forest]


def forest_from_json(data) -> tuple:
    return tuple(Tree(tile_from_dict(d["top"]),
                      tuple(tile_from_dict(s) for s in d["member_tiles"]))
                 for d in data)


def save_decomposition_csv(decomp: SizeDecomposition, path: str) -> None:
    with open(path, "w") as fh:
        fh.write("lambda,m,num_trees,sum_IT,bessel_ratio\n")
        for st in decomp.strata:
            m_txt = "" if st.m is None else str(st.m)
            sum_it = sum(t.interval.length for t in st.forest)
            fh.write(f"{st.threshold!r},{m_txt},{len(st.forest)},"
                     f"{sum_it!r},{st.bessel_ratio!r}\n")


def random_convex_tileset(rng, system: FrequencySystem,
                          max_tiles: int = 200) -> TileSet:
    """Random convex tile set grown one seed at a time under a budget.

    Each candidate tile is accepted only if the convex closure of the
    enlarged set still fits, so the result is always convex and never
    exceeds max_tiles.
    """
    scales = [k for k in system.scales if 2.0 ** -k > MIN_TILE_LENGTH]
    if not scales:
        raise ValueError("no admissible tile scales on this system")
    tiles: set = set()
    for _ in range(2 * max_tiles):
        k = int(rng.choice(scales))
        count = int(system.grid.length * 2.0 ** k)
        cand = Tile(k, int(rng.integers(count)), int(rng.integers(system.size)))
        trial = convex_closure(tiles | {cand})
        if len(trial.tiles) <= max_tiles:
            tiles = set(trial.tiles)
    return TileSet(tuple(sorted(tiles)), True)
