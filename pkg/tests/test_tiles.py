"""Tile combinatorics, the size functional, and the tree machinery.

The convexity and size tests check against independent oracles: a literal
betweenness fixpoint for the closure, and a size quadrature that builds
every multiplier and cutoff directly from signed frequencies and periodic
distances instead of slot arithmetic and rolls.
"""

import json
import math

import numpy as np
import pytest

from maxmult.grid import (DyadicGrid, DyadicInterval, Signal, fourier_project,
                          idft, interval_sample_range, lp_norm,
                          periodic_distance)
from maxmult.multipliers import build_system
from maxmult.tiles import (
    CountingSets,
    Tile,
    TileSet,
    Tree,
    boundary_weight,
    check_convex,
    collection_variation_field,
    convex_closure,
    counting_partition,
    counting_sets,
    dyadic_bmo,
    exceptional_analysis,
    flanks_disjoint,
    forest_from_json,
    forest_to_json,
    local_weight_ratio,
    random_convex_tileset,
    save_decomposition_csv,
    select_trees,
    set_size,
    size_decompose,
    size_maximal_bound,
    tile_from_dict,
    tile_sizes,
    tile_size,
    tile_to_dict,
    tileset_from_json,
    tileset_to_json,
    top_rectangles_disjoint,
    tree_size,
    tree_variation_field,
    tree_variation_ratio,
    tree_weight,
)
from maxmult.windows import WindowSystem, coefficient_field

GRID = DyadicGrid(11, 14)  # length 2048, tile scales -11..-7 all above 100
SYSTEM = build_system((-2.0, -1.0, 1.0, 2.0), GRID)
WSYS = WindowSystem(SYSTEM)


def random_signal(seed):
    rng = np.random.default_rng(seed)
    vals = rng.normal(size=GRID.num_samples) + 1j * rng.normal(size=GRID.num_samples)
    return Signal(GRID, vals)


def tone(freq, coeff=1.0):
    dual = GRID.dual()
    spec = np.zeros(dual.num_samples, dtype=np.complex128)
    spec[int(round(freq / dual.spacing)) % dual.num_samples] = coeff / dual.spacing
    return idft(Signal(dual, spec))


# ---------------------------------------------------------------------------
# Combinatorics


def test_tile_validation_and_order():
    with pytest.raises(ValueError):
        Tile(-6, 0, 0)  # 64 is too short an interval
    with pytest.raises(ValueError):
        Tile(-7, -1, 0)
    with pytest.raises(ValueError):
        Tile(-7, 0, -1)
    # selection order: coarser interval first, then leftmost, then frequency
    assert Tile(-8, 5, 3) < Tile(-7, 0, 0)
    assert Tile(-7, 0, 1) < Tile(-7, 1, 0)
    assert Tile(-7, 0, 0) < Tile(-7, 0, 1)
    t = Tile(-8, 3, 2)
    assert t.interval == DyadicInterval(-8, 3)
    lo, hi = t.freq_interval(SYSTEM)
    assert hi - lo == pytest.approx(2.0 ** -8)


def test_tree_validation():
    top = Tile(-9, 0, 1)
    Tree(top, (top, Tile(-8, 1, 1), Tile(-7, 0, 1)))
    with pytest.raises(ValueError):
        Tree(top, (Tile(-8, 1, 2),))  # wrong frequency
    with pytest.raises(ValueError):
        Tree(top, (Tile(-8, 7, 1),))  # not nested under [0, 512)
    with pytest.raises(ValueError):
        Tree(top, ())


def _betweenness_oracle(tiles):
    """Convex iff every ancestor chain between two members is filled in."""
    tiles = set(tiles)
    for coarse in tiles:
        for fine in tiles:
            if coarse.n != fine.n or fine.k <= coarse.k:
                continue
            if not coarse.interval.contains(fine.interval):
                continue
            for k in range(coarse.k + 1, fine.k):
                if Tile(k, fine.index >> (fine.k - k), fine.n) not in tiles:
                    return False
    return True


def _closure_fixpoint(tiles):
    cur = set(tiles)
    changed = True
    while changed:
        changed = False
        for coarse in list(cur):
            for fine in list(cur):
                if coarse.n != fine.n or fine.k <= coarse.k:
                    continue
                if not coarse.interval.contains(fine.interval):
                    continue
                for k in range(coarse.k + 1, fine.k):
                    anc = Tile(k, fine.index >> (fine.k - k), fine.n)
                    if anc not in cur:
                        cur.add(anc)
                        changed = True
    return tuple(sorted(cur))


def test_convexity_against_betweenness_oracle():
    rng = np.random.default_rng(17)
    agree_false = 0
    for _ in range(300):
        draw = []
        for _ in range(rng.integers(1, 9)):
            k = int(rng.choice((-9, -8, -7)))
            count = int(GRID.length * 2.0 ** k) // 128  # stay in one region
            draw.append(Tile(k, int(rng.integers(max(count, 1))), int(rng.integers(2))))
        got = check_convex(draw)
        want = _betweenness_oracle(draw)
        assert got == want
        agree_false += not want
        closed = convex_closure(draw)
        assert closed.convex and check_convex(closed.tiles)
        assert set(draw) <= set(closed.tiles)
        # the single-pass closure equals the literal fixpoint, so it is minimal
        assert closed.tiles == _closure_fixpoint(draw)
    assert agree_false > 10  # the draws actually exercise the false branch


def test_closure_is_idempotent():
    rng = np.random.default_rng(3)
    ts = random_convex_tileset(rng, SYSTEM, max_tiles=40)
    assert convex_closure(ts.tiles).tiles == ts.tiles
    again = TileSet.from_tiles(ts.tiles)
    assert again.convex


# ---------------------------------------------------------------------------
# Size functional


def _naive_size(tile, f, system):
    """Roll-free oracle: signed frequencies, direct periodic distances."""
    g = f.grid
    dual = g.dual()
    m = dual.num_samples
    lam = system.lambdas[tile.n]
    width = 2.0 ** tile.k
    theta = np.fft.fftfreq(m) * m * dual.spacing
    off = np.abs(theta - lam)
    off = np.minimum(off, dual.length - off)
    plateau = np.where(
        off <= width / 2, 1.0,
        np.where(off < 5 * width,
                 np.cos(np.pi * (off - width / 2) / (9 * width)) ** 2, 0.0))
    sharp = (off <= width / 2).astype(float)
    chi = (1.0 + periodic_distance(g.points(), tile.interval.center, g.length)
           / tile.interval.length) ** -20
    best = 0.0
    for mult in (plateau, sharp):
        g2 = np.abs(fourier_project(f, mult).values) ** 2
        val = math.sqrt(float(np.sum(g2 * chi)) * g.spacing)
        best = max(best, val / math.sqrt(tile.interval.length))
    return best


def test_sizes_match_naive_oracle():
    f = random_signal(5)
    tiles = (Tile(-9, 0, 0), Tile(-9, 1, 2), Tile(-8, 3, 2),
             Tile(-7, 11, 3), Tile(-11, 0, 1))
    sizes = tile_sizes(tiles, f, SYSTEM)
    for t in tiles:
        assert sizes[t] == pytest.approx(_naive_size(t, f, SYSTEM), rel=1e-12)
    assert set_size(tiles, f, SYSTEM) == max(sizes.values())
    with pytest.raises(ValueError):
        tile_sizes(tiles, Signal(DyadicGrid(11, 13), np.zeros(2 ** 13)), SYSTEM)


def test_pure_tone_size_closed_form():
    # a tone at the tile frequency passes both dictionary multipliers
    # unchanged, so the size is |c| sqrt(integral of the cutoff / |I|)
    tile = Tile(-8, 2, 3)
    f = tone(SYSTEM.lambdas[3], coeff=1.5)
    x = GRID.points()
    chi = (1.0 + periodic_distance(x, tile.interval.center, GRID.length)
           / tile.interval.length) ** -20
    want = abs(1.5) * math.sqrt(float(np.sum(chi)) * GRID.spacing
                                / tile.interval.length)
    assert tile_size(tile, f, SYSTEM) == pytest.approx(want, rel=1e-12)


def test_size_stays_below_maximal_bound():
    rng = np.random.default_rng(9)
    ts = random_convex_tileset(rng, SYSTEM, max_tiles=30)
    by_n = {}
    for s in ts.tiles:
        by_n.setdefault(s.n, []).append(s)
    n, tiles_n = max(by_n.items(), key=lambda kv: len(kv[1]))
    top = min(tiles_n)
    members = tuple(s for s in tiles_n if top.interval.contains(s.interval))
    tree = Tree(top, members)
    f = random_signal(10)
    size, bound = size_maximal_bound(tree, f, SYSTEM)
    assert size <= 4.0 * bound


# ---------------------------------------------------------------------------
# Selection and decomposition


def test_selection_postconditions():
    rng = np.random.default_rng(21)
    ts = random_convex_tileset(rng, SYSTEM, max_tiles=80)
    f = random_signal(22)
    sizes = tile_sizes(ts.tiles, f, SYSTEM)
    sigma = max(sizes.values())
    lam = 0.6 * sigma
    sel = select_trees(ts.tiles, f, SYSTEM, lam, sizes)
    forest_tiles = [s for tree in sel.forest for s in tree.tiles]
    assert sorted(forest_tiles + list(sel.residual)) == sorted(ts.tiles)
    assert len(set(forest_tiles)) == len(forest_tiles)
    for s in sel.residual:
        assert sizes[s] <= lam
    for tree in sel.forest:
        assert sizes[tree.top] > lam
        # maximality: nothing left behind fits under this top
        for s in sel.residual:
            assert not (s.n == tree.top.n
                        and tree.interval.contains(s.interval))
    fnorm = lp_norm(f, 2)
    want = sum(t.interval.length for t in sel.forest) * lam ** 2 / fnorm ** 2
    assert sel.bessel_ratio == pytest.approx(want)
    assert top_rectangles_disjoint(sel.forest, SYSTEM)
    with pytest.raises(ValueError):
        select_trees(ts.tiles, f, SYSTEM, 0.4 * sigma, sizes)


def test_decomposition_postconditions():
    rng = np.random.default_rng(31)
    ts = random_convex_tileset(rng, SYSTEM, max_tiles=80)
    f = random_signal(32)
    decomp = size_decompose(ts.tiles, f, SYSTEM)
    assert decomp.input_convex
    assert decomp.tiles == ts.tiles  # nothing lost, nothing invented
    sizes = tile_sizes(ts.tiles, f, SYSTEM)
    assert decomp.sigma0 == max(sizes.values())
    first = decomp.strata[0]
    assert first.m is not None
    assert decomp.sigma0 <= 2.0 ** -first.m < 2 * decomp.sigma0
    last_m = None
    for st in decomp.strata:
        if st.m is None:
            assert st.threshold == 0.0
            continue
        if last_m is not None:
            assert st.m > last_m
        last_m = st.m
        assert st.threshold == 2.0 ** -(st.m + 1)
        for tree in st.forest:
            assert sizes[tree.top] > st.threshold
            for s in tree.tiles:
                assert sizes[s] <= 2.0 ** -st.m * (1 + 1e-12)
        assert st.convex == check_convex(st.tiles)


def test_nonconvex_input_warns():
    f = random_signal(1)
    gap = (Tile(-9, 0, 0), Tile(-7, 0, 0))  # missing the -8 ancestor
    assert not check_convex(gap)
    with pytest.warns(UserWarning):
        size_decompose(gap, f, SYSTEM)


# ---------------------------------------------------------------------------
# Counting partition, flanks, weights


def make_counting_tree():
    top = Tile(-9, 0, 2)
    return Tree(top, (top, Tile(-8, 1, 2), Tile(-7, 0, 2)))


def test_counting_partition_properties():
    tree = make_counting_tree()
    members = counting_partition(tree)
    # the members tile the top exactly
    assert members[0].left == tree.interval.left
    assert members[-1].right == tree.interval.right
    for a, b in zip(members, members[1:]):
        assert a.right == b.left
    bounds = [(s.interval.left, s.interval.right) for s in tree.tiles]

    def triple_holds_tile(iv):
        lo, hi = iv.left - iv.length, iv.right + iv.length
        return any(lo <= a and b <= hi for a, b in bounds)

    for iv in members:
        assert not triple_holds_tile(iv)
        if iv.k > tree.top.k:
            parent = DyadicInterval(iv.k - 1, iv.index >> 1)
            assert triple_holds_tile(parent)  # members are maximal


def test_counting_sets_and_flanks():
    tree = make_counting_tree()
    csets = counting_sets(tree)
    assert isinstance(csets, CountingSets)
    assert csets.levels == tuple(range(tree.top.k,
                                       max(iv.k for iv in csets.members)))
    for j in csets.levels:
        block = 2.0 ** -j
        for a, b in csets.components[j]:
            assert (a / block) == round(a / block)
            assert ((b - a) / block) == round((b - a) / block)
    assert flanks_disjoint(csets)
    assert 0 < csets.counting_ratio() < 1e3


def test_tree_weight_and_bmo():
    tree = make_counting_tree()
    csets = counting_sets(tree)
    w_j = boundary_weight(csets, tree.top.k, GRID)
    assert (w_j.values.real >= 0).all()
    assert w_j.values.real.max() > 0
    weight = tree_weight(tree, GRID, csets)
    assert (weight.values.real >= 0).all()
    ratio = local_weight_ratio(tree, weight)
    assert 0 < ratio < 1e3
    assert dyadic_bmo(weight) < 1e3


def test_dyadic_bmo_exact_cases():
    half = GRID.num_samples // 2
    haar = np.concatenate([np.ones(half), -np.ones(half)])
    assert dyadic_bmo(Signal(GRID, haar)) == 1.0
    const = Signal(GRID, np.full(GRID.num_samples, 3.7))
    assert dyadic_bmo(const) < 1e-12


# ---------------------------------------------------------------------------
# Tree variation


def test_tree_variation_chain_values():
    from maxmult.variation import rvar_norm
    top = Tile(-9, 0, 2)
    tiles = (top, Tile(-8, 0, 2), Tile(-8, 1, 2), Tile(-7, 2, 2))
    tree = Tree(top, tiles)
    f = random_signal(40)
    field = tree_variation_field(tree, f, WSYS, 2.5).values.real
    coeff = {k: coefficient_field(f, WSYS, 2, k) for k in (-9, -8, -7)}

    # x in [256, 384): containing tiles are (-9,0), (-8,1), (-7,2)
    x3 = interval_sample_range(GRID, DyadicInterval(-7, 2))[0]
    chain3 = np.array([coeff[-9][0], coeff[-8][1], coeff[-7][2]])
    assert field[x3] == pytest.approx(rvar_norm(chain3, 2.5), rel=1e-12)
    # x in [384, 512): only (-9,0) and (-8,1) contain it
    x2 = interval_sample_range(GRID, DyadicInterval(-7, 3))[0]
    chain2 = np.array([coeff[-9][0], coeff[-8][1]])
    assert field[x2] == pytest.approx(rvar_norm(chain2, 2.5), rel=1e-12)
    # outside the top the field vanishes
    x0 = interval_sample_range(GRID, DyadicInterval(-9, 1))[0]
    assert field[x0] == 0.0

    with pytest.raises(ValueError):
        tree_variation_field(tree, f, WSYS, 2.0)
    with pytest.raises(ValueError):
        collection_variation_field(tiles, f, WSYS, 1.5)


def test_collection_field_aggregates_frequencies():
    f = random_signal(41)
    t_a = Tile(-9, 0, 1)
    t_b = Tile(-9, 2, 3)
    per_a = tree_variation_field(Tree(t_a, (t_a,)), f, WSYS, 2.5).values.real
    per_b = tree_variation_field(Tree(t_b, (t_b,)), f, WSYS, 2.5).values.real
    both = collection_variation_field((t_a, t_b), f, WSYS, 2.5).values.real
    assert np.allclose(both, np.sqrt(per_a ** 2 + per_b ** 2), atol=1e-14)


def test_tree_variation_ratio_report():
    tree = make_counting_tree()
    f = random_signal(42)
    rep = tree_variation_ratio(tree, f, SYSTEM, WSYS, 2.5)
    assert rep["variation_norm"] > 0 and rep["size_bound"] > 0
    assert rep["ratio"] == pytest.approx(rep["variation_norm"] / rep["size_bound"])


# ---------------------------------------------------------------------------
# Exceptional sets


def test_exceptional_analysis_small_run():
    rng = np.random.default_rng(50)
    ts = random_convex_tileset(rng, SYSTEM, max_tiles=60)
    lam = 0.25
    mask = np.zeros(GRID.num_samples, dtype=bool)
    piece = int(GRID.length * lam / 64 / GRID.spacing) // 4
    for start in (0, 3000, 7000, 12000):
        mask[start:start + piece] = True
    rep = exceptional_analysis(ts.tiles, mask, lam, 0.05, SYSTEM, WSYS, 2.5)
    assert rep.measure_f == pytest.approx(mask.sum() * GRID.spacing)
    assert rep.measure_e <= rep.measure_e_bound
    assert rep.off_max <= rep.off_bound
    assert rep.identity_exact
    assert rep.survivors_convex
    assert rep.margin > 1.0
    assert all(len(row) == 5 for row in rep.strata_rows)

    with pytest.raises(ValueError):
        exceptional_analysis(ts.tiles, mask, 1.0, 0.05, SYSTEM, WSYS, 2.5)
    with pytest.raises(ValueError):
        exceptional_analysis(ts.tiles, mask[:-1], lam, 0.05, SYSTEM, WSYS, 2.5)


# ---------------------------------------------------------------------------
# Serialization and generation


def test_serialization_round_trips(tmp_path):
    rng = np.random.default_rng(60)
    ts = random_convex_tileset(rng, SYSTEM, max_tiles=40)
    t = ts.tiles[0]
    assert tile_from_dict(tile_to_dict(t)) == t

    path = tmp_path / "tiles.json"
    blob = tileset_to_json(ts, str(path))
    assert blob["convex"]
    back = tileset_from_json(str(path))
    assert back.tiles == ts.tiles and back.convex

    f = random_signal(61)
    sel = select_trees(ts.tiles, f, SYSTEM,
                       0.6 * set_size(ts.tiles, f, SYSTEM))
    forest = forest_from_json(forest_to_json(sel.forest))
    assert forest == sel.forest

    decomp = size_decompose(ts.tiles, f, SYSTEM)
    csv_path = tmp_path / "decomp.csv"
    save_decomposition_csv(decomp, str(csv_path))
    lines = csv_path.read_text().strip().split("\n")
    assert lines[0] == "lambda,m,num_trees,sum_IT,bessel_ratio"
    assert len(lines) == 1 + len(decomp.strata)
    for line, st in zip(lines[1:], decomp.strata):
        cells = line.split(",")
        assert float(cells[0]) == st.threshold
        assert cells[1] == ("" if st.m is None else str(st.m))
        assert int(cells[2]) == len(st.forest)


def test_random_tileset_is_convex_and_bounded():
    rng = np.random.default_rng(70)
    ts = random_convex_tileset(rng, SYSTEM, max_tiles=50)
    assert 0 < len(ts.tiles) <= 50
    assert ts.convex and check_convex(ts.tiles)
    again = random_convex_tileset(np.random.default_rng(70), SYSTEM, max_tiles=50)
    assert again.tiles == ts.tiles


def test_tree_size_is_member_max():
    f = random_signal(80)
    tree = make_counting_tree()
    sizes = tile_sizes(tree.tiles, f, SYSTEM)
    assert tree_size(tree, f, SYSTEM) == max(sizes.values())
