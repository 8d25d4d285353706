import numpy as np
import pytest

from maxmult.grid import (DyadicGrid, DyadicInterval, Signal, dft,
                          fourier_project, hl_maximal, idft,
                          interval_sample_range, load_signal, lp_norm,
                          martingale_avg, periodic_distance, save_signal)


def random_signal(grid, seed=0, scale=1.0):
    rng = np.random.default_rng(seed)
    vals = rng.normal(size=grid.num_samples) + 1j * rng.normal(size=grid.num_samples)
    return Signal(grid, scale * vals)


def test_grid_geometry():
    grid = DyadicGrid(3, 7)
    assert grid.length == 8.0
    assert grid.num_samples == 128
    assert grid.spacing == 8.0 / 128
    pts = grid.points()
    assert pts[0] == 0.0 and pts[-1] == 8.0 - grid.spacing


def test_grid_requires_enough_samples():
    with pytest.raises(ValueError):
        DyadicGrid(5, 3)


def test_dual_is_involutive():
    grid = DyadicGrid(4, 9)
    assert grid.dual().dual() == grid
    # frequency spacing is the reciprocal of the period
    assert grid.dual().spacing == 1.0 / grid.length


def test_dft_round_trip_and_parseval():
    grid = DyadicGrid(5, 10)
    f = random_signal(grid, seed=1)
    back = idft(dft(f))
    assert np.allclose(back.values, f.values, atol=1e-12)
    assert lp_norm(f, 2) == pytest.approx(lp_norm(dft(f), 2), rel=1e-12)


def test_fourier_project_identity_and_complement():
    grid = DyadicGrid(4, 9)
    f = random_signal(grid, seed=2)
    ones = np.ones(grid.num_samples)
    assert np.allclose(fourier_project(f, ones).values, f.values, atol=1e-12)
    half = np.zeros(grid.num_samples)
    half[: grid.num_samples // 2] = 1.0
    a = fourier_project(f, half)
    b = fourier_project(f, 1.0 - half)
    assert np.allclose(a.values + b.values, f.values, atol=1e-12)


def test_dyadic_interval_tree():
    iv = DyadicInterval(-2, 3)
    assert iv.length == 4.0
    assert iv.left == 12.0 and iv.right == 16.0
    assert iv.parent() == DyadicInterval(-3, 1)
    kids = iv.children()
    assert all(iv.contains(c) for c in kids)
    assert not kids[0].contains(iv)
    assert iv.contains(iv)


def test_containing_interval():
    from maxmult.grid import containing_interval

    assert containing_interval(5.3, 0) == DyadicInterval(0, 5)
    assert containing_interval(5.3, -1) == DyadicInterval(-1, 2)
    with pytest.raises(ValueError):
        containing_interval(-0.5, 0)


def test_periodic_distance_wraps():
    assert periodic_distance(0.25, 7.75, 8.0) == 0.5
    assert periodic_distance(1.0, 3.0, 8.0) == 2.0
    x = np.array([0.0, 4.0])
    d = periodic_distance(x, 0.0, 8.0)
    assert d.tolist() == [0.0, 4.0]


def test_interval_sample_range():
    grid = DyadicGrid(3, 6)  # spacing 1/8
    lo, hi = interval_sample_range(grid, DyadicInterval(0, 2))
    assert (lo, hi) == (16, 24)
    with pytest.raises(ValueError):
        interval_sample_range(grid, DyadicInterval(4, 0))  # finer than spacing


def test_martingale_avg_composes():
    grid = DyadicGrid(3, 8)
    f = random_signal(grid, seed=3)
    direct = martingale_avg(f, -2)
    nested = martingale_avg(martingale_avg(f, 0), -2)
    assert np.allclose(direct.values, nested.values, atol=1e-12)
    const = martingale_avg(f, -grid.length_log2)
    assert np.allclose(const.values, const.values[0], atol=1e-12)


def test_hl_maximal_dominates_averages():
    grid = DyadicGrid(3, 8)
    f = random_signal(grid, seed=4)
    m = hl_maximal(f).values.real
    for k in (0, 1, 2):
        avg = np.abs(martingale_avg(Signal(grid, np.abs(f.values)), k).values)
        assert (2.0 * m + 1e-12 >= avg).all()


def test_hl_maximal_of_spike_decays():
    grid = DyadicGrid(3, 8)
    vals = np.zeros(grid.num_samples)
    vals[0] = 1.0
    m = hl_maximal(Signal(grid, vals)).values.real
    assert m[0] == pytest.approx(1.0 / 2)  # radius-one window holds the spike
    assert m[grid.num_samples // 2] < m[1]


def test_signal_save_load_round_trip(tmp_path):
    grid = DyadicGrid(4, 9)
    # complex values straight out of an inverse transform, the worst case
    # for float formatting
    f = idft(random_signal(grid.dual(), seed=5))
    path = str(tmp_path / "sig.csv")
    save_signal(f, path)
    back = load_signal(path)
    assert back.grid == f.grid
    assert np.array_equal(back.values, f.values)


def test_save_is_byte_stable(tmp_path):
    grid = DyadicGrid(3, 6)
    f = random_signal(grid, seed=6)
    p1, p2 = str(tmp_path / "a.csv"), str(tmp_path / "b.csv")
    save_signal(f, p1)
    save_signal(f, p2)
    assert open(p1, "rb").read() == open(p2, "rb").read()
