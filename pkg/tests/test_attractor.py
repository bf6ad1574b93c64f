import csv
import math

import numpy as np
import pytest

from affdim.attractor import (
    DegenerateCloudWarning,
    IFSInstance,
    _compose,
    box_count_dim,
    box_counts,
    chaos_game,
    local_dim_estimate,
    projected_dim_experiment,
    random_translations,
    write_cloud_csv,
)
from affdim.ergodic import MeasureSpec, rng_for, sample_block
from affdim.errors import InvalidInputError
from affdim.linalg import Subspace
from affdim.presets import diagonal_pair, similarity_tuple
from affdim.words import MatrixTuple


def cantor():
    T = MatrixTuple([[[1 / 3]], [[1 / 3]]])
    return IFSInstance(T, [[0.0], [2 / 3]])


def test_ifs_validation():
    with pytest.raises(InvalidInputError):
        IFSInstance(diagonal_pair(), np.zeros((3, 2)))
    with pytest.raises(InvalidInputError):
        IFSInstance(diagonal_pair(), [[np.nan, 0], [0, 0]])


def test_bounding_radius_and_burn_in():
    ifs = cantor()
    assert ifs.bounding_radius == pytest.approx(1.0)
    L = ifs.burn_in()
    assert (1 / 3) ** L < 1e-12 <= (1 / 3) ** (L - 1)


def test_single_map_converges_to_fixed_point():
    T = MatrixTuple([0.5 * np.eye(2)])
    a = np.array([[1.0, -2.0]])
    cloud = chaos_game(IFSInstance(T, a), MeasureSpec([1.0]), 10)
    assert np.allclose(cloud.points, [2.0, -4.0], atol=1e-11)


def test_cantor_points_match_ternary_expansion():
    ifs = cantor()
    L = 30
    cloud = chaos_game(ifs, MeasureSpec.uniform(2), 500, burn_in=L, address_len=L)
    digits = 2 * cloud.addresses.astype(float)
    expected = (digits * 3.0 ** -np.arange(1, L + 1)).sum(axis=1)
    assert np.allclose(cloud.points[:, 0], expected, atol=1e-12)


def test_points_stay_in_bounding_ball(rng):
    T = diagonal_pair()
    a = random_translations(2, 2, 1.0, rng)
    ifs = IFSInstance(T, a)
    cloud = chaos_game(ifs, MeasureSpec.uniform(2), 2000, seed=3)
    assert np.all(np.linalg.norm(cloud.points, axis=1) <= ifs.bounding_radius + 1e-12)


def test_truncation_error_bound(rng):
    T = diagonal_pair()
    ifs = IFSInstance(T, random_translations(2, 2, 1.0, rng))
    paths = sample_block(MeasureSpec.uniform(2), 80, 200, rng_for(0, 0))
    L = 20
    short = _compose(T.matrices, ifs.translations, paths[:, :L])
    long = _compose(T.matrices, ifs.translations, paths)
    assert np.max(np.linalg.norm(long - short, axis=1)) <= T.alpha_plus**L * ifs.bounding_radius


def test_chaos_game_reproducible_and_worker_independent():
    ifs = cantor()
    mu = MeasureSpec.uniform(2)
    a = chaos_game(ifs, mu, 70000, seed=5, workers=1)
    b = chaos_game(ifs, mu, 70000, seed=5, workers=3)
    assert np.array_equal(a.points, b.points)


def test_chaos_game_alphabet_mismatch():
    with pytest.raises(InvalidInputError):
        chaos_game(cantor(), MeasureSpec.uniform(3), 10)


def test_random_translations_in_ball(rng):
    a = random_translations(50, 3, 2.0, rng)
    assert a.shape == (50, 3) and np.all(np.linalg.norm(a, axis=1) <= 2.0)


# --- box counting --------------------------------------------------------------------


def test_box_counts_by_hand():
    pts = np.array([[0.0, 0.0], [0.1, 0.1], [0.9, 0.9]])
    assert box_counts(pts, [0.5, 0.05]).tolist() == [2, 3]


def test_box_dim_segment(rng):
    pts = np.column_stack([rng.random(200000), np.zeros(200000)])
    assert box_count_dim(pts).estimate == pytest.approx(1.0, abs=0.05)


def test_box_dim_filled_square(rng):
    assert box_count_dim(rng.random((400000, 2)), window=(0, 5)).estimate == pytest.approx(2.0, abs=0.1)


def test_box_dim_cantor():
    cloud = chaos_game(cantor(), MeasureSpec.uniform(2), 200000)
    assert box_count_dim(cloud).estimate == pytest.approx(math.log(2) / math.log(3), abs=0.05)


def test_box_dim_degenerate_cloud():
    with pytest.warns(DegenerateCloudWarning):
        res = box_count_dim(np.ones((10, 2)))
    assert res.estimate == 0.0


def test_projection_does_not_increase_box_dim(rng):
    T = diagonal_pair()
    cloud = chaos_game(IFSInstance(T, random_translations(2, 2, 1.0, rng)), MeasureSpec.uniform(2), 100000)
    full = box_count_dim(cloud).estimate
    line = box_count_dim(cloud.project(Subspace.coordinate(2, [1]))).estimate
    assert line <= full + 0.05


def test_projected_experiment_similarity():
    T = similarity_tuple(2, 1 / 3)
    res = projected_dim_experiment(T, Subspace.span([[1], [0.3]]), MeasureSpec.uniform(2), trials=2, N=100000, seed=2)
    target = math.log(2) / math.log(3)
    assert res["prediction"]["value"] == pytest.approx(target, abs=1e-4)
    assert res["hypotheses_met"] and len(res["rows"]) == 2
    assert all(abs(r["box_dim"] - target) < 0.15 for r in res["rows"])


def test_projected_experiment_flags_overlap():
    T = MatrixTuple([0.6 * np.eye(2), 0.6 * np.eye(2)])
    res = projected_dim_experiment(T, Subspace.coordinate(2, [1]), MeasureSpec.uniform(2), trials=1, N=2000)
    assert not res["hypotheses_met"] and res["note"]


# --- local dimensions ---------------------------------------------------------------------


def test_local_dim_uniform_segment(rng):
    res = local_dim_estimate(rng.random(100000), n_centers=50)
    assert np.median(res.slopes) == pytest.approx(1.0, abs=0.1)


def test_local_dim_uniform_square(rng):
    # at 2e5 points the default finest radius holds under one neighbour on average
    res = local_dim_estimate(rng.random((200000, 2)), n_centers=50, radii=np.geomspace(0.05, 0.005, 5))
    assert np.median(res.slopes) == pytest.approx(2.0, abs=0.15)


def test_local_dim_point_mass():
    res = local_dim_estimate(np.zeros((100, 1)), n_centers=10)
    assert np.allclose(res.slopes, 0.0) and res.skipped == 0


def test_write_cloud_csv(tmp_path):
    cloud = chaos_game(cantor(), MeasureSpec.uniform(2), 20, address_len=4)
    path = tmp_path / "cloud.csv"
    write_cloud_csv(cloud, path, max_rows=5)
    rows = list(csv.reader(open(path)))
    assert rows[0] == ["x1", "address"] and len(rows) == 6
    assert float(rows[1][0]) == cloud.points[0, 0]
    assert set(rows[1][1].split()) <= {"1", "2"}
