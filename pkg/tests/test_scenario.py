"""Highway deployment, mobility and association tests."""

import numpy as np
import pytest

from v2xsim.scenario import (ConfigurationError, HighwayConfig, advance_mobility,
                             associate, deploy)


def test_road_length_is_rsus_times_spacing():
    cfg = HighwayConfig()
    assert cfg.road_length == cfg.num_rsus * cfg.rsu_spacing
    assert cfg.road_length == pytest.approx(7 * 1732.0)


def test_speed_default_is_140_kmh():
    assert HighwayConfig().speed == pytest.approx(140.0 / 3.6)


def test_lane_directions_split_at_midpoint():
    cfg = HighwayConfig()
    assert list(cfg.lane_direction([1, 2, 3, 4, 5, 6])) == [1, 1, 1, -1, -1, -1]


def test_rsu_positions_equally_spaced_and_offset():
    cfg = HighwayConfig()
    xy = cfg.rsu_positions()
    assert np.allclose(np.diff(xy[:, 0]), cfg.rsu_spacing)
    # 6 lanes x 4 m -> half width 12 m; RSU 35 m beyond the nearest edge
    assert np.allclose(xy[:, 1], -12.0 - 35.0)


def test_invalid_gaps_rejected():
    with pytest.raises(ConfigurationError):
        HighwayConfig(min_gap=0.0)
    with pytest.raises(ConfigurationError):
        HighwayConfig(min_gap=300.0, max_gap=38.0)


def test_deploy_deterministic():
    cfg = HighwayConfig(min_gap=100.0, max_gap=200.0)
    a = deploy(cfg, 7)
    b = deploy(cfg, 7)
    assert np.array_equal(a.positions, b.positions)
    assert np.array_equal(a.lanes, b.lanes)
    assert np.array_equal(a.serving, b.serving)


def test_deploy_gap_bounds_respected():
    cfg = HighwayConfig(min_gap=116.0, max_gap=116.0)
    state = deploy(cfg, 3)
    for lane in range(1, 7):
        pos = np.sort(state.positions[state.lanes == lane])
        assert np.allclose(np.diff(pos), 116.0)


def test_per_lane_count_matches_mean_gap():
    # count per lane within +-1 of floor(road_length / mean_gap), averaged
    # over 100 seeds
    cfg = HighwayConfig(min_gap=100.0, max_gap=200.0)
    expected = np.floor(cfg.road_length / 150.0)
    counts = []
    for seed in range(100):
        state = deploy(cfg, seed)
        counts.extend(np.bincount(state.lanes, minlength=7)[1:7])
    assert abs(np.mean(counts) - expected) <= 1.0


def test_every_vehicle_has_one_serving_rsu():
    state = deploy(HighwayConfig(), 11)
    assert state.serving.shape == (state.num_vehicles,)
    assert np.all((state.serving >= 0) & (state.serving < 7))


def test_mobility_identity_at_zero_dt():
    state = deploy(HighwayConfig(), 1)
    moved = advance_mobility(state, 0.0)
    assert np.array_equal(moved.positions, state.positions)


def test_mobility_kinematics():
    state = deploy(HighwayConfig(), 1)
    moved = advance_mobility(state, 1.0)
    delta = (moved.positions - state.positions) * state.directions
    expected = np.mod(delta, state.config.road_length)
    assert np.allclose(expected, 140.0 / 3.6)


def test_mobility_wraps_on_torus():
    cfg = HighwayConfig()
    state = deploy(cfg, 1)
    # force one vehicle next to the road end, moving forward
    pos = state.positions.copy()
    k = int(np.nonzero(state.directions == 1)[0][0])
    pos[k] = cfg.road_length - 1.0
    from dataclasses import replace
    state = replace(state, positions=pos)
    moved = advance_mobility(state, 1.0)
    assert moved.positions[k] == pytest.approx(140.0 / 3.6 - 1.0)


def test_mobility_preserves_lane_gaps():
    state = deploy(HighwayConfig(min_gap=116.0, max_gap=116.0), 5)
    moved = advance_mobility(state, 0.37)
    for lane in range(1, 7):
        before = np.sort(state.positions[state.lanes == lane])
        after = np.sort(moved.positions[moved.lanes == lane])
        # gaps between successive vehicles survive a rigid shift (compare
        # multisets of circular gaps)
        g0 = np.sort(np.diff(np.concatenate([before, [before[0] + state.config.road_length]])))
        g1 = np.sort(np.diff(np.concatenate([after, [after[0] + state.config.road_length]])))
        assert np.allclose(g0, g1)


def test_mobility_rejects_negative_dt():
    state = deploy(HighwayConfig(), 1)
    with pytest.raises(ConfigurationError):
        advance_mobility(state, -1.0)


def test_associate_matches_bruteforce_argmax(rng):
    state = deploy(HighwayConfig(), 9)
    gain = rng.normal(-100.0, 10.0, size=(7, state.num_vehicles))
    out = associate(state, gain)
    for v in range(state.num_vehicles):
        best = max(range(7), key=lambda r: (gain[r, v], -r))
        assert out.serving[v] == best


def test_associate_tie_breaks_to_lowest_id():
    state = deploy(HighwayConfig(), 9)
    gain = np.full((7, state.num_vehicles), -100.0)
    out = associate(state, gain)
    assert np.all(out.serving == 0)


def test_associate_idempotent(rng):
    state = deploy(HighwayConfig(), 9)
    gain = rng.normal(-100.0, 10.0, size=(7, state.num_vehicles))
    once = associate(state, gain)
    twice = associate(once, gain)
    assert np.array_equal(once.serving, twice.serving)


def test_associate_without_shadowing_picks_nearest():
    state = deploy(HighwayConfig(), 4)
    from v2xsim.channel import large_scale_gain_db
    gain = large_scale_gain_db(state.distances_m())
    out = associate(state, gain)
    assert np.array_equal(out.serving, np.argmin(state.distances_m(), axis=0))


def test_distances_use_torus_metric():
    cfg = HighwayConfig()
    state = deploy(cfg, 2)
    d = state.distances_m()
    # no distance can exceed half the road length plus the lateral reach
    assert d.max() <= np.hypot(cfg.road_length / 2, 47.0 + 12.0)
