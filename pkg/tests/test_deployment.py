import math

import numpy as np
import pytest

from mmwuav.deployment import (
    DeploymentScene,
    EnvironmentProfile,
    LinkStateKind,
    discover,
    iterate_positioning,
    link_state,
    los_probability,
    nlos_penalty_db,
    reposition_step,
    rural_profile,
    scene_from_json,
    scene_to_json,
    urban_profile,
    utility,
)


def fig6_scene(**overrides):
    base = dict(
        uav_pos=(20.0, 0.0, 200.0),
        users=((1, (0.0, 0.0, 0.0)), (2, (120.0, 0.0, 0.0)), (3, (60.0, 150.0, 0.0))),
        env=rural_profile(2000.0),
        discovery_range_m=251.0,
        signaling_cost=0.0,
    )
    base.update(overrides)
    return DeploymentScene(**base)


class TestLosProbability:
    def test_overhead_limit(self):
        for env in (urban_profile(), rural_profile()):
            assert 1.0 - los_probability(math.pi / 2, env) < 1e-3

    def test_urban_below_rural(self):
        for deg in (5, 15, 30, 45, 60, 80):
            p_u = los_probability(math.radians(deg), urban_profile())
            p_r = los_probability(math.radians(deg), rural_profile())
            assert p_u < p_r

    def test_monotone_in_elevation(self):
        env = urban_profile()
        grid = np.linspace(0.01, math.pi / 2, 100)
        values = [los_probability(float(e), env) for e in grid]
        assert all(b > a for a, b in zip(values, values[1:]))

    def test_domain(self):
        with pytest.raises(ValueError):
            los_probability(0.0, urban_profile())
        with pytest.raises(ValueError):
            los_probability(math.pi, urban_profile())


class TestLinkState:
    def test_outage_beyond_range(self):
        scene = fig6_scene(env=rural_profile(100.0))
        rng = np.random.default_rng(0)
        assert link_state(scene, 3, rng).kind is LinkStateKind.OUTAGE

    def test_forced_los(self):
        env = EnvironmentProfile(1e-12, 1.0, 2000.0)
        scene = fig6_scene(env=env)
        rng = np.random.default_rng(1)
        for _ in range(50):
            assert link_state(scene, 1, rng).kind is LinkStateKind.LOS

    def test_nlos_orders(self):
        env = EnvironmentProfile(1e12, 1e-6, 2000.0)  # LOS probability ~ 0
        scene = fig6_scene(env=env)
        rng = np.random.default_rng(2)
        orders = set()
        for _ in range(10_000):
            state = link_state(scene, 1, rng)
            assert state.kind is LinkStateKind.NLOS
            orders.add(state.nlos_order)
        assert orders == {1, 2}


class TestNlosPenalty:
    def test_paper_reflection_coefficient(self):
        env = EnvironmentProfile(9.61, 0.16, 2000.0, reflection_amp_coeff=0.896)
        assert nlos_penalty_db(1, env) == pytest.approx(0.954, abs=1e-3)

    def test_linear_in_order(self):
        env = EnvironmentProfile(9.61, 0.16, 2000.0, reflection_amp_coeff=0.896)
        assert nlos_penalty_db(2, env) == pytest.approx(2 * nlos_penalty_db(1, env), abs=1e-12)

    def test_perfect_reflector(self):
        env = EnvironmentProfile(9.61, 0.16, 2000.0, reflection_amp_coeff=1.0)
        assert nlos_penalty_db(3, env) == 0.0

    def test_excess_per_bounce(self):
        env = EnvironmentProfile(9.61, 0.16, 2000.0, reflection_amp_coeff=1.0,
                                 nlos_excess_db_per_bounce=7.5)
        assert nlos_penalty_db(2, env) == pytest.approx(15.0)

    def test_order_validation(self):
        with pytest.raises(ValueError):
            nlos_penalty_db(0, urban_profile())


class TestDiscover:
    def test_fig6_from_start(self):
        found, slots = discover(fig6_scene())
        assert found == [1, 2]
        assert slots == 16

    def test_everyone_out_of_range(self):
        scene = fig6_scene(discovery_range_m=10.0)
        found, slots = discover(scene)
        assert found == []
        assert slots == scene.sweep_sectors

    def test_sector_count_does_not_change_found_set(self):
        a = fig6_scene(sweep_sectors=8)
        b = fig6_scene(sweep_sectors=16)
        assert discover(a)[0] == discover(b)[0]
        assert discover(b)[1] == 2 * discover(a)[1]

    def test_outage_bounds_discovery(self):
        scene = fig6_scene(env=rural_profile(210.0))
        found, _ = discover(scene)
        assert found == [1]  # user 2 inside discovery range but beyond outage

    def test_range_growth_monotone(self):
        previous = set()
        for rng_m in (100.0, 150.0, 210.0, 260.0, 400.0):
            found = set(discover(fig6_scene(discovery_range_m=rng_m))[0])
            assert previous <= found
            previous = found


class TestReposition:
    def test_two_user_midpoint(self):
        scene = fig6_scene()
        step = reposition_step(scene, [1, 2])
        assert step.moved
        assert step.position == (60.0, 0.0, 200.0)

    def test_three_user_centroid(self):
        scene = fig6_scene(uav_pos=(60.0, 0.0, 200.0))
        step = reposition_step(scene, [1, 2, 3])
        assert step.moved
        assert step.position == (60.0, 50.0, 200.0)

    def test_infinite_cost_never_moves(self):
        scene = fig6_scene(signaling_cost=math.inf)
        step = reposition_step(scene, [1, 2])
        assert not step.moved
        assert step.position == scene.uav_pos

    def test_needs_found_users(self):
        with pytest.raises(ValueError):
            reposition_step(fig6_scene(), [])


class TestIteratePositioning:
    def test_fig6_trajectory(self):
        traj = iterate_positioning(fig6_scene(), 10)
        assert [p.position for p in traj] == [
            (20.0, 0.0, 200.0),
            (60.0, 0.0, 200.0),
            (60.0, 50.0, 200.0),
        ]
        assert [p.found_ids for p in traj] == [(1, 2), (1, 2, 3), (1, 2, 3)]
        assert [p.moved for p in traj] == [True, True, False]

    def test_single_user_converges_above_it(self):
        scene = fig6_scene(users=((7, (50.0, -30.0, 0.0)),), uav_pos=(0.0, 0.0, 120.0),
                           discovery_range_m=400.0)
        traj = iterate_positioning(scene, 10)
        assert len(traj) <= 2
        final = traj[-1].position
        assert final[:2] == (50.0, -30.0)
        # hovering right above the user maximizes the utility over a grid
        best = utility(scene, final, [7])
        for dx in np.linspace(-80, 80, 9):
            for dy in np.linspace(-80, 80, 9):
                assert best >= utility(scene, (final[0] + dx, final[1] + dy, final[2]), [7]) - 1e-9

    def test_no_users_terminates_immediately(self):
        scene = fig6_scene(discovery_range_m=5.0)
        traj = iterate_positioning(scene, 10)
        assert len(traj) == 1
        assert traj[0].position == scene.uav_pos
        assert not traj[0].moved

    def test_random_scenes_utility_increases_at_moves(self):
        # discovery range covers the whole geometry so the found set never
        # shrinks; range truncation is exercised separately
        rng = np.random.default_rng(123)
        for _ in range(100):
            n_users = int(rng.integers(1, 6))
            users = tuple(
                (uid, (float(rng.uniform(-120, 120)), float(rng.uniform(-120, 120)), 0.0))
                for uid in range(n_users)
            )
            scene = DeploymentScene(
                uav_pos=(float(rng.uniform(-150, 150)), float(rng.uniform(-150, 150)), 250.0),
                users=users,
                env=rural_profile(2000.0),
                discovery_range_m=700.0,
                signaling_cost=float(rng.choice([0.0, 1e6, 1e9])),
            )
            traj = iterate_positioning(scene, 8)
            assert len(traj) <= 8
            for a, b in zip(traj, traj[1:]):
                if a.moved:
                    assert b.utility > a.utility + scene.signaling_cost

    def test_max_iters_validation(self):
        with pytest.raises(ValueError):
            iterate_positioning(fig6_scene(), 0)


class TestSceneJson:
    def test_round_trip(self):
        scene = fig6_scene(signaling_cost=math.inf, sweep_sectors=8)
        back = scene_from_json(scene_to_json(scene))
        assert back == scene

    def test_parses_minimal_scene(self):
        text = """
        {"uav": [0, 0, 100],
         "users": [{"id": 1, "pos": [10, 0, 0]}],
         "env": {"los_sigmoid_a": 4.88, "los_sigmoid_b": 0.43, "outage_range_m": 500},
         "discovery_range_m": 300}
        """
        scene = scene_from_json(text)
        assert scene.uav_pos == (0.0, 0.0, 100.0)
        assert scene.sweep_sectors == 16
        assert scene.signaling_cost == 0.0

    def test_scene_validation(self):
        with pytest.raises(ValueError):
            fig6_scene(uav_pos=(0.0, 0.0, 0.0))
        with pytest.raises(ValueError):
            fig6_scene(discovery_range_m=-5.0)
        with pytest.raises(ValueError):
            EnvironmentProfile(1.0, 1.0, 100.0, reflection_amp_coeff=1.5)
