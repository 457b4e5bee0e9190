import itertools

import numpy as np
import pytest
from hypothesis import given, strategies as st

from pbadvice.envs import JUMP, UP, CarState, GridConfig, GridState, grid_states
from pbadvice.mdp import ValidationError
from pbadvice.shaping import (LOOK_AHEAD, LOOK_BACK, NONE, PBRS, PotentialScheme, car_pba_potential,
                              car_pbrs_potential, grid_closer, grid_pba_potential, grid_pbrs_potential,
                              grid_potential_tables, look_ahead_bonus, look_back_bonus, pbrs_bonus)


def state_scheme(table):
    return PotentialScheme(PBRS, phi_s=lambda s: table[s])


def pair_scheme(mode, table):
    return PotentialScheme(mode, phi_sa=lambda s, a: table[s, a])


def test_scheme_fields_must_match_mode():
    with pytest.raises(ValidationError):
        PotentialScheme(PBRS)
    with pytest.raises(ValidationError):
        PotentialScheme(NONE, phi_s=lambda s: 0.0)
    with pytest.raises(ValidationError):
        PotentialScheme(LOOK_BACK, phi_s=lambda s: 0.0)
    with pytest.raises(ValidationError):
        PotentialScheme("bogus")


def test_pbrs_bonus_examples():
    const = PotentialScheme(PBRS, phi_s=lambda s: 4.2)
    assert pbrs_bonus(const, 0, 1, False, 1.0) == 0.0
    sch = state_scheme({0: 1.0, 1: 2.0})
    assert pbrs_bonus(sch, 0, 1, False, 0.99) == pytest.approx(0.98, abs=1e-15)
    assert pbrs_bonus(sch, 0, 1, True, 0.99) == -1.0
    with pytest.raises(ValidationError):
        pbrs_bonus(pair_scheme(LOOK_AHEAD, np.zeros((2, 2))), 0, 1, False, 1.0)


def test_pbrs_rejects_non_finite_potential():
    sch = PotentialScheme(PBRS, phi_s=lambda s: float("inf"))
    with pytest.raises(ValidationError):
        pbrs_bonus(sch, 0, 1, False, 1.0)


def test_look_ahead_bonus_examples():
    const = PotentialScheme(LOOK_AHEAD, phi_sa=lambda s, a: 3.0)
    assert look_ahead_bonus(const, 0, 0, 1, 1, False, 1.0) == 0.0
    table = np.array([[3.0, 0.0], [0.0, 5.0]])
    sch = pair_scheme(LOOK_AHEAD, table)
    assert look_ahead_bonus(sch, 0, 0, 1, 1, False, 0.5) == -0.5
    assert look_ahead_bonus(sch, 0, 0, 1, None, True, 0.99) == -3.0
    with pytest.raises(ValidationError):
        look_ahead_bonus(sch, 0, 0, 1, None, False, 0.99)


def test_look_back_bonus_examples():
    const = PotentialScheme(LOOK_BACK, phi_sa=lambda s, a: 3.0)
    assert look_back_bonus(const, 1, 0, 0, 0, False, 1.0) == 0.0
    table = np.array([[1.0, 0.0], [0.0, 2.0]])
    sch = pair_scheme(LOOK_BACK, table)
    assert look_back_bonus(sch, 1, 1, 0, 0, False, 0.5) == 0.0
    first = PotentialScheme(LOOK_BACK, phi_sa=lambda s, a: 4.0)
    assert look_back_bonus(first, 0, 0, None, None, True, 0.9) == 4.0
    with pytest.raises(ValidationError):
        look_back_bonus(sch, 1, 1, 0, 0, False, 0.0)


def test_look_back_three_step_sum_by_brute_force():
    # with the first-step convention the discounted sum collapses to
    # gamma^(T-1) * phi(s_{T-1}, a_{T-1}) for T steps
    rng = np.random.default_rng(0)
    for _ in range(50):
        table = rng.uniform(-5, 5, (4, 3))
        sch = pair_scheme(LOOK_BACK, table)
        gamma = float(rng.uniform(0.1, 1.0))
        pairs = [(int(rng.integers(4)), int(rng.integers(3))) for _ in range(3)]
        total = 0.0
        for t, (s, a) in enumerate(pairs):
            prev = pairs[t - 1] if t else (None, None)
            total += gamma ** t * look_back_bonus(sch, s, a, *prev, t == 0, gamma)
        assert total == pytest.approx(gamma ** 2 * table[pairs[-1]], abs=1e-12)


@given(st.lists(st.integers(0, 9), min_size=2, max_size=60), st.floats(0.1, 1.0),
       st.lists(st.floats(-100, 100), min_size=10, max_size=10))
def test_pbrs_telescopes(states, gamma, phi):
    sch = PotentialScheme(PBRS, phi_s=lambda s: phi[s], terminal_potential_zero=False)
    total = sum(gamma ** t * pbrs_bonus(sch, s, s2, False, gamma)
                for t, (s, s2) in enumerate(zip(states, states[1:])))
    T = len(states) - 1
    assert abs(total - (gamma ** T * phi[states[-1]] - phi[states[0]])) <= 1e-9


def test_grid_pbrs_potential():
    assert grid_pbrs_potential(GridState(3, 0), 0, 5) == 0
    assert grid_pbrs_potential(GridState(3, 1), 0, 5) == 0
    assert grid_pbrs_potential(GridState(3, 9), 0, 5) == 5
    with pytest.raises(ValidationError):
        grid_pbrs_potential(GridState(0, 0), 2, 2)


def test_grid_pba_mean_constraint_everywhere():
    for s in grid_states():
        mean = np.mean([grid_pba_potential(s, a) for a in range(5)])
        assert abs(mean - grid_pbrs_potential(s)) <= 1e-12


def test_grid_pba_two_closer_actions():
    cfg = GridConfig()
    # (0, 0): up and right both shorten the l1 distance; left, down, jump do not
    s = GridState(0, 0)
    assert [grid_closer(s, a, cfg) for a in range(5)] == [1, 0, 0, 1, 0]
    assert grid_pba_potential(s, UP, kappa=5.0) == pytest.approx(0 + 0.6 * 5.0)
    assert grid_pba_potential(s, JUMP, kappa=5.0) == pytest.approx(0 - 0.4 * 5.0)


def test_grid_pba_goal_adjacent_up_is_closer():
    assert grid_closer(GridState(9, 8), UP, GridConfig()) == 1


def test_jump_closer_uses_success_cell():
    cfg = GridConfig()
    assert grid_closer(GridState(4, 1), JUMP, cfg) == 1
    assert grid_closer(GridState(4, 3), JUMP, cfg) == 0


def test_observation_tables_average_aliased_cells():
    phi_s, phi_sa = grid_potential_tables()
    assert phi_s.shape == (99,) and phi_sa.shape == (99, 5)
    np.testing.assert_allclose(phi_sa.mean(axis=1), phi_s, atol=1e-12)
    from pbadvice.envs import grid_observe
    o = grid_observe(GridState(9, 8))
    expect = 0.5 * (np.array([grid_pba_potential(GridState(9, 8), a) for a in range(5)])
                    + np.array([grid_pba_potential(GridState(8, 9), a) for a in range(5)]))
    np.testing.assert_allclose(phi_sa[o], expect)


def test_car_potentials():
    assert car_pbrs_potential(CarState(-1.2, 0.0)) == pytest.approx(0.8)
    assert car_pbrs_potential(CarState(0.45, 0.0)) == pytest.approx(2.45)
    ps = np.linspace(-1.2, 0.6, 50)
    assert np.all(np.diff([car_pbrs_potential((p, 0.0)) for p in ps]) > 0)
    assert car_pba_potential(CarState(0.0, 0.01), 0.5) == 1.0
    for v in (-0.05, 0.0, 0.05):
        assert car_pba_potential(CarState(0.0, v), 0.0) == 0.0
    assert car_pba_potential(CarState(0.0, 0.02), -0.3) == 0.0


def test_bonuses_finite_on_all_grid_pairs():
    phi_s, phi_sa = grid_potential_tables()
    for s, a, s2, a2 in itertools.product(range(0, 99, 7), range(5), range(0, 99, 11), range(5)):
        sch_a = pair_scheme(LOOK_AHEAD, phi_sa)
        sch_b = pair_scheme(LOOK_BACK, phi_sa)
        assert np.isfinite(look_ahead_bonus(sch_a, s, a, s2, a2, False, 1.0))
        assert np.isfinite(look_back_bonus(sch_b, s2, a2, s, a, False, 1.0))
        assert np.isfinite(pbrs_bonus(state_scheme(phi_s), s, s2, False, 1.0))
