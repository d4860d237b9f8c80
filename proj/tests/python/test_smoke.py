import json
import os
from pathlib import Path

import numpy as np
import pytest

import ccmg

GAMES = Path(os.environ.get("CCMG_GAMES_DIR", Path(__file__).resolve().parents[2] / "games"))


def test_bundled_game_matches_file():
    from_file = ccmg.load_game(GAMES / "example2.game")
    assert from_file.digest() == ccmg.example_game(2).digest()
    assert from_file.num_players == 2
    assert from_file.mode == "common"
    assert all(check["passed"] for check in ccmg.validate(from_file)["checks"])


def test_game_round_trips_through_json():
    game = ccmg.load_game(GAMES / "two_state.game")
    again = ccmg.parse_game(json.loads(game.to_json()))
    assert again.digest() == game.digest()
    assert again.state_names == ["low", "high"]


def test_occupancy_of_normal_form_policy():
    game = ccmg.example_game(1)
    probs = [0.5, 1 / 3, 0.0, 1 / 6]
    d = ccmg.occupancy(game, probs)
    assert d.shape == (1, 1, 4)
    np.testing.assert_allclose(d[0, 0], probs, atol=1e-15)


def test_occupancy_sums_to_one_per_stage():
    game = ccmg.load_game(GAMES / "two_state.game")
    policy = np.full((game.horizon, game.num_states, game.num_joint_actions),
                     1 / game.num_joint_actions)
    d = ccmg.occupancy(game, policy)
    np.testing.assert_allclose(d.sum(axis=(1, 2)), np.ones(game.horizon), atol=1e-12)


def test_verify_reports_the_known_gap():
    cert = ccmg.verify(ccmg.example_game(1), {"policy": ["1/2", "1/3", 0, "1/6"]})
    assert cert["verdict"] == "not_CE"
    gaps = [p["gap"] for p in cert["players"]]
    assert max(gaps) == pytest.approx(0.5, abs=1e-9)


def test_uniform_is_an_equilibrium_of_the_common_example():
    cert = ccmg.verify(ccmg.example_game(2), [0.25] * 4)
    assert cert["verdict"] == "constrained_CE"


def test_find_returns_a_rechecked_equilibrium():
    result = ccmg.find(ccmg.load_game(GAMES / "two_state.game"), seed=7)
    assert result["trace"]["converged"]
    assert result["recheck_verdict"] == "constrained_CE"


def test_find_rejects_playerwise_games():
    with pytest.raises(ccmg.ModeError):
        ccmg.find(ccmg.example_game(1))


def test_malformed_input_raises_value_errors():
    with pytest.raises(ValueError):
        ccmg.parse_game("{")
    with pytest.raises(ccmg.ParseError):
        ccmg.verify(ccmg.example_game(1), [0.5, 0.5, 0.5])


def test_slater_modes_on_the_common_example():
    game = ccmg.example_game(2)
    strong = ccmg.slater(game, mode="strong", samples=5, seed=3)
    weak = ccmg.slater(game, mode="weak", samples=5, seed=3)
    # The feasible set is a single point, so no strictly feasible deviation exists.
    assert strong["tested"] == 10 and len(strong["failures"]) == 10
    assert weak["tested"] == 10 and weak["failures"] == []


def test_reproduce_is_deterministic_and_green():
    first = ccmg.reproduce(seed=11)
    assert first == ccmg.reproduce(seed=11)
    assert all(check["passed"] for check in first["checks"])


def test_equivalence_suite_passes():
    report = ccmg.equivalence(ccmg.load_game(GAMES / "two_state.game"), samples=3, seed=5)
    assert all(check["passed"] for check in report["checks"])


def test_solve_lp():
    sol = ccmg.solve_lp([1, 1], [([1, 2], "<=", 4), ([3, 1], "<=", 6)])
    assert sol["status"] == "optimal"
    assert sol["objective"] == pytest.approx(2.8, abs=1e-12)
    assert ccmg.solve_lp([1], [([1], ">=", 0)])["status"] == "unbounded"
