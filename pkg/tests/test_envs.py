"""Instance builders and file-format tests."""

import json

import numpy as np
import pytest

import termdp as td
from termdp import envs
from termdp.errors import InstanceError


class TestNonconvexToy:
    def test_transitions_copy_the_control(self):
        toy = td.build_nonconvex_toy()
        for x in range(2):
            assert toy.transitions[0][x, 1, 1] == 1.0
            assert toy.transitions[0][x, 0, 0] == 1.0

    def test_mismatch_cost_table(self):
        toy = td.build_nonconvex_toy()
        assert toy.stage_costs[0][0, 1] == 1.0
        assert toy.stage_costs[0][1, 1] == 0.0
        assert (toy.terminal_cost == 0).all()

    def test_uniform_initial_state(self):
        np.testing.assert_allclose(td.build_nonconvex_toy().initial, [0.5, 0.5])


class TestMazeDynamics:
    def test_fully_walled_cell_never_moves(self):
        spec = td.sample_maze_spec()
        mdp = td.build_maze(spec)
        # (0, 0) is isolated in the shipped maze
        assert not spec.open_directions(0)
        for a in range(5):
            assert mdp.transitions[0][0, a, 0] == 1.0

    def test_four_open_directions_inclusive_split(self):
        walls = frozenset()  # open 3x3 arena; the center has 4 open dirs
        spec = envs.MazeSpec(
            width=3, height=3, walls=walls, start=0, goal=8, horizon=5
        )
        mdp = envs.build_maze(spec)
        center = 4
        row = mdp.transitions[0][center, envs.ACTIONS.index("N")]
        assert abs(row[1] - 0.85) < 1e-15  # north takes the slip share too
        assert row[3] == 0.05 and row[5] == 0.05 and row[7] == 0.05
        assert row[center] == 0.0

    def test_exclusive_reading_flag(self):
        spec = envs.MazeSpec(
            width=3, height=3, walls=frozenset(), start=0, goal=8, horizon=5,
            intended_slip_share=False,
        )
        mdp = envs.build_maze(spec)
        row = mdp.transitions[0][4, envs.ACTIONS.index("N")]
        assert row[1] == 0.8
        assert abs(row[4] - 0.05) < 1e-15  # remainder stays put

    def test_rest_with_two_open_directions(self):
        spec = td.sample_maze_spec()
        mdp = td.build_maze(spec)
        # the start cell has exactly two open directions (east and south)
        assert sorted(spec.open_directions(spec.start)) == ["E", "S"]
        row = mdp.transitions[0][spec.start, envs.ACTIONS.index("R")]
        assert abs(row[spec.start] - 0.9) < 1e-15

    def test_rows_sum_exactly_to_one(self):
        mdp = td.build_maze(td.sample_maze_spec())
        for p in mdp.transitions[:1]:
            assert (p.sum(axis=2) == 1.0).all()

    def test_costs_and_terminal(self):
        spec = td.sample_maze_spec()
        mdp = td.build_maze(spec)
        assert (mdp.stage_costs[0][spec.goal] == 0).all()
        assert (mdp.stage_costs[0][spec.start] == 1).all()
        assert mdp.terminal_cost[spec.goal] == 0.0
        assert mdp.terminal_cost[spec.start] == 10000.0
        assert mdp.initial[spec.start] == 1.0

    def test_probability_budget_validation(self):
        with pytest.raises(InstanceError, match="exceeds 1"):
            envs.MazeSpec(
                width=3, height=3, walls=frozenset(), start=0, goal=8,
                p_intended=0.9, p_slip=0.05, horizon=3,
            )

    def test_invalid_wall_cell_named(self):
        with pytest.raises(InstanceError, match="cell 99"):
            envs.MazeSpec(
                width=3, height=3, walls=frozenset({(99, "N")}), start=0,
                goal=8, horizon=3,
            )

    def test_invalid_direction_named(self):
        with pytest.raises(InstanceError, match="cell 1.*direction"):
            envs.MazeSpec(
                width=3, height=3, walls=frozenset({(1, "Q")}), start=0,
                goal=8, horizon=3,
            )

    def test_walls_symmetrized(self):
        spec = envs.MazeSpec(
            width=3, height=3, walls=frozenset({(0, "E")}), start=0, goal=8,
            horizon=3,
        )
        assert (1, "W") in spec.walls


class TestSampleMaze:
    def test_exactly_two_routes_with_different_lengths(self):
        spec = td.sample_maze_spec()
        paths = envs.simple_paths(spec)
        assert len(paths) == 2
        assert len(paths[0]) != len(paths[1])

    def test_route_cells_share_only_endpoints(self):
        spec = td.sample_maze_spec()
        short, long_ = envs.route_cells(spec)
        shared = short & long_
        assert spec.start in shared and spec.goal in shared
        assert len(shared) == 3  # start, merge cell, goal

    def test_shipped_file_matches_builder(self):
        assert envs.load_maze_spec("instances/maze.json") == td.sample_maze_spec()


class TestInstanceIo:
    def test_round_trip_toy(self, tmp_path):
        toy = td.build_nonconvex_toy()
        path = tmp_path / "toy.json"
        envs.save_instance(toy, path)
        back = envs.load_instance(path)
        assert back.horizon == toy.horizon
        for a, b in zip(back.transitions, toy.transitions):
            assert (a == b).all()
        assert (back.initial == toy.initial).all()

    def test_stationary_shorthand_expands(self, tmp_path):
        doc = {
            "horizon": 3,
            "states": 2,
            "actions": 2,
            "transition": [[[1.0, 0.0], [0.0, 1.0]], [[1.0, 0.0], [0.0, 1.0]]],
            "stage_cost": [[0.0, 1.0], [1.0, 0.0]],
            "terminal_cost": [0.0, 0.0],
            "initial": [0.5, 0.5],
        }
        path = tmp_path / "i.json"
        path.write_text(json.dumps(doc))
        mdp = envs.load_instance(path)
        assert mdp.horizon == 3
        assert mdp.state_cards == (2, 2, 2, 2)

    def test_bad_row_sum_reports_indices(self, tmp_path):
        doc = {
            "horizon": 1,
            "transition": [[[0.5, 0.49], [0.5, 0.5]], [[0.5, 0.5], [0.5, 0.5]]],
            "stage_cost": [[0.0, 1.0], [1.0, 0.0]],
            "terminal_cost": [0.0, 0.0],
            "initial": [0.5, 0.5],
        }
        path = tmp_path / "bad.json"
        path.write_text(json.dumps(doc))
        with pytest.raises(InstanceError, match=r"\(x=0, u=0\)"):
            envs.load_instance(path)

    def test_negative_costs_accepted(self, tmp_path):
        doc = {
            "horizon": 1,
            "transition": [[[0.5, 0.5], [0.5, 0.5]], [[0.5, 0.5], [0.5, 0.5]]],
            "stage_cost": [[-2.0, 1.0], [1.0, -3.0]],
            "terminal_cost": [0.0, 0.0],
            "initial": [0.5, 0.5],
        }
        path = tmp_path / "neg.json"
        path.write_text(json.dumps(doc))
        assert envs.load_instance(path).stage_costs[0][1, 1] == -3.0

    def test_parse_error_wrapped(self, tmp_path):
        path = tmp_path / "broken.json"
        path.write_text("{not json")
        with pytest.raises(InstanceError, match="not valid JSON"):
            envs.load_instance(path)

    def test_missing_file(self, tmp_path):
        with pytest.raises(InstanceError, match="cannot read"):
            envs.load_instance(tmp_path / "nope.json")

    def test_declared_cards_must_match(self, tmp_path):
        doc = {
            "horizon": 1,
            "states": 3,
            "transition": [[[0.5, 0.5], [0.5, 0.5]], [[0.5, 0.5], [0.5, 0.5]]],
            "stage_cost": [[0.0, 1.0], [1.0, 0.0]],
            "terminal_cost": [0.0, 0.0],
            "initial": [0.5, 0.5],
        }
        path = tmp_path / "mismatch.json"
        path.write_text(json.dumps(doc))
        with pytest.raises(InstanceError, match="declared states"):
            envs.load_instance(path)

    def test_maze_spec_round_trip(self, tmp_path):
        spec = td.sample_maze_spec(horizon=20)
        path = tmp_path / "m.json"
        envs.save_maze_spec(spec, path)
        assert envs.load_maze_spec(path) == spec
