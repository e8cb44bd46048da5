"""Heuristic value tests, including an independent relaxation oracle."""
import itertools

import pytest

from invplan import pddl
from invplan.heuristics import (GoalCount, HAdd, HeuristicConfigError,
                                Manhattan, MazeDistance, evaluate_heuristic)

from conftest import grid_problem


def relaxed_fixed_point_oracle(dom, objects, state, goal):
    """Independent dynamic-programming fixed point over relaxed ground atoms.

    Bellman-Ford over atoms: rounds of full relaxation until no cost
    improves, with the action set enumerated on the fly (not shared with the
    implementation's precomputed table).
    """
    inf = float("inf")
    atoms = {}
    for a in state.facts:
        atoms[a] = 0
    for _ in range(200):  # more rounds than any plausible atom depth
        changed = False
        for schema in dom.operators:
            pools = [pddl.objects_of_type(dom, objects, t)
                     for _, t in schema.params]
            for args in itertools.product(*pools):
                ga = pddl.ground_action(dom, schema, args)
                cost = 1
                ok = True
                for c in ga.precond:
                    if isinstance(c, pddl.Lit) and c.positive:
                        pre = (c.pred,) + c.args
                        if atoms.get(pre, inf) == inf:
                            ok = False
                            break
                        cost += atoms[pre]
                if not ok:
                    continue
                for lit in ga.effects.adds:
                    atom = (lit.pred,) + lit.args
                    if cost < atoms.get(atom, inf):
                        atoms[atom] = cost
                        changed = True
        if not changed:
            break
    total = 0
    for c in goal.literals:
        if isinstance(c, pddl.Lit) and c.positive:
            total += atoms.get((c.pred,) + c.args, inf)
    return total


class TestManhattan:
    def test_coordinate_goal(self):
        prob = grid_problem(start=(1, 1), goal=(4, 5))
        h = Manhattan()
        assert evaluate_heuristic(h, prob.init, prob.goals[0]) == 7

    def test_missing_position_fluents(self):
        h = Manhattan()
        s = pddl.State(set(), {})
        g = pddl.GoalSpec((pddl.Lit("has", ("gem1",)),), "g")
        with pytest.raises(HeuristicConfigError):
            evaluate_heuristic(h, s, g)

    def test_zero_on_satisfied(self):
        prob = grid_problem(start=(4, 5), goal=(4, 5))
        assert evaluate_heuristic(Manhattan(), prob.init, prob.goals[0]) == 0


class TestGoalCount:
    def test_counts_unsatisfied(self):
        s = pddl.State({("p", "a"), ("p", "b")}, {})
        g = pddl.GoalSpec(tuple(pddl.Lit("p", (x,)) for x in "abcde"), "g")
        assert GoalCount().evaluate(s, g) == 3


class TestHAdd:
    def test_three_block_tower_matches_oracle(self, bw_bundle):
        dom = bw_bundle.domain
        objects = {"a": "block", "b": "block", "c": "block"}
        atoms = [("ontable", x) for x in "abc"]
        atoms += [("clear", x) for x in "abc"]
        atoms.append(("handempty",))
        s = pddl.State(atoms, {})
        goal = pddl.GoalSpec(
            (pddl.Lit("on", ("a", "b")), pddl.Lit("on", ("b", "c"))), "abc")
        h = HAdd(dom, objects)
        expected = relaxed_fixed_point_oracle(dom, objects, s, goal)
        assert h.evaluate(s, goal) == expected
        assert expected > 0

    def test_matches_oracle_across_block_states(self, bw_bundle):
        dom = bw_bundle.domain
        objects = {"a": "block", "b": "block", "c": "block"}
        h = HAdd(dom, objects)
        states = [
            pddl.State([("ontable", "a"), ("on", "b", "a"), ("clear", "b"),
                        ("ontable", "c"), ("clear", "c"), ("handempty",)], {}),
            pddl.State([("holding", "a"), ("ontable", "b"), ("clear", "b"),
                        ("ontable", "c"), ("clear", "c")], {}),
        ]
        goals = [
            pddl.GoalSpec((pddl.Lit("on", ("a", "b")),), "g1"),
            pddl.GoalSpec((pddl.Lit("on", ("c", "a")),
                           pddl.Lit("ontable", ("a",))), "g2"),
        ]
        for s in states:
            for g in goals:
                assert h.evaluate(s, g) == relaxed_fixed_point_oracle(
                    dom, objects, s, g)

    def test_unreachable_goal_is_infinite(self, intrusion_bundle):
        dom = intrusion_bundle.domain
        objects = {"srv01": "host"}
        s = pddl.State(set(), {})
        # vandalizing a host that does not exist in the object set
        g = pddl.GoalSpec((pddl.Lit("vandalized", ("srv99",)),), "nope")
        h = HAdd(dom, objects)
        assert h.evaluate(s, g) == float("inf")

    def test_intrusion_chain_cost(self, intrusion_bundle):
        prob = intrusion_bundle.problems["problem-1"]
        h = HAdd(intrusion_bundle.domain, prob.objects)
        g = pddl.GoalSpec((pddl.Lit("vandalized", ("srv01",)),), "v1")
        # recon (1) + break-into (2) + vandalize (3)
        assert h.evaluate(prob.init, g) == 3


class TestMazeDistance:
    def test_ignores_doors(self, dkg_bundle):
        prob = dkg_bundle.problems["backtrack"]
        h = MazeDistance.for_problem(prob)
        blue = next(g for g in prob.goals if g.label == "blue")
        v = evaluate_heuristic(h, prob.init, blue)
        # through-the-doors path distance from (1,1) to (7,7): walls block,
        # doors do not
        assert v < float("inf")
        manhattan = evaluate_heuristic(Manhattan(), prob.init, blue)
        assert v >= manhattan

    def test_walls_still_block(self):
        # target behind a full wall: infinite maze distance
        prob = grid_problem(walls=[(2, y) for y in range(1, 6)],
                            start=(1, 1), goal=(4, 5))
        h = MazeDistance(width=5, height=5,
                         walls=[(2, y) for y in range(1, 6)],
                         targets={"goal": (4, 5)})
        assert h.evaluate(prob.init, prob.goals[0]) == float("inf")


def test_nonnegative_and_zero_on_goal(dkg_bundle):
    prob = dkg_bundle.problems["maze-1"]
    h = dkg_bundle.heuristic(prob)
    for g in prob.goals:
        assert evaluate_heuristic(h, prob.init, g) >= 0
