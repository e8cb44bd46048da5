"""Replanning-agent tests: budgets, triggers, rollouts, determinism."""
import json

import numpy as np
import pytest
from scipy import stats as sstats

from invplan import agent, pddl
from invplan.heuristics import Manhattan
from invplan.planner import astar, empty_plan

from conftest import grid_problem


def make_params(heuristic=None, r=2, q=0.95, gamma=0.1):
    return agent.AgentParams(r=r, q=q, gamma=gamma,
                             heuristic=heuristic or Manhattan())


class TestSampleBudget:
    def test_mean_matches_stated_average(self):
        rng = np.random.default_rng(1)
        draws = [agent.sample_budget(2, 0.95, rng) for _ in range(10_000)]
        assert abs(np.mean(draws) - 38.0) <= 2.0

    def test_zero_continuation(self):
        rng = np.random.default_rng(2)
        assert all(agent.sample_budget(3, 0.0, rng) == 0 for _ in range(50))

    def test_geometric_moments(self):
        rng = np.random.default_rng(3)
        draws = np.array([agent.sample_budget(1, 0.5, rng)
                          for _ in range(100_000)])
        assert abs(draws.mean() - 1.0) < 0.05
        assert abs(draws.var() - 2.0) <= 0.1

    @pytest.mark.parametrize("r,q", [(1, 0.5), (2, 0.95), (4, 0.8)])
    def test_distribution_ks(self, r, q):
        rng = np.random.default_rng(17)
        n = 10_000
        draws = np.array([agent.sample_budget(r, q, rng) for _ in range(n)])
        # closed-form CDF: successes (prob q) before the r-th failure
        grid = np.arange(0, draws.max() + 1)
        cdf = sstats.nbinom.cdf(grid, r, 1.0 - q)
        emp = np.searchsorted(np.sort(draws), grid, side="right") / n
        d = np.max(np.abs(emp - cdf))
        # KS critical value at the 0.01 level (conservative for discrete)
        assert d < 1.628 / np.sqrt(n)


class TestSampleGoal:
    def test_uniform_over_three(self, dkg_bundle):
        prob = dkg_bundle.problems["maze-1"]
        rng = np.random.default_rng(0)
        counts = {g.label: 0 for g in prob.goals}
        n = 10_000
        for _ in range(n):
            counts[agent.sample_goal(prob, rng).label] += 1
        for c in counts.values():
            assert abs(c / n - 1 / 3) <= 0.03

    def test_single_goal(self):
        prob = grid_problem()
        rng = np.random.default_rng(0)
        assert all(agent.sample_goal(prob, rng) is prob.goals[0]
                   for _ in range(20))

    def test_twenty_goals(self, intrusion_bundle):
        prob = intrusion_bundle.problems["problem-1"]
        rng = np.random.default_rng(4)
        counts = {g.label: 0 for g in prob.goals}
        n = 20_000
        for _ in range(n):
            counts[agent.sample_goal(prob, rng).label] += 1
        for c in counts.values():
            assert abs(c / n - 0.05) <= 0.02


class TestUpdatePlan:
    def test_no_replan_when_plan_predicts(self):
        prob = grid_problem(start=(1, 1), goal=(4, 5))
        params = make_params()
        plan, _ = astar(prob.init, prob.goals[0], params.heuristic,
                        prob.domain, prob.objects)
        rng = np.random.default_rng(0)
        out, stats, eta = agent.update_plan(1, prob.init, plan,
                                            prob.goals[0], params, prob, rng)
        assert out is plan  # unchanged, no planner call
        assert stats.nodes_expanded == 0 and eta is None

    def test_replan_past_horizon(self):
        prob = grid_problem(start=(1, 1), goal=(4, 5))
        params = make_params()
        rng = np.random.default_rng(1)
        out, stats, eta = agent.update_plan(
            1, prob.init, empty_plan(1), prob.goals[0], params, prob, rng)
        assert eta is not None
        assert out.step_at(1) is not None

    def test_reanchors_on_perturbed_state(self):
        prob = grid_problem(start=(1, 1), goal=(4, 5))
        params = make_params(gamma=1e-9, q=0.999999)
        rng = np.random.default_rng(2)
        plan, _, _ = agent.update_plan(1, prob.init, empty_plan(1),
                                       prob.goals[0], params, prob, rng)
        # externally perturb the state at t=2 to something off-plan
        perturbed = pddl.State(prob.init.facts,
                               {**prob.init.fluents, ("xpos",): 3,
                                ("ypos",): 3})
        assert plan.step_at(2) is None or plan.step_at(2).state != perturbed
        out, _, eta = agent.update_plan(2, perturbed, plan, prob.goals[0],
                                        params, prob, rng)
        assert eta is not None
        assert out.step_at(2).state == perturbed

    def test_zero_budget_pads_noop(self):
        prob = grid_problem(start=(1, 1), goal=(4, 5))
        rng = np.random.default_rng(3)
        plan, stats = agent.replan_with_budget(
            1, prob.init, empty_plan(1), prob.goals[0], make_params(), prob,
            0, rng)
        step = plan.step_at(1)
        assert step.action is pddl.NOOP and step.state == prob.init
        assert not plan.complete


class TestSelectAction:
    def test_lookup(self):
        prob = grid_problem(start=(1, 1), goal=(4, 5))
        plan, _ = astar(prob.init, prob.goals[0], Manhattan(), prob.domain,
                        prob.objects)
        a = agent.select_action(1, prob.init, plan)
        assert str(a) in ("(right)", "(up)")

    def test_goal_state_noop(self):
        prob = grid_problem(start=(4, 5), goal=(4, 5))
        params = make_params()
        rng = np.random.default_rng(5)
        plan, _, _ = agent.update_plan(1, prob.init, empty_plan(1),
                                       prob.goals[0], params, prob, rng)
        assert agent.select_action(1, prob.init, plan) is pddl.NOOP

    def test_mismatched_state_errors(self):
        prob = grid_problem(start=(1, 1), goal=(4, 5))
        plan, _ = astar(prob.init, prob.goals[0], Manhattan(), prob.domain,
                        prob.objects)
        other = pddl.State(prob.init.facts,
                           {**prob.init.fluents, ("xpos",): 5})
        with pytest.raises(agent.PlanInconsistencyError):
            agent.select_action(1, other, plan)


class TestSimulate:
    def test_degenerate_params_match_deterministic_search(self):
        prob = grid_problem(start=(1, 1), goal=(4, 5))
        det, _ = astar(prob.init, prob.goals[0], Manhattan(), prob.domain,
                       prob.objects)
        params = make_params(gamma=1e-9, q=0.999_999)
        trace = agent.simulate(prob, prob.goals[0], params, 50,
                               np.random.default_rng(0))
        assert [str(a) for a in trace.actions] == \
               [str(s.action) for s in det.steps]
        assert trace.stats.found_goal

    def test_t_max_one(self):
        prob = grid_problem(start=(1, 1), goal=(4, 5))
        trace = agent.simulate(prob, prob.goals[0], make_params(), 1,
                               np.random.default_rng(1))
        assert len(trace.actions) == 1
        assert len(trace.states) == 2

    def test_replay_soundness_and_budget_laziness(self, dkg_bundle):
        prob = dkg_bundle.problems["maze-1"]
        params = make_params(heuristic=dkg_bundle.heuristic(prob))
        for seed in range(5):
            trace = agent.simulate(prob, prob.goals[seed % 3], params, 40,
                                   np.random.default_rng(seed))
            trace.replay_check(prob.init)
            # planner calls happen exactly at trigger timesteps
            prev = empty_plan(1)
            for i, plan in enumerate(trace.plans):
                t = i + 1
                should = agent.needs_replan(t, trace.states[i], prev)
                assert should == (t in trace.budgets)
                prev = plan

    def test_goal_hit_rate_within_twice_optimal(self, dkg_bundle):
        prob = dkg_bundle.problems["maze-1"]
        h = dkg_bundle.heuristic(prob)
        params = make_params(heuristic=h)
        hits = 0
        runs = 100
        for seed in range(runs):
            goal = prob.goals[seed % len(prob.goals)]
            opt, _ = astar(prob.init, goal, h, prob.domain, prob.objects)
            trace = agent.simulate(prob, goal, params,
                                   2 * len(opt.steps),
                                   np.random.default_rng(1000 + seed))
            if trace.stats.found_goal:
                hits += 1
        assert hits / runs >= 0.70

    def test_seed_determinism_byte_for_byte(self, dkg_bundle):
        prob = dkg_bundle.problems["maze-1"]
        params = make_params(heuristic=dkg_bundle.heuristic(prob))
        blobs = []
        for _ in range(2):
            trace = agent.simulate(prob, prob.goals[2], params, 40,
                                   np.random.default_rng(99))
            blobs.append(json.dumps(trace.to_jsonable(), sort_keys=True))
        assert blobs[0] == blobs[1]
