"""Parser, grounding, and transition-semantics tests."""
import itertools

import numpy as np
import pytest

from invplan import domains, pddl

from conftest import GRID_DOMAIN, grid_problem


def naive_available_actions(s, dom, objs):
    """Enumeration oracle: all typed groundings filtered by precondition."""
    out = []
    for schema in dom.operators:
        pools = [pddl.objects_of_type(dom, objs, t) for _, t in schema.params]
        for args in itertools.product(*pools):
            ga = pddl.ground_action(dom, schema, args)
            if pddl.holds(ga.precond, s):
                out.append(ga)
    return sorted(out, key=lambda a: (a.schema, a.args))


BW3_DOMAIN = None


def bw3_problem(bw_bundle):
    """Three blocks on the table, hand empty."""
    dom = bw_bundle.domain
    objects = {"a": "block", "b": "block", "c": "block"}
    atoms = [("ontable", x) for x in "abc"] + [("clear", x) for x in "abc"]
    atoms.append(("handempty",))
    goal = pddl.GoalSpec((pddl.Lit("on", ("a", "b")),), "ab")
    return pddl.ProblemDef("bw3", dom, objects, pddl.State(atoms, {}),
                           (goal,))


class TestParseDomain:
    def test_block_words_operators(self, bw_bundle):
        names = {op.name for op in bw_bundle.domain.operators}
        assert names == {"pick-up", "put-down", "stack", "unstack"}

    def test_empty_operator_list(self):
        dom = pddl.parse_domain(
            "(define (domain empty) (:requirements :strips)"
            " (:predicates (p ?x)))")
        assert dom.operators == ()

    def test_undeclared_predicate_in_effect(self):
        text = """
        (define (domain bad) (:requirements :strips)
          (:predicates (p ?x))
          (:action act :parameters (?x)
            :precondition (p ?x) :effect (q ?x)))
        """
        with pytest.raises(pddl.PddlSemanticError) as err:
            pddl.parse_domain(text)
        assert "q" in str(err.value)

    def test_syntax_error_carries_position(self):
        with pytest.raises(pddl.PddlSyntaxError) as err:
            pddl.parse_domain("(define (domain x) (:predicates (p ?x))")
        assert err.value.line >= 1 and err.value.col >= 1

    def test_unknown_requirement_rejected(self):
        with pytest.raises(pddl.PddlSemanticError):
            pddl.parse_domain(
                "(define (domain x) (:requirements :adl))")


class TestParseProblem:
    def test_dkg_three_goals(self, dkg_bundle):
        assert len(dkg_bundle.problems["maze-1"].goals) == 3

    def test_intrusion_twenty_goals(self, intrusion_bundle):
        assert len(intrusion_bundle.problems["problem-1"].goals) == 20

    def test_goal_with_unknown_object(self, bw_bundle):
        text = """
        (define (problem p) (:domain block-words)
          (:objects a - block)
          (:init (ontable a) (clear a) (handempty))
          (:goal (on a z)))
        """
        with pytest.raises(pddl.PddlSemanticError) as err:
            pddl.parse_problem(text, bw_bundle.domain)
        assert "z" in str(err.value)

    def test_goal_must_be_declared(self, bw_bundle):
        text = """
        (define (problem p) (:domain block-words)
          (:objects a - block)
          (:init (ontable a) (clear a) (handempty)))
        """
        with pytest.raises(pddl.PddlSemanticError):
            pddl.parse_problem(text, bw_bundle.domain)


class TestAvailableActions:
    def test_three_blocks_on_table(self, bw_bundle):
        prob = bw3_problem(bw_bundle)
        acts = pddl.available_actions(prob.init, bw_bundle.domain,
                                      prob.objects)
        assert [str(a) for a in acts] == [
            "(pick-up a)", "(pick-up b)", "(pick-up c)"]
        assert acts == naive_available_actions(prob.init, bw_bundle.domain,
                                               prob.objects)

    def test_no_action_applicable(self, bw_bundle):
        # nothing is clear and the hand is not empty: no operator applies
        s = pddl.State({("ontable", "a")}, {})
        acts = pddl.available_actions(s, bw_bundle.domain, {"a": "block"})
        assert acts == []

    def test_open_grid_midpoint(self):
        prob = grid_problem(start=(3, 3))
        acts = pddl.available_actions(prob.init, prob.domain, prob.objects)
        assert [str(a) for a in acts] == [
            "(down)", "(left)", "(right)", "(up)"]
        assert acts == naive_available_actions(prob.init, prob.domain,
                                               prob.objects)

    def test_matches_oracle_on_bundled_inits(self):
        for name in domains.BUNDLE_NAMES:
            bundle = domains.load_bundle(name)
            for prob in bundle.problems.values():
                got = pddl.available_actions(prob.init, bundle.domain,
                                             prob.objects)
                want = naive_available_actions(prob.init, bundle.domain,
                                               prob.objects)
                assert got == want, name


class TestApply:
    def test_stack_semantics(self, bw_bundle):
        # hand-simulated classical semantics for stack(a, b)
        dom = bw_bundle.domain
        s = pddl.State({("holding", "a"), ("clear", "b"), ("ontable", "b")},
                       {})
        a = pddl.parse_action("(stack a b)", dom,
                              {"a": "block", "b": "block"})
        nxt = pddl.apply(s, a)
        assert ("on", "a", "b") in nxt.facts
        assert ("clear", "a") in nxt.facts
        assert ("handempty",) in nxt.facts
        assert ("holding", "a") not in nxt.facts
        assert ("clear", "b") not in nxt.facts
        assert ("ontable", "b") in nxt.facts  # frame property

    def test_empty_effects_identity(self):
        dom = pddl.parse_domain("""
        (define (domain idle) (:requirements :strips)
          (:predicates (p))
          (:action wait :parameters () :precondition (p) :effect (and)))
        """)
        s = pddl.State({("p",)}, {})
        a = pddl.parse_action("(wait)", dom, {})
        assert pddl.apply(s, a) == s

    def test_failed_precondition_raises(self, bw_bundle):
        s = pddl.State({("ontable", "a"), ("clear", "a")}, {})  # no handempty
        a = pddl.parse_action("(pick-up a)", bw_bundle.domain,
                              {"a": "block"})
        with pytest.raises(pddl.PreconditionError) as err:
            pddl.apply(s, a)
        assert "handempty" in str(err.value)

    def test_input_state_unmodified(self, bw_bundle):
        prob = bw3_problem(bw_bundle)
        before = frozenset(prob.init.facts)
        a = pddl.available_actions(prob.init, bw_bundle.domain,
                                   prob.objects)[0]
        pddl.apply(prob.init, a)
        assert prob.init.facts == before


class TestSatisfies:
    def test_empty_conjunction(self):
        s = pddl.State({("p", "x")}, {})
        assert pddl.satisfies(s, pddl.GoalSpec((), "empty"))

    def test_single_literal(self):
        s = pddl.State({("has", "gem1")}, {})
        g = pddl.GoalSpec((pddl.Lit("has", ("gem1",)),), "g")
        assert pddl.satisfies(s, g)

    def test_partially_satisfied(self):
        s = pddl.State({("p", "a"), ("p", "b")}, {})
        g = pddl.GoalSpec(tuple(pddl.Lit("p", (x,))
                                for x in "abcde"), "g")
        assert not pddl.satisfies(s, g)


class TestInvariants:
    def test_apply_available_closure_and_determinism(self):
        rng = np.random.default_rng(5)
        for name in domains.BUNDLE_NAMES:
            bundle = domains.load_bundle(name)
            prob = bundle.problems[bundle.default_problem]
            s = prob.init
            for _ in range(30):
                acts = pddl.available_actions(s, bundle.domain, prob.objects)
                if not acts:
                    break
                a = acts[int(rng.integers(len(acts)))]
                n1 = pddl.apply(s, a)
                n2 = pddl.apply(s, a)
                assert n1 == n2  # determinism
                s = n1

    def test_frame_property(self, bw_bundle):
        prob = bw3_problem(bw_bundle)
        s = prob.init
        a = pddl.parse_action("(pick-up a)", bw_bundle.domain, prob.objects)
        nxt = pddl.apply(s, a)
        touched = {("ontable", "a"), ("clear", "a"), ("handempty",),
                   ("holding", "a")}
        for atom in s.facts - touched:
            assert atom in nxt.facts
        for atom in nxt.facts - touched:
            assert atom in s.facts

    def test_pretty_print_round_trip(self):
        for name in domains.BUNDLE_NAMES:
            bundle = domains.load_bundle(name)
            dom2 = pddl.parse_domain(pddl.domain_to_str(bundle.domain))
            assert dom2.name == bundle.domain.name
            assert dom2.types == bundle.domain.types
            assert dom2.predicates == bundle.domain.predicates
            assert dom2.functions == bundle.domain.functions
            assert dom2.operators == bundle.domain.operators
            for prob in bundle.problems.values():
                prob2 = pddl.parse_problem(pddl.problem_to_str(prob), dom2)
                assert prob2.objects == prob.objects
                assert prob2.init == prob.init
                assert prob2.goals == prob.goals

    def test_state_identity_order_independent(self):
        s1 = pddl.State([("p", "a"), ("q", "b")], {("f",): 3, ("g",): 4})
        s2 = pddl.State([("q", "b"), ("p", "a")], {("g",): 4, ("f",): 3})
        assert s1 == s2 and hash(s1) == hash(s2)
        assert s1.key() == s2.key()


def test_grid_domain_fixture_parses():
    dom = pddl.parse_domain(GRID_DOMAIN)
    assert {op.name for op in dom.operators} == {"up", "down", "left",
                                                 "right"}
