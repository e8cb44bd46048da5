"""Deterministic A* and its stochastic, budget-limited variant.

Both searches use unit action costs and duplicate detection keyed on the
canonical state identity.  The stochastic variant replaces the priority-queue
pop with a draw from the whole open list, picking node ``s`` with probability
proportional to ``exp(-f(s)/gamma)``; on budget exhaustion it returns the path
to the most recently selected node.
"""
from __future__ import annotations

import heapq
from dataclasses import dataclass
from typing import NamedTuple, Optional

import numpy as np

from . import pddl
from .heuristics import evaluate_heuristic
from .util import softmax_weights

GAMMA_DETERMINISTIC = 1e-8  # below this, softmax selection degenerates to argmin


class PlanStep(NamedTuple):
    state: "pddl.State"  # the state the action is taken in
    action: "pddl.GroundAction"


@dataclass(frozen=True)
class PartialPlan:
    """Timestep-indexed action sequence with per-step expected states.

    ``steps[i]`` belongs to timestep ``start + i``; ``goal_state`` is the
    state expected after the final action.  ``complete`` is True iff that
    state satisfies the goal the plan was produced for.
    """

    start: int
    steps: tuple
    goal_state: Optional["pddl.State"]
    complete: bool

    @property
    def end(self):
        return self.start + len(self.steps) - 1

    def covers(self, t):
        return self.start <= t <= self.end

    def step_at(self, t):
        if not self.covers(t):
            return None
        return self.steps[t - self.start]

    def actions(self):
        return [st.action for st in self.steps]

    def truncated(self, t):
        """Steps strictly before timestep ``t``; drops the completion flag."""
        if t > self.end:
            return self
        kept = self.steps[: max(0, t - self.start)]
        tail = kept[-1].state if kept else None
        return PartialPlan(self.start, kept, tail, False)

    def extended(self, other):
        """Concatenation with a plan that starts right after ``self`` ends."""
        if not self.steps:
            return other
        assert other.start == self.end + 1, "plans must be contiguous"
        return PartialPlan(self.start, self.steps + other.steps,
                           other.goal_state, other.complete)


def empty_plan(start=1):
    return PartialPlan(start, (), None, False)


@dataclass
class SearchStats:
    nodes_expanded: int = 0
    budget: Optional[int] = None  # None means unlimited
    found_goal: bool = False


class _Node(NamedTuple):
    state: "pddl.State"
    g: int
    parent: Optional["_Node"]
    action: Optional["pddl.GroundAction"]


def _reconstruct(node, start_time):
    rev = []
    while node.action is not None:
        rev.append((node.parent.state, node.action))
        node = node.parent
    steps = tuple(PlanStep(s, a) for s, a in reversed(rev))
    return steps


def astar(s0, g, h, dom, objs, budget=None, start_time=1):
    """Cost-optimal search (admissible ``h``) with deterministic tie-breaks.

    Ties on f are broken FIFO, and successors are generated in lexicographic
    action order, so results are reproducible.  With a finite budget the
    search stops after ``budget`` expansions and returns the path to the best
    frontier node by f, flagged incomplete.
    """
    stats = SearchStats(budget=budget)
    root = _Node(s0, 0, None, None)
    seq = 0
    h0 = evaluate_heuristic(h, s0, g)
    open_heap = [(h0, seq, root)]
    best_g = {s0.key(): 0}

    def finish(node, complete):
        steps = _reconstruct(node, start_time)
        stats.found_goal = complete
        return (
            PartialPlan(start_time, steps, node.state, complete),
            stats,
        )

    last_best = root
    while open_heap:
        f, _, node = open_heap[0]
        if node.g > best_g.get(node.state.key(), -1):
            heapq.heappop(open_heap)  # stale entry
            continue
        if pddl.satisfies(node.state, g):
            return finish(node, True)
        if budget is not None and stats.nodes_expanded >= budget:
            return finish(node, False)  # best frontier node by f
        heapq.heappop(open_heap)
        stats.nodes_expanded += 1
        last_best = node
        for a in pddl.available_actions(node.state, dom, objs):
            succ = pddl.apply(node.state, a)
            g2 = node.g + 1
            key = succ.key()
            if g2 >= best_g.get(key, float("inf")):
                continue
            best_g[key] = g2
            child = _Node(succ, g2, node, a)
            seq += 1
            fh = evaluate_heuristic(h, succ, g)
            if fh == float("inf"):
                continue
            heapq.heappush(open_heap, (g2 + fh, seq, child))
    return finish(last_best, False)  # search space exhausted, goal unreachable


def softmax_pick(f_values, gamma, rng):
    """Index drawn with probability proportional to exp(-f/gamma).

    Below GAMMA_DETERMINISTIC the draw collapses to the argmin (first entry
    on ties, matching A*'s FIFO rule when entries are in insertion order).
    """
    f = np.asarray(f_values, dtype=float)
    if gamma < GAMMA_DETERMINISTIC:
        return int(np.argmin(f))
    return int(rng.choice(len(f), p=softmax_weights(-f / gamma)))


def probabilistic_astar(s0, g, h, gamma, eta, rng, dom, objs, start_time=1):
    """Stochastic search: each step expands an open node sampled by softmax.

    ``eta`` caps the number of expansions (None for unlimited); on exhaustion
    the path to the most recently selected node is returned, incomplete.
    Fully reproducible from ``rng``.
    """
    if gamma <= 0:
        raise ValueError("gamma must be positive")
    stats = SearchStats(budget=eta)
    root = _Node(s0, 0, None, None)
    h0 = evaluate_heuristic(h, s0, g)
    # open list: key -> [f, seq, node]; insertion order tracked for FIFO ties
    open_list = {s0.key(): [h0, 0, root]}
    closed = {}
    seq = 0
    last_selected = root

    def finish(node, complete):
        steps = _reconstruct(node, start_time)
        stats.found_goal = complete
        return PartialPlan(start_time, steps, node.state, complete), stats

    while open_list:
        if eta is not None and stats.nodes_expanded >= eta:
            return finish(last_selected, False)
        entries = sorted(open_list.values(), key=lambda e: e[1])  # by seq
        pick = softmax_pick([e[0] for e in entries], gamma, rng)
        f, _, node = entries[pick]
        if pddl.satisfies(node.state, g):
            return finish(node, True)
        del open_list[node.state.key()]
        closed[node.state.key()] = node.g
        last_selected = node
        stats.nodes_expanded += 1
        for a in pddl.available_actions(node.state, dom, objs):
            succ = pddl.apply(node.state, a)
            g2 = node.g + 1
            key = succ.key()
            if key in closed and closed[key] <= g2:
                continue
            cur = open_list.get(key)
            if cur is not None and cur[2].g <= g2:
                continue
            if key in closed:
                del closed[key]  # reopen on strictly lower path cost
            fh = evaluate_heuristic(h, succ, g)
            if fh == float("inf"):
                continue
            seq += 1
            open_list[key] = [g2 + fh, seq, _Node(succ, g2, node, a)]
    return finish(last_selected, False)
