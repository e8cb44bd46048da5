"""Search heuristics: manhattan, maze distance, goal count, additive relaxation.

All heuristics return non-negative values, 0 on satisfied goals (enforced by
:func:`evaluate_heuristic`), and ``inf`` when they can prove the goal
unreachable.
"""
from __future__ import annotations

import itertools
from collections import deque

from . import pddl
from .pddl import Cmp, FluentRef, Lit, ObjEq


class HeuristicConfigError(Exception):
    pass


class Heuristic:
    kind = "abstract"

    def evaluate(self, state, goal):
        raise NotImplementedError


def evaluate_heuristic(h: Heuristic, s, g) -> float:
    """Non-negative goal-distance estimate; exact 0 on satisfied goals."""
    if pddl.satisfies(s, g):
        return 0.0
    v = float(h.evaluate(s, g))
    if v < 0:
        raise HeuristicConfigError(f"{h.kind} produced negative estimate {v}")
    return v


def default_locate(state, goal, at_pred="at"):
    """Waypoints for a goal in a fluent-position gridworld.

    Understands two goal shapes: ``(has <item>)`` whose item sits at an
    ``(at <item> x y)`` fact, and explicit ``(= (xpos) k) / (= (ypos) m)``
    coordinate constraints.
    """
    waypoints = []
    tx = ty = None
    for lit in goal.literals:
        if isinstance(lit, Lit) and lit.positive and len(lit.args) == 1:
            item = lit.args[0]
            for atom in state.facts:
                if atom[0] == at_pred and len(atom) == 4 and atom[1] == item:
                    waypoints.append((atom[2], atom[3]))
                    break
        elif isinstance(lit, Cmp) and lit.op == "=":
            ref, val = lit.lhs, lit.rhs
            if isinstance(ref, int):
                ref, val = val, ref
            if isinstance(ref, FluentRef) and isinstance(val, int):
                if ref.name == "xpos":
                    tx = val
                elif ref.name == "ypos":
                    ty = val
    if tx is not None or ty is not None:
        x = tx if tx is not None else 0
        y = ty if ty is not None else 0
        waypoints.append((x, y))
    return waypoints


class Manhattan(Heuristic):
    """Leg-summed manhattan distance through ``locate``'s waypoints."""

    kind = "manhattan"

    def __init__(self, x_fluent="xpos", y_fluent="ypos", locate=None):
        self.x_fluent = (x_fluent,)
        self.y_fluent = (y_fluent,)
        self.locate = locate or default_locate

    def evaluate(self, state, goal):
        try:
            x = state.fluents[self.x_fluent]
            y = state.fluents[self.y_fluent]
        except KeyError:
            raise HeuristicConfigError(
                "manhattan heuristic requires position fluents "
                f"{self.x_fluent[0]}/{self.y_fluent[0]}") from None
        total = 0
        for wx, wy in self.locate(state, goal):
            total += abs(wx - x) + abs(wy - y)
            x, y = wx, wy
        return total


class MazeDistance(Heuristic):
    """Breadth-first grid distance to the goal target, ignoring doors.

    Walls block; door cells are treated as passable.  Distance fields are
    computed once per goal label from the target's initial position.
    """

    kind = "maze"

    def __init__(self, width, height, walls, targets,
                 x_fluent="xpos", y_fluent="ypos"):
        self.width = width
        self.height = height
        self.walls = frozenset(walls)
        self.targets = dict(targets)  # goal label -> (x, y)
        self.x_fluent = (x_fluent,)
        self.y_fluent = (y_fluent,)
        self._fields = {}

    @classmethod
    def for_problem(cls, problem, wall_pred="wall", at_pred="at", **kw):
        init = problem.init
        width = init.fluents.get(("width",), 0)
        height = init.fluents.get(("height",), 0)
        walls = {(a[1], a[2]) for a in init.facts if a[0] == wall_pred}
        targets = {}
        for g in problem.goals:
            for lit in g.literals:
                if isinstance(lit, Lit) and lit.positive and len(lit.args) == 1:
                    item = lit.args[0]
                    for atom in init.facts:
                        if atom[0] == at_pred and len(atom) == 4 \
                                and atom[1] == item:
                            targets[g.label] = (atom[2], atom[3])
        return cls(width, height, walls, targets, **kw)

    def _field(self, label):
        fld = self._fields.get(label)
        if fld is None:
            fld = {}
            tx, ty = self.targets[label]
            q = deque([(tx, ty)])
            fld[(tx, ty)] = 0
            while q:
                x, y = q.popleft()
                d = fld[(x, y)]
                for nx, ny in ((x + 1, y), (x - 1, y), (x, y + 1), (x, y - 1)):
                    if not (1 <= nx <= self.width and 1 <= ny <= self.height):
                        continue
                    if (nx, ny) in self.walls or (nx, ny) in fld:
                        continue
                    fld[(nx, ny)] = d + 1
                    q.append((nx, ny))
            self._fields[label] = fld
        return fld

    def evaluate(self, state, goal):
        if goal.label not in self.targets:
            raise HeuristicConfigError(
                f"maze heuristic has no target for goal '{goal.label}'")
        x = state.fluents[self.x_fluent]
        y = state.fluents[self.y_fluent]
        return self._field(goal.label).get((x, y), float("inf"))


class GoalCount(Heuristic):
    """Number of goal conjuncts not yet satisfied."""

    kind = "goal_count"

    def evaluate(self, state, goal):
        return sum(1 for c in goal.literals if not pddl.eval_cond_item(c, state))


class HAdd(Heuristic):
    """Additive delete-relaxation estimate over ground atoms.

    Atom cost is the minimum over achieving actions of one plus the summed
    cost of the action's positive preconditions; goal conjunctions are
    summed.  Negative preconditions and negative goal literals cost nothing
    under the relaxation.  Requires a fluent-free STRIPS domain.
    """

    kind = "hadd"

    def __init__(self, dom, objects):
        self.dom = dom
        self.objects = dict(objects)
        self._table = self._build_table()
        self._cache = {}

    def _build_table(self):
        table = []
        for schema in self.dom.operators:
            for args in itertools.product(
                    *[pddl.objects_of_type(self.dom, self.objects, t)
                      for _, t in schema.params]):
                ga = pddl.ground_action(self.dom, schema, args)
                pres = []
                static_false = False
                for c in ga.precond:
                    if isinstance(c, Lit):
                        if any(not isinstance(a, str) for a in c.args):
                            raise HeuristicConfigError(
                                "hadd requires fluent-free preconditions")
                        if c.positive:
                            pres.append((c.pred,) + c.args)
                    elif isinstance(c, ObjEq):
                        if (c.a == c.b) != c.positive:
                            static_false = True
                            break
                    else:
                        raise HeuristicConfigError(
                            "hadd does not support numeric preconditions")
                if static_false:
                    continue
                adds = []
                for l in ga.effects.adds:
                    if any(not isinstance(a, str) for a in l.args):
                        raise HeuristicConfigError(
                            "hadd requires fluent-free effects")
                    adds.append((l.pred,) + l.args)
                if adds:
                    table.append((tuple(pres), tuple(adds)))
        return table

    def _atom_costs(self, state):
        inf = float("inf")
        cost = {a: 0 for a in state.facts}
        changed = True
        while changed:
            changed = False
            for pres, adds in self._table:
                total = 1
                for p in pres:
                    c = cost.get(p, inf)
                    if c == inf:
                        total = inf
                        break
                    total += c
                if total == inf:
                    continue
                for a in adds:
                    if total < cost.get(a, inf):
                        cost[a] = total
                        changed = True
        return cost

    def evaluate(self, state, goal):
        key = (state.key(), goal.literals)
        v = self._cache.get(key)
        if v is None:
            cost = self._atom_costs(state)
            v = 0.0
            for c in goal.literals:
                if isinstance(c, Lit):
                    if c.positive:
                        v += cost.get((c.pred,) + c.args, float("inf"))
                elif isinstance(c, ObjEq):
                    if (c.a == c.b) != c.positive:
                        v = float("inf")
                else:
                    raise HeuristicConfigError(
                        "hadd does not support numeric goal conditions")
                if v == float("inf"):
                    break
            self._cache[key] = v
        return v


HEURISTIC_KINDS = ("manhattan", "maze", "goal_count", "hadd")


def make_heuristic(kind, dom, problem):
    """Default-configured heuristic of the given kind for a problem."""
    if kind == "manhattan":
        return Manhattan()
    if kind == "maze":
        return MazeDistance.for_problem(problem)
    if kind == "goal_count":
        return GoalCount()
    if kind == "hadd":
        return HAdd(dom, problem.objects)
    raise HeuristicConfigError(f"unknown heuristic kind '{kind}'")
