import numpy as np
import pytest

from invplan import domains, pddl

GRID_DOMAIN = """
(define (domain grid)
  (:requirements :strips :typing :equality :negative-preconditions :fluents)
  (:predicates (wall ?x - integer ?y - integer))
  (:functions (xpos) (ypos) (width) (height))
  (:action down
    :parameters ()
    :precondition (and (> (ypos) 1) (not (wall (xpos) (- (ypos) 1))))
    :effect (decrease (ypos) 1))
  (:action left
    :parameters ()
    :precondition (and (> (xpos) 1) (not (wall (- (xpos) 1) (ypos))))
    :effect (decrease (xpos) 1))
  (:action right
    :parameters ()
    :precondition (and (< (xpos) (width)) (not (wall (+ (xpos) 1) (ypos))))
    :effect (increase (xpos) 1))
  (:action up
    :parameters ()
    :precondition (and (< (ypos) (height)) (not (wall (xpos) (+ (ypos) 1))))
    :effect (increase (ypos) 1))
)
"""


def grid_problem(width=5, height=5, start=(1, 1), goal=(4, 5), walls=(),
                 extra_goals=()):
    """A plain gridworld problem with coordinate-target goals."""
    dom = pddl.parse_domain(GRID_DOMAIN)
    atoms = [("wall", x, y) for x, y in walls]
    fluents = {("xpos",): start[0], ("ypos",): start[1],
               ("width",): width, ("height",): height}
    def coord_goal(label, x, y):
        return pddl.GoalSpec(
            (pddl.Cmp("=", pddl.FluentRef("xpos", ()), x),
             pddl.Cmp("=", pddl.FluentRef("ypos", ()), y)), label)
    goals = [coord_goal("goal", *goal)]
    goals += [coord_goal(f"alt{i}", *g) for i, g in enumerate(extra_goals)]
    return pddl.ProblemDef(name="grid-test", domain=dom, objects={},
                           init=pddl.State(atoms, fluents),
                           goals=tuple(goals))


def bfs_grid_distance(problem, start, target):
    """Independent shortest-path oracle on the grid graph."""
    from collections import deque
    width = problem.init.fluents[("width",)]
    height = problem.init.fluents[("height",)]
    walls = {(a[1], a[2]) for a in problem.init.facts if a[0] == "wall"}
    if start in walls or target in walls:
        return None
    dist = {start: 0}
    q = deque([start])
    while q:
        x, y = q.popleft()
        if (x, y) == target:
            return dist[(x, y)]
        for nx, ny in ((x + 1, y), (x - 1, y), (x, y + 1), (x, y - 1)):
            if 1 <= nx <= width and 1 <= ny <= height \
                    and (nx, ny) not in walls and (nx, ny) not in dist:
                dist[(nx, ny)] = dist[(x, y)] + 1
                q.append((nx, ny))
    return None


@pytest.fixture(scope="session")
def taxi_bundle():
    return domains.load_bundle("taxi")


@pytest.fixture(scope="session")
def dkg_bundle():
    return domains.load_bundle("doors-keys-gems")


@pytest.fixture(scope="session")
def bw_bundle():
    return domains.load_bundle("block-words")


@pytest.fixture(scope="session")
def intrusion_bundle():
    return domains.load_bundle("intrusion-detection")


def rng(seed=0):
    return np.random.default_rng(seed)
