"""Bundled benchmark domains, problem generators, and per-domain plumbing.

Each bundle ships a domain file plus problem files under ``data/``, a default
heuristic choice, and a state sampler used by asynchronous value iteration.
Problem generators produce fresh solvable instances of matching structure.
"""
from __future__ import annotations

from dataclasses import dataclass
from importlib import resources

from .. import pddl
from ..heuristics import GoalCount, HAdd, Manhattan, MazeDistance
from ..planner import astar

BUNDLE_NAMES = ("taxi", "doors-keys-gems", "block-words", "intrusion-detection")

_DEFAULT_HEURISTIC = {
    "taxi": "manhattan",
    "doors-keys-gems": "manhattan",
    "block-words": "hadd",
    "intrusion-detection": "hadd",
}


class GenerationError(Exception):
    pass


def _data_text(bundle, fname):
    ref = resources.files(__package__) / "data" / bundle / fname
    return ref.read_text(encoding="utf-8")


def _data_problem_names(bundle):
    ref = resources.files(__package__) / "data" / bundle
    return sorted(p.name[:-5] for p in ref.iterdir()
                  if p.name.endswith(".pddl") and p.name != "domain.pddl")


# ---------------------------------------------------------------------------
# Heuristic configuration per domain
# ---------------------------------------------------------------------------

def taxi_locate(state, goal):
    """Waypoints for a (passenger-at L) goal: via the passenger if waiting."""
    dest = goal.literals[0].args[0]
    tx = state.fluents[("locx", dest)]
    ty = state.fluents[("locy", dest)]
    if ("in-taxi",) in state.facts:
        return [(tx, ty)]
    for atom in state.facts:
        if atom[0] == "passenger-at":
            loc = atom[1]
            px = state.fluents[("locx", loc)]
            py = state.fluents[("locy", loc)]
            return [(px, py), (tx, ty)]
    return [(tx, ty)]


def make_heuristic(bundle_name, kind, dom, problem):
    """Heuristic instance configured for a bundle's domain conventions."""
    if kind == "manhattan":
        if bundle_name == "taxi":
            return Manhattan(locate=taxi_locate)
        return Manhattan()
    if kind == "maze":
        return MazeDistance.for_problem(problem)
    if kind == "goal_count":
        return GoalCount()
    if kind == "hadd":
        return HAdd(dom, problem.objects)
    raise ValueError(f"unknown heuristic kind '{kind}'")


# ---------------------------------------------------------------------------
# State samplers for asynchronous value iteration
# ---------------------------------------------------------------------------
#
# Samplers return valid states; uniformity over the reachable space is
# approximated per domain (random valid configurations).

def _taxi_sampler(problem):
    init = problem.init
    pads = sorted(problem.objects)
    width = init.fluents[("width",)]
    height = init.fluents[("height",)]

    def sample(rng):
        fluents = dict(init.fluents)
        fluents[("xpos",)] = int(rng.integers(1, width + 1))
        fluents[("ypos",)] = int(rng.integers(1, height + 1))
        choice = int(rng.integers(len(pads) + 1))
        if choice == len(pads):
            facts = {("in-taxi",)}
        else:
            facts = {("passenger-at", pads[choice])}
        return pddl.State(facts, fluents)

    return sample


def _dkg_sampler(problem):
    init = problem.init
    width = init.fluents[("width",)]
    height = init.fluents[("height",)]
    walls = {a for a in init.facts if a[0] == "wall"}
    doors = sorted(a for a in init.facts if a[0] == "door")
    items = sorted(a for a in init.facts if a[0] == "at")
    keys = [a for a in items if problem.objects.get(a[1]) == "key"]
    gems = [a for a in items if problem.objects.get(a[1]) == "gem"]
    blocked = {(a[1], a[2]) for a in walls}

    def sample(rng):
        facts = set(walls)
        for d in doors:
            if rng.random() < 0.5:
                facts.add(d)
        occupied = blocked | {(a[1], a[2]) for a in facts if a[0] == "door"}
        while True:
            x = int(rng.integers(1, width + 1))
            y = int(rng.integers(1, height + 1))
            if (x, y) not in occupied:
                break
        for a in keys:  # a key is in place, held, or already consumed
            c = int(rng.integers(3))
            if c == 0:
                facts.add(a)
            elif c == 1:
                facts.add(("has", a[1]))
        for a in gems:  # a gem is in place or held
            if rng.random() < 0.5:
                facts.add(a)
            else:
                facts.add(("has", a[1]))
        fluents = dict(init.fluents)
        fluents[("xpos",)] = x
        fluents[("ypos",)] = y
        return pddl.State(facts, fluents)

    return sample


def _block_words_sampler(problem):
    blocks = sorted(problem.objects)

    def sample(rng):
        order = [blocks[i] for i in rng.permutation(len(blocks))]
        held = None
        if rng.random() < 0.2:
            held = order.pop()
        facts = set()
        towers = []
        cur = []
        for b in order:
            cur.append(b)
            if rng.random() < 0.5:
                towers.append(cur)
                cur = []
        if cur:
            towers.append(cur)
        for tower in towers:  # listed bottom to top
            facts.add(("ontable", tower[0]))
            for below, above in zip(tower, tower[1:]):
                facts.add(("on", above, below))
            facts.add(("clear", tower[-1]))
        if held is None:
            facts.add(("handempty",))
        else:
            facts.add(("holding", held))
        return pddl.State(facts, {})

    return sample


def _intrusion_sampler(problem):
    hosts = sorted(problem.objects)

    def sample(rng):
        facts = set()
        for h in hosts:
            stage = int(rng.integers(6))
            if stage >= 1:
                facts.add(("recon-performed", h))
            if stage >= 2:
                facts.add(("breached", h))
            if stage in (3, 5):
                facts.add(("vandalized", h))
            if stage in (4, 5):
                facts.add(("data-stolen", h))
        return pddl.State(facts, {})

    return sample


_SAMPLERS = {
    "taxi": _taxi_sampler,
    "doors-keys-gems": _dkg_sampler,
    "block-words": _block_words_sampler,
    "intrusion-detection": _intrusion_sampler,
}


# ---------------------------------------------------------------------------
# Bundles
# ---------------------------------------------------------------------------

@dataclass
class DomainBundle:
    name: str
    domain_text: str
    problem_texts: dict  # problem id -> text
    domain: "pddl.DomainDef"
    problems: dict  # problem id -> ProblemDef
    default_problem: str
    default_heuristic_kind: str

    @property
    def goal_count(self):
        return len(self.problems[self.default_problem].goals)

    def heuristic(self, problem, kind=None):
        kind = kind or self.default_heuristic_kind
        return make_heuristic(self.name, kind, self.domain, problem)

    def state_sampler(self, problem):
        return _SAMPLERS[self.name](problem)


def load_bundle(name) -> DomainBundle:
    """Load and validate a bundled domain by name."""
    if name not in BUNDLE_NAMES:
        raise KeyError(f"unknown domain bundle '{name}'")
    domain_text = _data_text(name, "domain.pddl")
    dom = pddl.parse_domain(domain_text)
    texts = {}
    problems = {}
    for pid in _data_problem_names(name):
        texts[pid] = _data_text(name, pid + ".pddl")
        problems[pid] = pddl.parse_problem(texts[pid], dom)
    default = sorted(problems)[0]
    return DomainBundle(
        name=name,
        domain_text=domain_text,
        problem_texts=texts,
        domain=dom,
        problems=problems,
        default_problem=default,
        default_heuristic_kind=_DEFAULT_HEURISTIC[name],
    )


# ---------------------------------------------------------------------------
# ASCII maze helper and problem builders
# ---------------------------------------------------------------------------

GEM_CHARS = {"r": "red", "y": "yellow", "b": "blue"}


def maze_from_ascii(rows):
    """Build doors-keys-gems problem pieces from an ASCII map.

    Rows are listed top to bottom; legend: ``#`` wall, ``.`` floor, ``s``
    agent start, ``k`` key, ``d`` door, ``r/y/b`` colored gems, ``g``
    numbered gem.  Returns (objects, init_atoms, fluents, gem_labels).
    """
    height = len(rows)
    width = len(rows[0])
    if any(len(r) != width for r in rows):
        raise ValueError("ragged ascii map")
    objects = {}
    atoms = []
    gem_labels = {}  # label -> gem object
    start = None
    n_keys = 0
    n_gems = 0
    for ry, row in enumerate(rows):
        y = height - ry
        for rx, ch in enumerate(row):
            x = rx + 1
            if ch == "#":
                atoms.append(("wall", x, y))
            elif ch == "d":
                atoms.append(("door", x, y))
            elif ch == "s":
                start = (x, y)
            elif ch == "k":
                n_keys += 1
                name = f"key{n_keys}"
                objects[name] = "key"
                atoms.append(("at", name, x, y))
            elif ch in GEM_CHARS:
                label = GEM_CHARS[ch]
                name = f"gem-{label}"
                objects[name] = "gem"
                atoms.append(("at", name, x, y))
                gem_labels[label] = name
            elif ch == "g":
                n_gems += 1
                name = f"gem{n_gems}"
                objects[name] = "gem"
                atoms.append(("at", name, x, y))
                gem_labels[f"gem{n_gems}"] = name
            elif ch != ".":
                raise ValueError(f"unknown map character '{ch}'")
    if start is None:
        raise ValueError("map has no start cell 's'")
    fluents = {("xpos",): start[0], ("ypos",): start[1],
               ("width",): width, ("height",): height}
    return objects, atoms, fluents, gem_labels


def dkg_problem_from_ascii(name, rows, dom=None):
    dom = dom or pddl.parse_domain(_data_text("doors-keys-gems", "domain.pddl"))
    objects, atoms, fluents, gem_labels = maze_from_ascii(rows)
    goals = tuple(
        pddl.GoalSpec((pddl.Lit("has", (gem,)),), label)
        for label, gem in sorted(gem_labels.items())
    )
    if not goals:
        raise GenerationError("map contains no gems")
    return pddl.ProblemDef(name=name, domain=dom, objects=objects,
                           init=pddl.State(atoms, fluents), goals=goals)


def solvable(problem, heuristic=None, budget=None):
    """True iff every declared goal is reachable from the initial state."""
    h = heuristic or GoalCount()
    for g in problem.goals:
        plan, _ = astar(problem.init, g, h, problem.domain, problem.objects,
                        budget=budget)
        if not plan.complete:
            return False
    return True


# ---------------------------------------------------------------------------
# Problem generators
# ---------------------------------------------------------------------------

def _generate_dkg(rng, width=7, height=7, n_keys=2, n_doors=2, n_gems=3,
                  wall_density=0.15, max_tries=60):
    dom = pddl.parse_domain(_data_text("doors-keys-gems", "domain.pddl"))
    cells = [(x, y) for x in range(1, width + 1) for y in range(1, height + 1)]
    if len(cells) < 1 + n_keys + n_doors + n_gems + 1:
        raise GenerationError("grid too small for the requested contents")
    for _ in range(max_tries):
        walls = {c for c in cells if rng.random() < wall_density}
        free = [c for c in cells if c not in walls]
        need = 1 + n_keys + n_doors + n_gems
        if len(free) < need:
            continue
        picks = rng.choice(len(free), size=need, replace=False)
        spots = [free[i] for i in picks]
        start = spots[0]
        keys = spots[1:1 + n_keys]
        doors = spots[1 + n_keys:1 + n_keys + n_doors]
        gems = spots[1 + n_keys + n_doors:]
        atoms = [("wall", x, y) for x, y in sorted(walls)]
        atoms += [("door", x, y) for x, y in sorted(doors)]
        objects = {}
        for i, (x, y) in enumerate(keys, 1):
            objects[f"key{i}"] = "key"
            atoms.append(("at", f"key{i}", x, y))
        labels = ["red", "yellow", "blue"] + [f"gem{i}" for i in range(4, 10)]
        goals = []
        for i, (x, y) in enumerate(gems):
            label = labels[i]
            gname = f"gem-{label}" if i < 3 else label
            objects[gname] = "gem"
            atoms.append(("at", gname, x, y))
            goals.append(pddl.GoalSpec((pddl.Lit("has", (gname,)),), label))
        fluents = {("xpos",): start[0], ("ypos",): start[1],
                   ("width",): width, ("height",): height}
        prob = pddl.ProblemDef(name=f"dkg-{width}x{height}", domain=dom,
                               objects=objects,
                               init=pddl.State(atoms, fluents),
                               goals=tuple(goals))
        if solvable(prob, Manhattan()):
            return prob
    raise GenerationError("could not generate a solvable maze")


def _generate_block_words(rng, words=("draw", "ward", "wad", "raw", "dar")):
    dom = pddl.parse_domain(_data_text("block-words", "domain.pddl"))
    letters = sorted({ch for w in words for ch in w})
    for w in words:
        if len(set(w)) != len(w):
            raise GenerationError(f"word '{w}' repeats a letter")
    objects = {ch: "block" for ch in letters}
    atoms = [("ontable", ch) for ch in letters]
    atoms += [("clear", ch) for ch in letters]
    atoms.append(("handempty",))
    goals = []
    for w in words:
        lits = [pddl.Lit("clear", (w[0],))]
        for above, below in zip(w, w[1:]):
            lits.append(pddl.Lit("on", (above, below)))
        lits.append(pddl.Lit("ontable", (w[-1],)))
        goals.append(pddl.GoalSpec(tuple(lits), w))
    prob = pddl.ProblemDef(name="block-words-gen", domain=dom, objects=objects,
                           init=pddl.State(atoms, {}), goals=tuple(goals))
    if not solvable(prob, HAdd(dom, objects)):
        raise GenerationError("some goal tower is not buildable")
    return prob


def _generate_taxi(rng, width=5, height=5):
    dom = pddl.parse_domain(_data_text("taxi", "domain.pddl"))
    pads = ["red", "green", "yellow", "blue"]
    cells = [(x, y) for x in range(1, width + 1) for y in range(1, height + 1)]
    picks = rng.choice(len(cells), size=len(pads), replace=False)
    objects = {p: "loc" for p in pads}
    fluents = {("width",): width, ("height",): height}
    for pad, i in zip(pads, picks):
        fluents[("locx", pad)] = cells[i][0]
        fluents[("locy", pad)] = cells[i][1]
    fluents[("xpos",)] = int(rng.integers(1, width + 1))
    fluents[("ypos",)] = int(rng.integers(1, height + 1))
    origin = pads[int(rng.integers(len(pads)))]
    dests = [p for p in pads if p != origin]
    goals = tuple(pddl.GoalSpec((pddl.Lit("passenger-at", (p,)),), p)
                  for p in dests)
    return pddl.ProblemDef(name="taxi-gen", domain=dom, objects=objects,
                           init=pddl.State({("passenger-at", origin)}, fluents),
                           goals=goals)


def _generate_intrusion(rng, n_hosts=10, n_goals=20, min_size=2, max_size=3):
    dom = pddl.parse_domain(_data_text("intrusion-detection", "domain.pddl"))
    hosts = [f"srv{i:02d}" for i in range(1, n_hosts + 1)]
    objects = {h: "host" for h in hosts}
    attacks = ["vandalized", "data-stolen"]
    goals = []
    seen = set()
    tries = 0
    while len(goals) < n_goals:
        tries += 1
        if tries > 50 * n_goals:
            raise GenerationError("could not find enough distinct goals")
        attack = attacks[len(goals) % 2]
        size = min(int(rng.integers(min_size, max_size + 1)), n_hosts)
        members = tuple(sorted(
            hosts[i] for i in rng.choice(n_hosts, size=size, replace=False)))
        key = (attack, members)
        if key in seen:
            continue
        seen.add(key)
        lits = tuple(pddl.Lit(attack, (h,)) for h in members)
        goals.append(pddl.GoalSpec(lits, f"goal{len(goals) + 1:02d}"))
    return pddl.ProblemDef(name="intrusion-gen", domain=dom, objects=objects,
                           init=pddl.State(set(), {}), goals=tuple(goals))


def generate_problem(name, rng, **size_params) -> "pddl.ProblemDef":
    """Generate a fresh solvable instance of a bundled domain family."""
    if name == "doors-keys-gems":
        return _generate_dkg(rng, **size_params)
    if name == "block-words":
        return _generate_block_words(rng, **size_params)
    if name == "taxi":
        return _generate_taxi(rng, **size_params)
    if name == "intrusion-detection":
        return _generate_intrusion(rng, **size_params)
    raise KeyError(f"unknown domain family '{name}'")


# Hand-authored demonstration maps: a sub-optimal plan that backtracks for a
# second key, and a failed plan that spends its only key on the wrong door.
BACKTRACK_MAP = [
    "...#y#b",
    "...#.#d",
    "...#...",
    "...##d#",
    "r.k....",
    ".#####.",
    "sk.....",
]

MYOPIC_MAP = [
    "r#...#b",
    "d#...#d",
    ".....#.",
    ".....#.",
    ".d...#d",
    "#k##.#.",
    "yk#sk..",
]

# Scripted action sequences for the demonstration maps (verified to replay).
DEMO_ACTIONS = {
    "backtrack": [
        "(right)", "(pick-up key2)", "(right)", "(right)", "(right)",
        "(right)", "(right)", "(up)", "(up)", "(left)",
        "(unlock-up key2)", "(up)", "(up)", "(right)",
        "(left)", "(down)", "(down)",
        "(left)", "(left)", "(left)", "(pick-up key1)",
        "(right)", "(right)", "(right)", "(up)", "(up)", "(right)",
        "(unlock-up key1)", "(up)", "(up)", "(pick-up gem-blue)",
    ],
    "myopic": [
        "(right)", "(pick-up key3)", "(right)", "(right)", "(up)",
        "(unlock-up key3)", "(up)", "(up)", "(up)",
    ],
}
