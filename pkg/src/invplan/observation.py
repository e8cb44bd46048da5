"""Observation noise channel: state corruption and likelihood scoring.

Boolean facts flip independently over a fixed ground-atom vocabulary (so
false atoms can be observed true), and integer fluents receive zero-mean
Gaussian perturbation, making observed fluent values real numbers.  With a
deterministic channel (flip_prob = 0, sigma = 0) the log-likelihood is 0 on
an exact match and -inf otherwise.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

from . import pddl
from .util import log_normal_pdf

NEG_INF = float("-inf")


@dataclass(frozen=True)
class NoiseModel:
    flip_prob: float = 0.0  # per boolean fact, symmetric corruption
    sigma: float = 0.0  # per integer fluent, std of the Gaussian perturbation

    def __post_init__(self):
        if not 0.0 <= self.flip_prob < 0.5:
            raise ValueError("flip_prob must be in [0, 0.5)")
        if self.sigma < 0.0:
            raise ValueError("sigma must be non-negative")


@dataclass(frozen=True)
class Observation:
    facts: frozenset
    fluents: dict  # ground fluent -> float

    def __eq__(self, other):
        return (isinstance(other, Observation) and self.facts == other.facts
                and self.fluents == other.fluents)


def atom_vocabulary(problem) -> tuple:
    """The fixed ground-atom vocabulary of a problem, sorted.

    Predicates with only object-typed parameters contribute every typed
    grounding over the problem's objects.  Predicates with numeric parameters
    (walls, cell-indexed positions) contribute exactly the ground atoms
    appearing in the initial state, which covers every atom that can become
    true in the supported domains.
    """
    dom = problem.domain
    vocab = set()
    for pname, ptypes in dom.predicates.items():
        if any(t in pddl.NUMERIC_TYPES for t in ptypes):
            vocab.update(a for a in problem.init.facts if a[0] == pname)
        else:
            pools = [pddl.objects_of_type(dom, problem.objects, t)
                     for t in ptypes]
            for combo in itertools.product(*pools):
                vocab.add((pname,) + combo)
    return tuple(sorted(vocab, key=pddl.atom_to_str))


def exact_observation(state) -> Observation:
    """The noise-free observation of a state (fluents become floats)."""
    return Observation(state.facts,
                       {k: float(v) for k, v in state.fluents.items()})


def to_state(obs: Observation) -> "pddl.State":
    """Nearest state to an observation: fluents rounded to integers."""
    return pddl.State(obs.facts,
                      {k: int(round(v)) for k, v in obs.fluents.items()})


def corrupt(s, nm: NoiseModel, rng, vocab) -> Observation:
    """Push a state through the noise channel.

    Every vocabulary atom's membership flips independently with probability
    ``flip_prob``; every fluent gains Normal(0, sigma) noise.
    """
    facts = set(s.facts)
    if nm.flip_prob > 0.0:
        flips = rng.random(len(vocab)) < nm.flip_prob
        for atom, flip in zip(vocab, flips):
            if flip:
                facts.symmetric_difference_update((atom,))
    fluents = {}
    for k in sorted(s.fluents):
        v = float(s.fluents[k])
        if nm.sigma > 0.0:
            v += nm.sigma * rng.standard_normal()
        fluents[k] = v
    return Observation(frozenset(facts), fluents)


def log_likelihood(o: Observation, s, nm: NoiseModel, vocab) -> float:
    """log P(o | s) under the channel; -inf for impossible observations."""
    mismatched = o.facts.symmetric_difference(s.facts)
    if nm.flip_prob == 0.0:
        ll = NEG_INF if mismatched else 0.0
    else:
        vocabset = vocab if isinstance(vocab, (set, frozenset)) else set(vocab)
        if any(a not in vocabset for a in mismatched):
            return NEG_INF  # differs outside the channel's vocabulary
        n_flip = len(mismatched)
        ll = (n_flip * math.log(nm.flip_prob)
              + (len(vocabset) - n_flip) * math.log1p(-nm.flip_prob))
    for k, sv in s.fluents.items():
        ov = o.fluents[k]
        if nm.sigma == 0.0:
            if ov != float(sv):
                return NEG_INF
        else:
            ll += log_normal_pdf(ov - sv, nm.sigma)
    return ll


def divergence_time(states, observations, nm: NoiseModel) -> int | None:
    """First timestep (1-based) where a state visibly mismatches its observation.

    A mismatch is any differing fact or a fluent deviation beyond two
    standard deviations (beyond zero for a deterministic channel).
    """
    thr = 2.0 * nm.sigma
    for i, (s, o) in enumerate(zip(states, observations)):
        if s.facts != o.facts:
            return i + 1
        for k, sv in s.fluents.items():
            if abs(o.fluents[k] - sv) > thr:
                return i + 1
    return None
