"""Sequential inverse plan search: online goal inference by particle filtering.

Each particle carries a goal hypothesis and a simulated agent trace.  Per
observation the filter checks the effective sample size (resampling and
rejuvenating when it drops below threshold), extends every particle one
timestep through the agent model, and reweights it by the observation
likelihood.  Rejuvenation applies a mixture of two Metropolis-Hastings
kernels: a heuristic-driven goal swap and an error-driven replan of the
trace suffix.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass, field, replace

import numpy as np

from . import agent as agent_mod
from . import observation as obs_mod
from . import pddl
from .heuristics import evaluate_heuristic
from .planner import empty_plan
from .util import softmax_weights

NEG_INF = float("-inf")


class AllParticlesDeadError(Exception):
    """Every particle has -inf weight (deterministic noise model only)."""


@dataclass(frozen=True)
class RejuvenationConfig:
    enabled: bool = False
    goal_move_prob: float = 0.25  # mixture weight of the goal-swap kernel
    temperature: float = 1.0  # of the heuristic-driven goal proposal


@dataclass(frozen=True)
class SipsConfig:
    particles_per_goal: int
    agent_params: "agent_mod.AgentParams"
    noise: "obs_mod.NoiseModel"
    ess_threshold: float = 0.25
    rejuvenation: RejuvenationConfig = RejuvenationConfig()

    def __post_init__(self):
        if self.particles_per_goal < 1:
            raise ValueError("particles_per_goal must be >= 1")
        if not 0.0 < self.ess_threshold <= 1.0:
            raise ValueError("ess_threshold must be in (0, 1]")


@dataclass
class RunStats:
    nodes_expanded: int = 0
    planner_calls: int = 0
    setup_seconds: float = 0.0
    step_seconds: float = 0.0  # cumulative over steps

    def copy(self):
        return replace(self)


@dataclass
class PosteriorSnapshot:
    t: int
    probs: dict  # goal label -> probability, sums to 1
    ess: float
    stats: RunStats
    step_seconds: float = 0.0

    def top_goal(self):
        return max(sorted(self.probs), key=lambda g: self.probs[g])


@dataclass
class Particle:
    goal: "pddl.GoalSpec"
    states: list  # states[i] is the state at time i (index 0 = initial)
    actions: list  # actions[i] taken at time i (index 0 = no-op)
    plan: object
    obs_lls: list  # obs_lls[i] = log P(o_{i+1} | s_{i+1})
    log_weight: float
    rng: np.random.Generator

    def clone(self):
        return Particle(self.goal, list(self.states), list(self.actions),
                        self.plan, list(self.obs_lls), self.log_weight,
                        self.rng)


@dataclass
class ParticleSet:
    problem: "pddl.ProblemDef"
    cfg: SipsConfig
    particles: list
    rng: np.random.Generator  # master stream: resample offsets, respawns
    vocab: frozenset
    t: int = 0
    observations: list = field(default_factory=list)
    stats: RunStats = field(default_factory=RunStats)

    @property
    def k(self):
        return len(self.particles)

    def log_weights(self):
        return np.array([p.log_weight for p in self.particles])


def init(problem, cfg, rng) -> ParticleSet:
    """Stratified initialization: exactly particles_per_goal per goal."""
    streams = rng.spawn(cfg.particles_per_goal * len(problem.goals))
    particles = []
    for g in problem.goals:
        for _ in range(cfg.particles_per_goal):
            particles.append(Particle(
                goal=g,
                states=[problem.init],
                actions=[pddl.NOOP],
                plan=empty_plan(start=1),
                obs_lls=[],
                log_weight=0.0,
                rng=streams[len(particles)],
            ))
    vocab = frozenset(obs_mod.atom_vocabulary(problem))
    return ParticleSet(problem=problem, cfg=cfg, particles=particles,
                       rng=rng, vocab=vocab)


def ess(log_weights) -> float:
    """Effective sample size (sum w)^2 / sum w^2, stable in log space."""
    lw = np.asarray(log_weights, dtype=float)
    m = np.max(lw) if lw.size else NEG_INF
    if not np.isfinite(m):
        return 0.0
    w = np.exp(lw - m)
    return float(w.sum() ** 2 / np.square(w).sum())


def resample(ps: ParticleSet, rng=None) -> ParticleSet:
    """Systematic resampling in place: k preserved, weights reset uniform."""
    rng = rng or ps.rng
    lw = ps.log_weights()
    m = np.max(lw)
    if not np.isfinite(m):
        raise AllParticlesDeadError("cannot resample an all-dead particle set")
    w = np.exp(lw - m)
    w /= w.sum()
    edges = np.cumsum(w)
    edges[-1] = 1.0
    positions = (np.arange(ps.k) + rng.random()) / ps.k
    counts = np.bincount(np.searchsorted(edges, positions, side="right"),
                         minlength=ps.k)
    children = []
    for i, c in enumerate(counts[:ps.k]):
        for _ in range(int(c)):
            children.append(ps.particles[i].clone())
    streams = rng.spawn(ps.k)  # fresh, independent per-child streams
    for child, stream in zip(children, streams):
        child.log_weight = 0.0
        child.rng = stream
    ps.particles = children
    return ps


def _advance(particle, ps):
    """Extend a particle one timestep through the agent model."""
    t = len(particle.states)  # timestep being generated
    s = pddl.apply(particle.states[-1], particle.actions[-1])
    plan, stats, eta = agent_mod.update_plan(
        t, s, particle.plan, particle.goal, ps.cfg.agent_params,
        ps.problem, particle.rng)
    a = agent_mod.select_action(t, s, plan)
    particle.states.append(s)
    particle.actions.append(a)
    particle.plan = plan
    ps.stats.nodes_expanded += stats.nodes_expanded
    if eta is not None:
        ps.stats.planner_calls += 1


def _score(particle, o, ps):
    ll = obs_mod.log_likelihood(o, particle.states[-1], ps.cfg.noise, ps.vocab)
    particle.obs_lls.append(ll)
    particle.log_weight += ll


def step(ps: ParticleSet, o_t, cfg=None, rng=None) -> ParticleSet:
    """One filtering step: ESS check, then extend and reweight particles.

    The ESS check precedes extension, so resampling acts on the weights left
    by the previous observation.
    """
    cfg = cfg or ps.cfg
    if ps.t >= 1 and ess(ps.log_weights()) / ps.k < cfg.ess_threshold:
        resample(ps, rng or ps.rng)
        if cfg.rejuvenation.enabled:
            for i, p in enumerate(ps.particles):
                ps.particles[i] = rejuvenate(p, ps.observations, cfg, ps)
    for p in ps.particles:
        _advance(p, ps)
        _score(p, o_t, ps)
    ps.observations.append(o_t)
    ps.t += 1
    if not np.isfinite(np.max(ps.log_weights())):
        raise AllParticlesDeadError(
            f"all particles died at t={ps.t}; this can only happen with a "
            "deterministic noise model")
    return ps


def goal_posterior(ps: ParticleSet) -> PosteriorSnapshot:
    """Per-goal sums of normalized particle weights."""
    lw = ps.log_weights()
    m = np.max(lw)
    if not np.isfinite(m):
        raise AllParticlesDeadError("no live particles")
    w = np.exp(lw - m)
    w /= w.sum()
    probs = {g.label: 0.0 for g in ps.problem.goals}
    for p, wi in zip(ps.particles, w):
        probs[p.goal.label] += float(wi)
    return PosteriorSnapshot(t=ps.t, probs=probs, ess=ess(lw),
                             stats=ps.stats.copy())


# ---------------------------------------------------------------------------
# Rejuvenation kernels
# ---------------------------------------------------------------------------

def _resimulate(particle, goal, from_t, upto_t, ps):
    """Fresh prior rollout of the trace from ``from_t`` to ``upto_t``.

    Keeps the prefix strictly before ``from_t``; the plan is truncated so the
    agent replans at ``from_t``.  Returns a new Particle scored against the
    stored observations (weight untouched).
    """
    new = particle.clone()
    new.goal = goal
    new.states = particle.states[:from_t]
    new.actions = particle.actions[:from_t]
    new.plan = (particle.plan.truncated(from_t) if from_t > 1
                else empty_plan(start=1))
    new.obs_lls = particle.obs_lls[:from_t - 1]
    for _ in range(from_t, upto_t + 1):
        _advance(new, ps)
        _score(new, ps.observations[len(new.states) - 2], ps)
    return new


def _tstar_logits(tau, t_div, scale=2.0):
    if t_div is None:
        return np.zeros(tau)
    ts = np.arange(1, tau + 1, dtype=float)
    return -np.abs(ts - t_div) / scale


def _trace_divergence(particle, observations, nm):
    return obs_mod.divergence_time(particle.states[1:], observations, nm)


def _log_or_neginf(x):
    return math.log(x) if x > 0.0 else NEG_INF


def _diff(a, b):
    """a - b, treating (-inf) - (-inf) as 0 (moves between dead traces)."""
    if a == NEG_INF and b == NEG_INF:
        return 0.0
    return a - b


def rejuvenate(particle, observations, cfg, ps) -> Particle:
    """One Metropolis-Hastings move on a particle's goal and trace.

    With probability ``goal_move_prob`` proposes a goal picked by softmax of
    negated heuristic distance from the last observation and resimulates the
    whole trace from the prior; otherwise picks a timestep near the first
    divergence between hypothesized states and observations and resimulates
    the suffix from the prior.  Acceptance uses the observation-likelihood
    ratio times the proposal correction; a rejected proposal returns the
    input particle unchanged.
    """
    tau = len(observations)
    if tau < 1:
        return particle
    rng = particle.rng
    goals = ps.problem.goals
    h = cfg.agent_params.heuristic
    if rng.random() < cfg.rejuvenation.goal_move_prob:
        # goal move: propose goals close in heuristic distance to o_tau
        anchor = obs_mod.to_state(observations[-1])
        dists = np.array([evaluate_heuristic(h, anchor, g) for g in goals])
        probs = softmax_weights(-dists / cfg.rejuvenation.temperature)
        gi = int(rng.choice(len(goals), p=probs))
        cur_gi = next(i for i, g in enumerate(goals)
                      if g.label == particle.goal.label)
        proposal = _resimulate(particle, goals[gi], 1, tau, ps)
        log_alpha = (
            _diff(sum(proposal.obs_lls), sum(particle.obs_lls))
            + _log_or_neginf(probs[cur_gi]) - _log_or_neginf(probs[gi])
        )
    else:
        # replanning move: resimulate the suffix from near the divergence
        nm = cfg.noise
        qt = softmax_weights(
            _tstar_logits(tau, _trace_divergence(particle, observations, nm)))
        tstar = int(rng.choice(tau, p=qt)) + 1
        proposal = _resimulate(particle, particle.goal, tstar, tau, ps)
        qt_new = softmax_weights(
            _tstar_logits(tau, _trace_divergence(proposal, observations, nm)))
        log_alpha = (
            _diff(sum(proposal.obs_lls[tstar - 1:]),
                  sum(particle.obs_lls[tstar - 1:]))
            + _log_or_neginf(qt_new[tstar - 1])
            - _log_or_neginf(qt[tstar - 1])
        )
    if log_alpha >= 0.0 or rng.random() < math.exp(log_alpha):
        return proposal
    return particle


# ---------------------------------------------------------------------------
# Full runs
# ---------------------------------------------------------------------------

def run(problem, observations, cfg, rng) -> list:
    """Filter a full observation sequence; one posterior snapshot per step."""
    if isinstance(rng, (int, np.integer)):
        rng = np.random.default_rng(rng)
    t0 = time.perf_counter()
    ps = init(problem, cfg, rng)
    ps.stats.setup_seconds = time.perf_counter() - t0
    snapshots = []
    for o in observations:
        t1 = time.perf_counter()
        step(ps, o)
        dt = time.perf_counter() - t1
        ps.stats.step_seconds += dt
        snap = goal_posterior(ps)
        snap.step_seconds = dt
        snapshots.append(snap)
    return snapshots
