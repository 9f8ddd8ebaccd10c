"""Evolutionary search over source intensities and send probabilities.

Candidates live in the unit cube. Per user there are six genes: ``mu``, the
decoy intensity as a fraction of its admissible range below ``mu``, and four
logits whose softmax gives ``(p_mu, p_nu, p_o, p_ohat)``. Decoding therefore
always yields ``mu > nu > 0`` and a normalized simplex, and blend crossover
cannot leave the feasible parameter set.

With a symmetric channel and identical per-user ranges both users share one
gene vector.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import poisson

from asyncmdi.channel import SourceConfig
from asyncmdi.exceptions import ParameterError
from asyncmdi.keyrate import KeyRateResult, evaluate, evaluate_sources

GENES_PER_USER = 6
_TOURNAMENT = 3
_BLX_ALPHA = 0.5
_MUTATION_RATE = 0.2
_MUTATION_SD = 0.08
_ELITES = 2


def abort_probability(varsigma, Lambda: int):
    """Probability that a Poisson(``varsigma``) case-2 count exceeds ``Lambda``."""
    if np.any(np.asarray(varsigma) < 0):
        raise ParameterError("expected case-2 count must be nonnegative")
    if int(Lambda) != Lambda or Lambda < 0:
        raise ParameterError("Lambda must be a nonnegative integer")
    out = poisson.sf(int(Lambda), varsigma)
    return float(out) if np.ndim(out) == 0 else out


def _pair(bounds, name: str, lo_min: float = 0.0):
    lo, hi = float(bounds[0]), float(bounds[1])
    if not lo_min < lo <= hi <= 1:
        raise ParameterError(f"{name} bounds must satisfy 0 < lo <= hi <= 1")
    return lo, hi


@dataclass(frozen=True)
class SearchSpace:
    """Search ranges, budget and seed.

    ``logit_lo``/``logit_hi`` may be scalars (shared by all four states) or
    length-4 sequences; equal values pin the corresponding logit, so a
    space built by :meth:`point` contains exactly one candidate.
    """

    mu_a: tuple[float, float] = (0.02, 1.0)
    nu_a: tuple[float, float] = (0.001, 0.5)
    mu_b: tuple[float, float] = (0.02, 1.0)
    nu_b: tuple[float, float] = (0.001, 0.5)
    logit_lo: object = -6.0
    logit_hi: object = 6.0
    seed: int = 0
    population: int = 64
    generations: int = 200
    repair_tries: int = 5

    def __post_init__(self):
        for name in ("mu_a", "nu_a", "mu_b", "nu_b"):
            _pair(getattr(self, name), name)
        for mu, nu in ((self.mu_a, self.nu_a), (self.mu_b, self.nu_b)):
            if nu[0] >= 0.999 * mu[0]:
                raise ParameterError("lowest decoy intensity must lie below the lowest signal intensity")
        lo, hi = self.logits()
        if np.any(lo > hi):
            raise ParameterError("logit bounds must satisfy lo <= hi")
        if np.all(np.isneginf(hi)):
            raise ParameterError("at least one state must have nonzero probability")
        if self.population < 4 or self.generations < 1 or self.repair_tries < 0:
            raise ParameterError("population >= 4, generations >= 1, repair_tries >= 0 required")

    def logits(self):
        lo = np.broadcast_to(np.asarray(self.logit_lo, dtype=float), (4,))
        hi = np.broadcast_to(np.asarray(self.logit_hi, dtype=float), (4,))
        return lo, hi

    @property
    def same_ranges(self) -> bool:
        return self.mu_a == self.mu_b and self.nu_a == self.nu_b

    @classmethod
    def point(cls, src_a: SourceConfig, src_b: SourceConfig, **kw) -> SearchSpace:
        """Space containing only the given sources (probabilities via their logs)."""
        a, b = src_a.as_dict(), src_b.as_dict()
        if [a[k] for k in ("p_mu", "p_nu", "p_o", "p_ohat")] != [b[k] for k in ("p_mu", "p_nu", "p_o", "p_ohat")]:
            raise ParameterError("a point space needs equal send probabilities for both users")
        with np.errstate(divide="ignore"):
            logp = np.log([a["p_mu"], a["p_nu"], a["p_o"], a["p_ohat"]])
        return cls(mu_a=(a["mu"], a["mu"]), nu_a=(a["nu"], a["nu"]), mu_b=(b["mu"], b["mu"]),
                   nu_b=(b["nu"], b["nu"]), logit_lo=tuple(logp), logit_hi=tuple(logp), **kw)


@dataclass
class OptimizeResult:
    """Best candidate found and its full evaluation."""

    source_a: SourceConfig
    source_b: SourceConfig
    result: KeyRateResult
    genes: np.ndarray
    history: list[float] = field(default_factory=list)
    evaluations: int = 0

    def __iter__(self):
        yield (self.source_a, self.source_b)
        yield self.result


def _span(lo, hi, g):
    lo, hi = np.asarray(lo, dtype=float), np.asarray(hi, dtype=float)
    with np.errstate(invalid="ignore"):
        return np.where(hi == lo, lo, lo + g * (hi - lo))


def _decode_user(g: np.ndarray, mu_b, nu_b, lo, hi):
    mu = _span(mu_b[0], mu_b[1], g[:, 0])
    nu_top = np.maximum(np.minimum(nu_b[1], 0.999 * mu), nu_b[0])
    nu = _span(nu_b[0], nu_top, g[:, 1])
    logits = _span(lo, hi, g[:, 2:6])
    logits = logits - np.max(logits, axis=1, keepdims=True)
    w = np.exp(logits)
    p = w / np.sum(w, axis=1, keepdims=True)
    return SourceConfig(mu, nu, p[:, 0], p[:, 1], p[:, 2], p[:, 3])


def decode(genes: np.ndarray, space: SearchSpace, shared: bool):
    """Map a ``(P, G)`` gene matrix to array-valued sources for both users."""
    genes = np.atleast_2d(genes)
    lo, hi = space.logits()
    a = _decode_user(genes[:, :GENES_PER_USER], space.mu_a, space.nu_a, lo, hi)
    if shared:
        b = _decode_user(genes[:, :GENES_PER_USER], space.mu_b, space.nu_b, lo, hi)
    else:
        b = _decode_user(genes[:, GENES_PER_USER:], space.mu_b, space.nu_b, lo, hi)
    return a, b


def _scalar_source(src: SourceConfig, i: int) -> SourceConfig:
    vals = [float(np.asarray(getattr(src, k))[i]) for k in ("mu", "nu", "p_mu", "p_nu", "p_o", "p_ohat")]
    return SourceConfig(*vals)


class _Fitness:
    def __init__(self, scenario, space: SearchSpace, shared: bool):
        self.scenario, self.space, self.shared = scenario, space, shared
        self.short = scenario.matching.mode == "short"
        self.count = 0

    def __call__(self, genes: np.ndarray):
        s = self.scenario
        a, b = decode(genes, self.space, self.shared)
        with np.errstate(all="ignore"):
            raw = evaluate_sources(a, b, s.channel, s.matching, s.drift, s.security, s.N,
                                   symmetric=self.shared)
        self.count += len(genes)
        fit = np.asarray(raw["ell"], dtype=float) / s.N
        ok = np.isfinite(fit)
        if self.short:
            ok &= np.asarray(raw["Nbar_c2"]) <= 1.0
        return np.where(ok, fit, -np.inf), ok


def _repair(genes, fitness: _Fitness, rng: np.random.Generator, tries: int):
    fit, ok = fitness(genes)
    for _ in range(tries):
        bad = ~ok
        if not bad.any():
            break
        genes[bad] = rng.random((int(bad.sum()), genes.shape[1]))
        f2, ok2 = fitness(genes[bad])
        fit[bad], ok[bad] = f2, ok2
    return genes, fit


def _tournament(fit, rng, n):
    idx = rng.integers(0, len(fit), size=(n, _TOURNAMENT))
    return idx[np.arange(n), np.argmax(fit[idx], axis=1)]


def optimize(scenario, space: SearchSpace, warm_start: np.ndarray | None = None) -> OptimizeResult:
    """Maximize the key rate of ``scenario`` over ``space``.

    Deterministic for a fixed ``space.seed``. In short-window mode every
    candidate with expected case-2 count above one is resampled up to
    ``space.repair_tries`` times and otherwise discarded, so the returned
    candidate always satisfies the constraint when any evaluated one did.

    Args:
        scenario: Base configuration; its sources are ignored.
        space: Search ranges and budget.
        warm_start: Optional gene vector (e.g. the optimum at the previous
            distance) inserted into the initial population.
    """
    ch = scenario.channel
    shared = ch.l_a == ch.l_b and space.same_ranges
    n_genes = GENES_PER_USER * (1 if shared else 2)
    rng = np.random.default_rng(space.seed)
    fitness = _Fitness(scenario, space, shared)

    pop = rng.random((space.population, n_genes))
    if warm_start is not None:
        warm = np.asarray(warm_start, dtype=float).ravel()
        if warm.size == n_genes:
            pop[0] = np.clip(warm, 0.0, 1.0)
        elif warm.size == 2 * GENES_PER_USER and shared:
            pop[0] = np.clip(warm[:GENES_PER_USER], 0.0, 1.0)
        elif warm.size == GENES_PER_USER:
            pop[0] = np.clip(np.tile(warm, n_genes // GENES_PER_USER), 0.0, 1.0)
    pop, fit = _repair(pop, fitness, rng, space.repair_tries)
    best_i = int(np.argmax(fit))
    best_g, best_f = pop[best_i].copy(), fit[best_i]
    history = [float(best_f)]

    n_child = space.population - _ELITES
    for _ in range(space.generations):
        order = np.argsort(-fit, kind="stable")
        elites = pop[order[:_ELITES]]
        p1 = pop[_tournament(fit, rng, n_child)]
        p2 = pop[_tournament(fit, rng, n_child)]
        lo, hi = np.minimum(p1, p2), np.maximum(p1, p2)
        ext = _BLX_ALPHA * (hi - lo)
        child = rng.uniform(lo - ext, hi + ext)
        mask = rng.random(child.shape) < _MUTATION_RATE
        child = child + mask * rng.normal(0.0, _MUTATION_SD, child.shape)
        child = np.clip(child, 0.0, 1.0)
        child, child_fit = _repair(child, fitness, rng, space.repair_tries)
        pop = np.vstack([elites, child])
        fit = np.concatenate([fit[order[:_ELITES]], child_fit])
        i = int(np.argmax(fit))
        if fit[i] > best_f:
            best_g, best_f = pop[i].copy(), fit[i]
        history.append(float(best_f))

    a, b = decode(best_g[None, :], space, shared)
    src_a, src_b = _scalar_source(a, 0), _scalar_source(b, 0)
    result = evaluate(scenario.with_sources(src_a, src_b))
    result.diagnostics["optimizer_best_fitness"] = float(best_f)
    result.diagnostics["optimizer_constraint_met"] = bool(math.isfinite(best_f))
    if not math.isfinite(best_f):
        result.feasible = False
    return OptimizeResult(src_a, src_b, result, best_g, history, fitness.count)
