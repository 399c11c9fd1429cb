"""Copy-with-mutation of rule sets, tournament selection and Price bookkeeping."""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .codec import CONTROL, Alphabet
from .grammar import LanguageSpec, generation_validity
from .rules import MAX_ACTION, AbstractRule, RuleSet

P_MIN = 1e-3


@dataclass(frozen=True)
class ErrorModel:
    mu_sub: float = 0.0
    mu_del: float = 0.0
    mu_dup: float = 0.0
    mu_p: float = 0.0
    mu_spike: float = 0.0
    jitter_max: int = 0

    def __post_init__(self):
        for name in ("mu_sub", "mu_del", "mu_dup", "mu_spike"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} must be in [0, 1], got {v}")
        if self.mu_p < 0 or self.jitter_max < 0:
            raise ValueError("mu_p and jitter_max must be >= 0")


_ids = itertools.count(1_000_000)


@dataclass
class Genome:
    rules: RuleSet
    id: int = field(default_factory=lambda: next(_ids))
    parent_id: int | None = None
    fitness: float | None = None
    templates: Alphabet | None = None

    def same_structure(self, other: "Genome") -> bool:
        return self.rules == other.rules and self.templates == other.templates


class IdSource:
    def __init__(self, start: int = 0):
        self._it = itertools.count(start)

    def __call__(self) -> int:
        return next(self._it)


def _substitute(sym, pool, rng):
    others = [s for s in pool if s != sym]
    return int(others[int(rng.integers(len(others)))]) if others else sym


def mutate_templates(alphabet: Alphabet, em: ErrorModel, rng: np.random.Generator) -> Alphabet:
    templates = {}
    for sym in alphabet.symbols:
        offs = []
        for o in alphabet.templates[sym]:
            if em.jitter_max and rng.random() < em.mu_spike:
                o = min(max(o + int(rng.integers(-em.jitter_max, em.jitter_max + 1)), 0), alphabet.D - 1)
            offs.append(o)
        templates[sym] = tuple(offs)
    return Alphabet(alphabet.W, alphabet.D, alphabet.eps, templates, alphabet.d_min)


def copy_with_mutation(
    g: Genome,
    em: ErrorModel,
    rng: np.random.Generator,
    symbols: Sequence[int] | None = None,
    r_max: int = 8,
    new_id: int | None = None,
) -> Genome:
    """Copy a genome, inferring every rule with errors.

    Each symbol is replaced by a different one from ``symbols`` with
    probability ``mu_sub``; each rule is dropped with ``mu_del`` and
    duplicated with ``mu_dup``; ``p`` is jittered by up to ``±mu_p``. The
    rule count is kept within ``[1, r_max]``.
    """
    pool = sorted(set(symbols) if symbols is not None else g.rules.symbols - set(CONTROL))
    cond_pool = [s for s in pool if s not in CONTROL]
    out, first = [], None
    for r in g.rules:
        dropped = rng.random() < em.mu_del
        cond = _substitute(r.cond, cond_pool, rng) if rng.random() < em.mu_sub else r.cond
        ctx = r.ctx
        if ctx is not None and rng.random() < em.mu_sub:
            ctx = _substitute(ctx, pool, rng)
        action = tuple(_substitute(a, pool, rng) if rng.random() < em.mu_sub else a for a in r.action)
        p = r.p
        if em.mu_p:
            p = min(max(p + float(rng.uniform(-em.mu_p, em.mu_p)), P_MIN), 1.0)
        child = AbstractRule(cond, action, p, ctx, r.rel)
        if first is None:
            first = child
        if dropped:
            continue
        out.append(child)
        if rng.random() < em.mu_dup:
            out.append(child)
    if not out and first is not None:
        out = [first]
    out = out[:r_max]
    templates = g.templates
    if templates is not None and em.mu_spike:
        templates = mutate_templates(templates, em, rng)
    return Genome(
        g.rules.replace(out),
        id=next(_ids) if new_id is None else new_id,
        parent_id=g.id,
        templates=templates,
    )


def random_rule(symbols: Sequence[int], rng: np.random.Generator, nonterminals: Sequence[int] = ()) -> AbstractRule:
    conds = list(nonterminals) or [s for s in symbols if s not in CONTROL]
    cond = int(conds[int(rng.integers(len(conds)))])
    n = int(rng.integers(1, MAX_ACTION + 1))
    action = tuple(int(symbols[int(rng.integers(len(symbols)))]) for _ in range(n))
    return AbstractRule(cond, action, 1.0)


def random_genome(
    template: RuleSet,
    symbols: Sequence[int],
    rng: np.random.Generator,
    n_rules: int = 2,
    new_id: int | None = None,
) -> Genome:
    """Random rule set sharing the start symbol and terminals of ``template``."""
    k = int(rng.integers(1, n_rules + 1))
    rules = [random_rule(symbols, rng, [template.start]) for _ in range(k)]
    return Genome(template.replace(rules), id=next(_ids) if new_id is None else new_id)


def fitness_language(
    g: Genome,
    spec: LanguageSpec,
    N: int,
    lam: float,
    seed: int,
    max_steps: int = 50,
    capacity: int = 8,
) -> float:
    return generation_validity(g.rules, spec, N, seed, max_steps, capacity) - lam * len(g.rules)


def fitness_discrimination(responder: Callable, dataset: Sequence[tuple]) -> float:
    """Fraction of ``(sentence, label)`` pairs for which ``responder`` returns the label."""
    if not dataset:
        raise ValueError("dataset is empty")
    return sum(responder(s) == label for s, label in dataset) / len(dataset)


@dataclass
class GenerationRecord:
    """Parent-generation bookkeeping for one step.

    ``w`` is realized fitness (number of offspring, elite copies included),
    ``z`` the parent trait and ``z_prime`` the mean trait of its offspring
    (equal to ``z`` when it left none).
    """

    ids: list[int]
    parent_ids: list[int | None]
    w: list[float]
    z: list[float]
    z_prime: list[float]
    fitness: list[float] = field(default_factory=list)


def price_terms(rec: GenerationRecord) -> tuple[float, float, float]:
    """``(Δz̄, selection covariance term, transmission term)``.

    Both terms are divided by mean fitness, so ``Δz̄`` equals their sum up
    to rounding.
    """
    w = np.asarray(rec.w, dtype=float)
    z = np.asarray(rec.z, dtype=float)
    zp = np.asarray(rec.z_prime, dtype=float)
    wbar = w.mean()
    if wbar == 0:
        raise ZeroDivisionError("mean fitness is zero")
    dz = (w * zp).sum() / w.sum() - z.mean()
    cov = (w * z).mean() - wbar * z.mean()
    trans = (w * (zp - z)).mean()
    return float(dz), float(cov / wbar), float(trans / wbar)


def tournament(fit: Sequence[float], k: int, rng: np.random.Generator) -> int:
    """Index of the fittest of ``k`` uniform draws; ties go to the earliest draw."""
    picks = rng.integers(0, len(fit), size=k)
    best = int(picks[0])
    for i in picks[1:]:
        if fit[int(i)] > fit[best]:
            best = int(i)
    return best


def step_generation(
    pop: list[Genome],
    k: int,
    e: int,
    em: ErrorModel,
    fitness_fn: Callable[[Genome], float],
    rng: np.random.Generator,
    symbols: Sequence[int] | None = None,
    r_max: int = 8,
    new_id: Callable[[], int] | None = None,
    trait: Callable[[Genome], float] = lambda g: len(g.rules),
) -> tuple[list[Genome], GenerationRecord]:
    n = len(pop)
    if n == 0:
        raise ValueError("population is empty")
    if not 0 <= e < n:
        raise ValueError(f"elite count must be in [0, {n}), got {e}")
    for g in pop:
        if g.fitness is None:
            g.fitness = fitness_fn(g)
    fit = [g.fitness for g in pop]
    order = sorted(range(n), key=lambda i: -fit[i])
    nxt: list[Genome] = []
    parent_of: list[int] = []
    for i in order[:e]:
        nxt.append(pop[i])
        parent_of.append(i)
    parents = [tournament(fit, k, rng) for _ in range(n - e)]
    seeds = rng.integers(0, 2**63, size=n - e)
    for pi, s in zip(parents, seeds):
        child = copy_with_mutation(
            pop[pi],
            em,
            np.random.default_rng(int(s)),
            symbols,
            r_max,
            None if new_id is None else new_id(),
        )
        child.fitness = fitness_fn(child)
        nxt.append(child)
        parent_of.append(pi)

    kids: dict[int, list[float]] = {}
    for child, pi in zip(nxt, parent_of):
        kids.setdefault(pi, []).append(trait(child))
    z = [float(trait(g)) for g in pop]
    rec = GenerationRecord(
        ids=[g.id for g in pop],
        parent_ids=[g.parent_id for g in pop],
        w=[float(len(kids.get(i, []))) for i in range(n)],
        z=z,
        z_prime=[float(np.mean(kids[i])) if i in kids else z[i] for i in range(n)],
        fitness=list(fit),
    )
    return nxt, rec
