"""Lock-step comparison of the spiking engine against the symbolic oracle."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .chain import ChainSpec
from .circuits import SpikingDivergence, SpikingEngine, audit_suppression
from .codec import Alphabet, NoiseModel
from .grammar import Step
from .rules import MAX_ACTION, AbstractRule, DecisionStream, OracleEngine, RuleSet, select
from .seeding import substream


@dataclass
class EquivalenceReport:
    equal: bool = True
    oracle_steps: list[Step] = field(default_factory=list)
    spiking_steps: list[Step] = field(default_factory=list)
    divergence: dict | None = None
    suppression_leaks: int = 0
    rewrites: int = 0

    def to_dict(self) -> dict:
        return {
            "equal": self.equal,
            "steps": len(self.oracle_steps),
            "rewrites": self.rewrites,
            "suppression_leaks": self.suppression_leaks,
            "divergence": self.divergence,
        }


def check_equivalence(
    rules: RuleSet,
    sentence: Sequence[int],
    seed: int,
    steps: int,
    alphabet: Alphabet,
    spec: ChainSpec | None = None,
    tap: int = 1,
    noise: NoiseModel | None = None,
) -> EquivalenceReport:
    """Run both engines side by side from ``sentence``.

    Each step the harness draws one choice from a shared decision stream and
    hands the same ``(position, rule)`` to both engines. Stops at the first
    divergence, when no rule applies, or after ``steps`` rewrites.
    """
    spec = spec or ChainSpec(W=alphabet.W, D=alphabet.D, eps=alphabet.eps)
    oracle = OracleEngine(rules, spec.capacity)
    spiking = SpikingEngine(
        rules, alphabet, spec, tap=tap, noise=noise, rng=substream(seed, "noise")
    )
    stream = DecisionStream(seed)
    rep = EquivalenceReport()
    s_o, s_s = list(sentence), list(sentence)

    def diverge(i, kind, **detail):
        rep.equal = False
        rep.divergence = {"step": i, "kind": kind, **detail}
        return rep

    for i in range(steps):
        el_o = oracle.eligible(s_o)
        el_s = spiking.eligible(s_s)
        if el_o != el_s:
            return diverge(i, "eligible", oracle=el_o, spiking=el_s)
        pick = select(rules, len(s_o), el_o, stream, spec.capacity)
        if pick is None:
            break
        pos, ri = pick
        new_o = oracle.rewrite(s_o, pos, ri)
        try:
            new_s = spiking.rewrite(s_s, pos, ri)
        except SpikingDivergence as exc:
            return diverge(i, "nomatch", detail=str(exc))
        rep.rewrites += 1
        rule = rules[ri]
        rep.suppression_leaks += audit_suppression(
            spiking.chain,
            alphabet,
            spiking.last_trace,
            pos * spiking.stride,
            tap,
            rule.cond,
            rule.action[0],
        )
        rep.oracle_steps.append(Step(i, tuple(s_o), ri, pos, tuple(new_o)))
        rep.spiking_steps.append(Step(i, tuple(s_s), ri, pos, tuple(new_s)))
        if new_o != new_s:
            return diverge(i, "sentence", oracle=new_o, spiking=new_s)
        s_o, s_s = new_o, new_s
    return rep


def random_case(rng: np.random.Generator, alphabet: Alphabet, max_rules=8, max_symbols=6, max_len=4):
    """A random rule set over up to ``max_symbols`` terminals plus a starting sentence."""
    pool = alphabet.terminals()[:max_symbols]
    if not pool:
        raise ValueError("alphabet has no terminal symbols")
    n_sym = int(rng.integers(1, len(pool) + 1))
    syms = [int(s) for s in rng.choice(pool, size=n_sym, replace=False)]
    rules = []
    for _ in range(int(rng.integers(1, max_rules + 1))):
        cond = int(rng.choice(syms))
        action = tuple(int(rng.choice(syms)) for _ in range(int(rng.integers(1, MAX_ACTION + 1))))
        p = float(rng.choice([1.0, 0.5, 0.25]))
        ctx = rel = None
        if rng.random() < 0.3:
            ctx = int(rng.choice(syms))
            rel = str(rng.choice(["left_adjacent", "anywhere_before"]))
        rules.append(AbstractRule(cond, action, p, ctx, rel))
    sentence = [int(rng.choice(syms)) for _ in range(int(rng.integers(1, max_len + 1)))]
    return RuleSet(tuple(rules), terminals=frozenset()), sentence
