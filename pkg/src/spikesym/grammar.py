"""Derivations from the start symbol, language checks and brute-force enumeration."""

from __future__ import annotations

import json
from collections import deque
from dataclasses import dataclass, field
from typing import Callable, Sequence

from .rules import DecisionStream, Engine, OracleEngine, RuleSet, eligible, rewrite, step
from .seeding import child_seed

NO_RULE = "no_rule"
ALL_TERMINAL = "all_terminal"
MAX_STEPS = "max_steps"


@dataclass(frozen=True)
class Step:
    index: int
    before: tuple[int, ...]
    rule: int
    position: int
    after: tuple[int, ...]

    def to_dict(self) -> dict:
        return {
            "step": self.index,
            "before": list(self.before),
            "rule": self.rule,
            "position": self.position,
            "after": list(self.after),
        }


@dataclass
class DerivationTrace:
    steps: list[Step] = field(default_factory=list)
    terminated_by: str = NO_RULE
    initial: tuple[int, ...] = ()

    @property
    def final(self) -> list[int]:
        return list(self.steps[-1].after) if self.steps else list(self.initial)

    def write_jsonl(self, path) -> None:
        """One JSON object per step, then one line naming the termination cause."""
        with open(path, "w") as f:
            for s in self.steps:
                f.write(json.dumps(s.to_dict(), sort_keys=True) + "\n")
            f.write(json.dumps({"terminated_by": self.terminated_by}) + "\n")


def derive_with(
    engine: Engine,
    stream: DecisionStream,
    max_steps: int,
    sentence: Sequence[int] | None = None,
) -> DerivationTrace:
    rules = engine.rules
    cur = [rules.start] if sentence is None else list(sentence)
    trace = DerivationTrace(initial=tuple(cur))
    while True:
        if rules.all_terminal(cur):
            trace.terminated_by = ALL_TERMINAL
            break
        if len(trace.steps) >= max_steps:
            trace.terminated_by = MAX_STEPS
            break
        nxt, applied = step(engine, cur, stream)
        if applied is None:
            trace.terminated_by = NO_RULE
            break
        ri, pos = applied
        trace.steps.append(Step(len(trace.steps), tuple(cur), ri, pos, tuple(nxt)))
        cur = nxt
    return trace


def derive(
    rules: RuleSet,
    max_steps: int,
    stream: DecisionStream,
    engine: str = "oracle",
    capacity: int = 8,
    **spiking_kw,
) -> DerivationTrace:
    """Derive from ``[S]`` with the oracle (default) or the spiking chain.

    ``engine="spiking"`` needs ``alphabet=`` among the keyword arguments;
    the rest are passed to :class:`~spikesym.circuits.SpikingEngine`.
    """
    if engine == "oracle":
        eng = OracleEngine(rules, capacity)
    elif engine == "spiking":
        from .circuits import SpikingEngine

        eng = SpikingEngine(rules, **spiking_kw)
    else:
        raise ValueError(f"unknown engine {engine!r}")
    return derive_with(eng, stream, max_steps)


# -- languages -------------------------------------------------------------------

ENUMERATED = "enumerated_set"
PATTERN_ABA = "pattern_ABA"
PATTERN_ABB = "pattern_ABB"
A_N_B_N = "a_n_b_n"
CUSTOM = "custom"

CUSTOM_PREDICATES: dict[str, Callable[[Sequence[int]], bool]] = {}


def register_predicate(name: str):
    def deco(fn):
        CUSTOM_PREDICATES[name] = fn
        return fn

    return deco


@dataclass(frozen=True)
class LanguageSpec:
    kind: str
    sentences: frozenset[tuple[int, ...]] = frozenset()
    a: int = 3
    b: int = 4
    max_n: int = 4
    tokens: frozenset[int] | None = None  # optional token class for patterns
    predicate: str | None = None

    @classmethod
    def enumerated(cls, sentences) -> "LanguageSpec":
        return cls(ENUMERATED, sentences=frozenset(tuple(s) for s in sentences))

    @classmethod
    def anbn(cls, a: int = 3, b: int = 4, max_n: int = 4) -> "LanguageSpec":
        return cls(A_N_B_N, a=a, b=b, max_n=max_n)

    def to_dict(self) -> dict:
        d = {"kind": self.kind}
        if self.kind == ENUMERATED:
            d["sentences"] = sorted(list(s) for s in self.sentences)
        elif self.kind == A_N_B_N:
            d.update(a=self.a, b=self.b, max_n=self.max_n)
        elif self.kind == CUSTOM:
            d["predicate"] = self.predicate
        if self.tokens is not None:
            d["tokens"] = sorted(self.tokens)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "LanguageSpec":
        kw = dict(d)
        if "sentences" in kw:
            kw["sentences"] = frozenset(tuple(s) for s in kw["sentences"])
        if kw.get("tokens") is not None:
            kw["tokens"] = frozenset(kw["tokens"])
        return cls(**kw)


def is_member(sentence: Sequence[int], spec: LanguageSpec) -> bool:
    s = list(sentence)
    if spec.tokens is not None and not set(s) <= spec.tokens:
        return False
    if spec.kind == ENUMERATED:
        return tuple(s) in spec.sentences
    if spec.kind == PATTERN_ABA:
        return len(s) == 3 and s[0] == s[2] and s[0] != s[1]
    if spec.kind == PATTERN_ABB:
        return len(s) == 3 and s[1] == s[2] and s[0] != s[1]
    if spec.kind == A_N_B_N:
        n = len(s) // 2
        return (
            len(s) % 2 == 0
            and 1 <= n <= spec.max_n
            and s[:n] == [spec.a] * n
            and s[n:] == [spec.b] * n
        )
    if spec.kind == CUSTOM:
        return bool(CUSTOM_PREDICATES[spec.predicate](s))
    raise ValueError(f"unknown language kind {spec.kind!r}")


@dataclass
class Enumeration:
    sentences: set[tuple[int, ...]]
    truncated: bool
    nodes: int


def enumerate_language(
    rules: RuleSet, max_len: int, max_depth: int, node_cap: int = 100_000
) -> Enumeration:
    """Breadth-first closure of all rule applications from ``[S]``.

    Collects every all-terminal sentence reachable within ``max_depth``
    rewrites without exceeding ``max_len`` tokens. Stops early and sets
    ``truncated`` once more than ``node_cap`` distinct sentences are seen.
    """
    startsent = (rules.start,)
    seen = {startsent}
    frontier = deque([(startsent, 0)])
    found: set[tuple[int, ...]] = set()
    truncated = False
    while frontier:
        sent, depth = frontier.popleft()
        if rules.all_terminal(sent):
            found.add(sent)
            continue
        if depth >= max_depth:
            continue
        for pos, ri in eligible(rules, sent):
            nxt = tuple(rewrite(sent, pos, rules[ri].action))
            if len(nxt) > max_len or nxt in seen:
                continue
            seen.add(nxt)
            if len(seen) > node_cap:
                truncated = True
                frontier.clear()
                break
            frontier.append((nxt, depth + 1))
    return Enumeration(found, truncated, len(seen))


def generation_validity(
    rules: RuleSet,
    spec: LanguageSpec,
    N: int,
    seed: int,
    max_steps: int = 50,
    capacity: int = 8,
    engine: Engine | None = None,
) -> float:
    """Fraction of ``N`` independent derivations that end in the language.

    Derivation ``i`` draws from the stream seeded by ``(seed, "derive", i)``
    whichever engine runs it (oracle unless ``engine`` is given).
    """
    if N < 1:
        raise ValueError("N must be >= 1")
    eng = OracleEngine(rules, capacity) if engine is None else engine
    ok = 0
    for i in range(N):
        tr = derive_with(eng, DecisionStream(child_seed(seed, "derive", i)), max_steps)
        ok += is_member(tr.final, spec)
    return ok / N
