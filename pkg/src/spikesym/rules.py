"""Abstract rewrite rules and the symbolic reference engine.

A rule rewrites one condition token into 1-3 action tokens, optionally only
when a context token stands immediately left of it (``left_adjacent``) or
anywhere earlier in the sentence (``anywhere_before``). Which of the
eligible ``(position, rule)`` pairs fires is decided by a
:class:`DecisionStream`, so any engine that reports the same eligible set
makes the same choice.
"""

from __future__ import annotations

import bisect
import json
from dataclasses import dataclass, field
from typing import Iterable, Protocol, Sequence

import numpy as np

from .codec import CONTROL, START

LEFT_ADJACENT = "left_adjacent"
ANYWHERE_BEFORE = "anywhere_before"
RELATIONS = (LEFT_ADJACENT, ANYWHERE_BEFORE)
MAX_ACTION = 3


class RuleError(ValueError):
    pass


@dataclass(frozen=True)
class AbstractRule:
    cond: int
    action: tuple[int, ...]
    p: float = 1.0
    ctx: int | None = None
    rel: str | None = None

    def __post_init__(self):
        object.__setattr__(self, "action", tuple(self.action))
        if not 1 <= len(self.action) <= MAX_ACTION:
            raise RuleError(f"action must have 1..{MAX_ACTION} tokens, got {self.action}")
        if not 0.0 < self.p <= 1.0:
            raise RuleError(f"p must be in (0, 1], got {self.p}")
        if self.cond in CONTROL:
            raise RuleError(f"condition {self.cond} is a reserved control symbol")
        if (self.ctx is None) != (self.rel is None):
            raise RuleError("context symbol and relation must be given together")
        if self.rel is not None and self.rel not in RELATIONS:
            raise RuleError(f"unknown relation {self.rel!r}")

    @property
    def symbols(self) -> set[int]:
        s = {self.cond, *self.action}
        if self.ctx is not None:
            s.add(self.ctx)
        return s

    def context_ok(self, sentence: Sequence[int], pos: int) -> bool:
        if self.ctx is None:
            return True
        if self.rel == LEFT_ADJACENT:
            return pos > 0 and sentence[pos - 1] == self.ctx
        return self.ctx in sentence[:pos]

    def to_dict(self) -> dict:
        d = {"cond": self.cond, "action": list(self.action), "p": self.p}
        if self.ctx is not None:
            d["ctx"] = {"sym": self.ctx, "rel": self.rel}
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "AbstractRule":
        unknown = set(d) - {"cond", "action", "p", "ctx"}
        if unknown:
            raise RuleError(f"unknown rule keys {sorted(unknown)}")
        ctx = d.get("ctx")
        return cls(
            cond=int(d["cond"]),
            action=tuple(int(a) for a in d["action"]),
            p=float(d.get("p", 1.0)),
            ctx=None if ctx is None else int(ctx["sym"]),
            rel=None if ctx is None else ctx["rel"],
        )

    def __str__(self):
        s = f"{self.cond}->{''.join(map(str, self.action))}"
        if self.ctx is not None:
            s += f" | {self.ctx} {self.rel}"
        return f"{s} (p={self.p:g})"


@dataclass(frozen=True)
class RuleSet:
    rules: tuple[AbstractRule, ...] = ()
    start: int = START
    terminals: frozenset[int] = field(default_factory=frozenset)

    def __post_init__(self):
        object.__setattr__(self, "rules", tuple(self.rules))
        object.__setattr__(self, "terminals", frozenset(self.terminals))
        if self.start in self.terminals:
            raise RuleError("the start symbol cannot be a terminal")

    def __len__(self):
        return len(self.rules)

    def __iter__(self):
        return iter(self.rules)

    def __getitem__(self, i) -> AbstractRule:
        return self.rules[i]

    @property
    def symbols(self) -> set[int]:
        s = {self.start, *self.terminals}
        for r in self.rules:
            s |= r.symbols
        return s

    def all_terminal(self, sentence: Sequence[int]) -> bool:
        return all(t in self.terminals for t in sentence)

    def replace(self, rules: Iterable[AbstractRule]) -> "RuleSet":
        return RuleSet(tuple(rules), self.start, self.terminals)

    def to_dict(self) -> dict:
        return {
            "start": self.start,
            "terminals": sorted(self.terminals),
            "rules": [r.to_dict() for r in self.rules],
        }

    @classmethod
    def from_dict(cls, d) -> "RuleSet":
        if isinstance(d, list):
            d = {"rules": d}
        unknown = set(d) - {"start", "terminals", "rules"}
        if unknown:
            raise RuleError(f"unknown ruleset keys {sorted(unknown)}")
        rules = tuple(AbstractRule.from_dict(r) for r in d.get("rules", []))
        start = int(d.get("start", START))
        if "terminals" in d:
            terminals = frozenset(int(t) for t in d["terminals"])
        else:
            terminals = frozenset(s for r in rules for s in r.symbols if s != start)
        return cls(rules, start, terminals)

    def save(self, path) -> None:
        with open(path, "w") as f:
            json.dump(self.to_dict(), f, indent=2, sort_keys=True)
            f.write("\n")

    @classmethod
    def load(cls, path) -> "RuleSet":
        with open(path) as f:
            return cls.from_dict(json.load(f))


class StreamExhausted(RuntimeError):
    pass


class DecisionStream:
    """Uniform draws in [0, 1) from a seed, or replayed from a recorded list."""

    def __init__(self, seed: int | None = None, values: Sequence[float] | None = None):
        if (seed is None) == (values is None):
            raise ValueError("give exactly one of seed or values")
        self._rng = None if seed is None else np.random.default_rng(seed)
        self._values = None if values is None else list(values)
        self._pos = 0
        self.drawn: list[float] = []

    @classmethod
    def replay(cls, values: Sequence[float]) -> "DecisionStream":
        return cls(values=values)

    def next(self) -> float:
        if self._values is not None:
            if self._pos >= len(self._values):
                raise StreamExhausted(f"decision stream exhausted after {self._pos} draws")
            u = float(self._values[self._pos])
            self._pos += 1
        else:
            u = float(self._rng.random())
        self.drawn.append(u)
        return u

    def to_list(self) -> list[float]:
        return list(self.drawn)


def choose(weights: Sequence[float], u: float) -> int:
    """Index picked by ``u`` from the normalized cumulative weights."""
    cum = np.cumsum(np.asarray(weights, dtype=float))
    i = bisect.bisect_right(cum.tolist(), u * cum[-1])
    return min(i, len(weights) - 1)


def rewrite(sentence: Sequence[int], pos: int, action: Sequence[int]) -> list[int]:
    return list(sentence[:pos]) + list(action) + list(sentence[pos + 1 :])


def eligible(rules: RuleSet, sentence: Sequence[int]) -> list[tuple[int, int]]:
    """All ``(position, rule index)`` pairs whose condition and context hold."""
    out = []
    for pos, tok in enumerate(sentence):
        for ri, rule in enumerate(rules):
            if rule.cond == tok and rule.context_ok(sentence, pos):
                out.append((pos, ri))
    return out


def select(
    rules: RuleSet,
    n_tokens: int,
    candidates: Sequence[tuple[int, int]],
    stream: DecisionStream,
    capacity: int,
) -> tuple[int, int] | None:
    """Draw one candidate weighted by rule probability.

    A draw whose action would overflow ``capacity`` is discarded and the
    next candidate drawn from what remains.
    """
    cands = list(candidates)
    while cands:
        k = choose([rules[ri].p for _, ri in cands], stream.next())
        pos, ri = cands[k]
        if n_tokens - 1 + len(rules[ri].action) <= capacity:
            return pos, ri
        del cands[k]
    return None


class Engine(Protocol):
    rules: RuleSet
    capacity: int

    def eligible(self, sentence: Sequence[int]) -> list[tuple[int, int]]: ...

    def rewrite(self, sentence: Sequence[int], pos: int, rule_index: int) -> list[int]: ...


class OracleEngine:
    """Pure string rewriting; the ground truth for the spiking engine."""

    def __init__(self, rules: RuleSet, capacity: int = 8):
        self.rules = rules
        self.capacity = capacity

    def eligible(self, sentence):
        return eligible(self.rules, sentence)

    def rewrite(self, sentence, pos, rule_index):
        return rewrite(sentence, pos, self.rules[rule_index].action)


def step(engine: Engine, sentence: Sequence[int], stream: DecisionStream):
    """One stochastic rewrite; returns ``(new_sentence, (rule, pos) | None)``."""
    cands = engine.eligible(sentence)
    pick = select(engine.rules, len(sentence), cands, stream, engine.capacity)
    if pick is None:
        return list(sentence), None
    pos, ri = pick
    return engine.rewrite(sentence, pos, ri), (ri, pos)


def apply_oracle(rules: RuleSet, sentence: Sequence[int], stream: DecisionStream, capacity: int = 8):
    return step(OracleEngine(rules, capacity), sentence, stream)
