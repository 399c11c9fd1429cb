"""Symbol alphabets as spike-time templates.

A template is one spike per channel at an integer offset in ``[0, D)``
relative to the start of its slot. Symbols are small integers; ids 0-2 are
reserved for the start symbol and the SAME/DIFF answer tokens.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .substrate import SpikeEvent

START = 0
SAME = 1
DIFF = 2
RESERVED = (START, SAME, DIFF)
# control tokens never appear as rule conditions
CONTROL = (SAME, DIFF)


class AlphabetInfeasible(ValueError):
    pass


class CodecError(ValueError):
    pass


def distance(a: Sequence[int], b: Sequence[int], eps: int) -> int:
    """Number of channels whose offsets differ by more than ``eps``."""
    if len(a) != len(b):
        raise CodecError(f"template width mismatch: {len(a)} vs {len(b)}")
    return sum(1 for x, y in zip(a, b) if abs(x - y) > eps)


def shift_overlap(a: Sequence[int], b: Sequence[int], width: int) -> int:
    """Largest number of per-channel differences ``b - a`` inside any window of ``width``.

    A delay-line detector tuned to ``a`` sees ``b`` as a coincidence of this
    many arrivals, whatever the absolute timing.
    """
    d = sorted(y - x for x, y in zip(a, b))
    best, lo = 0, 0
    for hi in range(len(d)):
        while d[hi] - d[lo] > width:
            lo += 1
        best = max(best, hi - lo + 1)
    return best


@dataclass(frozen=True)
class Alphabet:
    W: int
    D: int
    eps: int
    templates: dict[int, tuple[int, ...]] = field(default_factory=dict)
    d_min: int = 1

    def __post_init__(self):
        for sym, t in self.templates.items():
            if len(t) != self.W:
                raise CodecError(f"symbol {sym}: template has {len(t)} channels, W={self.W}")
            if any(o < 0 or o >= self.D for o in t):
                raise CodecError(f"symbol {sym}: offset outside [0, {self.D})")

    def __contains__(self, sym):
        return sym in self.templates

    def __len__(self):
        return len(self.templates)

    def __getitem__(self, sym) -> tuple[int, ...]:
        try:
            return self.templates[sym]
        except KeyError:
            raise CodecError(f"unknown symbol {sym!r}") from None

    @property
    def symbols(self) -> list[int]:
        return sorted(self.templates)

    def terminals(self) -> list[int]:
        return [s for s in self.symbols if s not in RESERVED]

    def to_dict(self) -> dict:
        return {
            "W": self.W,
            "D": self.D,
            "eps": self.eps,
            "templates": {str(s): list(self.templates[s]) for s in self.symbols},
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Alphabet":
        templates = {int(k): tuple(int(o) for o in v) for k, v in d["templates"].items()}
        return cls(W=int(d["W"]), D=int(d["D"]), eps=int(d["eps"]), templates=templates)

    def save(self, path) -> None:
        with open(path, "w") as f:
            json.dump(self.to_dict(), f, indent=2, sort_keys=True)
            f.write("\n")

    @classmethod
    def load(cls, path) -> "Alphabet":
        with open(path) as f:
            return cls.from_dict(json.load(f))


def compatible(a, b, eps: int, d_min: int, m_max: int = 0) -> bool:
    """Pairwise separation rules that ``make_alphabet`` enforces.

    - ``d_min`` channels differ by more than ``2*eps``, so jitter up to
      ``eps`` never brings one template within ``eps`` of another there;
    - at least one channel differs by more than ``4*eps``, so a jittered
      equality comparison cannot call two different symbols equal;
    - fewer than ``W - m_max`` channel differences fit in a ``4*eps`` window,
      so a delay-line detector for one symbol never fires on the other.
    """
    W = len(a)
    return (
        distance(a, b, 2 * eps) >= d_min
        and distance(a, b, 4 * eps) >= 1
        and shift_overlap(a, b, 4 * eps) < W - m_max
    )


def make_alphabet(
    n: int,
    W: int = 8,
    D: int = 50,
    d_min: int = 4,
    seed: int = 0,
    eps: int = 3,
    m_max: int = 0,
    max_attempts: int = 10_000,
) -> Alphabet:
    """Sample ``n`` templates with uniform offsets, rejecting incompatible draws.

    Symbols are numbered ``0 .. n-1``. Raises :class:`AlphabetInfeasible`
    once ``max_attempts`` draws in total have been rejected.
    """
    if n < 1 or W < 1 or D < 2:
        raise CodecError(f"need n >= 1, W >= 1, D >= 2 (got n={n}, W={W}, D={D})")
    if d_min < 1:
        raise CodecError("d_min must be >= 1")
    rng = np.random.default_rng(seed)
    accepted: list[tuple[int, ...]] = []
    attempts = 0
    while len(accepted) < n:
        cand = tuple(int(x) for x in rng.integers(0, D, size=W))
        if all(compatible(t, cand, eps, d_min, m_max) for t in accepted):
            accepted.append(cand)
            continue
        attempts += 1
        if attempts >= max_attempts:
            raise AlphabetInfeasible(
                f"alphabet infeasible: placed {len(accepted)}/{n} templates "
                f"(W={W}, D={D}, d_min={d_min}, eps={eps}) after {attempts} attempts"
            )
    return Alphabet(W=W, D=D, eps=eps, templates=dict(enumerate(accepted)), d_min=d_min)


def encode(alphabet: Alphabet, symbol: int, base_time: int, channel_neurons: Sequence[int]) -> list[SpikeEvent]:
    tmpl = alphabet[symbol]
    if len(channel_neurons) != alphabet.W:
        raise CodecError(f"expected {alphabet.W} channel neurons, got {len(channel_neurons)}")
    return sorted(SpikeEvent(base_time + o, n) for o, n in zip(tmpl, channel_neurons))


def observed_offsets(events: Iterable[SpikeEvent], base_time: int, channels: Sequence[int]) -> list[list[int]]:
    index = {n: c for c, n in enumerate(channels)}
    obs: list[list[int]] = [[] for _ in channels]
    for ev in events:
        c = index.get(ev.neuron)
        if c is not None:
            obs[c].append(ev.time - base_time)
    return obs


def match_token(
    events: Iterable[SpikeEvent],
    alphabet: Alphabet,
    eps: int | None = None,
    m_max: int = 0,
    base_time: int = 0,
    channels: Sequence[int] | None = None,
) -> tuple[int, int] | None:
    """Nearest-template decoding of one slot.

    A channel matches a template when any spike on it lies within ``eps`` of
    the template offset. Returns ``(symbol, mismatches)`` for the unique best
    template with at most ``m_max`` mismatches, or None when nothing
    qualifies or the best score is tied.
    """
    eps = alphabet.eps if eps is None else eps
    channels = list(range(alphabet.W)) if channels is None else list(channels)
    obs = observed_offsets(events, base_time, channels)
    if not any(obs):
        return None
    scores = []
    for sym in alphabet.symbols:
        tmpl = alphabet.templates[sym]
        mm = sum(1 for c, o in enumerate(tmpl) if not any(abs(x - o) <= eps for x in obs[c]))
        scores.append((mm, sym))
    scores.sort()
    best_mm, best_sym = scores[0]
    if best_mm > m_max:
        return None
    if len(scores) > 1 and scores[1][0] == best_mm:
        return None
    return best_sym, best_mm


@dataclass(frozen=True)
class NoiseModel:
    jitter_max: int = 0
    p_delete: float = 0.0
    p_insert: float = 0.0

    def __post_init__(self):
        if self.jitter_max < 0:
            raise CodecError("jitter_max must be >= 0")
        for name in ("p_delete", "p_insert"):
            p = getattr(self, name)
            if not 0.0 <= p <= 1.0:
                raise CodecError(f"{name} must be in [0, 1], got {p}")

    @property
    def silent(self) -> bool:
        return self.jitter_max == 0 and self.p_delete == 0 and self.p_insert == 0


def perturb(
    events: Iterable[SpikeEvent],
    noise: NoiseModel,
    rng: np.random.Generator,
    windows: Sequence[tuple[int, int]] | None = None,
    channels: Sequence[int] | None = None,
) -> list[SpikeEvent]:
    """Jitter, delete and insert spikes.

    ``windows`` are ``[start, stop)`` slot windows; a jittered spike is
    clipped back into the window that held it. Spurious spikes are added
    per ``(window, channel)`` pair and need both ``windows`` and
    ``channels``.
    """
    events = sorted(events)
    if noise.silent:
        return events
    windows = list(windows or [])
    out = []
    for ev in events:
        t = ev.time
        if noise.jitter_max:
            t += int(rng.integers(-noise.jitter_max, noise.jitter_max + 1))
            for lo, hi in windows:
                if lo <= ev.time < hi:
                    t = min(max(t, lo), hi - 1)
                    break
        if noise.p_delete and rng.random() < noise.p_delete:
            continue
        out.append(SpikeEvent(t, ev.neuron))
    if noise.p_insert and channels:
        for lo, hi in windows:
            for n in channels:
                if rng.random() < noise.p_insert:
                    out.append(SpikeEvent(int(rng.integers(lo, hi)), n))
    return sorted(out)
