"""Chain registers: a W x L lattice of relay neurons carrying a sentence of tokens.

Token ``j`` of a sentence written at ``t0`` occupies slot ``j`` and reaches
stage ``k`` with base time ``t0 + j*pitch + k*delay``. Relays are θ=1
repeaters, so with nothing attached the final stage replays stage 0.
"""

from __future__ import annotations

import enum
import json
from dataclasses import asdict, dataclass, field
from typing import Sequence

import numpy as np

from .codec import Alphabet, NoiseModel, encode, match_token, perturb
from .substrate import Network, NeuronSpec, SpikeEvent


class ChainError(ValueError):
    pass


@dataclass(frozen=True)
class ChainSpec:
    W: int = 8
    L: int = 6
    delay: int = 100  # inter-stage delay (ticks)
    pitch: int = 120  # slot pitch (ticks)
    capacity: int = 8  # max tokens per sentence
    refractory: int = 58
    window: int = 0
    threshold: int = 1
    lead: int = 5  # write-back lead (ticks)
    D: int = 50  # token duration
    eps: int = 3

    def violations(self) -> list[str]:
        v = []
        if self.W < 1:
            v.append("W >= 1")
        if self.L < 2:
            v.append("L >= 2")
        if self.capacity < 1:
            v.append("capacity >= 1")
        if self.delay < 1:
            v.append(f"delay >= 1 (delay={self.delay})")
        if self.threshold != 1:
            v.append(f"threshold == 1 for relay neurons (threshold={self.threshold})")
        if self.pitch < self.D + self.refractory + self.eps:
            v.append(
                f"pitch >= D + refractory + eps ({self.pitch} < "
                f"{self.D} + {self.refractory} + {self.eps})"
            )
        if self.refractory < self.D + self.lead:
            v.append(
                f"refractory >= D + lead ({self.refractory} < {self.D} + {self.lead})"
            )
        return v

    def validate(self) -> None:
        v = self.violations()
        if v:
            raise ChainError("chain spec violates: " + "; ".join(v))


class Gap(enum.Enum):
    EMPTY = "empty"  # no spikes in the slot
    NOMATCH = "nomatch"  # spikes present, no template matched

    def __repr__(self):
        return f"Gap.{self.name}"


@dataclass
class Reading:
    slots: list
    mismatches: list = field(default_factory=list)

    @property
    def tokens(self) -> list[int]:
        return [s for s in self.slots if not isinstance(s, Gap)]

    @property
    def complete(self) -> bool:
        return Gap.NOMATCH not in self.slots

    def sentence(self) -> list[int]:
        """Tokens with trailing empty slots removed; raises on interior gaps."""
        slots = list(self.slots)
        while slots and slots[-1] is Gap.EMPTY:
            slots.pop()
        if any(isinstance(s, Gap) for s in slots):
            raise ChainError(f"reading has gaps: {slots}")
        return slots


@dataclass
class Chain:
    spec: ChainSpec
    network: Network
    grid: list[list[int]]
    taps: list = field(default_factory=list)
    clock: int | None = None

    def stage(self, k: int) -> list[int]:
        return self.grid[k]

    def slot_base(self, slot: int, stage: int, t0: int = 0) -> int:
        return t0 + slot * self.spec.pitch + stage * self.spec.delay

    def horizon(self, t0: int, n_slots: int) -> int:
        """A tick by which every slot has crossed the last stage."""
        s = self.spec
        return t0 + (n_slots + 2) * s.pitch + (s.L + 2) * s.delay + s.D

    def layout(self) -> dict:
        return {"spec": asdict(self.spec), "grid": self.grid}

    def save_layout(self, path) -> None:
        with open(path, "w") as f:
            json.dump(self.layout(), f, indent=2, sort_keys=True)
            f.write("\n")


def build_chain(spec: ChainSpec, network: Network | None = None) -> Chain:
    spec.validate()
    net = Network() if network is None else network
    first = max(net.neuron_ids(), default=-1) + 1
    grid = []
    for k in range(spec.L):
        row = []
        for c in range(spec.W):
            nid = first + k * spec.W + c
            net.add_neuron(
                NeuronSpec(nid, threshold=1, window=spec.window, refractory=spec.refractory)
            )
            row.append(nid)
        grid.append(row)
    for k in range(spec.L - 1):
        for c in range(spec.W):
            net.connect(grid[k][c], grid[k + 1][c], spec.delay)
    return Chain(spec, net, grid)


def _check_alphabet(chain: Chain, alphabet: Alphabet) -> None:
    if alphabet.W != chain.spec.W:
        raise ChainError(f"alphabet W={alphabet.W} does not match chain W={chain.spec.W}")
    if alphabet.D > chain.spec.D:
        raise ChainError(f"alphabet D={alphabet.D} exceeds chain D={chain.spec.D}")


def sentence_events(
    chain: Chain,
    sentence: Sequence[int],
    alphabet: Alphabet,
    t0: int = 0,
    stride: int = 1,
) -> list[SpikeEvent]:
    """Stage-0 spike events for a sentence; token ``j`` sits at slot ``j*stride``."""
    _check_alphabet(chain, alphabet)
    if len(sentence) > chain.spec.capacity:
        raise ChainError(
            f"sentence of {len(sentence)} tokens exceeds capacity {chain.spec.capacity}"
        )
    events = []
    for j, sym in enumerate(sentence):
        events += encode(alphabet, sym, chain.slot_base(j * stride, 0, t0), chain.stage(0))
    return sorted(events)


def slot_windows(chain: Chain, n_slots: int, stage: int = 0, t0: int = 0, stride: int = 1):
    return [
        (chain.slot_base(j * stride, stage, t0), chain.slot_base(j * stride, stage, t0) + chain.spec.D)
        for j in range(n_slots)
    ]


def write_sentence(
    chain: Chain,
    sentence: Sequence[int],
    alphabet: Alphabet,
    t0: int = 0,
    stride: int = 1,
    noise: NoiseModel | None = None,
    rng: np.random.Generator | None = None,
) -> list[SpikeEvent]:
    """Inject a sentence onto stage 0 and return the injected events."""
    events = sentence_events(chain, sentence, alphabet, t0, stride)
    if noise is not None and not noise.silent:
        if rng is None:
            raise ChainError("noise requires an rng")
        windows = slot_windows(chain, len(sentence), 0, t0, stride)
        events = perturb(events, noise, rng, windows, chain.stage(0))
    chain.network.inject_spikes(events)
    return events


def read_sentence(
    chain: Chain,
    alphabet: Alphabet,
    stage: int,
    t0: int,
    n_slots: int,
    trace: Sequence[SpikeEvent] | None = None,
    m_max: int = 0,
) -> Reading:
    """Decode ``n_slots`` consecutive slots from the firing trace at ``stage``."""
    trace = chain.network.trace if trace is None else trace
    neurons = set(chain.stage(stage))
    at_stage = [ev for ev in trace if ev.neuron in neurons]
    slots, mism = [], []
    for j in range(n_slots):
        base = chain.slot_base(j, stage, t0)
        window = [ev for ev in at_stage if base <= ev.time < base + chain.spec.pitch]
        if not window:
            slots.append(Gap.EMPTY)
            mism.append(None)
            continue
        hit = match_token(window, alphabet, alphabet.eps, m_max, base, chain.stage(stage))
        if hit is None:
            slots.append(Gap.NOMATCH)
            mism.append(None)
        else:
            slots.append(hit[0])
            mism.append(hit[1])
    return Reading(slots, mism)


def pass_through(
    spec: ChainSpec, alphabet: Alphabet, sentence: Sequence[int], t0: int = 0
) -> Reading:
    """Write a sentence onto a bare chain, run it out, and read the last stage."""
    chain = build_chain(spec)
    write_sentence(chain, sentence, alphabet, t0)
    chain.network.run_until(chain.horizon(t0, len(sentence)))
    return read_sentence(chain, alphabet, spec.L - 1, t0, len(sentence))
