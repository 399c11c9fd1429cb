"""Classifier circuits compiled onto a chain.

Timing of one rule at tap stage ``k`` for a token whose slot base at stage
``k`` is ``b`` (``A`` = alignment constant = token duration ``D``):

* detector: input delay ``A - off_X[c]`` from relay ``(k, c)``, so a matching
  token lands every arrival at ``b + A``; θ = W - m_max, window 2ε.
* write gate: fires at ``b + A + ε + 1`` when both the detector and the
  harness gate spike arrive (θ=2). Its excitatory synapses put action
  token ``i`` on stage ``k+1`` at exactly ``b + Δ + i*Λ + off_Y[c]``.
* suppression: on a channel where the replacement spike precedes the
  original, the original lands in the relay's refractory period. Where it
  would come later, an inhibitory synapse vetoes the relay from
  ``lead`` ticks before the original spike until just before the new one.
* context gate: a blocker driven by the slot clock vetoes the detector at
  ``b + A`` on every slot unless a context detector has inhibited the
  blocker (one slot ahead for ``left_adjacent``, the rest of the sentence
  for ``anywhere_before``).

Sentences are written sparsely, token ``j`` in slot ``j * stride`` with
``stride >= 3``, so multi-token actions fill empty slots and the reader
compacts them back into a sentence.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .chain import Chain, ChainError, ChainSpec, Gap, build_chain, read_sentence, sentence_events, slot_windows
from .codec import DIFF, SAME, Alphabet, NoiseModel, perturb
from .rules import ANYWHERE_BEFORE, LEFT_ADJACENT, MAX_ACTION, AbstractRule, RuleSet
from .substrate import INHIBITORY, Network, SpikeEvent


class CompileError(ValueError):
    pass


@dataclass
class CompiledRule:
    rule: AbstractRule
    tap: int
    detector: int
    write_gate: int
    gate_input: int
    input_delays: list[int]
    writeback: list[tuple[int, int, int]] = field(default_factory=list)  # (post, delay, sign)
    context_detector: int | None = None
    blocker: int | None = None


def _slot_clock(chain: Chain) -> int:
    clock = chain.clock
    if clock is None:
        clock = chain.network.neuron(threshold=1, refractory=1)
        chain.clock = clock
    return clock


def _check_timing(chain: Chain, alphabet: Alphabet, tap: int, stride: int) -> None:
    s = chain.spec
    if not 0 <= tap < s.L - 1:
        raise CompileError(f"tap stage {tap} must be in [0, {s.L - 1})")
    A, eps = alphabet.D, alphabet.eps
    if s.delay < A + eps + s.lead + 2:
        raise CompileError(
            f"delay >= D + eps + lead + 2 needed for write-back routing "
            f"({s.delay} < {A} + {eps} + {s.lead} + 2)"
        )
    if stride * s.pitch <= 2 * alphabet.D + 4 * eps:
        raise CompileError(
            f"stride*pitch > 2*D + 4*eps needed to isolate slots at a detector "
            f"({stride}*{s.pitch} <= 2*{alphabet.D} + 4*{eps})"
        )


def _detector(net: Network, chain: Chain, tap: int, template, alphabet: Alphabet, m_max: int):
    W, A, eps = alphabet.W, alphabet.D, alphabet.eps
    det = net.neuron(threshold=W - m_max, window=2 * eps, refractory=A)
    delays = []
    for c, off in enumerate(template):
        d = A - off
        net.connect(chain.grid[tap][c], det, d)
        delays.append(d)
    return det, delays


def compile_rule(
    rule: AbstractRule,
    chain: Chain,
    tap: int,
    alphabet: Alphabet,
    stride: int = MAX_ACTION,
    m_max: int = 0,
) -> CompiledRule:
    for sym in sorted(rule.symbols):
        if sym not in alphabet:
            raise CompileError(f"rule {rule}: symbol {sym} not in alphabet")
    if len(rule.action) > stride:
        raise CompileError(
            f"rule {rule}: action of {len(rule.action)} tokens overflows stride {stride}"
        )
    if len(rule.action) > chain.spec.capacity:
        raise CompileError(f"rule {rule}: action overflows capacity {chain.spec.capacity}")
    _check_timing(chain, alphabet, tap, stride)
    s, net = chain.spec, chain.network
    A, eps, W = alphabet.D, alphabet.eps, alphabet.W
    x = alphabet[rule.cond]

    det, delays = _detector(net, chain, tap, x, alphabet, m_max)
    wg = net.neuron(threshold=2, window=2 * eps, refractory=A)
    gin = net.neuron(threshold=1, refractory=1)
    net.connect(det, wg, 1)
    net.connect(gin, wg, 1)
    t_fire = A + eps + 1  # write gate firing time relative to b

    wb = []
    nxt = chain.grid[tap + 1]
    for i, sym in enumerate(rule.action):
        y = alphabet[sym]
        for c in range(W):
            d = s.delay + i * s.pitch + y[c] - t_fire
            net.connect(wg, nxt[c], d)
            wb.append((nxt[c], d, 1))
    y0 = alphabet[rule.action[0]]
    for c in range(W):
        if y0[c] > x[c]:
            d = s.delay + x[c] - s.lead - t_fire
            hold = s.lead + min(eps, y0[c] - x[c] - 1)
            net.connect(wg, nxt[c], d, INHIBITORY, hold)
            wb.append((nxt[c], d, -1))

    cr = CompiledRule(rule, tap, det, wg, gin, delays, wb)
    if rule.ctx is not None:
        clock = _slot_clock(chain)
        blocker = net.neuron(threshold=1, refractory=1)
        net.connect(clock, blocker, 1)
        # blocker fires at b + A - eps - 1; veto holds through b + A + eps + 1
        net.connect(blocker, det, 1, INHIBITORY, 2 * eps + 1)
        cdet, _ = _detector(net, chain, tap, alphabet[rule.ctx], alphabet, m_max)
        if rule.rel == LEFT_ADJACENT:
            hold = stride * s.pitch
        else:
            hold = (s.capacity + 2) * stride * s.pitch
        net.connect(cdet, blocker, 1, INHIBITORY, hold)
        cr.context_detector, cr.blocker = cdet, blocker
    chain.taps.append(cr)
    return cr


def clock_events(chain: Chain, alphabet: Alphabet, tap: int, n_tokens: int, t0: int, stride: int):
    """Slot-clock spikes that drive the context blockers, one per token slot."""
    clock = chain.clock
    if clock is None:
        return []
    lag = alphabet.D - alphabet.eps - 2
    return [SpikeEvent(chain.slot_base(j * stride, tap, t0) + lag, clock) for j in range(n_tokens)]


def gate_event(cr: CompiledRule, chain: Chain, alphabet: Alphabet, token: int, t0: int, stride: int):
    """Harness spike that lets compiled rule ``cr`` write back at token ``token``."""
    b = chain.slot_base(token * stride, cr.tap, t0)
    return SpikeEvent(b + alphabet.D + alphabet.eps, cr.gate_input)


class SpikingEngine:
    """Rewrite engine that runs every step through a spiking chain.

    Each step is two passes over the same stage-0 input: a detection pass
    (no write gate opened) that yields the eligible ``(position, rule)``
    pairs, then a write pass with the chosen rule's gate opened.
    """

    def __init__(
        self,
        rules: RuleSet,
        alphabet: Alphabet,
        spec: ChainSpec | None = None,
        tap: int = 1,
        stride: int = MAX_ACTION,
        m_max: int = 0,
        noise: NoiseModel | None = None,
        rng: np.random.Generator | None = None,
    ):
        self.rules = rules
        self.alphabet = alphabet
        self.spec = spec or ChainSpec(W=alphabet.W, D=alphabet.D, eps=alphabet.eps)
        self.capacity = self.spec.capacity
        self.tap = tap
        self.stride = stride
        self.m_max = m_max
        self.noise = noise
        self.rng = rng
        if noise is not None and not noise.silent and rng is None:
            raise ValueError("noise requires an rng")
        self.chain = build_chain(self.spec)
        self.compiled = [
            compile_rule(r, self.chain, tap, alphabet, stride, m_max) for r in rules
        ]
        self._inputs: tuple[tuple[int, ...], list[SpikeEvent]] | None = None
        self.last_trace: list[SpikeEvent] = []
        self.last_reading = None
        self.diagnostics: list[str] = []

    @property
    def network(self) -> Network:
        return self.chain.network

    def _input_events(self, sentence):
        key = tuple(sentence)
        if self._inputs is not None and self._inputs[0] == key:
            return self._inputs[1]
        ev = sentence_events(self.chain, sentence, self.alphabet, 0, self.stride)
        if self.noise is not None and not self.noise.silent:
            windows = slot_windows(self.chain, len(sentence), 0, 0, self.stride)
            ev = [e for e in perturb(ev, self.noise, self.rng, windows, self.chain.stage(0)) if e.time >= 0]
        self._inputs = (key, ev)
        return ev

    def _run(self, sentence, extra=()):
        net = self.network
        net.reset()
        net.inject_spikes(self._input_events(sentence))
        net.inject_spikes(clock_events(self.chain, self.alphabet, self.tap, len(sentence), 0, self.stride))
        net.inject_spikes(extra)
        net.run_until(self.chain.horizon(0, max(1, len(sentence)) * self.stride))
        self.last_trace = list(net.trace)
        return self.last_trace

    def detections(self, sentence, trace) -> list[tuple[int, int]]:
        A, eps = self.alphabet.D, self.alphabet.eps
        period = self.stride * self.spec.pitch
        found = []
        for ri, cr in enumerate(self.compiled):
            for ev in trace:
                if ev.neuron != cr.detector:
                    continue
                rel = ev.time - self.chain.slot_base(0, self.tap) - A
                j = round(rel / period)
                if abs(rel - j * period) <= eps and 0 <= j < len(sentence):
                    found.append((j, ri))
                else:
                    self.diagnostics.append(f"rule {ri}: stray detector spike at t={ev.time}")
        return sorted(set(found))

    def eligible(self, sentence: Sequence[int]) -> list[tuple[int, int]]:
        if not sentence:
            return []
        return self.detections(sentence, self._run(sentence))

    def rewrite(self, sentence: Sequence[int], pos: int, rule_index: int) -> list[int]:
        cr = self.compiled[rule_index]
        gate = gate_event(cr, self.chain, self.alphabet, pos, 0, self.stride)
        trace = self._run(sentence, [gate])
        n_slots = (len(sentence) + 1) * self.stride
        reading = read_sentence(self.chain, self.alphabet, self.spec.L - 1, 0, n_slots, trace, self.m_max)
        self.last_reading = reading
        if not reading.complete:
            raise SpikingDivergence(f"unmatched slot in chain output: {reading.slots}")
        return reading.tokens


class SpikingDivergence(RuntimeError):
    pass


def audit_suppression(
    chain: Chain,
    alphabet: Alphabet,
    trace: Sequence[SpikeEvent],
    slot: int,
    tap: int,
    original: int,
    replacement: int,
    t0: int = 0,
) -> int:
    """Count spikes of the replaced token found downstream of the tap stage.

    Only channels where the two templates differ by more than ε are
    inspected; elsewhere the two tokens are indistinguishable.
    """
    x, y = alphabet[original], alphabet[replacement]
    eps = alphabet.eps
    count = 0
    for k in range(tap + 1, chain.spec.L):
        base = chain.slot_base(slot, k, t0)
        for c, n in enumerate(chain.stage(k)):
            if abs(x[c] - y[c]) <= eps:
                continue
            count += sum(1 for ev in trace if ev.neuron == n and abs(ev.time - base - x[c]) <= eps)
    return count


# -- equality ("variable") circuit ---------------------------------------------


@dataclass
class EqualityCircuit:
    slot_i: int
    slot_j: int
    tap: int
    coincidence: list[int]
    detector: int
    write_same: int
    write_diff: int
    trigger: int
    tol: int

    def trigger_event(self, chain: Chain, alphabet: Alphabet, t0: int = 0) -> SpikeEvent:
        return SpikeEvent(chain.slot_base(self.slot_j, self.tap, t0) + alphabet.D + 2, self.trigger)


def build_equality_rule(
    chain: Chain,
    alphabet: Alphabet,
    slot_i: int,
    slot_j: int,
    out_same: int = SAME,
    out_diff: int = DIFF,
    tap: int = 1,
    tol: int | None = None,
) -> EqualityCircuit:
    """Compare the tokens in two slots channel by channel.

    Writes ``out_same`` into slot ``slot_j + 1`` of stage ``tap + 1`` when
    every channel's spikes coincide within ``tol`` (default 2ε, so input
    jitter up to ε is tolerated), ``out_diff`` otherwise. Symbol identity
    never enters the wiring.
    """
    s, net = chain.spec, chain.network
    if not 0 <= slot_i < slot_j or slot_j + 1 >= s.capacity:
        raise ChainError(
            f"need 0 <= slot_i < slot_j and slot_j + 1 < capacity "
            f"(slot_i={slot_i}, slot_j={slot_j}, capacity={s.capacity})"
        )
    if not 0 <= tap < s.L - 1:
        raise ChainError(f"tap stage {tap} must be in [0, {s.L - 1})")
    D = alphabet.D
    tol = 2 * alphabet.eps if tol is None else tol
    if s.pitch <= 2 * D + tol:
        raise ChainError(f"pitch > 2*D + tol needed ({s.pitch} <= 2*{D} + {tol})")
    lag = (slot_j - slot_i) * s.pitch
    coinc = []
    for c in range(s.W):
        e = net.neuron(threshold=2, window=tol, refractory=1)
        net.connect(chain.grid[tap][c], e, 1)
        net.connect(chain.grid[tap][c], e, lag + 1)
        coinc.append(e)
    det = net.neuron(threshold=s.W, window=D, refractory=D)
    for e in coinc:
        net.connect(e, det, 1)
    trig = net.neuron(threshold=1, refractory=1)
    same = net.neuron(threshold=2, window=D, refractory=D)
    diff = net.neuron(threshold=1, refractory=D)
    net.connect(det, same, 1)
    net.connect(trig, same, 1)
    net.connect(trig, diff, 2)
    net.connect(det, diff, 1, INHIBITORY, D + 1)
    # trigger fires at b + D + 2; SAME writer at b + D + 3, DIFF writer at b + D + 4
    nxt = chain.grid[tap + 1]
    for writer, sym, t_fire in ((same, out_same, D + 3), (diff, out_diff, D + 4)):
        y = alphabet[sym]
        for c in range(s.W):
            net.connect(writer, nxt[c], s.pitch + s.delay + y[c] - t_fire)
    return EqualityCircuit(slot_i, slot_j, tap, coinc, det, same, diff, trig, tol)


class EqualityResponder:
    """Answer SAME/DIFF for 3-token sentences with a spiking equality circuit."""

    def __init__(
        self,
        alphabet: Alphabet,
        spec: ChainSpec | None = None,
        slots: tuple[int, int] = (0, 2),
        tap: int = 1,
        noise: NoiseModel | None = None,
        rng: np.random.Generator | None = None,
    ):
        self.alphabet = alphabet
        self.spec = spec or ChainSpec(W=alphabet.W, D=alphabet.D, eps=alphabet.eps)
        self.chain = build_chain(self.spec)
        self.circuit = build_equality_rule(self.chain, alphabet, *slots, tap=tap)
        self.noise = noise
        self.rng = rng

    def __call__(self, sentence: Sequence[int]):
        net = self.chain.network
        net.reset()
        ev = sentence_events(self.chain, sentence, self.alphabet)
        if self.noise is not None and not self.noise.silent:
            windows = slot_windows(self.chain, len(sentence))
            ev = perturb(ev, self.noise, self.rng, windows, self.chain.stage(0))
        net.inject_spikes(ev)
        net.inject_spikes([self.circuit.trigger_event(self.chain, self.alphabet)])
        out_slot = self.circuit.slot_j + 1
        net.run_until(self.chain.horizon(0, out_slot + 1))
        reading = read_sentence(self.chain, self.alphabet, self.spec.L - 1, 0, out_slot + 1)
        ans = reading.slots[out_slot]
        return None if isinstance(ans, Gap) else ans
