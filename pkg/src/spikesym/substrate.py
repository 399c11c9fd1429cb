"""Event-driven simulation of coincidence-detector neurons.

Time is measured in integer ticks (1 tick = 0.1 ms). A neuron is a pure
coincidence counter: it fires at tick ``t`` when at least ``threshold``
excitatory arrivals fall inside ``[t - window, t]``, it has been silent for
more than ``refractory`` ticks, and it is not vetoed by inhibition.
Inhibitory arrivals at ``t`` set ``inhibited_until = max(inhibited_until,
t + hold)``; the neuron cannot fire at any tick ``<= inhibited_until``.

All arrivals for one ``(time, neuron)`` pair are handled as a batch:
inhibition first, then excitation, then at most one firing. This makes the
result independent of synapse insertion order.
"""

from __future__ import annotations

import csv
import heapq
from collections import defaultdict, deque
from dataclasses import dataclass, field
from typing import Iterable

EXCITATORY = 1
INHIBITORY = -1

_NEVER = -(10**18)


class SubstrateError(ValueError):
    pass


@dataclass(frozen=True)
class NeuronSpec:
    id: int
    threshold: int = 1
    window: int = 0
    refractory: int = 1
    hold: int = 0

    def __post_init__(self):
        if self.threshold < 1:
            raise SubstrateError(f"neuron {self.id}: threshold must be >= 1")
        if self.window < 0:
            raise SubstrateError(f"neuron {self.id}: window must be >= 0")
        if self.refractory < 1:
            raise SubstrateError(f"neuron {self.id}: refractory must be >= 1")
        if self.hold < 0:
            raise SubstrateError(f"neuron {self.id}: hold must be >= 0")


@dataclass(frozen=True)
class SynapseSpec:
    pre: int
    post: int
    delay: int
    sign: int = EXCITATORY
    # inhibitory only: overrides the post neuron's hold when set
    hold: int | None = None


@dataclass(frozen=True, order=True)
class SpikeEvent:
    time: int
    neuron: int
    seq: int = 0


@dataclass
class _NeuronState:
    spec: NeuronSpec
    arrivals: deque = field(default_factory=deque)
    last_fire: int = _NEVER
    inhibited_until: int = _NEVER


# queue item kinds, ordered so that a batch is trivially sortable
_FORCE = 0
_EXC = 1
_INH = 2


class Network:
    """A set of neurons and delayed synapses plus the event queue of one run."""

    def __init__(self):
        self._neurons: dict[int, _NeuronState] = {}
        self._out: dict[int, list[SynapseSpec]] = defaultdict(list)
        self._sorted: set[int] = set()
        self._queue: list[tuple[int, int, int, int, int]] = []
        self._seq = 0
        self._fire_seq = 0
        self.now = 0
        self.trace: list[SpikeEvent] = []

    # -- topology ---------------------------------------------------------

    def __len__(self):
        return len(self._neurons)

    def __contains__(self, nid):
        return nid in self._neurons

    def add_neuron(self, spec: NeuronSpec) -> int:
        if spec.id in self._neurons:
            raise SubstrateError(f"duplicate neuron id {spec.id}")
        self._neurons[spec.id] = _NeuronState(spec)
        return spec.id

    def neuron(self, **params) -> int:
        """Add a neuron under the next free id and return that id."""
        nid = max(self._neurons, default=-1) + 1
        return self.add_neuron(NeuronSpec(id=nid, **params))

    def spec(self, nid: int) -> NeuronSpec:
        return self._neurons[nid].spec

    def neuron_ids(self) -> list[int]:
        return sorted(self._neurons)

    def add_synapse(self, syn: SynapseSpec) -> None:
        if syn.pre not in self._neurons:
            raise SubstrateError(f"synapse pre neuron {syn.pre} does not exist")
        if syn.post not in self._neurons:
            raise SubstrateError(f"synapse post neuron {syn.post} does not exist")
        if syn.delay < 1:
            raise SubstrateError(f"synapse delay must be >= 1, got {syn.delay}")
        if syn.sign not in (EXCITATORY, INHIBITORY):
            raise SubstrateError(f"bad synapse sign {syn.sign}")
        if syn.hold is not None and syn.hold < 0:
            raise SubstrateError(f"synapse hold must be >= 0, got {syn.hold}")
        self._out[syn.pre].append(syn)
        self._sorted.discard(syn.pre)

    def connect(self, pre, post, delay, sign=EXCITATORY, hold=None) -> None:
        self.add_synapse(SynapseSpec(pre, post, delay, sign, hold))

    def synapses(self) -> list[SynapseSpec]:
        return sorted(
            (s for out in self._out.values() for s in out),
            key=lambda s: (s.pre, s.post, s.delay, s.sign, s.hold or 0),
        )

    def outgoing(self, nid: int) -> list[SynapseSpec]:
        out = self._out.get(nid, [])
        if nid not in self._sorted:
            out.sort(key=lambda s: (s.post, s.delay, s.sign, s.hold or 0))
            self._sorted.add(nid)
        return out

    # -- dynamics ---------------------------------------------------------

    def reset(self) -> None:
        """Clear dynamic state and the queue; topology is kept."""
        for st in self._neurons.values():
            st.arrivals.clear()
            st.last_fire = _NEVER
            st.inhibited_until = _NEVER
        self._queue.clear()
        self._seq = 0
        self._fire_seq = 0
        self.now = 0
        self.trace = []

    def _push(self, time, neuron, kind, hold=0):
        heapq.heappush(self._queue, (time, neuron, self._seq, kind, hold))
        self._seq += 1

    def inject_spikes(self, events: Iterable[SpikeEvent]) -> None:
        """Force the named neurons to fire at the given ticks.

        Forced firings skip the threshold test but still respect
        refractoriness and inhibition.
        """
        events = list(events)
        for ev in events:
            if ev.neuron not in self._neurons:
                raise SubstrateError(f"inject into unknown neuron {ev.neuron}")
            if ev.time < self.now:
                raise SubstrateError(
                    f"event at t={ev.time} is in the past (now={self.now})"
                )
        for ev in sorted(events):
            self._push(ev.time, ev.neuron, _FORCE)

    def run_until(self, t_end: int) -> list[SpikeEvent]:
        if t_end < self.now:
            raise SubstrateError(f"t_end={t_end} is before now={self.now}")
        fired = []
        q = self._queue
        while q and q[0][0] <= t_end:
            t, nid = q[0][0], q[0][1]
            forced = False
            n_exc = 0
            hold = None
            while q and q[0][0] == t and q[0][1] == nid:
                _, _, _, kind, h = heapq.heappop(q)
                if kind == _FORCE:
                    forced = True
                elif kind == _EXC:
                    n_exc += 1
                else:
                    hold = h if hold is None else max(hold, h)
            ev = self._step(nid, t, forced, n_exc, hold)
            if ev is not None:
                fired.append(ev)
        self.now = t_end
        return fired

    def _step(self, nid, t, forced, n_exc, hold):
        st = self._neurons[nid]
        spec = st.spec
        if hold is not None:
            st.inhibited_until = max(st.inhibited_until, t + hold)
        buf = st.arrivals
        for _ in range(n_exc):
            buf.append(t)
        while buf and buf[0] < t - spec.window:
            buf.popleft()
        if t <= st.inhibited_until or t - st.last_fire <= spec.refractory:
            return None
        if not forced and len(buf) < spec.threshold:
            return None
        # arrivals that triggered a spike are consumed
        buf.clear()
        st.last_fire = t
        ev = SpikeEvent(t, nid, self._fire_seq)
        self._fire_seq += 1
        self.trace.append(ev)
        for syn in self.outgoing(nid):
            if syn.sign > 0:
                self._push(t + syn.delay, syn.post, _EXC)
            else:
                hold = self._neurons[syn.post].spec.hold if syn.hold is None else syn.hold
                self._push(t + syn.delay, syn.post, _INH, hold)
        return ev

    def state(self, nid: int) -> tuple[int, int]:
        """(last_fire, inhibited_until) of a neuron, for inspection."""
        st = self._neurons[nid]
        return st.last_fire, st.inhibited_until


def write_trace_csv(events: Iterable[SpikeEvent], path) -> None:
    with open(path, "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(["time_tick", "neuron_id"])
        for ev in sorted(events):
            w.writerow([ev.time, ev.neuron])


def read_trace_csv(path) -> list[SpikeEvent]:
    with open(path, newline="") as f:
        rows = list(csv.DictReader(f))
    return [SpikeEvent(int(r["time_tick"]), int(r["neuron_id"]), i) for i, r in enumerate(rows)]
