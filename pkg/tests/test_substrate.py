import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from spikesym.substrate import (
    INHIBITORY,
    Network,
    NeuronSpec,
    SpikeEvent,
    SubstrateError,
    read_trace_csv,
    write_trace_csv,
)


def _times(net, nid):
    return [e.time for e in net.trace if e.neuron == nid]


def test_relay_delay():
    net = Network()
    a, b = net.neuron(), net.neuron()
    net.connect(a, b, 7)
    net.inject_spikes([SpikeEvent(3, a)])
    net.run_until(100)
    assert _times(net, b) == [10]


def test_coincidence_window():
    # two inputs 2 ticks apart: fires with window 2, not with window 1
    for window, expect in [(2, [12]), (1, [])]:
        net = Network()
        a, b = net.neuron(), net.neuron()
        out = net.neuron(threshold=2, window=window)
        net.connect(a, out, 10)
        net.connect(b, out, 12)
        net.inject_spikes([SpikeEvent(0, a), SpikeEvent(0, b)])
        net.run_until(50)
        assert _times(net, out) == expect


def test_refractory_blocks_second_spike():
    net = Network()
    a = net.neuron()
    out = net.neuron(refractory=5)
    net.connect(a, out, 1)
    net.inject_spikes([SpikeEvent(t, a) for t in (0, 3, 6, 9)])
    net.run_until(50)
    # arrivals at 1, 4, 7, 10; 4 is within 5 ticks of 1, 7 is not
    assert _times(net, out) == [1, 7]


def test_inhibition_hold():
    net = Network()
    e1, e2, inh = net.neuron(), net.neuron(), net.neuron()
    out = net.neuron(hold=4)
    net.connect(e1, out, 1)
    net.connect(e2, out, 1)
    net.connect(inh, out, 1, INHIBITORY)
    net.inject_spikes([SpikeEvent(0, inh), SpikeEvent(4, e1), SpikeEvent(5, e2)])
    net.run_until(50)
    # inhibited through t=5, arrivals at 5 (vetoed) and 6 (fires)
    assert _times(net, out) == [6]


def test_synapse_hold_overrides_neuron_hold():
    net = Network()
    exc, inh = net.neuron(), net.neuron()
    out = net.neuron(hold=0)
    net.connect(exc, out, 1)
    net.connect(inh, out, 1, INHIBITORY, hold=10)
    net.inject_spikes([SpikeEvent(0, inh), SpikeEvent(9, exc), SpikeEvent(11, exc)])
    net.run_until(50)
    assert _times(net, out) == [12]


def test_same_tick_inhibition_wins():
    net = Network()
    exc, inh = net.neuron(), net.neuron()
    out = net.neuron()
    # excitatory synapse added first; batching makes order irrelevant
    net.connect(exc, out, 2)
    net.connect(inh, out, 2, INHIBITORY)
    net.inject_spikes([SpikeEvent(0, exc), SpikeEvent(0, inh)])
    net.run_until(10)
    assert _times(net, out) == []


def test_forced_firing_respects_inhibition():
    net = Network()
    inh = net.neuron()
    out = net.neuron(hold=3)
    net.connect(inh, out, 1, INHIBITORY)
    net.inject_spikes([SpikeEvent(0, inh), SpikeEvent(2, out), SpikeEvent(5, out)])
    net.run_until(10)
    assert _times(net, out) == [5]


def test_buffer_consumed_on_firing():
    net = Network()
    src = [net.neuron() for _ in range(3)]
    out = net.neuron(threshold=2, window=10, refractory=1)
    for t, a in enumerate(src):
        net.connect(a, out, 1)
        net.inject_spikes([SpikeEvent(t, a)])
    net.run_until(20)
    # arrivals 1, 2 fire at 2; arrival 3 alone does not reach threshold
    assert _times(net, out) == [2]


def test_reset_keeps_topology():
    net = Network()
    a, b = net.neuron(), net.neuron()
    net.connect(a, b, 2)
    net.inject_spikes([SpikeEvent(0, a)])
    net.run_until(10)
    net.reset()
    assert net.trace == [] and net.now == 0
    net.inject_spikes([SpikeEvent(1, a)])
    net.run_until(10)
    assert _times(net, b) == [3]


def test_errors():
    net = Network()
    a = net.neuron()
    with pytest.raises(SubstrateError):
        net.connect(a, 99, 1)
    with pytest.raises(SubstrateError):
        net.connect(a, a, 0)
    with pytest.raises(SubstrateError):
        net.add_neuron(NeuronSpec(a))
    with pytest.raises(SubstrateError):
        NeuronSpec(5, threshold=0)
    net.run_until(10)
    with pytest.raises(SubstrateError, match="past"):
        net.inject_spikes([SpikeEvent(3, a)])
    with pytest.raises(SubstrateError):
        net.inject_spikes([SpikeEvent(20, 42)])


def test_trace_csv_roundtrip(tmp_path):
    events = [SpikeEvent(1, 0, 0), SpikeEvent(5, 3, 1)]
    p = tmp_path / "trace.csv"
    write_trace_csv(events, p)
    assert p.read_text().splitlines()[0] == "time_tick,neuron_id"
    assert [(e.time, e.neuron) for e in read_trace_csv(p)] == [(1, 0), (5, 3)]


@settings(max_examples=50, deadline=None)
@given(
    st.lists(st.tuples(st.integers(0, 3), st.integers(0, 3), st.integers(1, 5), st.booleans()), max_size=10),
    st.lists(st.tuples(st.integers(0, 20), st.integers(0, 3)), max_size=8),
)
def test_insertion_order_invariance(syns, inputs):
    def run(order):
        net = Network()
        for _ in range(4):
            net.neuron(threshold=2, window=2, refractory=2, hold=3)
        for pre, post, d, inh in order:
            net.connect(pre, post, d, INHIBITORY if inh else 1)
        net.inject_spikes([SpikeEvent(t, n) for t, n in inputs])
        net.run_until(60)
        return [(e.time, e.neuron) for e in net.trace]

    assert run(syns) == run(list(reversed(syns)))
