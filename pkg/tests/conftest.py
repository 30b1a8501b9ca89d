import numpy as np
import pytest

from neuromap import (HardwareConfig, Partition, SnnGraph, SpikeTrace,
                      derive_synapse_trace)


def make_graph(neuron_count, synapses):
    """synapses: iterable of (src, dst, weight)."""
    return SnnGraph.from_synapses(neuron_count, synapses)


def make_trace(duration_ms, events):
    """events: iterable of (neuron, time_ms)."""
    if events:
        neuron, time = zip(*events)
    else:
        neuron, time = [], []
    return SpikeTrace(duration_ms, np.array(neuron), np.array(time))


def random_graph(rng, n, density=0.4, max_weight=8, self_loops=False):
    adj = rng.random((n, n)) < density
    if not self_loops:
        np.fill_diagonal(adj, False)
    src, dst = np.nonzero(adj)
    weight = rng.integers(0, max_weight + 1, size=src.size)
    return SnnGraph(n, src, dst, weight)


def trace_for_weights(graph, duration_ms=100.0, seed=0):
    """A trace whose per-neuron event counts equal every synapse weight.

    Requires consistent weights (all out-synapses of a neuron share one
    weight); neurons without out-synapses get no spikes.
    """
    rng = np.random.default_rng(seed)
    counts = np.zeros(graph.neuron_count, dtype=np.int64)
    for s, w in zip(graph.src, graph.weight):
        counts[s] = w
    neurons = np.repeat(np.arange(graph.neuron_count), counts)
    times = rng.random(neurons.size) * duration_ms
    return SpikeTrace(duration_ms, neurons, times)


def consistent_random_instance(seed, n=8, density=0.5, max_count=6,
                               duration_ms=50.0):
    """Random graph + trace pair that passes weight validation."""
    rng = np.random.default_rng(seed)
    counts = rng.integers(0, max_count + 1, size=n)
    adj = rng.random((n, n)) < density
    np.fill_diagonal(adj, False)
    src, dst = np.nonzero(adj)
    graph = SnnGraph(n, src, dst, counts[src])
    neurons = np.repeat(np.arange(n), counts)
    times = rng.random(neurons.size) * duration_ms
    trace = SpikeTrace(duration_ms, neurons, times)
    return graph, trace, derive_synapse_trace(graph, trace)


@pytest.fixture
def small_hw():
    return HardwareConfig(mesh_width=3, mesh_height=2, n_c=4, l_w=2, l_s=1,
                          e_w=1.0, e_s=2.0, cycle_ms=0.001, buffer_depth=4)


def singleton_partition(n):
    """Every neuron its own cluster (n_c = 1)."""
    return Partition(np.arange(n), 1, n)
