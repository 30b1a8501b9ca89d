"""SNN connectivity graphs, spike traces, and synthetic workload generation.

Neurons are dense integer indices. Synapses are directed (src, dst) pairs
carrying a spike count: the number of spikes the source communicates over the
trace window. Traces store neuron-level spike times only; synapse-level times
are always derived (every spike of a neuron appears on each of its outgoing
synapses), which keeps trace files O(spikes) instead of O(synapses).

File formats (UTF-8, line oriented, '#' starts a comment):
  network: header ``# neurons=<int>``, rows ``src,dst,weight``
  trace:   optional header ``# duration_ms=<real>``, rows ``neuron,time_ms``
Writers emit rows sorted (synapses by (src, dst), events by (time, neuron))
so save/load round-trips are bit-exact.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Iterator, Sequence

import numpy as np

from .errors import ParseError, ValidationError

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class Synapse:
    src: int
    dst: int
    spike_count: int


@dataclass(frozen=True)
class SpikeEvent:
    neuron: int
    time: float


class SnnGraph:
    """Directed synapse graph with per-synapse spike counts.

    Synapses are stored canonically sorted by (src, dst). At most one synapse
    per ordered pair; endpoints must lie in [0, neuron_count). Self-loops are
    permitted (recurrent networks) but logged, since they never cross a
    cluster boundary.
    """

    def __init__(self, neuron_count: int, src, dst, weight):
        if neuron_count < 0:
            raise ValidationError("neuron_count must be non-negative")
        src = np.asarray(src, dtype=np.int64)
        dst = np.asarray(dst, dtype=np.int64)
        weight = np.asarray(weight, dtype=np.int64)
        if not (src.shape == dst.shape == weight.shape) or src.ndim != 1:
            raise ValidationError("src, dst, weight must be 1-D arrays of equal length")
        if src.size:
            if src.min(initial=0) < 0 or dst.min(initial=0) < 0:
                raise ValidationError("negative neuron index in synapse list")
            bad = np.flatnonzero((src >= neuron_count) | (dst >= neuron_count))
            if bad.size:
                i = int(bad[0])
                raise ValidationError(
                    f"synapse ({int(src[i])},{int(dst[i])}) references a neuron outside "
                    f"[0, {neuron_count})"
                )
            if weight.min(initial=0) < 0:
                raise ValidationError("synapse spike_count must be non-negative")
            order = np.lexsort((dst, src))
            src, dst, weight = src[order], dst[order], weight[order]
            dup = np.flatnonzero((np.diff(src) == 0) & (np.diff(dst) == 0))
            if dup.size:
                i = int(dup[0])
                raise ValidationError(
                    f"duplicate synapse ({int(src[i])},{int(dst[i])})"
                )
        self.neuron_count = int(neuron_count)
        self.src = src
        self.dst = dst
        self.weight = weight
        self.self_loop_count = int(np.count_nonzero(src == dst))
        if self.self_loop_count:
            log.warning(
                "graph contains %d self-loop synapse(s); they are always intra-cluster",
                self.self_loop_count,
            )

    @classmethod
    def from_synapses(cls, neuron_count: int, synapses: Iterable) -> "SnnGraph":
        rows = [(s.src, s.dst, s.spike_count) if isinstance(s, Synapse) else tuple(s)
                for s in synapses]
        if rows:
            src, dst, w = (np.array(col, dtype=np.int64) for col in zip(*rows))
        else:
            src = dst = w = np.empty(0, dtype=np.int64)
        return cls(neuron_count, src, dst, w)

    @property
    def synapse_count(self) -> int:
        return int(self.src.size)

    def synapses(self) -> Iterator[Synapse]:
        for s, d, w in zip(self.src, self.dst, self.weight):
            yield Synapse(int(s), int(d), int(w))

    def with_weights_from(self, trace: "SpikeTrace") -> "SnnGraph":
        """Return a copy whose spike counts are recomputed from the trace."""
        counts = trace.counts_per_neuron(self.neuron_count)
        return SnnGraph(self.neuron_count, self.src, self.dst, counts[self.src])

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, SnnGraph)
            and self.neuron_count == other.neuron_count
            and np.array_equal(self.src, other.src)
            and np.array_equal(self.dst, other.dst)
            and np.array_equal(self.weight, other.weight)
        )

    def __repr__(self) -> str:
        return f"SnnGraph(neurons={self.neuron_count}, synapses={self.synapse_count})"


class SpikeTrace:
    """Timestamped spike events over a window [0, duration_ms].

    Events are stored sorted by (time, neuron). Total event count K equals
    the sum of per-neuron spike counts by construction.
    """

    def __init__(self, duration_ms: float, neuron, time):
        neuron = np.asarray(neuron, dtype=np.int64)
        time = np.asarray(time, dtype=np.float64)
        if neuron.shape != time.shape or neuron.ndim != 1:
            raise ValidationError("neuron and time must be 1-D arrays of equal length")
        if time.size:
            if time.min() < 0:
                raise ValidationError("spike times must be non-negative")
            duration_ms = float(duration_ms)
            if time.max() > duration_ms:
                raise ValidationError(
                    f"spike time {time.max()!r} exceeds duration_ms={duration_ms!r}"
                )
            order = np.lexsort((neuron, time))
            neuron, time = neuron[order], time[order]
        self.duration_ms = float(duration_ms)
        self.neuron = neuron
        self.time = time

    @property
    def event_count(self) -> int:
        return int(self.neuron.size)

    def events(self) -> Iterator[SpikeEvent]:
        for n, t in zip(self.neuron, self.time):
            yield SpikeEvent(int(n), float(t))

    def counts_per_neuron(self, neuron_count: int) -> np.ndarray:
        return np.bincount(self.neuron, minlength=neuron_count).astype(np.int64)

    def times_per_neuron(self, neuron_count: int) -> list[np.ndarray]:
        """Per-neuron spike-time arrays, each ascending."""
        order = np.lexsort((self.time, self.neuron))
        neuron, time = self.neuron[order], self.time[order]
        bounds = np.searchsorted(neuron, np.arange(neuron_count + 1))
        return [time[bounds[i]:bounds[i + 1]] for i in range(neuron_count)]

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, SpikeTrace)
            and self.duration_ms == other.duration_ms
            and np.array_equal(self.neuron, other.neuron)
            and np.array_equal(self.time, other.time)
        )

    def __repr__(self) -> str:
        return f"SpikeTrace(duration_ms={self.duration_ms}, events={self.event_count})"


class SynapseTrace:
    """Per-synapse spike times, derived from the source neuron of each synapse.

    The time list of a synapse is exactly its source neuron's event times, so
    the per-neuron arrays are shared rather than duplicated per synapse.
    """

    def __init__(self, graph: SnnGraph, neuron_times: Sequence[np.ndarray],
                 duration_ms: float):
        self.graph = graph
        self.neuron_times = list(neuron_times)
        self.duration_ms = float(duration_ms)

    def times(self, synapse_index: int) -> np.ndarray:
        return self.neuron_times[int(self.graph.src[synapse_index])]

    def spike_count(self, synapse_index: int) -> int:
        return int(self.times(synapse_index).size)

    def total_synapse_spikes(self) -> int:
        counts = np.array([t.size for t in self.neuron_times], dtype=np.int64)
        return int(counts[self.graph.src].sum())


def derive_synapse_trace(graph: SnnGraph, trace: SpikeTrace) -> SynapseTrace:
    """Expand a neuron-level trace to synapse-level times.

    Raises ValidationError when a synapse's stored spike count disagrees with
    its source neuron's event count in the trace.
    """
    if trace.neuron.size and trace.neuron.max() >= graph.neuron_count:
        raise ValidationError(
            f"trace references neuron {int(trace.neuron.max())} outside the graph"
        )
    counts = trace.counts_per_neuron(graph.neuron_count)
    mismatch = np.flatnonzero(graph.weight != counts[graph.src])
    if mismatch.size:
        shown = ", ".join(
            f"({int(graph.src[i])},{int(graph.dst[i])}): w={int(graph.weight[i])} "
            f"vs {int(counts[graph.src[i]])} trace spikes"
            for i in mismatch[:8]
        )
        more = "" if mismatch.size <= 8 else f" (+{mismatch.size - 8} more)"
        raise ValidationError(f"synapse spike counts disagree with trace: {shown}{more}")
    return SynapseTrace(graph, trace.times_per_neuron(graph.neuron_count),
                        trace.duration_ms)


# ---------------------------------------------------------------------------
# file I/O


def _data_lines(path: Path):
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line:
                continue
            yield lineno, line


def load_network(path) -> SnnGraph:
    path = Path(path)
    neuron_count = None
    src, dst, weight = [], [], []
    for lineno, line in _data_lines(path):
        if line.startswith("#"):
            body = line[1:].strip()
            if body.startswith("neurons="):
                try:
                    neuron_count = int(body.split("=", 1)[1])
                except ValueError:
                    raise ParseError("malformed neurons header", path, lineno)
            continue
        parts = line.split(",")
        if len(parts) != 3:
            raise ParseError(f"expected 'src,dst,weight', got {line!r}", path, lineno)
        try:
            s, d, w = (int(p) for p in parts)
        except ValueError:
            raise ParseError(f"non-integer field in {line!r}", path, lineno)
        src.append(s)
        dst.append(d)
        weight.append(w)
    if neuron_count is None:
        raise ParseError("missing '# neurons=<int>' header", path)
    try:
        return SnnGraph(neuron_count, src, dst, weight)
    except ValidationError as exc:
        raise ValidationError(f"{path}: {exc}") from exc


def save_network(path, graph: SnnGraph) -> None:
    path = Path(path)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"# neurons={graph.neuron_count}\n")
        for s, d, w in zip(graph.src, graph.dst, graph.weight):
            fh.write(f"{s},{d},{w}\n")


def load_trace(path, graph: SnnGraph) -> SpikeTrace:
    path = Path(path)
    duration = None
    neuron, time = [], []
    for lineno, line in _data_lines(path):
        if line.startswith("#"):
            body = line[1:].strip()
            if body.startswith("duration_ms="):
                try:
                    duration = float(body.split("=", 1)[1])
                except ValueError:
                    raise ParseError("malformed duration_ms header", path, lineno)
            continue
        parts = line.split(",")
        if len(parts) != 2:
            raise ParseError(f"expected 'neuron,time_ms', got {line!r}", path, lineno)
        try:
            n = int(parts[0])
            t = float(parts[1])
        except ValueError:
            raise ParseError(f"malformed field in {line!r}", path, lineno)
        if n < 0 or n >= graph.neuron_count:
            raise ParseError(f"event references unknown neuron {n}", path, lineno)
        neuron.append(n)
        time.append(t)
    if duration is None:
        duration = max(time) if time else 0.0
    try:
        return SpikeTrace(duration, neuron, time)
    except ValidationError as exc:
        raise ValidationError(f"{path}: {exc}") from exc


def save_trace(path, trace: SpikeTrace) -> None:
    path = Path(path)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"# duration_ms={trace.duration_ms!r}\n")
        for n, t in zip(trace.neuron, trace.time):
            fh.write(f"{int(n)},{float(t)!r}\n")


# ---------------------------------------------------------------------------
# synthetic workloads


@dataclass(frozen=True)
class TopologySpec:
    """Fully connected feedforward topology with Poisson firing.

    rate_hz may be a single rate for all layers or one rate per layer.
    """

    layers: tuple[int, ...]
    rate_hz: float | tuple[float, ...] = 10.0
    duration_ms: float = 1000.0

    def __post_init__(self):
        if not self.layers:
            raise ValidationError("topology needs at least one layer")
        if any(n <= 0 for n in self.layers):
            raise ValidationError("zero-sized layer rejected")
        if self.duration_ms <= 0:
            raise ValidationError("duration_ms must be positive")
        rates = self.layer_rates()
        if any(r < 0 for r in rates):
            raise ValidationError("firing rates must be non-negative")

    def layer_rates(self) -> tuple[float, ...]:
        if isinstance(self.rate_hz, (int, float)):
            return tuple(float(self.rate_hz) for _ in self.layers)
        if len(self.rate_hz) != len(self.layers):
            raise ValidationError("need one rate per layer")
        return tuple(float(r) for r in self.rate_hz)

    @property
    def neuron_count(self) -> int:
        return sum(self.layers)

    @property
    def synapse_count(self) -> int:
        return sum(a * b for a, b in zip(self.layers, self.layers[1:]))


# Layer shapes for the named synthetic workloads. Synapse counts follow full
# layer-to-layer connectivity; see README for the counts this yields.
WORKLOADS: dict[str, tuple[int, ...]] = {
    "s1000": (400, 400, 100),
    "s1500": (500, 500, 500),
    "s2000": (800, 400, 800),
    "s2500": (900, 900, 700),
    "s3000": (1000, 1000, 1000),
    "s3500": (1000, 1000, 1500),
    "s4000": (1500, 1500, 1000),
    "mlp-mnist-shape": (784, 100, 10),
    "imgsmooth-shape": (4096, 1024),
    "edgedet-shape": (4096, 1024, 1024, 1024),
}


def workload_spec(name: str, rate_hz=10.0, duration_ms: float = 1000.0) -> TopologySpec:
    try:
        layers = WORKLOADS[name]
    except KeyError:
        known = ", ".join(sorted(WORKLOADS))
        raise ValidationError(f"unknown workload {name!r}; known: {known}")
    return TopologySpec(layers=layers, rate_hz=rate_hz, duration_ms=duration_ms)


def generate_synthetic(spec: TopologySpec, seed: int) -> tuple[SnnGraph, SpikeTrace]:
    """Build a feedforward graph plus a homogeneous-Poisson trace.

    Deterministic for a fixed seed. Synapse spike counts equal the generated
    per-source-neuron event counts, so the pair always validates.
    """
    rng = np.random.default_rng(seed)
    n = spec.neuron_count
    offsets = np.cumsum((0,) + spec.layers)

    srcs, dsts = [], []
    for i in range(len(spec.layers) - 1):
        a = np.arange(offsets[i], offsets[i + 1], dtype=np.int64)
        b = np.arange(offsets[i + 1], offsets[i + 2], dtype=np.int64)
        srcs.append(np.repeat(a, b.size))
        dsts.append(np.tile(b, a.size))
    src = np.concatenate(srcs) if srcs else np.empty(0, dtype=np.int64)
    dst = np.concatenate(dsts) if dsts else np.empty(0, dtype=np.int64)

    rates = np.empty(n, dtype=np.float64)
    for i, r in enumerate(spec.layer_rates()):
        rates[offsets[i]:offsets[i + 1]] = r
    counts = rng.poisson(rates * spec.duration_ms / 1000.0)
    total = int(counts.sum())
    times = rng.random(total) * spec.duration_ms
    neurons = np.repeat(np.arange(n, dtype=np.int64), counts)

    graph = SnnGraph(n, src, dst, counts[src].astype(np.int64))
    trace = SpikeTrace(spec.duration_ms, neurons, times)
    return graph, trace
