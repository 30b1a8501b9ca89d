"""Latency, energy, ISI-distortion, and spike-disorder metrics.

Latency and energy are per-spike sums over hop counts: a spike crossing h
switches costs (h-1)*l_w + h*l_s cycles uncongested and (h-1)*e_w + h*e_s
picojoules regardless of queuing. ISI distortion is the cycle-to-cycle jitter
of a synapse's delivery delays: the j-th interval changes by delta_j -
delta_{j-1}, so synapses inside a crossbar (constant delay) contribute
exactly zero. Spike disorder compares expected against delivered firing-rate
sequences at a destination, mean squared.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ValidationError
from .hardware import HardwareConfig
from .nocsim import SimReport
from .snn import SynapseTrace

log = logging.getLogger(__name__)


def avg_latency(report: SimReport, hw: HardwareConfig) -> float:
    """Mean measured delivery delay in cycles; 0 for an empty report."""
    return report.mean_delay()


def avg_latency_from_hops(report: SimReport, hw: HardwareConfig) -> float:
    """Mean uncongested delay implied by hop counts alone.

    Matches avg_latency exactly when no packet ever waits; otherwise it is a
    strict lower bound on the measured value.
    """
    if not report.packets:
        return 0.0
    total = sum((p.hops_traversed - 1) * hw.l_w + p.hops_traversed * hw.l_s
                for p in report.packets)
    return total / report.n_s


def total_energy(report: SimReport, hw: HardwareConfig) -> float:
    """Interconnect energy in pJ; hops only, queuing delays cost nothing."""
    return float(sum((p.hops_traversed - 1) * hw.e_w + p.hops_traversed * hw.e_s
                     for p in report.packets))


class IsiSeries:
    """Per-synapse inter-spike intervals before and after mesh delays.

    Synapses that never produced mesh packets (intra-cluster, or sources that
    never spiked) have identically zero distortion; their series are built on
    demand from the trace instead of being stored.
    """

    def __init__(self, synapse_trace: SynapseTrace,
                 distortions: dict[int, np.ndarray]):
        self._trace = synapse_trace
        self._distortions = distortions

    @property
    def traffic_synapses(self) -> list[int]:
        return sorted(self._distortions)

    def original_isi(self, synapse: int) -> np.ndarray:
        return np.diff(self._trace.times(synapse))

    def distortion(self, synapse: int) -> np.ndarray:
        stored = self._distortions.get(synapse)
        if stored is not None:
            return stored
        count = self._trace.spike_count(synapse)
        return np.zeros(max(count - 1, 0), dtype=np.float64)

    def new_isi(self, synapse: int) -> np.ndarray:
        return self.original_isi(synapse) + self.distortion(synapse) * 1.0

    def write_csv(self, path) -> None:
        with open(Path(path), "w", encoding="utf-8") as fh:
            fh.write("synapse,interval,original_isi_ms,new_isi_ms,distortion\n")
            for syn in self.traffic_synapses:
                orig = self.original_isi(syn)
                dist = self.distortion(syn)
                new = self.new_isi(syn)
                for j in range(dist.size):
                    fh.write(f"{syn},{j + 1},{float(orig[j])!r},"
                             f"{float(new[j])!r},{float(dist[j])!r}\n")


@dataclass(frozen=True)
class IsiAverages:
    abs_mean: float      # mean |delta_j - delta_{j-1}| over defined intervals
    signed_mean: float   # telescoping signed mean, kept for reference
    interval_count: int


def isi_distortion(synapse_trace: SynapseTrace,
                   report: SimReport) -> tuple[IsiSeries, IsiAverages]:
    """Distortion series per synapse plus averages over mesh traffic.

    Averages divide by the number of defined intervals (spikes with a
    predecessor on the same synapse) among synapses that crossed the mesh;
    a synapse with a single spike has no interval and is excluded.
    """
    delays = report.delays_by_synapse()
    distortions: dict[int, np.ndarray] = {}
    for syn, d in delays.items():
        expected = synapse_trace.spike_count(syn)
        if d.size != expected:
            raise ValidationError(
                f"synapse {syn}: {d.size} delivered spikes vs {expected} in trace"
            )
        distortions[syn] = np.diff(d).astype(np.float64)
    series = IsiSeries(synapse_trace, distortions)
    arrays = [v for v in distortions.values() if v.size]
    merged = np.concatenate(arrays) if arrays else np.empty(0)
    if merged.size:
        averages = IsiAverages(
            abs_mean=float(np.abs(merged).mean()),
            signed_mean=float(merged.mean()),
            interval_count=int(merged.size),
        )
    else:
        averages = IsiAverages(0.0, 0.0, 0)
    return series, averages


def spike_disorder(expected_rates, observed_rates) -> float:
    """Mean squared gap between expected and delivered rate sequences.

    Both arguments are the per-interval firing rates of one destination
    stream; they must have equal length. Empty input yields 0.
    """
    f = np.asarray(expected_rates, dtype=np.float64)
    f_hat = np.asarray(observed_rates, dtype=np.float64)
    if f.shape != f_hat.shape:
        raise ValidationError(
            f"rate vectors differ in length: {f.shape} vs {f_hat.shape}"
        )
    if f.size == 0:
        return 0.0
    return float(((f - f_hat) ** 2).mean())


def disorder_rates(expected_times, observed_times) -> tuple[np.ndarray, np.ndarray]:
    """Reciprocal-interval rate vectors for one arrival stream.

    Both inputs are sorted ascending before differencing; interval pairs where
    either side is zero (simultaneous arrivals) are dropped since their rate
    is undefined.
    """
    exp = np.sort(np.asarray(expected_times, dtype=np.float64))
    obs = np.sort(np.asarray(observed_times, dtype=np.float64))
    if exp.size != obs.size:
        raise ValidationError("expected and observed streams differ in length")
    if exp.size < 2:
        return np.empty(0), np.empty(0)
    d_exp = np.diff(exp)
    d_obs = np.diff(obs)
    keep = (d_exp > 0) & (d_obs > 0)
    return 1.0 / d_exp[keep], 1.0 / d_obs[keep]


def spike_disorder_summary(synapse_trace: SynapseTrace, report: SimReport,
                           hw: HardwareConfig) -> tuple[float, bool]:
    """Disorder averaged over destination neurons, plus a defined flag.

    Each destination neuron's stream merges the arrivals of all its incoming
    synapses: mesh traffic arrives after its measured delay (converted to
    milliseconds), everything else after a constant delay that cancels out of
    the rates. Neurons with fewer than two arrivals are undefined; when no
    neuron is defined the disorder is reported as 0 with the flag cleared.
    """
    graph = synapse_trace.graph
    delays = report.delays_by_synapse()
    expected: dict[int, list[np.ndarray]] = {}
    observed: dict[int, list[np.ndarray]] = {}
    for syn in range(graph.synapse_count):
        times = synapse_trace.times(syn)
        if times.size == 0:
            continue
        dst = int(graph.dst[syn])
        expected.setdefault(dst, []).append(times)
        d = delays.get(syn)
        if d is None:
            observed.setdefault(dst, []).append(times)
        else:
            if d.size != times.size:
                raise ValidationError(
                    f"synapse {syn}: {d.size} delivered spikes vs {times.size} in trace"
                )
            observed.setdefault(dst, []).append(times + d * hw.cycle_ms)
    values = []
    for dst in sorted(expected):
        f, f_hat = disorder_rates(np.concatenate(expected[dst]),
                                  np.concatenate(observed[dst]))
        if f.size:
            values.append(spike_disorder(f, f_hat))
    if not values:
        return 0.0, False
    return float(np.mean(values)), True


@dataclass(frozen=True)
class MetricSummary:
    n_s: int
    avg_latency_cycles: float
    avg_latency_from_hops: float
    total_energy_pj: float
    isi_distortion_abs: float
    isi_distortion_signed: float
    isi_interval_count: int
    spike_disorder: float
    spike_disorder_defined: bool


def build_summary(synapse_trace: SynapseTrace, report: SimReport,
                  hw: HardwareConfig) -> MetricSummary:
    _, averages = isi_distortion(synapse_trace, report)
    disorder, defined = spike_disorder_summary(synapse_trace, report, hw)
    return MetricSummary(
        n_s=report.n_s,
        avg_latency_cycles=avg_latency(report, hw),
        avg_latency_from_hops=avg_latency_from_hops(report, hw),
        total_energy_pj=total_energy(report, hw),
        isi_distortion_abs=averages.abs_mean,
        isi_distortion_signed=averages.signed_mean,
        isi_interval_count=averages.interval_count,
        spike_disorder=disorder,
        spike_disorder_defined=defined,
    )


def write_metrics(path, summary: MetricSummary) -> None:
    with open(Path(path), "w", encoding="utf-8") as fh:
        fh.write(f"n_s={summary.n_s}\n")
        fh.write(f"avg_latency={summary.avg_latency_cycles!r}\n")
        fh.write(f"total_energy_pj={summary.total_energy_pj!r}\n")
        fh.write(f"isi_distortion_abs={summary.isi_distortion_abs!r}\n")
        fh.write(f"isi_distortion_signed={summary.isi_distortion_signed!r}\n")
        fh.write(f"spike_disorder={summary.spike_disorder!r}\n")
