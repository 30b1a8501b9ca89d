"""Trace-driven, cycle-accurate simulation of spikes on the mesh interconnect.

Traffic compilation turns a placed partition plus a synapse-level trace into
packets: one packet per (source spike, distinct destination crossbar). Spikes
on intra-cluster synapses never enter the mesh. A packet is a single flit
(spikes carry only an address), forwarded store-and-forward: each switch adds
l_s cycles, each link l_w cycles, one packet crosses a given output port per
cycle, input FIFOs hold at most buffer_depth packets, and contending input
ports are arbitrated round-robin per output port. A packet advances only when
the downstream FIFO has a free slot; injection stalls outside the mesh when
the source FIFO is full. All of it is deterministic for a fixed packet list.
"""

from __future__ import annotations

import heapq
import logging
from collections import Counter, deque
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import SimulationStall, ValidationError
from .hardware import CrossbarCoord, HardwareConfig, RoutingKind, manhattan, next_hop_xy
from .partition import Partition
from .snn import SynapseTrace

log = logging.getLogger(__name__)

# input/output port layout: 0 local (inject/eject), then N, E, S, W
_PORT_LOCAL, _PORT_N, _PORT_E, _PORT_S, _PORT_W = range(5)
_OPPOSITE = {_PORT_N: _PORT_S, _PORT_E: _PORT_W, _PORT_S: _PORT_N, _PORT_W: _PORT_E}


@dataclass
class SpikePacket:
    """One spike crossing the mesh, possibly covering several synapses.

    Synapses of the same source neuron that land in the same destination
    crossbar share a packet (multicast by address); synapse_ids lists every
    synapse the packet serves and seq is the source neuron's spike index,
    which is also each covered synapse's spike index.
    """

    synapse_ids: tuple[int, ...]
    seq: int
    src: CrossbarCoord
    dst: CrossbarCoord
    inject_cycle: int
    deliver_cycle: int | None = None
    hops_traversed: int = 0

    @property
    def delay(self) -> int:
        if self.deliver_cycle is None:
            raise ValidationError("packet not delivered yet")
        return self.deliver_cycle - self.inject_cycle

    def sort_key(self):
        return (self.inject_cycle, self.synapse_ids[0], self.seq)


class RouterState:
    """Per-crossbar switch state: input FIFOs plus output-port bookkeeping."""

    __slots__ = ("fifos", "rr", "out_grant_cycle", "in_grant_cycle")

    def __init__(self):
        self.fifos = [deque() for _ in range(5)]
        self.rr = [0] * 5                 # round-robin pointer per output port
        self.out_grant_cycle = [-1] * 5   # output port busy-until marker
        self.in_grant_cycle = [-1] * 5    # one head pops per input per cycle


@dataclass
class SimReport:
    packets: list[SpikePacket]
    injected: int
    delivered: int
    link_counts: dict[tuple[int, int], int]
    mesh_width: int
    mesh_height: int

    @property
    def n_s(self) -> int:
        return len(self.packets)

    @property
    def total_hops(self) -> int:
        return sum(p.hops_traversed for p in self.packets)

    def delays(self) -> np.ndarray:
        return np.array([p.delay for p in self.packets], dtype=np.int64)

    def mean_delay(self) -> float:
        return float(self.delays().mean()) if self.packets else 0.0

    def max_delay(self) -> int:
        return int(self.delays().max()) if self.packets else 0

    def mean_hops(self) -> float:
        return self.total_hops / self.n_s if self.packets else 0.0

    def delays_by_synapse(self) -> dict[int, np.ndarray]:
        """Per-synapse delivery delays ordered by spike sequence."""
        acc: dict[int, list[tuple[int, int]]] = {}
        for p in self.packets:
            for syn in p.synapse_ids:
                acc.setdefault(syn, []).append((p.seq, p.delay))
        out: dict[int, np.ndarray] = {}
        for syn, pairs in acc.items():
            pairs.sort()
            out[syn] = np.array([d for _, d in pairs], dtype=np.int64)
        return out

    def write_packets_csv(self, path) -> None:
        rows = []
        for p in self.packets:
            for syn in p.synapse_ids:
                rows.append((syn, p.seq, p.inject_cycle, p.deliver_cycle,
                             p.hops_traversed))
        rows.sort()
        with open(Path(path), "w", encoding="utf-8") as fh:
            fh.write("synapse,seq,inject_cycle,deliver_cycle,hops\n")
            for row in rows:
                fh.write(",".join(str(v) for v in row) + "\n")

    def write_links_csv(self, path) -> None:
        with open(Path(path), "w", encoding="utf-8") as fh:
            fh.write("src_x,src_y,dst_x,dst_y,packets\n")
            for (a, b), count in sorted(self.link_counts.items()):
                ay, ax = divmod(a, self.mesh_width)
                by, bx = divmod(b, self.mesh_width)
                fh.write(f"{ax},{ay},{bx},{by},{count}\n")

    def summary_lines(self, link_csv_path: str = "") -> list[str]:
        lines = [
            f"n_s={self.n_s}",
            f"injected={self.injected}",
            f"delivered={self.delivered}",
            f"mean_delay_cycles={self.mean_delay()!r}",
            f"max_delay_cycles={self.max_delay()}",
            f"total_hops={self.total_hops}",
        ]
        if link_csv_path:
            lines.append(f"link_utilization_csv={link_csv_path}")
        return lines


def analytic_latency(src: CrossbarCoord, dst: CrossbarCoord,
                     hw: HardwareConfig) -> int:
    """Uncongested delay: h switches and h-1 wires on a minimal path."""
    h = manhattan(src, dst) + 1
    return (h - 1) * hw.l_w + h * hw.l_s


def compile_traffic(partition: Partition, placement: Sequence[CrossbarCoord],
                    synapse_trace: SynapseTrace,
                    hw: HardwareConfig) -> list[SpikePacket]:
    """Packets for every spike that must cross the mesh under this placement.

    A spike fanning out to d distinct remote crossbars becomes d packets;
    synapses sharing a destination crossbar share packets. Injection cycles
    quantize spike times by the configured cycle length.
    """
    graph = synapse_trace.graph
    _validate_placement(partition, placement, hw)
    assign = partition.assignment
    if graph.synapse_count == 0:
        return []
    src_cluster = assign[graph.src]
    dst_cluster = assign[graph.dst]
    global_ids = np.flatnonzero(src_cluster != dst_cluster)

    # group global synapses by (source neuron, destination cluster)
    groups: dict[tuple[int, int], list[int]] = {}
    for syn in global_ids:
        key = (int(graph.src[syn]), int(dst_cluster[syn]))
        groups.setdefault(key, []).append(int(syn))

    packets = []
    cycle_ms = hw.cycle_ms
    for (neuron, dcluster), syn_list in groups.items():
        times = synapse_trace.neuron_times[neuron]
        if times.size == 0:
            continue
        src_xy = placement[int(assign[neuron])]
        dst_xy = placement[dcluster]
        ids = tuple(sorted(syn_list))
        for seq, t in enumerate(times):
            packets.append(SpikePacket(
                synapse_ids=ids,
                seq=seq,
                src=src_xy,
                dst=dst_xy,
                inject_cycle=int(round(float(t) / cycle_ms)),
            ))
    packets.sort(key=SpikePacket.sort_key)
    return packets


def packet_counts(partition: Partition, synapse_trace: SynapseTrace) -> np.ndarray:
    """k-by-k matrix of mesh packet counts between cluster pairs.

    Independent of placement: packet replication depends only on which
    clusters a neuron's synapses reach.
    """
    graph = synapse_trace.graph
    k = partition.k
    counts = np.zeros((k, k), dtype=np.int64)
    if graph.synapse_count == 0:
        return counts
    assign = partition.assignment
    src_cluster = assign[graph.src]
    dst_cluster = assign[graph.dst]
    mask = src_cluster != dst_cluster
    if not mask.any():
        return counts
    seen: set[tuple[int, int]] = set()
    spike_counts = np.array([t.size for t in synapse_trace.neuron_times],
                            dtype=np.int64)
    for syn in np.flatnonzero(mask):
        neuron = int(graph.src[syn])
        key = (neuron, int(dst_cluster[syn]))
        if key in seen:
            continue
        seen.add(key)
        counts[int(src_cluster[syn]), key[1]] += spike_counts[neuron]
    return counts


def _validate_placement(partition: Partition, placement, hw: HardwareConfig) -> None:
    if len(placement) != partition.k:
        raise ValidationError(
            f"placement covers {len(placement)} clusters, partition has {partition.k}"
        )
    ids = set()
    for coord in placement:
        if not hw.in_bounds(coord):
            raise ValidationError(f"crossbar {coord} outside the {hw.mesh_width}x"
                                  f"{hw.mesh_height} mesh")
        ids.add(hw.id_of(coord))
    if len(ids) != len(placement):
        raise ValidationError("two clusters share a crossbar")


def simulate(packets: Sequence[SpikePacket], hw: HardwareConfig) -> SimReport:
    """Run all packets to delivery and record per-spike delays and link loads."""
    l_s, l_w, depth = hw.l_s, hw.l_w, hw.buffer_depth
    kind = RoutingKind(hw.routing)
    width, height = hw.mesh_width, hw.mesh_height
    hop_latency = l_s + l_w
    stall_limit = max(10 * (l_w + l_s) * max(width + height - 2, 1), 10)

    ordered = sorted(packets, key=SpikePacket.sort_key)
    for p in ordered:
        p.deliver_cycle = None
        p.hops_traversed = 0
        if not hw.in_bounds(p.src) or not hw.in_bounds(p.dst):
            raise ValidationError(f"packet endpoints {p.src}->{p.dst} outside mesh")

    total = len(ordered)
    if total == 0:
        return SimReport([], 0, 0, {}, width, height)

    routers: dict[int, RouterState] = {}
    inject: dict[int, deque] = {}
    for p in ordered:
        inject.setdefault(p.src.y * width + p.src.x, deque()).append(p)

    def get_router(rid: int) -> RouterState:
        r = routers.get(rid)
        if r is None:
            r = routers[rid] = RouterState()
        return r

    def occupancy(cur_xy, nxt_xy) -> int:
        nid = nxt_xy[1] * width + nxt_xy[0]
        r = routers.get(nid)
        if r is None:
            return 0
        if nxt_xy[0] != cur_xy[0]:
            port = _PORT_W if nxt_xy[0] > cur_xy[0] else _PORT_E
        else:
            port = _PORT_S if nxt_xy[1] > cur_xy[1] else _PORT_N
        return len(r.fifos[port])

    schedule: list[int] = []
    scheduled: set[int] = set()

    def push_cycle(c: int) -> None:
        if c not in scheduled:
            scheduled.add(c)
            heapq.heappush(schedule, c)

    blocked_inject: set[int] = set()
    for rid, queue in inject.items():
        push_cycle(queue[0].inject_cycle)
    occupied: set[int] = set()
    link_counts: Counter = Counter()
    delivered = 0
    last_progress = None

    while delivered < total:
        if not schedule:
            raise SimulationStall(
                f"{total - delivered} packet(s) stuck with no pending events"
            )
        t = heapq.heappop(schedule)
        scheduled.discard(t)
        if last_progress is None:
            last_progress = t

        # move due packets from the outside-the-mesh queue into source FIFOs
        retry_inject = False
        for rid in sorted(set(blocked_inject) |
                          {r for r, q in inject.items() if q and q[0].inject_cycle <= t}):
            queue = inject.get(rid)
            blocked_inject.discard(rid)
            if not queue:
                continue
            router = get_router(rid)
            fifo = router.fifos[_PORT_LOCAL]
            while queue and queue[0].inject_cycle <= t and len(fifo) < depth:
                fifo.append((t, queue.popleft()))
                occupied.add(rid)
                last_progress = t
            if queue and queue[0].inject_cycle <= t:
                blocked_inject.add(rid)
                retry_inject = True
            elif queue:
                push_cycle(queue[0].inject_cycle)

        # grant passes until the cycle quiesces
        any_grant = False
        any_denied = False
        while True:
            granted_this_pass = False
            for rid in sorted(occupied):
                router = routers[rid]
                cy, cx = divmod(rid, width)
                requests: dict[int, list[tuple[int, int, int]]] = {}
                for p_in in range(5):
                    fifo = router.fifos[p_in]
                    if not fifo:
                        continue
                    ready, pkt = fifo[0]
                    if ready > t or router.in_grant_cycle[p_in] == t:
                        continue
                    if pkt.dst.x == cx and pkt.dst.y == cy:
                        requests.setdefault(_PORT_LOCAL, []).append((p_in, -1, -1))
                        continue
                    nxt = next_hop_xy((cx, cy), (pkt.dst.x, pkt.dst.y), kind,
                                      occupancy)
                    if nxt[0] > cx:
                        out, entry = _PORT_E, _PORT_W
                    elif nxt[0] < cx:
                        out, entry = _PORT_W, _PORT_E
                    elif nxt[1] > cy:
                        out, entry = _PORT_N, _PORT_S
                    else:
                        out, entry = _PORT_S, _PORT_N
                    requests.setdefault(out, []).append(
                        (p_in, nxt[1] * width + nxt[0], entry))
                for out_port, reqs in sorted(requests.items()):
                    if router.out_grant_cycle[out_port] == t:
                        any_denied = True
                        continue
                    ptr = router.rr[out_port]
                    p_in, nxt_rid, entry = min(
                        reqs, key=lambda r: (r[0] - ptr) % 5)
                    if out_port != _PORT_LOCAL:
                        nfifo = get_router(nxt_rid).fifos[entry]
                        if len(nfifo) >= depth:
                            any_denied = True
                            continue
                    _, pkt = router.fifos[p_in].popleft()
                    router.in_grant_cycle[p_in] = t
                    router.out_grant_cycle[out_port] = t
                    router.rr[out_port] = (p_in + 1) % 5
                    pkt.hops_traversed += 1
                    if out_port == _PORT_LOCAL:
                        pkt.deliver_cycle = t + l_s
                        delivered += 1
                    else:
                        routers[nxt_rid].fifos[entry].append(
                            (t + hop_latency, pkt))
                        occupied.add(nxt_rid)
                        push_cycle(t + hop_latency)
                        link_counts[(rid, nxt_rid)] += 1
                    granted_this_pass = True
                    any_grant = True
                    last_progress = t
            if not granted_this_pass:
                break
        for rid in [r for r in occupied if not any(routers[r].fifos)]:
            occupied.discard(rid)

        if any_grant or any_denied or retry_inject:
            push_cycle(t + 1)
        if not any_grant and t - last_progress > stall_limit:
            raise SimulationStall(
                f"no packet progressed for {t - last_progress} cycles at cycle {t}"
            )

    report = SimReport(ordered, total, delivered, dict(link_counts), width, height)
    log.info("simulated %d packets: mean delay %.2f cycles, max %d",
             total, report.mean_delay(), report.max_delay())
    return report
