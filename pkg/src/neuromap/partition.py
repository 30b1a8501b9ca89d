"""Cluster an SNN into crossbar-sized groups, minimizing cross-cluster spikes.

The main algorithm is a greedy Kernighan-Lin-style refinement: starting from
an arbitrary even assignment into k = ceil(|N| / n_c) clusters, every cluster
pair is refined by moving or swapping neuron pairs whenever that strictly
lowers gs, the total spike count on synapses crossing clusters. Baseline
packers and an exhaustive oracle for small instances are included for
comparison and testing.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from enum import Enum
from itertools import combinations
from pathlib import Path

import numpy as np
from scipy import sparse

from .errors import ParseError, ValidationError
from .snn import SnnGraph

log = logging.getLogger(__name__)

_INF = float("inf")


class PartitionerKind(str, Enum):
    GREEDY = "greedy"          # pairwise move/swap refinement of an even start
    FILL = "fill"              # pack neurons in index order, minimizing clusters
    BALANCE = "balance"        # round-robin neurons for even crossbar utilization


@dataclass(frozen=True)
class Cluster:
    id: int
    members: tuple[int, ...]


class Partition:
    """Assignment of every neuron to one of k clusters of capacity n_c."""

    def __init__(self, assignment, n_c: int, k: int, gs: int | None = None):
        assignment = np.asarray(assignment, dtype=np.int64)
        if assignment.ndim != 1:
            raise ValidationError("assignment must be a 1-D array")
        if n_c < 1:
            raise ValidationError("cluster capacity n_c must be >= 1")
        if assignment.size:
            if assignment.min() < 0 or assignment.max() >= k:
                raise ValidationError("cluster ids must lie in [0, k)")
            sizes = np.bincount(assignment, minlength=k)
            if sizes.max(initial=0) > n_c:
                raise ValidationError(
                    f"cluster size {int(sizes.max())} exceeds capacity {n_c}"
                )
            if k and sizes.min() == 0:
                raise ValidationError("empty cluster in partition")
        self.assignment = assignment
        self.n_c = int(n_c)
        self.k = int(k)
        self.gs = None if gs is None else int(gs)

    @property
    def neuron_count(self) -> int:
        return int(self.assignment.size)

    def sizes(self) -> np.ndarray:
        return np.bincount(self.assignment, minlength=self.k)

    def clusters(self) -> list[Cluster]:
        return [
            Cluster(c, tuple(int(i) for i in np.flatnonzero(self.assignment == c)))
            for c in range(self.k)
        ]

    def members(self, c: int) -> np.ndarray:
        return np.flatnonzero(self.assignment == c)

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, Partition)
            and self.n_c == other.n_c
            and self.k == other.k
            and np.array_equal(self.assignment, other.assignment)
        )

    def __repr__(self) -> str:
        return f"Partition(neurons={self.neuron_count}, k={self.k}, n_c={self.n_c}, gs={self.gs})"

    def save(self, path) -> None:
        path = Path(path)
        gs = -1 if self.gs is None else self.gs
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(f"# k={self.k} n_c={self.n_c} gs={gs}\n")
            for neuron, c in enumerate(self.assignment):
                fh.write(f"{neuron},{c}\n")

    @classmethod
    def load(cls, path, graph: SnnGraph | None = None) -> "Partition":
        path = Path(path)
        k = n_c = gs = None
        rows: dict[int, int] = {}
        with open(path, "r", encoding="utf-8") as fh:
            for lineno, raw in enumerate(fh, start=1):
                line = raw.strip()
                if not line:
                    continue
                if line.startswith("#"):
                    for tok in line[1:].split():
                        if "=" in tok:
                            key, val = tok.split("=", 1)
                            try:
                                if key == "k":
                                    k = int(val)
                                elif key == "n_c":
                                    n_c = int(val)
                                elif key == "gs":
                                    gs = int(val)
                            except ValueError:
                                raise ParseError(f"malformed header token {tok!r}",
                                                 path, lineno)
                    continue
                parts = line.split(",")
                if len(parts) != 2:
                    raise ParseError(f"expected 'neuron,cluster', got {line!r}",
                                     path, lineno)
                try:
                    neuron, c = int(parts[0]), int(parts[1])
                except ValueError:
                    raise ParseError(f"non-integer field in {line!r}", path, lineno)
                if neuron in rows:
                    raise ParseError(f"duplicate assignment for neuron {neuron}",
                                     path, lineno)
                rows[neuron] = c
        if k is None or n_c is None:
            raise ParseError("missing '# k=<int> n_c=<int> gs=<int>' header", path)
        n = len(rows)
        if sorted(rows) != list(range(n)):
            raise ValidationError(f"{path}: neuron ids are not contiguous from 0")
        assignment = np.array([rows[i] for i in range(n)], dtype=np.int64)
        part = cls(assignment, n_c, k, gs=None if gs in (None, -1) else gs)
        if graph is not None:
            if graph.neuron_count != n:
                raise ValidationError(
                    f"{path}: partition covers {n} neurons, graph has {graph.neuron_count}"
                )
            part = Partition(assignment, n_c, k, gs=global_spike_count(graph, part))
        return part


def cluster_count(neuron_count: int, n_c: int) -> int:
    if n_c < 1:
        raise ValidationError("cluster capacity n_c must be >= 1")
    return max(1, math.ceil(neuron_count / n_c))


def initial_partition(graph: SnnGraph, n_c: int, seed: int = 0) -> Partition:
    """Evenly and arbitrarily distribute neurons over k clusters.

    Cluster sizes differ by at most one; the shuffle is seeded so results are
    reproducible.
    """
    n = graph.neuron_count
    k = cluster_count(n, n_c)
    rng = np.random.default_rng(seed)
    order = rng.permutation(n)
    assignment = np.empty(n, dtype=np.int64)
    base, rem = divmod(n, k)
    start = 0
    for c in range(k):
        size = base + (1 if c < rem else 0)
        assignment[order[start:start + size]] = c
        start += size
    part = Partition(assignment, n_c, k)
    part.gs = global_spike_count(graph, part)
    return part


def global_spike_count(graph: SnnGraph, partition: Partition) -> int:
    """Total spikes on synapses whose endpoints sit in different clusters."""
    if partition.neuron_count != graph.neuron_count:
        raise ValidationError(
            f"partition covers {partition.neuron_count} neurons, "
            f"graph has {graph.neuron_count}"
        )
    if graph.synapse_count == 0:
        return 0
    crossing = partition.assignment[graph.src] != partition.assignment[graph.dst]
    return int(graph.weight[crossing].sum())


def check_fan_in(graph: SnnGraph, n_c: int) -> np.ndarray:
    """Neurons whose fan-in exceeds the crossbar row limit (reported, not enforced)."""
    fan_in = np.bincount(graph.dst, minlength=graph.neuron_count)
    over = np.flatnonzero(fan_in > n_c)
    if over.size:
        log.warning(
            "%d neuron(s) have fan-in above the crossbar row limit %d (max %d)",
            over.size, n_c, int(fan_in.max()),
        )
    return over


class _Refiner:
    """Shared state for pairwise refinement over one assignment array.

    Keeps a symmetric weight matrix (self-loops removed, both directions
    summed) so the gs delta of moving a neuron between the two clusters of a
    pair is a difference of two cached link totals.
    """

    def __init__(self, graph: SnnGraph, assignment: np.ndarray, n_c: int, k: int,
                 gs_log: list | None = None):
        n = graph.neuron_count
        w = sparse.csr_matrix(
            (graph.weight.astype(np.int64), (graph.src, graph.dst)), shape=(n, n)
        )
        sym = (w + w.T).tocsr()
        diag = sym.diagonal()
        if diag.any():
            sym = sym - sparse.diags(diag, 0, shape=sym.shape, format="csr")
            sym.eliminate_zeros()
        self.sym = sym
        self.graph = graph
        self.assignment = assignment
        self.n_c = n_c
        self.k = k
        self.sizes = np.bincount(assignment, minlength=k)
        self.gs = global_spike_count(graph, Partition(assignment, n_c, k))
        self.gs_log = gs_log
        if gs_log is not None:
            gs_log.append(self.gs)

    def refine_pair(self, ci: int, cj: int) -> bool:
        """Refine clusters ci and cj; returns True if gs improved.

        Passes scan neuron pairs in ascending (n_i, n_j) index order. At each
        pair the three candidate updates are scored: move n_i into cj, move
        n_j into ci, or swap the two. The best strictly improving option is
        applied; moved neurons are locked for the rest of the pass. Passes
        repeat while gs keeps dropping.
        """
        assignment, sizes, n_c = self.assignment, self.sizes, self.n_c
        union = np.flatnonzero((assignment == ci) | (assignment == cj))
        if union.size < 2:
            return False
        w_uu = self.sym[union][:, union].toarray().astype(np.float64)
        in_i = assignment[union] == ci
        link_i = w_uu @ in_i.astype(np.float64)    # weight to current members of ci
        link_j = w_uu.sum(axis=1) - link_i
        improved = False

        if w_uu.max(initial=0) == 0:
            return False                           # no pair-internal traffic to save
        while True:
            rows = np.flatnonzero(in_i)            # ascending neuron index
            cols = np.flatnonzero(~in_i)
            if rows.size == 0 or cols.size == 0:
                break
            w_sub = w_uu[np.ix_(rows, cols)]
            visited = np.zeros(union.size, dtype=bool)
            ri, cptr = 0, 0
            applied = False
            while ri < rows.size:
                rs = rows[ri:]
                d_i = link_i[rs] - link_j[rs]      # gs delta: move row neuron -> cj
                d_j = link_j[cols] - link_i[cols]  # gs delta: move col neuron -> ci
                d_i[visited[rs]] = _INF
                d_j[visited[cols]] = _INF
                allow_i = sizes[cj] < n_c and sizes[ci] > 1
                allow_j = sizes[ci] < n_c and sizes[cj] > 1
                m1 = d_i if allow_i else np.full(rs.size, _INF)
                m2 = d_j if allow_j else np.full(cols.size, _INF)
                d3 = d_i[:, None] + d_j[None, :] + 2.0 * w_sub[ri:]
                best = np.minimum(np.minimum(m1[:, None], m2[None, :]), d3)
                if cptr > 0:
                    best[0, :cptr] = _INF
                hit = np.flatnonzero((best < 0).ravel())
                if hit.size == 0:
                    break
                ra, cb = divmod(int(hit[0]), cols.size)
                ra += ri
                choice = self._choose(
                    float(m1[ra - ri]), float(m2[cb]), float(d3[ra - ri, cb]),
                    ci, cj, int(union[rows[ra]]), int(union[cols[cb]]),
                )
                self._apply(choice, union, rows[ra], cols[cb], ci, cj,
                            in_i, link_i, link_j, w_uu, visited)
                applied = True
                improved = True
                if choice == "move_j":
                    ri, cptr = ra, cb + 1
                else:
                    ri, cptr = ra + 1, 0
            if not applied:
                break
        return improved

    def _choose(self, d1: float, d2: float, d3: float,
                ci: int, cj: int, ni: int, nj: int) -> str:
        best = min(d1, d2, d3)
        if d3 == best:
            return "swap"                          # ties prefer the swap
        if d1 == best and d2 == best:
            si, sj = self.sizes[ci], self.sizes[cj]
            if si != sj:
                return "move_i" if si < sj else "move_j"
            return "move_i" if ni < nj else "move_j"
        return "move_i" if d1 == best else "move_j"

    def _apply(self, choice: str, union, rpos: int, cpos: int, ci: int, cj: int,
               in_i, link_i, link_j, w_uu, visited) -> None:
        # For a swap the second read happens after the first move's link
        # update, which is exactly the sequential-move delta of the swap
        # (any synapse between the two neurons stays crossing).
        delta = 0.0
        if choice in ("move_i", "swap"):
            delta += link_i[rpos] - link_j[rpos]
            self._move(union, rpos, cj, in_i, link_i, link_j, w_uu, visited)
        if choice in ("move_j", "swap"):
            delta += link_j[cpos] - link_i[cpos]
            self._move(union, cpos, ci, in_i, link_i, link_j, w_uu, visited)
        self.gs += int(round(delta))
        if self.gs_log is not None:
            self.gs_log.append(self.gs)

    def _move(self, union, pos: int, target: int,
              in_i, link_i, link_j, w_uu, visited) -> None:
        neuron = int(union[pos])
        source = int(self.assignment[neuron])
        self.assignment[neuron] = target
        self.sizes[source] -= 1
        self.sizes[target] += 1
        if in_i[pos]:
            link_i -= w_uu[pos]
            link_j += w_uu[pos]
        else:
            link_j -= w_uu[pos]
            link_i += w_uu[pos]
        in_i[pos] = not in_i[pos]
        visited[pos] = True


def two_part(graph: SnnGraph, partition: Partition, i: int, j: int,
             gs_log: list | None = None) -> Partition:
    """Refine one cluster pair; returns the input partition if nothing improves."""
    if i == j:
        raise ValidationError("two_part needs two distinct clusters")
    if not (0 <= i < partition.k and 0 <= j < partition.k):
        raise ValidationError("cluster id out of range")
    refiner = _Refiner(graph, partition.assignment.copy(), partition.n_c,
                       partition.k, gs_log)
    if not refiner.refine_pair(i, j):
        return partition
    return Partition(refiner.assignment, partition.n_c, partition.k, gs=refiner.gs)


def cluster(graph: SnnGraph, n_c: int, seed: int = 0, *,
            sweep_until_stable: bool = True,
            gs_log: list | None = None) -> Partition:
    """Greedy spike-minimizing partition into exactly ceil(|N| / n_c) clusters.

    Applies pairwise refinement to every cluster pair in ascending order.
    With sweep_until_stable (the default) the pair loop repeats until no pair
    improves, which leaves the result with no single improving move or swap
    between any two clusters; a single sweep follows the bare procedure.
    """
    start = initial_partition(graph, n_c, seed)
    check_fan_in(graph, n_c)
    if start.k == 1:
        if gs_log is not None:
            gs_log.append(start.gs)
        return start
    refiner = _Refiner(graph, start.assignment.copy(), n_c, start.k, gs_log)
    while True:
        any_improved = False
        for ci, cj in combinations(range(start.k), 2):
            if refiner.refine_pair(ci, cj):
                any_improved = True
        if not (sweep_until_stable and any_improved):
            break
    part = Partition(refiner.assignment, n_c, start.k, gs=refiner.gs)
    log.info("clustered %d neurons into k=%d: gs %d -> %d",
             graph.neuron_count, part.k, start.gs, part.gs)
    return part


def partition_baseline(graph: SnnGraph, n_c: int, kind: PartitionerKind,
                       seed: int = 0) -> Partition:
    """Index-order packing ('fill') or round-robin utilization balancing ('balance')."""
    kind = PartitionerKind(kind)
    if kind == PartitionerKind.GREEDY:
        return cluster(graph, n_c, seed)
    n = graph.neuron_count
    k = cluster_count(n, n_c)
    idx = np.arange(n, dtype=np.int64)
    if kind == PartitionerKind.FILL:
        assignment = idx // n_c
    else:
        assignment = idx % k
    part = Partition(assignment, n_c, k)
    part.gs = global_spike_count(graph, part)
    return part


def brute_force_partition(graph: SnnGraph, n_c: int, max_neurons: int = 12) -> Partition:
    """Exhaustive minimum-gs partition over all capacity-respecting assignments.

    Enumerates assignments into exactly k clusters up to cluster relabeling
    (first occupant of each cluster has the lowest index). Guarded to small
    graphs; intended as a test oracle.
    """
    n = graph.neuron_count
    if n > max_neurons:
        raise ValidationError(
            f"brute force is guarded to |N| <= {max_neurons}, got {n}"
        )
    k = cluster_count(n, n_c)
    # weight between neuron pairs, both directions summed, self-loops dropped
    pair_w = [[] for _ in range(n)]   # per neuron: (earlier neighbor, weight)
    acc: dict[tuple[int, int], int] = {}
    for s, d, w in zip(graph.src, graph.dst, graph.weight):
        if s == d:
            continue
        key = (min(int(s), int(d)), max(int(s), int(d)))
        acc[key] = acc.get(key, 0) + int(w)
    for (a, b), w in acc.items():
        pair_w[b].append((a, w))

    best_gs = None
    best_assignment = None
    assignment = np.zeros(n, dtype=np.int64)
    sizes = [0] * k

    def rec(i: int, used: int, partial: int) -> None:
        nonlocal best_gs, best_assignment
        if best_gs is not None and partial >= best_gs:
            return
        if i == n:
            if used == k:
                best_gs = partial
                best_assignment = assignment.copy()
            return
        remaining = n - i
        for c in range(min(used + 1, k)):
            opens = c == used
            if opens and used == k:
                continue
            if sizes[c] >= n_c:
                continue
            # enough neurons must remain to open all k clusters
            if remaining - 1 < k - (used + 1 if opens else used):
                continue
            added = sum(w for nb, w in pair_w[i] if assignment[nb] != c)
            assignment[i] = c
            sizes[c] += 1
            rec(i + 1, used + 1 if opens else used, partial + added)
            sizes[c] -= 1
        assignment[i] = 0

    rec(0, 0, 0)
    if best_assignment is None:
        raise ValidationError("no feasible partition found")
    return Partition(best_assignment, n_c, k, gs=best_gs)
