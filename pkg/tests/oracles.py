"""Independent reference implementations used to check the real code paths.

Everything here recomputes results by enumeration or direct definition and
must stay decoupled from the algorithms under test.
"""

from __future__ import annotations

import itertools

import numpy as np

from neuromap import Partition, SnnGraph, global_spike_count
from neuromap.hardware import CrossbarCoord


def crossing_spikes_by_enumeration(graph: SnnGraph, assignment) -> int:
    """Definitional gs: walk every synapse and compare endpoint clusters."""
    total = 0
    for s in graph.synapses():
        if assignment[s.src] != assignment[s.dst]:
            total += s.spike_count
    return total


def improving_step_exists(graph: SnnGraph, partition: Partition) -> bool:
    """Exhaustively try every single move and every pairwise swap."""
    gs0 = global_spike_count(graph, partition)
    sizes = partition.sizes()
    members = [np.flatnonzero(partition.assignment == c) for c in range(partition.k)]
    for ci, cj in itertools.permutations(range(partition.k), 2):
        if sizes[cj] >= partition.n_c or sizes[ci] <= 1:
            continue
        for neuron in members[ci]:
            alt = partition.assignment.copy()
            alt[neuron] = cj
            if crossing_spikes_by_enumeration(graph, alt) < gs0:
                return True
    for ci, cj in itertools.combinations(range(partition.k), 2):
        for a in members[ci]:
            for b in members[cj]:
                alt = partition.assignment.copy()
                alt[a], alt[b] = cj, ci
                if crossing_spikes_by_enumeration(graph, alt) < gs0:
                    return True
    return False


def enumerate_partitions(n: int, k: int, n_c: int):
    """All assignments of n neurons into exactly k clusters of size <= n_c,
    canonical up to relabeling (first occupant has the lowest index)."""
    assignment = [0] * n

    def rec(i: int, used: int):
        if i == n:
            if used == k:
                yield tuple(assignment)
            return
        for c in range(min(used + 1, k)):
            if assignment[:i].count(c) >= n_c and c < used:
                continue
            if c == used and sum(1 for x in assignment[:i] if x == c) >= n_c:
                continue
            if (n - i - 1) < k - (used + 1 if c == used else used):
                continue
            assignment[i] = c
            yield from rec(i + 1, used + 1 if c == used else used)
        assignment[i] = 0

    yield from rec(0, 0)


def best_partition_by_enumeration(graph: SnnGraph, k: int, n_c: int) -> int:
    best = None
    for assignment in enumerate_partitions(graph.neuron_count, k, n_c):
        sizes = [assignment.count(c) for c in range(k)]
        if max(sizes) > n_c:
            continue
        gs = crossing_spikes_by_enumeration(graph, assignment)
        if best is None or gs < best:
            best = gs
    return best


def path_directions(path) -> list[str]:
    out = []
    for a, b in zip(path, path[1:]):
        if b.x == a.x + 1:
            out.append("E")
        elif b.x == a.x - 1:
            out.append("W")
        elif b.y == a.y + 1:
            out.append("N")
        elif b.y == a.y - 1:
            out.append("S")
        else:
            raise AssertionError(f"non-adjacent step {a} -> {b}")
    return out


def assert_minimal_path(path, src: CrossbarCoord, dst: CrossbarCoord) -> None:
    assert path[0] == src and path[-1] == dst
    assert len(path) == abs(src.x - dst.x) + abs(src.y - dst.y) + 1
    dirs = path_directions(path)
    # minimal means every step is productive: one X direction, one Y direction
    assert len(set(d for d in dirs if d in "EW")) <= 1
    assert len(set(d for d in dirs if d in "NS")) <= 1


def assert_turn_sound(path, kind: str) -> None:
    dirs = path_directions(path)
    if kind == "xy":
        seen_y = False
        for d in dirs:
            if d in "NS":
                seen_y = True
            elif seen_y:
                raise AssertionError(f"XY path turned back to X: {dirs}")
    elif kind == "northlast":
        seen_n = False
        for d in dirs:
            if d == "N":
                seen_n = True
            elif seen_n:
                raise AssertionError(f"north-last path turned after north: {dirs}")
    elif kind == "westfirst":
        seen_other = False
        for d in dirs:
            if d != "W":
                seen_other = True
            elif seen_other:
                raise AssertionError(f"west-first path went west late: {dirs}")
    else:
        raise AssertionError(f"unknown routing kind {kind}")


def best_placement_by_enumeration(traffic: np.ndarray, coords_of, v: int,
                                  k: int) -> float:
    """Reference optimum of the packet-weighted mean hop count."""
    total = traffic.sum()
    best = None
    for perm in itertools.permutations(range(v), k):
        if total == 0:
            return 0.0
        acc = 0.0
        for i in range(k):
            for j in range(k):
                if traffic[i, j]:
                    a, b = coords_of(perm[i]), coords_of(perm[j])
                    hops = abs(a.x - b.x) + abs(a.y - b.y) + 1
                    acc += traffic[i, j] * hops
        value = acc / total
        if best is None or value < best:
            best = value
    return best
