"""Binary particle-swarm placement of clusters onto mesh crossbars.

A candidate placement is a binary matrix with one row per cluster and one
column per crossbar: row sums are exactly 1 (a cluster sits on one crossbar)
and column sums at most 1 (a crossbar holds at most one cluster). Particles
keep a real-valued position and velocity of that shape. Velocities move
toward each particle's best and the swarm's best and are squashed through a
sigmoid to sample fresh binary positions, which a repair step pulls back onto
the constraint set. Fitness is the mean hop count of delivered spikes, either
measured by the cycle-accurate mesh simulation or computed in closed form
from the traffic matrix (identical under minimal routing, far cheaper).
"""

from __future__ import annotations

import itertools
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from enum import Enum
from pathlib import Path

import numpy as np

from .errors import InfeasibleError, ParseError, ValidationError
from .hardware import CrossbarCoord, HardwareConfig
from .nocsim import compile_traffic, packet_counts, simulate
from .partition import Partition
from .snn import SynapseTrace

log = logging.getLogger(__name__)


class FitnessMode(str, Enum):
    CYCLE_ACCURATE = "cycle"
    ANALYTIC_HOPS = "analytic"


class BinarizeOrientation(str, Enum):
    # inverted: a strongly positive velocity drives the bit to 0
    INVERTED = "inverted"
    CONVENTIONAL = "conventional"


@dataclass(frozen=True)
class PsoConfig:
    particles: int = 20
    iterations: int = 100
    phi1: float = 0.8
    phi2: float = 0.8
    seed: int = 0
    fitness_mode: FitnessMode = FitnessMode.CYCLE_ACCURATE
    orientation: BinarizeOrientation = BinarizeOrientation.INVERTED
    velocity_clamp: float | None = 6.0
    jobs: int = 1

    def __post_init__(self):
        if self.particles < 1 or self.iterations < 1:
            raise ValidationError("particles and iterations must be >= 1")
        if self.phi1 < 0 or self.phi2 < 0:
            raise ValidationError("acceleration constants must be non-negative")
        if self.velocity_clamp is not None and self.velocity_clamp <= 0:
            raise ValidationError("velocity_clamp must be positive or None")
        if self.jobs < 1:
            raise ValidationError("jobs must be >= 1")


class MappingMatrix:
    """Binary cluster-to-crossbar assignment satisfying the row/column rules."""

    def __init__(self, bits):
        bits = np.asarray(bits, dtype=np.int8)
        if bits.ndim != 2:
            raise ValidationError("mapping matrix must be 2-D")
        self.bits = bits
        self.validate()

    def validate(self) -> None:
        rows = self.bits.sum(axis=1)
        cols = self.bits.sum(axis=0)
        if not np.all(rows == 1):
            raise ValidationError("every cluster must map to exactly one crossbar")
        if cols.max(initial=0) > 1:
            raise ValidationError("a crossbar can hold at most one cluster")

    @classmethod
    def from_assignment(cls, assignment, crossbar_count: int) -> "MappingMatrix":
        assignment = np.asarray(assignment, dtype=np.int64)
        bits = np.zeros((assignment.size, crossbar_count), dtype=np.int8)
        bits[np.arange(assignment.size), assignment] = 1
        return cls(bits)

    @property
    def cluster_count(self) -> int:
        return self.bits.shape[0]

    @property
    def crossbar_count(self) -> int:
        return self.bits.shape[1]

    @property
    def assignment(self) -> np.ndarray:
        return self.bits.argmax(axis=1)

    def coords(self, hw: HardwareConfig) -> list[CrossbarCoord]:
        if self.crossbar_count != hw.crossbar_count:
            raise ValidationError(
                f"mapping has {self.crossbar_count} crossbars, hardware has "
                f"{hw.crossbar_count}"
            )
        return [hw.coord_of(int(c)) for c in self.assignment]

    def __eq__(self, other) -> bool:
        return isinstance(other, MappingMatrix) and np.array_equal(self.bits, other.bits)

    def save(self, path, hw: HardwareConfig, fitness: float = 0.0,
             iterations: int = 0, seed: int = 0) -> None:
        coords = self.coords(hw)
        with open(Path(path), "w", encoding="utf-8") as fh:
            fh.write(f"# fitness={fitness!r} iterations={iterations} seed={seed}\n")
            for c, coord in enumerate(coords):
                fh.write(f"{c},{coord.x},{coord.y}\n")

    @classmethod
    def load(cls, path, hw: HardwareConfig) -> tuple["MappingMatrix", dict]:
        path = Path(path)
        header: dict = {}
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
                                header[key] = float(val) if key == "fitness" else int(val)
                            except ValueError:
                                raise ParseError(f"malformed header token {tok!r}",
                                                 path, lineno)
                    continue
                parts = line.split(",")
                if len(parts) != 3:
                    raise ParseError(
                        f"expected 'cluster,crossbar_x,crossbar_y', got {line!r}",
                        path, lineno)
                try:
                    c, x, y = (int(p) for p in parts)
                except ValueError:
                    raise ParseError(f"non-integer field in {line!r}", path, lineno)
                coord = CrossbarCoord(x, y)
                if not hw.in_bounds(coord):
                    raise ParseError(f"crossbar ({x},{y}) outside mesh", path, lineno)
                if c in rows:
                    raise ParseError(f"duplicate cluster {c}", path, lineno)
                rows[c] = hw.id_of(coord)
        k = len(rows)
        if sorted(rows) != list(range(k)):
            raise ValidationError(f"{path}: cluster ids are not contiguous from 0")
        assignment = np.array([rows[c] for c in range(k)], dtype=np.int64)
        return cls.from_assignment(assignment, hw.crossbar_count), header


@dataclass
class Particle:
    theta: np.ndarray            # real-valued position
    velocity: np.ndarray
    binary: MappingMatrix
    best: MappingMatrix
    best_fitness: float
    rng: np.random.Generator


@dataclass
class SwarmState:
    particles: list[Particle]
    best: MappingMatrix | None
    best_fitness: float


def init_swarm(k: int, v: int, cfg: PsoConfig) -> SwarmState:
    """Seeded swarm of uniformly random valid injections with zero velocity."""
    if v < k:
        raise InfeasibleError(f"{k} clusters cannot map onto {v} crossbars")
    particles = []
    for idx in range(cfg.particles):
        rng = np.random.default_rng([cfg.seed, idx])
        assignment = rng.permutation(v)[:k]
        binary = MappingMatrix.from_assignment(assignment, v)
        particles.append(Particle(
            theta=binary.bits.astype(np.float64),
            velocity=np.zeros((k, v), dtype=np.float64),
            binary=binary,
            best=binary,
            best_fitness=math.inf,
            rng=rng,
        ))
    return SwarmState(particles=particles, best=None, best_fitness=math.inf)


def update_velocity_position(particle: Particle, g_best: MappingMatrix,
                             cfg: PsoConfig) -> Particle:
    """Accelerate toward the particle's best and the swarm's best positions."""
    p_best = particle.best.bits.astype(np.float64)
    g_bits = g_best.bits.astype(np.float64)
    v = (particle.velocity
         + cfg.phi1 * (p_best - particle.theta)
         + cfg.phi2 * (g_bits - particle.theta))
    if cfg.velocity_clamp is not None:
        np.clip(v, -cfg.velocity_clamp, cfg.velocity_clamp, out=v)
    particle.velocity = v
    particle.theta = particle.theta + v
    return particle


def sigmoid(velocity) -> np.ndarray:
    return 1.0 / (1.0 + np.exp(-np.asarray(velocity, dtype=np.float64)))


def binarize(velocity: np.ndarray, rng: np.random.Generator,
             orientation: BinarizeOrientation = BinarizeOrientation.INVERTED
             ) -> MappingMatrix:
    """Sample a valid binary position from sigmoid-squashed velocities.

    Draws are per entry in row-major order. Under the default inverted
    orientation a draw below sigmoid(v) yields bit 0; the conventional
    orientation yields bit 1. The raw sample is then repaired onto the
    one-crossbar-per-cluster constraint set.
    """
    v_hat = sigmoid(velocity)
    draws = rng.random(velocity.shape)
    if BinarizeOrientation(orientation) == BinarizeOrientation.INVERTED:
        raw = np.where(draws < v_hat, 0, 1).astype(np.int8)
    else:
        raw = np.where(draws < v_hat, 1, 0).astype(np.int8)
    return MappingMatrix(repair(raw, v_hat))


def repair(raw: np.ndarray, v_hat: np.ndarray) -> np.ndarray:
    """Project raw bits onto the constraint set, preferring high-sigmoid slots.

    Rows keep their highest-preference one; column conflicts keep the
    highest-preference claimant; displaced or empty rows land on the free
    column they prefer most. Valid input passes through unchanged.
    """
    bits = np.array(raw, dtype=np.int8, copy=True)
    k, v = bits.shape
    if v < k:
        raise InfeasibleError(f"{k} clusters cannot map onto {v} crossbars")
    for r in range(k):
        ones = np.flatnonzero(bits[r])
        if ones.size > 1:
            keep = ones[int(np.argmax(v_hat[r, ones]))]
            bits[r] = 0
            bits[r, keep] = 1
    for c in range(v):
        claimants = np.flatnonzero(bits[:, c])
        if claimants.size > 1:
            keep = claimants[int(np.argmax(v_hat[claimants, c]))]
            bits[:, c] = 0
            bits[keep, c] = 1
    free = [c for c in range(v) if not bits[:, c].any()]
    for r in np.flatnonzero(bits.sum(axis=1) == 0):
        pick = free[int(np.argmax(v_hat[r, free]))]
        bits[r, pick] = 1
        free.remove(pick)
    return bits


def _hop_matrix(coords: list[CrossbarCoord]) -> np.ndarray:
    xs = np.array([c.x for c in coords], dtype=np.int64)
    ys = np.array([c.y for c in coords], dtype=np.int64)
    return (np.abs(xs[:, None] - xs[None, :])
            + np.abs(ys[:, None] - ys[None, :]) + 1)


def analytic_fitness(traffic: np.ndarray, coords: list[CrossbarCoord]) -> float:
    """Packet-weighted mean hop count; 0 when nothing crosses the mesh."""
    total = int(traffic.sum())
    if total == 0:
        return 0.0
    return float((traffic * _hop_matrix(coords)).sum() / total)


def fitness(mapping: MappingMatrix, partition: Partition,
            synapse_trace: SynapseTrace, hw: HardwareConfig,
            mode: FitnessMode = FitnessMode.CYCLE_ACCURATE) -> float:
    """Mean hops per delivered spike for one placement."""
    mapping.validate()
    coords = mapping.coords(hw)
    if FitnessMode(mode) == FitnessMode.ANALYTIC_HOPS:
        return analytic_fitness(packet_counts(partition, synapse_trace), coords)
    packets = compile_traffic(partition, coords, synapse_trace, hw)
    if not packets:
        return 0.0
    report = simulate(packets, hw)
    return report.total_hops / report.n_s


@dataclass
class PsoResult:
    mapping: MappingMatrix
    fitness: float
    history: list[float]


def run_pso(partition: Partition, synapse_trace: SynapseTrace,
            hw: HardwareConfig, cfg: PsoConfig,
            on_iteration=None) -> PsoResult:
    """Iterate evaluate / update-bests / move for the configured iteration count.

    The returned history holds the swarm-best fitness after each iteration's
    evaluations and is non-increasing. Per-particle random streams make the
    result independent of evaluation concurrency.
    """
    k = partition.k
    v = hw.crossbar_count
    if v < k:
        raise InfeasibleError(f"{k} clusters cannot map onto {v} crossbars")
    traffic = packet_counts(partition, synapse_trace)
    mode = FitnessMode(cfg.fitness_mode)
    cache: dict[tuple, float] = {}

    def evaluate(mapping: MappingMatrix) -> float:
        key = tuple(int(c) for c in mapping.assignment)
        hit = cache.get(key)
        if hit is not None:
            return hit
        if mode == FitnessMode.ANALYTIC_HOPS:
            value = analytic_fitness(traffic, mapping.coords(hw))
        else:
            value = fitness(mapping, partition, synapse_trace, hw, mode)
        cache[key] = value
        return value

    swarm = init_swarm(k, v, cfg)
    history: list[float] = []
    for it in range(cfg.iterations):
        positions = [p.binary for p in swarm.particles]
        if cfg.jobs > 1:
            with ThreadPoolExecutor(max_workers=cfg.jobs) as pool:
                values = list(pool.map(evaluate, positions))
        else:
            values = [evaluate(pos) for pos in positions]
        for particle, value in zip(swarm.particles, values):
            if value < particle.best_fitness:
                particle.best_fitness = value
                particle.best = particle.binary
        for particle in swarm.particles:
            if particle.best_fitness < swarm.best_fitness:
                swarm.best_fitness = particle.best_fitness
                swarm.best = particle.best
        history.append(swarm.best_fitness)
        if on_iteration is not None:
            on_iteration(it, swarm)
        for particle in swarm.particles:
            update_velocity_position(particle, swarm.best, cfg)
            particle.binary = binarize(particle.velocity, particle.rng,
                                       cfg.orientation)
    log.info("placement search: fitness %.4f after %d iterations",
             swarm.best_fitness, cfg.iterations)
    return PsoResult(mapping=swarm.best, fitness=swarm.best_fitness,
                     history=history)


def brute_force_placement(partition: Partition, synapse_trace: SynapseTrace,
                          hw: HardwareConfig,
                          limit: int = 10 ** 6) -> tuple[MappingMatrix, float]:
    """Exhaustive optimum over all injections of clusters into crossbars."""
    k = partition.k
    v = hw.crossbar_count
    if v < k:
        raise InfeasibleError(f"{k} clusters cannot map onto {v} crossbars")
    count = math.perm(v, k)
    if count > limit:
        raise ValidationError(
            f"{count} candidate mappings exceed the brute-force guard of {limit}"
        )
    traffic = packet_counts(partition, synapse_trace)
    all_coords = [hw.coord_of(i) for i in range(v)]
    hops = _hop_matrix(all_coords).astype(np.float64)
    total = float(traffic.sum())
    best_perm = None
    best_fit = math.inf
    for perm in itertools.permutations(range(v), k):
        idx = np.fromiter(perm, dtype=np.int64, count=k)
        fit = 0.0 if total == 0 else float(
            (traffic * hops[np.ix_(idx, idx)]).sum() / total)
        if fit < best_fit:
            best_fit = fit
            best_perm = idx
    return MappingMatrix.from_assignment(best_perm, v), best_fit
