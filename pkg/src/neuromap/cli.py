"""Command-line pipeline: generate/ingest, partition, place, simulate, report.

Commands are deterministic given their seeds: reruns produce byte-identical
outputs. Exit codes: 0 success, 1 usage error, 2 validation error, 3
infeasibility (for example, fewer crossbars than clusters). Set NEUROMAP_LOG
to quiet, info, or debug to control stderr logging.
"""

from __future__ import annotations

import dataclasses
import json
import logging
import os
import sys
from dataclasses import dataclass, field, replace
from pathlib import Path

import click

from . import metrics as metrics_mod
from . import nocsim, snn
from . import partition as partition_mod
from .errors import InfeasibleError, NeuromapError
from .hardware import HardwareConfig, RoutingKind
from .partition import Partition, PartitionerKind
from .placer import (BinarizeOrientation, FitnessMode, MappingMatrix, PsoConfig,
                     run_pso)

log = logging.getLogger(__name__)

_LOG_LEVELS = {"quiet": logging.WARNING, "info": logging.INFO, "debug": logging.DEBUG}


def _setup_logging() -> None:
    name = os.environ.get("NEUROMAP_LOG", "info").lower()
    level = _LOG_LEVELS.get(name, logging.INFO)
    logging.basicConfig(level=level, stream=sys.stderr,
                        format="%(levelname)s %(name)s: %(message)s")


def _outdir(path) -> Path:
    out = Path(path)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _load_inputs(network, trace):
    graph = snn.load_network(network)
    spikes = snn.load_trace(trace, graph)
    graph = graph.with_weights_from(spikes)
    return graph, spikes, snn.derive_synapse_trace(graph, spikes)


def _resolve_hw(hw_path, k: int, n_c: int) -> HardwareConfig:
    if hw_path:
        hw = HardwareConfig.load(hw_path)
    else:
        hw = HardwareConfig.default_for_clusters(k, n_c=n_c)
    if hw.crossbar_count < k:
        raise InfeasibleError(
            f"hardware has {hw.crossbar_count} crossbars but the partition "
            f"needs {k}"
        )
    return hw


@click.group()
def cli() -> None:
    """Map spiking neural networks onto multi-crossbar mesh hardware."""


@cli.command()
@click.option("--workload", type=click.Choice(sorted(snn.WORKLOADS)),
              help="Named synthetic workload.")
@click.option("--layers", help="Comma-separated layer sizes, e.g. 400,400,100.")
@click.option("--rate", "rate_hz", type=float, default=10.0, show_default=True,
              help="Mean Poisson firing rate per neuron, Hz.")
@click.option("--duration-ms", type=float, default=1000.0, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--out", required=True, type=click.Path(file_okay=False))
def generate(workload, layers, rate_hz, duration_ms, seed, out):
    """Write network.csv and trace.csv for a synthetic feedforward workload."""
    if (workload is None) == (layers is None):
        raise click.UsageError("give exactly one of --workload or --layers")
    if workload:
        spec = snn.workload_spec(workload, rate_hz=rate_hz, duration_ms=duration_ms)
    else:
        sizes = tuple(int(x) for x in layers.split(","))
        spec = snn.TopologySpec(layers=sizes, rate_hz=rate_hz,
                                duration_ms=duration_ms)
    graph, trace = snn.generate_synthetic(spec, seed)
    out = _outdir(out)
    snn.save_network(out / "network.csv", graph)
    snn.save_trace(out / "trace.csv", trace)
    click.echo(f"generated {graph.neuron_count} neurons, "
               f"{graph.synapse_count} synapses, {trace.event_count} spikes "
               f"-> {out}")


@cli.command("partition")
@click.option("--network", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--trace", type=click.Path(exists=True, dir_okay=False),
              help="Optional trace; synapse weights are recomputed from it.")
@click.option("--n-c", type=int, default=256, show_default=True,
              help="Neurons per crossbar.")
@click.option("--kind", type=click.Choice([k.value for k in PartitionerKind]),
              default=PartitionerKind.GREEDY.value, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--sweep-until-stable/--single-pass", default=True, show_default=True,
              help="Repeat the pair loop until no cluster pair improves.")
@click.option("--out", required=True, type=click.Path(file_okay=False))
def partition_cmd(network, trace, n_c, kind, seed, sweep_until_stable, out):
    """Cluster the SNN, minimizing spikes on cross-cluster synapses."""
    graph = snn.load_network(network)
    if trace:
        spikes = snn.load_trace(trace, graph)
        graph = graph.with_weights_from(spikes)
    kind = PartitionerKind(kind)
    if kind == PartitionerKind.GREEDY:
        part = partition_mod.cluster(graph, n_c, seed,
                                     sweep_until_stable=sweep_until_stable)
    else:
        part = partition_mod.partition_baseline(graph, n_c, kind, seed)
    baseline = partition_mod.partition_baseline(graph, n_c, PartitionerKind.FILL)
    out = _outdir(out)
    part.save(out / "partition.csv")
    with open(out / "partition_report.txt", "w", encoding="utf-8") as fh:
        fh.write(f"kind={kind.value}\n")
        fh.write(f"k={part.k}\n")
        fh.write(f"n_c={part.n_c}\n")
        fh.write(f"gs={part.gs}\n")
        fh.write(f"baseline_fill_gs={baseline.gs}\n")
    click.echo(f"k={part.k} clusters, gs={part.gs} "
               f"(index-order fill baseline: gs={baseline.gs})")


def _pso_options(fn):
    fn = click.option("--particles", type=int, default=20, show_default=True)(fn)
    fn = click.option("--iterations", type=int, default=100, show_default=True)(fn)
    fn = click.option("--phi1", type=float, default=0.8, show_default=True)(fn)
    fn = click.option("--phi2", type=float, default=0.8, show_default=True)(fn)
    fn = click.option(
        "--fitness-mode", type=click.Choice([m.value for m in FitnessMode]),
        default=FitnessMode.ANALYTIC_HOPS.value, show_default=True,
        help="'analytic' scores hop counts in closed form; 'cycle' runs the "
             "full mesh simulation per candidate (same objective under "
             "minimal routing, much slower).")(fn)
    fn = click.option(
        "--bpso-orientation", type=click.Choice([o.value for o in BinarizeOrientation]),
        default=BinarizeOrientation.INVERTED.value, show_default=True,
        help="Bit sampled as 0 (inverted) or 1 (conventional) when the draw "
             "falls below sigmoid(velocity).")(fn)
    fn = click.option("--velocity-clamp", type=float, default=6.0, show_default=True,
                      help="Clamp |velocity|; 0 disables.")(fn)
    fn = click.option("--jobs", type=int, default=1, show_default=True,
                      help="Concurrent fitness evaluations.")(fn)
    return fn


@cli.command()
@click.option("--network", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--trace", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--partition", "partition_path", required=True,
              type=click.Path(exists=True, dir_okay=False))
@click.option("--hw", "hw_path", type=click.Path(exists=True, dir_okay=False),
              help="Hardware config; defaults to the smallest square mesh.")
@_pso_options
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--figures/--no-figures", default=True, show_default=True)
@click.option("--out", required=True, type=click.Path(file_okay=False))
def place(network, trace, partition_path, hw_path, particles, iterations, phi1,
          phi2, fitness_mode, bpso_orientation, velocity_clamp, jobs, seed,
          figures, out):
    """Search for the cluster placement minimizing mean hops per spike."""
    graph, spikes, strace = _load_inputs(network, trace)
    part = Partition.load(partition_path, graph)
    hw = _resolve_hw(hw_path, part.k, part.n_c)
    cfg = PsoConfig(particles=particles, iterations=iterations, phi1=phi1,
                    phi2=phi2, seed=seed, fitness_mode=FitnessMode(fitness_mode),
                    orientation=BinarizeOrientation(bpso_orientation),
                    velocity_clamp=velocity_clamp or None, jobs=jobs)
    result = run_pso(part, strace, hw, cfg)
    out = _outdir(out)
    result.mapping.save(out / "mapping.csv", hw, fitness=result.fitness,
                        iterations=cfg.iterations, seed=seed)
    with open(out / "fitness_history.csv", "w", encoding="utf-8") as fh:
        fh.write("iteration,best_fitness\n")
        for i, value in enumerate(result.history, start=1):
            fh.write(f"{i},{value!r}\n")
    if figures:
        from . import figures as figs
        figs.convergence_figure(result.history, out / "convergence.png")
    click.echo(f"placed {part.k} clusters on {hw.mesh_width}x{hw.mesh_height} "
               f"mesh: fitness={result.fitness!r}")


def _simulate_once(part, strace, mapping, hw):
    placement = mapping.coords(hw)
    packets = nocsim.compile_traffic(part, placement, strace, hw)
    report = nocsim.simulate(packets, hw)
    summary = metrics_mod.build_summary(strace, report, hw)
    return report, summary


@cli.command()
@click.option("--network", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--trace", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--partition", "partition_path", required=True,
              type=click.Path(exists=True, dir_okay=False))
@click.option("--mapping", "mapping_path", required=True,
              type=click.Path(exists=True, dir_okay=False))
@click.option("--hw", "hw_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--figures/--no-figures", default=True, show_default=True)
@click.option("--out", required=True, type=click.Path(file_okay=False))
def simulate(network, trace, partition_path, mapping_path, hw_path, figures, out):
    """Run the placed workload through the cycle-accurate mesh simulation."""
    graph, spikes, strace = _load_inputs(network, trace)
    part = Partition.load(partition_path, graph)
    hw = _resolve_hw(hw_path, part.k, part.n_c)
    mapping, _ = MappingMatrix.load(mapping_path, hw)
    report, summary = _simulate_once(part, strace, mapping, hw)
    out = _outdir(out)
    report.write_packets_csv(out / "packets.csv")
    report.write_links_csv(out / "link_utilization.csv")
    with open(out / "sim_summary.txt", "w", encoding="utf-8") as fh:
        for line in report.summary_lines("link_utilization.csv"):
            fh.write(line + "\n")
    metrics_mod.write_metrics(out / "metrics.txt", summary)
    if figures:
        from . import figures as figs
        figs.delay_histogram(report.delays(), out / "delay_histogram.png")
        figs.link_heatmap(report.link_counts, hw.mesh_width, hw.mesh_height,
                          out / "link_heatmap.png")
    click.echo(f"n_s={summary.n_s} avg_latency={summary.avg_latency_cycles!r} "
               f"energy={summary.total_energy_pj!r}pJ "
               f"isi_distortion={summary.isi_distortion_abs!r}")


@cli.command()
@click.option("--network", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--trace", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--partition", "partition_path", required=True,
              type=click.Path(exists=True, dir_okay=False))
@click.option("--mapping", "mapping_path", required=True,
              type=click.Path(exists=True, dir_okay=False))
@click.option("--hw", "hw_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--figures/--no-figures", default=True, show_default=True)
@click.option("--out", required=True, type=click.Path(file_okay=False))
def explore(network, trace, partition_path, mapping_path, hw_path, figures, out):
    """Re-simulate the same placement under each routing algorithm."""
    graph, spikes, strace = _load_inputs(network, trace)
    part = Partition.load(partition_path, graph)
    hw = _resolve_hw(hw_path, part.k, part.n_c)
    mapping, _ = MappingMatrix.load(mapping_path, hw)
    rows = []
    for kind in RoutingKind:
        _, summary = _simulate_once(part, strace, mapping,
                                    replace(hw, routing=kind))
        rows.append((kind.value, summary.avg_latency_cycles,
                     summary.total_energy_pj, summary.isi_distortion_abs))
    out = _outdir(out)
    with open(out / "explore.csv", "w", encoding="utf-8") as fh:
        fh.write("kind,avg_latency,energy,isi_distortion\n")
        for kind, lat, energy, isi in rows:
            fh.write(f"{kind},{lat!r},{energy!r},{isi!r}\n")
    if figures:
        from . import figures as figs
        figs.explore_figure(rows, out / "explore.png")
    for kind, lat, energy, isi in rows:
        click.echo(f"{kind}: avg_latency={lat!r} energy={energy!r}pJ "
                   f"isi_distortion={isi!r}")


@dataclass(frozen=True)
class RunManifest:
    """Reproducible description of one end-to-end pipeline run."""

    out: str
    workload: str | None = None
    layers: tuple[int, ...] | None = None
    rate_hz: float = 10.0
    duration_ms: float = 1000.0
    network: str | None = None
    trace: str | None = None
    hardware: str | None = None
    n_c: int | None = None
    partitioner: str = PartitionerKind.GREEDY.value
    sweep_until_stable: bool = True
    pso: dict = field(default_factory=dict)
    seeds: tuple[int, ...] = (0,)
    explore: bool = False
    figures: bool = True

    @classmethod
    def load(cls, path) -> "RunManifest":
        path = Path(path)
        with open(path, "r", encoding="utf-8") as fh:
            data = json.load(fh)
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise NeuromapError(
                f"{path}: unknown manifest key(s): {', '.join(sorted(unknown))}"
            )
        if "layers" in data and data["layers"] is not None:
            data["layers"] = tuple(int(x) for x in data["layers"])
        if "seeds" in data:
            data["seeds"] = tuple(int(s) for s in data["seeds"])
        manifest = cls(**data)
        manifest.validate(base=path.parent)
        return manifest

    def validate(self, base: Path) -> None:
        if (self.workload is None and self.layers is None
                and (self.network is None or self.trace is None)):
            raise NeuromapError(
                "manifest needs a workload/layers spec or network+trace paths"
            )
        for key in ("network", "trace", "hardware"):
            value = getattr(self, key)
            if value is not None and not (base / value).exists() \
                    and not Path(value).exists():
                raise NeuromapError(f"manifest references missing {key}: {value}")
        PartitionerKind(self.partitioner)
        if not self.seeds:
            raise NeuromapError("manifest needs at least one seed")

    def to_json(self) -> str:
        data = dataclasses.asdict(self)
        data["layers"] = list(self.layers) if self.layers else None
        data["seeds"] = list(self.seeds)
        return json.dumps(data, indent=2, sort_keys=True) + "\n"

    def pso_config(self, seed: int) -> PsoConfig:
        opts = dict(self.pso)
        if "fitness_mode" in opts:
            opts["fitness_mode"] = FitnessMode(opts["fitness_mode"])
        else:
            opts["fitness_mode"] = FitnessMode.ANALYTIC_HOPS
        if "orientation" in opts:
            opts["orientation"] = BinarizeOrientation(opts["orientation"])
        return PsoConfig(seed=seed, **opts)


@cli.command()
@click.option("--manifest", "manifest_path", required=True,
              type=click.Path(exists=True, dir_okay=False))
def pipeline(manifest_path):
    """Run generate/ingest, partition, place, simulate, and report end to end."""
    manifest = RunManifest.load(manifest_path)
    base = Path(manifest_path).parent
    out = _outdir(base / manifest.out if not Path(manifest.out).is_absolute()
                  else manifest.out)
    (out / "manifest.json").write_text(manifest.to_json(), encoding="utf-8")
    for seed in manifest.seeds:
        run_dir = _outdir(out / f"seed-{seed}")
        _pipeline_one(manifest, base, run_dir, seed)
    click.echo(f"pipeline complete: {len(manifest.seeds)} run(s) under {out}")


def _pipeline_one(manifest: RunManifest, base: Path, out: Path, seed: int) -> None:
    if manifest.workload or manifest.layers:
        if manifest.workload:
            spec = snn.workload_spec(manifest.workload, rate_hz=manifest.rate_hz,
                                     duration_ms=manifest.duration_ms)
        else:
            spec = snn.TopologySpec(layers=manifest.layers,
                                    rate_hz=manifest.rate_hz,
                                    duration_ms=manifest.duration_ms)
        graph, spikes = snn.generate_synthetic(spec, seed)
        snn.save_network(out / "network.csv", graph)
        snn.save_trace(out / "trace.csv", spikes)
    else:
        graph = snn.load_network(_resolve_path(base, manifest.network))
        spikes = snn.load_trace(_resolve_path(base, manifest.trace), graph)
    graph = graph.with_weights_from(spikes)
    strace = snn.derive_synapse_trace(graph, spikes)

    hw_file = _resolve_path(base, manifest.hardware) if manifest.hardware else None
    n_c = manifest.n_c
    if n_c is None:
        n_c = HardwareConfig.load(hw_file).n_c if hw_file else 256

    kind = PartitionerKind(manifest.partitioner)
    if kind == PartitionerKind.GREEDY:
        part = partition_mod.cluster(graph, n_c, seed,
                                     sweep_until_stable=manifest.sweep_until_stable)
    else:
        part = partition_mod.partition_baseline(graph, n_c, kind, seed)
    baseline = partition_mod.partition_baseline(graph, n_c, PartitionerKind.FILL)
    part.save(out / "partition.csv")
    with open(out / "partition_report.txt", "w", encoding="utf-8") as fh:
        fh.write(f"kind={kind.value}\n")
        fh.write(f"k={part.k}\n")
        fh.write(f"n_c={part.n_c}\n")
        fh.write(f"gs={part.gs}\n")
        fh.write(f"baseline_fill_gs={baseline.gs}\n")

    hw = _resolve_hw(hw_file, part.k, n_c)
    cfg = manifest.pso_config(seed)
    result = run_pso(part, strace, hw, cfg)
    result.mapping.save(out / "mapping.csv", hw, fitness=result.fitness,
                        iterations=cfg.iterations, seed=seed)
    with open(out / "fitness_history.csv", "w", encoding="utf-8") as fh:
        fh.write("iteration,best_fitness\n")
        for i, value in enumerate(result.history, start=1):
            fh.write(f"{i},{value!r}\n")

    report, summary = _simulate_once(part, strace, result.mapping, hw)
    report.write_packets_csv(out / "packets.csv")
    report.write_links_csv(out / "link_utilization.csv")
    with open(out / "sim_summary.txt", "w", encoding="utf-8") as fh:
        for line in report.summary_lines("link_utilization.csv"):
            fh.write(line + "\n")
    metrics_mod.write_metrics(out / "metrics.txt", summary)
    if manifest.figures:
        from . import figures as figs
        figs.convergence_figure(result.history, out / "convergence.png")
        figs.delay_histogram(report.delays(), out / "delay_histogram.png")
        figs.link_heatmap(report.link_counts, hw.mesh_width, hw.mesh_height,
                          out / "link_heatmap.png")
    if manifest.explore:
        rows = []
        for rk in RoutingKind:
            _, s = _simulate_once(part, strace, result.mapping,
                                  replace(hw, routing=rk))
            rows.append((rk.value, s.avg_latency_cycles, s.total_energy_pj,
                         s.isi_distortion_abs))
        with open(out / "explore.csv", "w", encoding="utf-8") as fh:
            fh.write("kind,avg_latency,energy,isi_distortion\n")
            for kind_name, lat, energy, isi in rows:
                fh.write(f"{kind_name},{lat!r},{energy!r},{isi!r}\n")
        if manifest.figures:
            from . import figures as figs
            figs.explore_figure(rows, out / "explore.png")
    log.info("seed %d: gs=%s fitness=%r avg_latency=%r", seed, part.gs,
             result.fitness, summary.avg_latency_cycles)


def _resolve_path(base: Path, value: str) -> Path:
    p = Path(value)
    if p.is_absolute() or p.exists():
        return p
    return base / value


def main(argv=None) -> int:
    """Entry point with the documented exit-code mapping."""
    _setup_logging()
    try:
        cli.main(args=argv, standalone_mode=False)
        return 0
    except click.UsageError as exc:
        click.echo(f"error: {exc.format_message()}", err=True)
        if exc.ctx is not None:
            click.echo(exc.ctx.get_usage(), err=True)
        return 1
    except click.ClickException as exc:
        click.echo(f"error: {exc.format_message()}", err=True)
        return 1
    except click.Abort:
        click.echo("aborted", err=True)
        return 1
    except InfeasibleError as exc:
        click.echo(f"infeasible: {exc}", err=True)
        return 3
    except NeuromapError as exc:
        click.echo(f"error: {exc}", err=True)
        return 2


if __name__ == "__main__":
    sys.exit(main())
