"""Map spiking neural networks onto multi-crossbar mesh neuromorphic hardware.

The toolkit covers the full flow: ingest or synthesize an SNN with a spike
trace, partition it into crossbar-sized clusters minimizing cross-cluster
spikes, place the clusters on a mesh via binary particle-swarm search, run the
placed traffic through a cycle-accurate interconnect simulation, and report
latency, energy, ISI distortion, and spike disorder.
"""

from .errors import (InfeasibleError, NeuromapError, ParseError,
                     SimulationStall, ValidationError)
from .hardware import (CrossbarCoord, HardwareConfig, RoutingKind, hop_count,
                       manhattan, route)
from .metrics import (IsiAverages, IsiSeries, MetricSummary, avg_latency,
                      avg_latency_from_hops, build_summary, isi_distortion,
                      spike_disorder, spike_disorder_summary, total_energy)
from .nocsim import (SimReport, SpikePacket, analytic_latency, compile_traffic,
                     packet_counts, simulate)
from .partition import (Cluster, Partition, PartitionerKind,
                        brute_force_partition, cluster, global_spike_count,
                        initial_partition, partition_baseline, two_part)
from .placer import (BinarizeOrientation, FitnessMode, MappingMatrix, Particle,
                     PsoConfig, PsoResult, SwarmState, binarize,
                     brute_force_placement, fitness, init_swarm, repair,
                     run_pso, update_velocity_position)
from .snn import (SnnGraph, SpikeEvent, SpikeTrace, Synapse, SynapseTrace,
                  TopologySpec, WORKLOADS, derive_synapse_trace,
                  generate_synthetic, load_network, load_trace, save_network,
                  save_trace, workload_spec)

__version__ = "0.1.0"
