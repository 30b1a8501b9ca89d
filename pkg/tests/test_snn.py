import numpy as np
import pytest

from neuromap import (ParseError, SnnGraph, SpikeTrace, TopologySpec,
                      ValidationError, derive_synapse_trace, generate_synthetic,
                      load_network, load_trace, save_network, save_trace,
                      workload_spec)
from conftest import consistent_random_instance, make_graph, make_trace


class TestLoadNetwork:
    def test_basic(self, tmp_path):
        p = tmp_path / "net.csv"
        p.write_text("# neurons=3\n0,2,5\n1,2,3\n")
        g = load_network(p)
        assert g.neuron_count == 3
        assert g.synapse_count == 2
        assert [(s.src, s.dst, s.spike_count) for s in g.synapses()] == \
            [(0, 2, 5), (1, 2, 3)]

    def test_empty_synapse_section(self, tmp_path):
        p = tmp_path / "net.csv"
        p.write_text("# neurons=4\n")
        g = load_network(p)
        assert g.neuron_count == 4 and g.synapse_count == 0

    def test_dangling_index(self, tmp_path):
        p = tmp_path / "net.csv"
        p.write_text("# neurons=3\n0,9,5\n")
        with pytest.raises(ValidationError, match="outside"):
            load_network(p)

    def test_duplicate_synapse(self, tmp_path):
        p = tmp_path / "net.csv"
        p.write_text("# neurons=3\n0,1,5\n0,1,2\n")
        with pytest.raises(ValidationError, match="duplicate"):
            load_network(p)

    def test_parse_error_carries_line_number(self, tmp_path):
        p = tmp_path / "net.csv"
        p.write_text("# neurons=3\n0,1,5\nnot-a-row\n")
        with pytest.raises(ParseError, match=":3:"):
            load_network(p)

    def test_missing_header(self, tmp_path):
        p = tmp_path / "net.csv"
        p.write_text("0,1,5\n")
        with pytest.raises(ParseError, match="neurons"):
            load_network(p)

    def test_self_loop_flagged(self, caplog):
        with caplog.at_level("WARNING"):
            g = make_graph(2, [(0, 0, 3), (0, 1, 3)])
        assert g.self_loop_count == 1
        assert any("self-loop" in r.message for r in caplog.records)


class TestLoadTrace:
    def test_basic(self, tmp_path):
        g = make_graph(2, [])
        p = tmp_path / "trace.csv"
        p.write_text("0,1.0\n0,3.0\n1,2.0\n")
        t = load_trace(p, g)
        assert t.event_count == 3
        assert t.duration_ms == 3.0
        # sorted by (time, neuron)
        assert t.neuron.tolist() == [0, 1, 0]

    def test_unsorted_input_sorted_silently(self, tmp_path):
        g = make_graph(2, [])
        p = tmp_path / "trace.csv"
        p.write_text("1,5.0\n0,1.0\n")
        t = load_trace(p, g)
        assert t.time.tolist() == [1.0, 5.0]

    def test_empty_trace(self, tmp_path):
        g = make_graph(3, [])
        p = tmp_path / "trace.csv"
        p.write_text("# duration_ms=10.0\n")
        t = load_trace(p, g)
        assert t.event_count == 0 and t.duration_ms == 10.0

    def test_unknown_neuron(self, tmp_path):
        g = make_graph(3, [])
        p = tmp_path / "trace.csv"
        p.write_text("7,1.0\n")
        with pytest.raises(ParseError, match="unknown neuron 7"):
            load_trace(p, g)

    def test_time_beyond_duration(self, tmp_path):
        g = make_graph(1, [])
        p = tmp_path / "trace.csv"
        p.write_text("# duration_ms=1.0\n0,2.0\n")
        with pytest.raises(ValidationError, match="exceeds"):
            load_trace(p, g)


class TestDeriveSynapseTrace:
    def test_fanout_shares_source_times(self):
        g = make_graph(3, [(0, 1, 2), (0, 2, 2)])
        t = make_trace(5.0, [(0, 1.0), (0, 4.0)])
        st = derive_synapse_trace(g, t)
        assert st.times(0).tolist() == [1.0, 4.0]
        assert st.times(1).tolist() == [1.0, 4.0]

    def test_no_outgoing_synapses(self):
        g = make_graph(2, [(0, 1, 1)])
        t = make_trace(5.0, [(0, 1.0), (1, 2.0)])
        st = derive_synapse_trace(g, t)
        assert st.total_synapse_spikes() == 1

    def test_fan_in_stays_separate(self):
        g = make_graph(3, [(0, 2, 1), (1, 2, 1)])
        t = make_trace(5.0, [(0, 1.0), (1, 3.0)])
        st = derive_synapse_trace(g, t)
        assert st.times(0).tolist() == [1.0]
        assert st.times(1).tolist() == [3.0]

    def test_weight_mismatch_lists_synapses(self):
        g = make_graph(2, [(0, 1, 5)])
        t = make_trace(5.0, [(0, 1.0)])
        with pytest.raises(ValidationError, match=r"\(0,1\)"):
            derive_synapse_trace(g, t)

    def test_spike_totals_identity(self):
        for seed in range(5):
            g, t, st = consistent_random_instance(seed)
            counts = t.counts_per_neuron(g.neuron_count)
            out_deg = np.bincount(g.src, minlength=g.neuron_count)
            assert st.total_synapse_spikes() == int((out_deg * counts).sum())
            assert st.total_synapse_spikes() == int(g.weight.sum())


class TestRoundTrip:
    def test_network_round_trip(self, tmp_path):
        for seed in range(5):
            g, _, _ = consistent_random_instance(seed)
            p1, p2 = tmp_path / "a.csv", tmp_path / "b.csv"
            save_network(p1, g)
            g2 = load_network(p1)
            assert g2 == g
            save_network(p2, g2)
            assert p1.read_bytes() == p2.read_bytes()

    def test_trace_round_trip(self, tmp_path):
        for seed in range(5):
            _, t, _ = consistent_random_instance(seed)
            g = make_graph(8, [])
            p1, p2 = tmp_path / "a.csv", tmp_path / "b.csv"
            save_trace(p1, t)
            t2 = load_trace(p1, g)
            assert t2 == t
            save_trace(p2, t2)
            assert p1.read_bytes() == p2.read_bytes()


class TestGenerateSynthetic:
    def test_three_layer_counts(self):
        g, _ = generate_synthetic(
            TopologySpec(layers=(400, 400, 100), duration_ms=10.0), seed=0)
        assert g.neuron_count == 900
        assert g.synapse_count == 400 * 400 + 400 * 100

    def test_mlp_shape_synapse_count(self):
        spec = workload_spec("mlp-mnist-shape", duration_ms=10.0)
        g, _ = generate_synthetic(spec, seed=0)
        assert g.synapse_count == 79_400

    def test_deterministic(self):
        spec = TopologySpec(layers=(10, 5), rate_hz=30.0, duration_ms=50.0)
        a = generate_synthetic(spec, seed=7)
        b = generate_synthetic(spec, seed=7)
        assert a[0] == b[0] and a[1] == b[1]

    def test_zero_layer_rejected(self):
        with pytest.raises(ValidationError, match="zero-sized"):
            TopologySpec(layers=(10, 0, 5))

    def test_weights_match_trace(self):
        spec = TopologySpec(layers=(6, 4, 2), rate_hz=40.0, duration_ms=80.0)
        g, t = generate_synthetic(spec, seed=3)
        derive_synapse_trace(g, t)  # raises on any mismatch

    def test_poisson_concentration(self):
        # K should sit within 5 sigma of N * rate * T for every fixed seed
        spec = TopologySpec(layers=(50, 50), rate_hz=20.0, duration_ms=500.0)
        expected = 100 * 20.0 * 0.5
        sigma = expected ** 0.5
        for seed in range(10):
            _, t = generate_synthetic(spec, seed=seed)
            assert abs(t.event_count - expected) < 5 * sigma

    def test_per_layer_rates(self):
        spec = TopologySpec(layers=(30, 30), rate_hz=(0.0, 50.0),
                            duration_ms=200.0)
        g, t = generate_synthetic(spec, seed=1)
        counts = t.counts_per_neuron(60)
        assert counts[:30].sum() == 0
        assert counts[30:].sum() > 0
