import itertools

import pytest

from neuromap import (CrossbarCoord, HardwareConfig, ParseError, RoutingKind,
                      ValidationError, hop_count, manhattan, route)
from oracles import assert_minimal_path, assert_turn_sound


class TestConfig:
    def test_defaults(self):
        hw = HardwareConfig()
        assert hw.n_c == 256
        assert (hw.l_w, hw.l_s, hw.e_w, hw.e_s) == (2, 1, 1.0, 2.0)
        assert hw.routing is RoutingKind.XY

    def test_round_trip(self, tmp_path):
        hw = HardwareConfig(mesh_width=5, mesh_height=3, n_c=128, l_w=3, l_s=2,
                            e_w=0.5, e_s=1.5, cycle_ms=0.002, buffer_depth=8,
                            routing=RoutingKind.WEST_FIRST)
        p = tmp_path / "hw.txt"
        hw.save(p)
        assert HardwareConfig.load(p) == hw

    def test_unknown_key(self, tmp_path):
        p = tmp_path / "hw.txt"
        p.write_text("mesh=2x2\nwat=3\n")
        with pytest.raises(ParseError, match="wat"):
            HardwareConfig.load(p)

    def test_bad_routing_value(self, tmp_path):
        p = tmp_path / "hw.txt"
        p.write_text("routing=zigzag\n")
        with pytest.raises(ParseError):
            HardwareConfig.load(p)

    def test_validation(self):
        with pytest.raises(ValidationError):
            HardwareConfig(mesh_width=0)
        with pytest.raises(ValidationError):
            HardwareConfig(cycle_ms=0.0)
        with pytest.raises(ValidationError):
            HardwareConfig(buffer_depth=0)

    def test_default_mesh_holds_clusters(self):
        for k in (1, 2, 4, 5, 9, 10, 17):
            hw = HardwareConfig.default_for_clusters(k)
            assert hw.crossbar_count >= k

    def test_coord_id_round_trip(self):
        hw = HardwareConfig(mesh_width=4, mesh_height=3)
        for i in range(hw.crossbar_count):
            assert hw.id_of(hw.coord_of(i)) == i


class TestRoute:
    def test_xy_example(self):
        hw = HardwareConfig(mesh_width=3, mesh_height=2)
        path = route(CrossbarCoord(0, 0), CrossbarCoord(2, 1), RoutingKind.XY, hw)
        assert [(c.x, c.y) for c in path] == [(0, 0), (1, 0), (2, 0), (2, 1)]

    def test_src_equals_dst(self):
        hw = HardwareConfig(mesh_width=2, mesh_height=2)
        for kind in RoutingKind:
            assert route(CrossbarCoord(1, 1), CrossbarCoord(1, 1), kind, hw) == \
                [CrossbarCoord(1, 1)]

    def test_west_first_goes_west_first(self):
        hw = HardwareConfig(mesh_width=4, mesh_height=4)
        path = route(CrossbarCoord(3, 0), CrossbarCoord(0, 3),
                     RoutingKind.WEST_FIRST, hw)
        dirs = [(b.x - a.x, b.y - a.y) for a, b in zip(path, path[1:])]
        west = [i for i, d in enumerate(dirs) if d == (-1, 0)]
        other = [i for i, d in enumerate(dirs) if d != (-1, 0)]
        assert west and other and max(west) < min(other)

    def test_out_of_bounds_rejected(self):
        hw = HardwareConfig(mesh_width=2, mesh_height=2)
        with pytest.raises(ValidationError):
            route(CrossbarCoord(0, 0), CrossbarCoord(5, 0), RoutingKind.XY, hw)

    def test_all_pairs_minimal_and_turn_sound(self):
        hw = HardwareConfig(mesh_width=4, mesh_height=3)
        coords = [CrossbarCoord(x, y) for x in range(4) for y in range(3)]
        for kind in RoutingKind:
            for src, dst in itertools.product(coords, coords):
                path = route(src, dst, kind, hw)
                assert_minimal_path(path, src, dst)
                assert_turn_sound(path, kind.value)

    def test_adaptive_choices_stay_minimal_and_sound(self):
        # feed arbitrary occupancy answers; the turn rules must still hold
        hw = HardwareConfig(mesh_width=5, mesh_height=5)
        coords = [CrossbarCoord(x, y) for x in range(5) for y in range(5)]
        for bias in range(3):
            def occupancy(cur, nxt, _b=bias):
                return (nxt[0] * 31 + nxt[1] * 17 + _b) % 5
            for kind in (RoutingKind.NORTH_LAST, RoutingKind.WEST_FIRST):
                for src, dst in itertools.product(coords[::3], coords[::2]):
                    path = route(src, dst, kind, hw, occupancy)
                    assert_minimal_path(path, src, dst)
                    assert_turn_sound(path, kind.value)


class TestHopCount:
    def test_single_node_path(self):
        assert hop_count([CrossbarCoord(0, 0)]) == 1

    def test_example(self):
        hw = HardwareConfig(mesh_width=3, mesh_height=2)
        path = route(CrossbarCoord(0, 0), CrossbarCoord(2, 1), RoutingKind.XY, hw)
        assert hop_count(path) == 4

    def test_kind_invariant(self):
        hw = HardwareConfig(mesh_width=4, mesh_height=4)
        src, dst = CrossbarCoord(0, 3), CrossbarCoord(3, 0)
        counts = {hop_count(route(src, dst, kind, hw)) for kind in RoutingKind}
        assert counts == {manhattan(src, dst) + 1}

    def test_empty_path_rejected(self):
        with pytest.raises(ValidationError):
            hop_count([])
