"""Multi-crossbar hardware model: mesh geometry, timing/energy knobs, routing.

Crossbars sit on a 2D mesh; coordinate x grows eastward, y grows northward,
and crossbar id = y * width + x. All routing is minimal (every path has
Manhattan length). XY is deterministic dimension-order routing; NorthLast and
WestFirst are partially adaptive turn-model algorithms that, where the turn
rule leaves a choice, prefer the productive direction with the lower
downstream input-queue occupancy (ties go to the X direction).

Config files are ``key=value`` lines, e.g.::

    mesh=4x4
    n_c=256
    l_w=2
    l_s=1
    e_w=1.0
    e_s=2.0
    cycle_ms=0.001
    buffer_depth=4
    routing=xy
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from enum import Enum
from pathlib import Path

from .errors import ParseError, ValidationError


class RoutingKind(str, Enum):
    XY = "xy"
    NORTH_LAST = "northlast"
    WEST_FIRST = "westfirst"


@dataclass(frozen=True)
class CrossbarCoord:
    x: int
    y: int


@dataclass(frozen=True)
class HardwareConfig:
    mesh_width: int = 4
    mesh_height: int = 4
    n_c: int = 256                 # neurons per crossbar
    l_w: int = 2                   # wire delay per inter-switch link, cycles
    l_s: int = 1                   # switch traversal delay, cycles
    e_w: float = 1.0               # energy per spike per wire segment, pJ
    e_s: float = 2.0               # energy per spike per switch, pJ
    cycle_ms: float = 0.001        # milliseconds per simulator cycle
    buffer_depth: int = 4          # per-input-port FIFO capacity, spikes
    routing: RoutingKind = RoutingKind.XY

    def __post_init__(self):
        if self.mesh_width < 1 or self.mesh_height < 1:
            raise ValidationError("mesh dimensions must be positive")
        if self.n_c < 1:
            raise ValidationError("n_c must be >= 1")
        if self.l_w < 0 or self.l_s < 0 or self.e_w < 0 or self.e_s < 0:
            raise ValidationError("delays and energies must be non-negative")
        if self.cycle_ms <= 0:
            raise ValidationError("cycle_ms must be positive")
        if self.buffer_depth < 1:
            raise ValidationError("buffer_depth must be >= 1")

    @property
    def crossbar_count(self) -> int:
        return self.mesh_width * self.mesh_height

    def in_bounds(self, c: CrossbarCoord) -> bool:
        return 0 <= c.x < self.mesh_width and 0 <= c.y < self.mesh_height

    def id_of(self, c: CrossbarCoord) -> int:
        return c.y * self.mesh_width + c.x

    def coord_of(self, crossbar_id: int) -> CrossbarCoord:
        y, x = divmod(int(crossbar_id), self.mesh_width)
        return CrossbarCoord(x, y)

    @classmethod
    def default_for_clusters(cls, k: int, **overrides) -> "HardwareConfig":
        """Smallest square mesh holding k clusters, overridable field by field."""
        side = max(1, math.ceil(math.sqrt(max(1, k))))
        cfg = cls(mesh_width=side, mesh_height=side, **overrides)
        if cfg.crossbar_count < k:
            cfg = replace(cfg, mesh_width=side + 1)
        return cfg

    def save(self, path) -> None:
        path = Path(path)
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(f"mesh={self.mesh_width}x{self.mesh_height}\n")
            fh.write(f"n_c={self.n_c}\n")
            fh.write(f"l_w={self.l_w}\n")
            fh.write(f"l_s={self.l_s}\n")
            fh.write(f"e_w={self.e_w!r}\n")
            fh.write(f"e_s={self.e_s!r}\n")
            fh.write(f"cycle_ms={self.cycle_ms!r}\n")
            fh.write(f"buffer_depth={self.buffer_depth}\n")
            fh.write(f"routing={self.routing.value}\n")

    @classmethod
    def load(cls, path) -> "HardwareConfig":
        path = Path(path)
        fields: dict = {}
        with open(path, "r", encoding="utf-8") as fh:
            for lineno, raw in enumerate(fh, start=1):
                line = raw.strip()
                if not line or line.startswith("#"):
                    continue
                if "=" not in line:
                    raise ParseError(f"expected key=value, got {line!r}", path, lineno)
                key, val = (part.strip() for part in line.split("=", 1))
                try:
                    if key == "mesh":
                        w, h = val.lower().split("x")
                        fields["mesh_width"] = int(w)
                        fields["mesh_height"] = int(h)
                    elif key in ("n_c", "l_w", "l_s", "buffer_depth"):
                        fields[key] = int(val)
                    elif key in ("e_w", "e_s", "cycle_ms"):
                        fields[key] = float(val)
                    elif key == "routing":
                        fields["routing"] = RoutingKind(val.lower())
                    else:
                        raise ParseError(f"unknown key {key!r}", path, lineno)
                except (ValueError, KeyError):
                    raise ParseError(f"malformed value for {key!r}: {val!r}",
                                     path, lineno)
        return cls(**fields)


def manhattan(a: CrossbarCoord, b: CrossbarCoord) -> int:
    return abs(a.x - b.x) + abs(a.y - b.y)


def next_hop_xy(cur: tuple[int, int], dst: tuple[int, int], kind: RoutingKind,
                occupancy=None) -> tuple[int, int] | None:
    """One minimal routing step on plain (x, y) tuples; None when cur == dst.

    occupancy(cur, nxt) should return the queue length at the downstream
    input port reached over the cur->nxt link; it is consulted only when the
    turn rule permits two productive directions.
    """
    cx, cy = cur
    dx = dst[0] - cx
    dy = dst[1] - cy
    if dx == 0 and dy == 0:
        return None
    x_step = (cx + (1 if dx > 0 else -1), cy) if dx else None
    y_step = (cx, cy + (1 if dy > 0 else -1)) if dy else None

    if kind == RoutingKind.XY:
        return x_step if x_step else y_step
    if kind == RoutingKind.WEST_FIRST:
        if dx < 0:
            return x_step              # all westward hops before anything else
        options = [s for s in (x_step, y_step) if s]
    else:  # NORTH_LAST
        if dy > 0:
            # northward hops must come last: exhaust X first
            return x_step if x_step else y_step
        options = [s for s in (x_step, y_step) if s]

    if len(options) == 1:
        return options[0]
    if occupancy is None:
        return options[0]              # X before Y when nothing distinguishes
    loads = [occupancy(cur, nxt) for nxt in options]
    return options[0] if loads[0] <= loads[1] else options[1]


def route(src: CrossbarCoord, dst: CrossbarCoord, kind: RoutingKind,
          hw: HardwareConfig, occupancy=None) -> list[CrossbarCoord]:
    """Minimal path from src to dst inclusive under the given turn model."""
    if not hw.in_bounds(src) or not hw.in_bounds(dst):
        raise ValidationError(f"route endpoints {src}, {dst} must lie in the mesh")
    kind = RoutingKind(kind)
    path = [src]
    cur = (src.x, src.y)
    target = (dst.x, dst.y)
    for _ in range(manhattan(src, dst)):
        cur = next_hop_xy(cur, target, kind, occupancy)
        path.append(CrossbarCoord(*cur))
    return path


def hop_count(path) -> int:
    """Number of switches traversed: the path length, src and dst included."""
    if not path:
        raise ValidationError("hop_count of an empty path is undefined")
    return len(path)
