"""2-D building layouts and visibility queries.

Walls are zero-thickness segments.  A link crosses a wall when the open link
segment meets the closed wall segment; touching a wall endpoint or running
along a wall counts as one crossing.  Hits that coincide along the link
(within ``TOL``) are merged into a single crossing, so a link through a
shared corner of two walls crosses once.
"""
from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path
from typing import Iterable, NamedTuple

import numpy as np

TOL = 1e-9
LAYOUT_HEADER = "bwp-layout v1"


class Point2D(NamedTuple):
    x: float
    y: float


@dataclass(frozen=True)
class Wall:
    a: Point2D
    b: Point2D
    attenuation_db: float = 10.0

    def __post_init__(self):
        object.__setattr__(self, "a", Point2D(float(self.a[0]), float(self.a[1])))
        object.__setattr__(self, "b", Point2D(float(self.b[0]), float(self.b[1])))
        if not all(math.isfinite(v) for v in (*self.a, *self.b)):
            raise ValueError("wall endpoints must be finite")
        if math.hypot(self.b.x - self.a.x, self.b.y - self.a.y) <= TOL:
            raise ValueError("wall endpoints must differ")
        if not self.attenuation_db >= 0:
            raise ValueError("wall attenuation must be >= 0 dB")


@dataclass(frozen=True)
class BuildingLayout:
    """Immutable wall list plus an axis-aligned bounding rectangle.

    ``bounds`` is ``(xmin, ymin, xmax, ymax)``; it defaults to the tight box
    around the walls.
    """

    walls: tuple[Wall, ...] = ()
    bounds: tuple[float, float, float, float] | None = None

    def __post_init__(self):
        object.__setattr__(self, "walls", tuple(self.walls))
        if self.bounds is None:
            if not self.walls:
                raise ValueError("an empty layout needs explicit bounds")
            xs = [p.x for w in self.walls for p in (w.a, w.b)]
            ys = [p.y for w in self.walls for p in (w.a, w.b)]
            object.__setattr__(self, "bounds", (min(xs), min(ys), max(xs), max(ys)))
        xmin, ymin, xmax, ymax = (float(v) for v in self.bounds)
        object.__setattr__(self, "bounds", (xmin, ymin, xmax, ymax))
        if not (xmin < xmax and ymin < ymax):
            raise ValueError("bounds must have positive extent")
        for w in self.walls:
            for p in (w.a, w.b):
                if not (xmin - TOL <= p.x <= xmax + TOL and ymin - TOL <= p.y <= ymax + TOL):
                    raise ValueError(f"wall endpoint {p} lies outside the layout bounds")

    @cached_property
    def wall_array(self) -> np.ndarray:
        """``(n_walls, 5)`` float array of ``ax, ay, bx, by, attenuation_db``."""
        arr = np.array([(w.a.x, w.a.y, w.b.x, w.b.y, w.attenuation_db) for w in self.walls],
                       dtype=float).reshape(-1, 5)
        arr.setflags(write=False)
        return arr

    def contains(self, p, strict: bool = True) -> bool:
        xmin, ymin, xmax, ymax = self.bounds
        if strict:
            return xmin < p[0] < xmax and ymin < p[1] < ymax
        return xmin <= p[0] <= xmax and ymin <= p[1] <= ymax

    def with_attenuation(self, attenuation_db: float) -> "BuildingLayout":
        walls = tuple(Wall(w.a, w.b, attenuation_db) for w in self.walls)
        return BuildingLayout(walls, self.bounds)

    def digest(self) -> str:
        """Stable SHA-256 of the serialized layout."""
        return hashlib.sha256(dumps_layout(self).encode()).hexdigest()


@dataclass(frozen=True)
class RoomSpec:
    width: float
    length: float

    def __post_init__(self):
        if not (self.width > 0 and self.length > 0):
            raise ValueError("room dimensions must be positive")
        if self.length < self.width:
            raise ValueError("length must be >= width")

    @property
    def area(self) -> float:
        return self.width * self.length

    @property
    def aspect_ratio(self) -> float:
        return self.length / self.width

    @classmethod
    def from_area(cls, area: float, aspect_ratio: float) -> "RoomSpec":
        if not (area > 0 and aspect_ratio >= 1):
            raise ValueError("need area > 0 and aspect ratio >= 1")
        width = math.sqrt(area / aspect_ratio)
        return cls(width, width * aspect_ratio)


# ---------------------------------------------------------------------------
# visibility


def _wall_hit(ox, oy, dx, dy, limit, wall):
    """Hit interval ``(t0, t1)`` of one wall along a unit ray, or ``None``.

    Only hits strictly inside ``(TOL, limit - TOL)`` are reported.
    """
    ax, ay, bx, by = wall
    da = dx * (ay - oy) - dy * (ax - ox)
    db = dx * (by - oy) - dy * (bx - ox)
    if abs(da) <= TOL and abs(db) <= TOL:
        ta = dx * (ax - ox) + dy * (ay - oy)
        tb = dx * (bx - ox) + dy * (by - oy)
        t0 = max(min(ta, tb), TOL)
        t1 = min(max(ta, tb), limit - TOL)
        if t1 < t0 - TOL or t0 >= limit - TOL or t1 <= TOL:
            return None
        return (t0, max(t0, t1))
    if (da > TOL and db > TOL) or (da < -TOL and db < -TOL):
        return None
    u = min(1.0, max(0.0, da / (da - db)))
    x = ax + u * (bx - ax)
    y = ay + u * (by - ay)
    t = dx * (x - ox) + dy * (y - oy)
    if TOL < t < limit - TOL:
        return (t, t)
    return None


def merge_hits(hits: Iterable[tuple[float, float, float]]) -> list[tuple[float, float, float]]:
    """Merge touching hit intervals; each group keeps its largest attenuation."""
    groups: list[list[float]] = []
    for t0, t1, att in sorted(hits):
        if groups and t0 <= groups[-1][1] + TOL:
            g = groups[-1]
            g[1] = max(g[1], t1)
            g[2] = max(g[2], att)
        else:
            groups.append([t0, t1, att])
    return [tuple(g) for g in groups]


def link_crossings(layout: BuildingLayout, tx, ue) -> list[tuple[float, float, float]]:
    """Merged crossings ``(t0, t1, attenuation_db)`` along the link, measured from ``tx``."""
    ox, oy = float(tx[0]), float(tx[1])
    length = math.hypot(ue[0] - ox, ue[1] - oy)
    if length <= TOL:
        return []
    dx, dy = (ue[0] - ox) / length, (ue[1] - oy) / length
    hits = []
    for w in layout.walls:
        hit = _wall_hit(ox, oy, dx, dy, length, (w.a.x, w.a.y, w.b.x, w.b.y))
        if hit is not None:
            hits.append((hit[0], hit[1], w.attenuation_db))
    return merge_hits(hits)


def crossing_count(layout: BuildingLayout, tx, ue) -> int:
    """Number of wall crossings on the link between ``tx`` and ``ue``."""
    return len(link_crossings(layout, tx, ue))


def is_los(layout: BuildingLayout, tx, ue) -> bool:
    return crossing_count(layout, tx, ue) == 0


# ---------------------------------------------------------------------------
# generators


def _rect_walls(x0, y0, x1, y1, att):
    return [
        Wall((x0, y0), (x1, y0), att),
        Wall((x1, y0), (x1, y1), att),
        Wall((x1, y1), (x0, y1), att),
        Wall((x0, y1), (x0, y0), att),
    ]


def make_rect_room(spec: RoomSpec, wall_attenuation_db: float = 10.0) -> BuildingLayout:
    """Closed rectangular room with its lower-left corner at the origin.

    The x axis runs along the width and the y axis along the length.
    """
    return BuildingLayout(
        tuple(_rect_walls(0.0, 0.0, spec.width, spec.length, wall_attenuation_db)),
        (0.0, 0.0, spec.width, spec.length),
    )


def make_office_layout(rooms_per_row: int = 10, room_w: float = 10.0, room_l: float = 10.0,
                       corridor_w: float = 5.0, n_corridors: int = 2,
                       wall_attenuation_db: float = 10.0) -> BuildingLayout:
    """Rows of closed rooms flanking corridors.

    Each corridor strip is ``room row | corridor | room row`` stacked along y,
    so the floor measures ``rooms_per_row * room_w`` by
    ``n_corridors * (2 * room_l + corridor_w)``.  Rooms have no door openings.
    """
    if rooms_per_row < 1 or n_corridors < 1:
        raise ValueError("need at least one room per row and one corridor")
    if not (room_w > 0 and room_l > 0 and corridor_w > 0):
        raise ValueError("dimensions must be positive")
    att = wall_attenuation_db
    width = rooms_per_row * room_w
    strip = 2 * room_l + corridor_w
    height = n_corridors * strip

    levels = set()
    row_spans = []  # (y0, y1) of each room row
    for s in range(n_corridors):
        y0 = s * strip
        levels.update((y0, y0 + room_l, y0 + room_l + corridor_w, y0 + strip))
        row_spans += [(y0, y0 + room_l), (y0 + room_l + corridor_w, y0 + strip)]

    walls = [Wall((0.0, y), (width, y), att) for y in sorted(levels)]
    walls += [Wall((0.0, 0.0), (0.0, height), att), Wall((width, 0.0), (width, height), att)]
    for y0, y1 in row_spans:
        for i in range(1, rooms_per_row):
            walls.append(Wall((i * room_w, y0), (i * room_w, y1), att))
    return BuildingLayout(tuple(walls), (0.0, 0.0, width, height))


def office_rooms(rooms_per_row: int = 10, room_w: float = 10.0, room_l: float = 10.0,
                 corridor_w: float = 5.0, n_corridors: int = 2) -> list[tuple[str, tuple]]:
    """Named cells ``(name, (x0, y0, x1, y1))`` of the office generator."""
    cells = []
    strip = 2 * room_l + corridor_w
    width = rooms_per_row * room_w
    for s in range(n_corridors):
        y0 = s * strip
        rows = [(y0, y0 + room_l), (y0 + room_l + corridor_w, y0 + strip)]
        for r, (ya, yb) in enumerate(rows):
            for i in range(rooms_per_row):
                cells.append((f"room-{s}-{r}-{i}", (i * room_w, ya, (i + 1) * room_w, yb)))
        cells.append((f"corridor-{s}", (0.0, y0 + room_l, width, y0 + room_l + corridor_w)))
    return cells


# ---------------------------------------------------------------------------
# layout file


class LayoutSyntaxError(ValueError):
    def __init__(self, line_no: int, message: str):
        super().__init__(f"line {line_no}: {message}")
        self.line_no = line_no


def parse_layout(text: str) -> BuildingLayout:
    """Parse the ``bwp-layout v1`` text format.

    An optional ``bounds xmin ymin xmax ymax`` line overrides the tight box.
    """
    walls = []
    bounds = None
    header_seen = False
    for no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if not header_seen:
            if line != LAYOUT_HEADER:
                raise LayoutSyntaxError(no, f"expected header {LAYOUT_HEADER!r}")
            header_seen = True
            continue
        parts = line.split()
        try:
            if parts[0] == "wall":
                if len(parts) != 6:
                    raise LayoutSyntaxError(no, "wall needs x1 y1 x2 y2 att_db")
                x1, y1, x2, y2, att = map(float, parts[1:])
                walls.append(Wall((x1, y1), (x2, y2), att))
            elif parts[0] == "bounds":
                if len(parts) != 5:
                    raise LayoutSyntaxError(no, "bounds needs xmin ymin xmax ymax")
                bounds = tuple(map(float, parts[1:]))
            else:
                raise LayoutSyntaxError(no, f"unknown record {parts[0]!r}")
        except LayoutSyntaxError:
            raise
        except ValueError as exc:
            raise LayoutSyntaxError(no, str(exc)) from None
    if not header_seen:
        raise LayoutSyntaxError(1, f"missing header {LAYOUT_HEADER!r}")
    try:
        return BuildingLayout(tuple(walls), bounds)
    except ValueError as exc:
        raise LayoutSyntaxError(0, str(exc)) from None


def dumps_layout(layout: BuildingLayout) -> str:
    lines = [LAYOUT_HEADER, "bounds " + " ".join(repr(v) for v in layout.bounds)]
    for w in layout.walls:
        lines.append(f"wall {w.a.x!r} {w.a.y!r} {w.b.x!r} {w.b.y!r} {w.attenuation_db!r}")
    return "\n".join(lines) + "\n"


def load_layout(path) -> BuildingLayout:
    return parse_layout(Path(path).read_text(encoding="utf-8"))


def save_layout(layout: BuildingLayout, path) -> None:
    Path(path).write_text(dumps_layout(layout), encoding="utf-8")
