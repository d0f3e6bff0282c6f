"""UE-grid sweeps, averages, CDFs and noise calibration."""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .core import DEFAULT_QUAD, BwpResult, QuadratureConfig, evaluate, with_noise
from .geometry import BuildingLayout, RoomSpec, make_rect_room
from .propagation import Scenario

DEFAULT_RESOLUTION = 0.5
ROOM_AREAS = (20.0, 40.0, 60.0, 80.0, 100.0)
ROOM_ASPECT_RATIOS = (1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0)


@dataclass(frozen=True)
class GridMap:
    """Raster of results at cell centres; ``results`` is row-major with x fastest."""

    origin: tuple[float, float]
    cell: tuple[float, float]
    n_x: int
    n_y: int
    results: tuple[BwpResult, ...]

    def __post_init__(self):
        if self.n_x < 1 or self.n_y < 1 or len(self.results) != self.n_x * self.n_y:
            raise ValueError("grid shape does not match result count")
        if not (self.cell[0] > 0 and self.cell[1] > 0):
            raise ValueError("cell size must be positive")

    def array(self, name: str) -> np.ndarray:
        """``(n_y, n_x)`` array of ``g_i``, ``g_p`` or a breakdown term."""
        if name in ("g_i", "g_p", "gamma_ratio"):
            vals = [getattr(r, name) for r in self.results]
        else:
            vals = [getattr(r.breakdown, name) for r in self.results]
        return np.array(vals).reshape(self.n_y, self.n_x)

    @property
    def centres(self) -> np.ndarray:
        return np.array([r.ue for r in self.results])

    def with_noise(self, noise_w: float) -> "GridMap":
        return GridMap(self.origin, self.cell, self.n_x, self.n_y,
                       tuple(with_noise(r, noise_w) for r in self.results))


def _map(fn, items, threads):
    if threads and threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(fn, items))
    return [fn(x) for x in items]


def grid_eval(layout: BuildingLayout, scenario: Scenario, rect, n_x: int, n_y: int,
              quad: QuadratureConfig | None = None, *, nlos: str = "single-slope",
              threads: int = 1) -> GridMap:
    """Evaluate at the ``n_x * n_y`` cell centres of ``rect = (x0, y0, x1, y1)``.

    Cell centres keep a half-cell margin from the rectangle edges.
    """
    x0, y0, x1, y1 = rect
    dx, dy = (x1 - x0) / n_x, (y1 - y0) / n_y
    pts = [(x0 + (i + 0.5) * dx, y0 + (j + 0.5) * dy) for j in range(n_y) for i in range(n_x)]
    quad = quad or DEFAULT_QUAD
    results = _map(lambda p: evaluate(layout, scenario, p, quad, nlos=nlos), pts, threads)
    return GridMap((x0, y0), (dx, dy), n_x, n_y, tuple(results))


def cells_for(width: float, length: float, resolution: float, min_cells: int = 1) -> tuple[int, int]:
    """Cell counts along x and y for a target cell size, refined to ``min_cells``."""
    if not resolution > 0:
        raise ValueError("resolution must be positive")
    n_x = max(1, round(width / resolution))
    n_y = max(1, round(length / resolution))
    while n_x * n_y < min_cells:
        n_x, n_y = n_x + 1, max(1, round((n_x + 1) * length / width))
    return n_x, n_y


def room_grid_eval(spec: RoomSpec, scenario: Scenario, resolution: float = DEFAULT_RESOLUTION,
                   quad: QuadratureConfig | None = None, *, min_cells: int = 100,
                   wall_attenuation_db: float = 10.0, nlos: str = "single-slope",
                   threads: int = 1) -> GridMap:
    """Raster of a single rectangular room (at least ``min_cells`` cells)."""
    layout = make_rect_room(spec, wall_attenuation_db)
    n_x, n_y = cells_for(spec.width, spec.length, resolution, min_cells)
    return grid_eval(layout, scenario, layout.bounds, n_x, n_y, quad, nlos=nlos, threads=threads)


def layout_grid_eval(layout: BuildingLayout, scenario: Scenario,
                     resolution: float = DEFAULT_RESOLUTION, quad: QuadratureConfig | None = None,
                     *, nlos: str = "single-slope", threads: int = 1) -> GridMap:
    """Raster over the bounding box of a whole layout."""
    x0, y0, x1, y1 = layout.bounds
    n_x, n_y = cells_for(x1 - x0, y1 - y0, resolution)
    return grid_eval(layout, scenario, layout.bounds, n_x, n_y, quad, nlos=nlos, threads=threads)


def mean_metrics(grid: GridMap) -> tuple[float, float]:
    """Cell-averaged ``(g_i, g_p)``."""
    if not grid.results:
        raise ValueError("empty grid")
    return (float(np.mean([r.g_i for r in grid.results])),
            float(np.mean([r.g_p for r in grid.results])))


def room_means(grid: GridMap, rooms) -> list[tuple[str, int, float, float]]:
    """Per-room ``(name, cells, mean g_i, mean g_p)`` for named rectangles.

    A cell belongs to the first room whose half-open box holds its centre;
    rooms that hold no cell centre are skipped.
    """
    pts = grid.centres
    g_i, g_p = np.array([r.g_i for r in grid.results]), np.array([r.g_p for r in grid.results])
    free = np.ones(len(pts), dtype=bool)
    out = []
    for name, (x0, y0, x1, y1) in rooms:
        inside = free & (pts[:, 0] >= x0) & (pts[:, 0] < x1) & (pts[:, 1] >= y0) & (pts[:, 1] < y1)
        free &= ~inside
        if inside.any():
            out.append((name, int(inside.sum()), float(g_i[inside].mean()), float(g_p[inside].mean())))
    return out


def cdf(values) -> list[tuple[float, float]]:
    """Empirical CDF as ``(value, P(X <= value))`` pairs at each distinct value."""
    v = np.sort(np.asarray(values, dtype=float).ravel())
    if v.size == 0:
        raise ValueError("cdf of an empty sample")
    uniq, counts = np.unique(v, return_counts=True)
    probs = np.cumsum(counts) / v.size
    return list(zip(uniq.tolist(), probs.tolist()))


# ---------------------------------------------------------------------------
# sweeps


@dataclass(frozen=True)
class SweepSpec:
    areas: tuple[float, ...] = ROOM_AREAS
    aspect_ratios: tuple[float, ...] = ROOM_ASPECT_RATIOS
    frequencies: tuple[float, ...] = (6.0, 28.0)

    def __post_init__(self):
        if not (self.areas and self.aspect_ratios and self.frequencies):
            raise ValueError("sweep lists must be non-empty")
        if any(a <= 0 for a in self.areas) or any(ar < 1 for ar in self.aspect_ratios):
            raise ValueError("areas must be positive and aspect ratios >= 1")

    def rooms(self):
        for area in self.areas:
            for ar in self.aspect_ratios:
                yield area, ar, RoomSpec.from_area(area, ar)


@dataclass(frozen=True)
class SweepRow:
    area: float
    aspect_ratio: float
    mean_g_i: float
    mean_g_p: float
    grid: GridMap = field(repr=False, compare=False)


def sweep_dimensions(spec: SweepSpec, scenario: Scenario, resolution: float = DEFAULT_RESOLUTION,
                     quad: QuadratureConfig | None = None, *, nlos: str = "single-slope",
                     threads: int = 1) -> list[SweepRow]:
    """One averaged row per (area, aspect ratio) at ``scenario.frequency_ghz``."""
    rows = []
    for area, ar, room in spec.rooms():
        grid = room_grid_eval(room, scenario, resolution, quad, nlos=nlos, threads=threads)
        g_i, g_p = mean_metrics(grid)
        rows.append(SweepRow(area, ar, g_i, g_p, grid))
    return rows


def nondecreasing(values, slack: float = 0.0) -> bool:
    """Each step may fall by at most ``slack`` relative to the previous value."""
    v = list(values)
    return all(b >= a - slack * abs(a) for a, b in zip(v, v[1:]))


def sign_pattern(values, slack: float = 0.0) -> list[int]:
    """Signs of successive differences; steps within ``slack`` (relative) count as 0."""
    v = list(values)
    out = []
    for a, b in zip(v, v[1:]):
        d = b - a
        out.append(0 if abs(d) <= slack * abs(a) else (1 if d > 0 else -1))
    return out


def is_unimodal(values, slack: float = 0.0) -> bool:
    """Rises then falls: exactly one + to - change and no - to + change."""
    signs = [s for s in sign_pattern(values, slack) if s]
    changes = sum(1 for a, b in zip(signs, signs[1:]) if a != b)
    return changes == 1 and signs[0] == 1


@dataclass(frozen=True)
class FrequencySweep:
    frequencies: tuple[float, ...]
    mean_g_i: tuple[float, ...]
    mean_g_p: tuple[float, ...]
    f_star: float
    g_i_star: float
    brackets: tuple[tuple[float, float], ...]
    g_p_nondecreasing: bool
    g_i_unimodal: bool


def sweep_frequency(frequencies, scenario: Scenario, room: RoomSpec,
                    resolution: float = DEFAULT_RESOLUTION, quad: QuadratureConfig | None = None,
                    *, refine: bool = True, rel_tol: float = 0.02, slack: float = 0.01,
                    nlos: str = "single-slope", threads: int = 1) -> FrequencySweep:
    """Room-averaged gains across frequency plus the g_i-maximizing frequency.

    The argmax is located on the grid, then refined by golden-section search
    in log-frequency between the neighbouring grid points until the bracket
    is within ``+-rel_tol`` of its centre.
    """
    freqs = sorted(float(f) for f in frequencies)
    if not freqs or freqs[0] < 0.5 or freqs[-1] > 100.0:
        raise ValueError("frequencies must lie in [0.5, 100] GHz")
    cache: dict[float, tuple[float, float]] = {}

    def at(f):
        if f not in cache:
            grid = room_grid_eval(room, scenario.replace(frequency_ghz=f), resolution, quad,
                                  nlos=nlos, threads=threads)
            cache[f] = mean_metrics(grid)
        return cache[f]

    table = [at(f) for f in freqs]
    g_i = [t[0] for t in table]
    g_p = [t[1] for t in table]
    k = int(np.argmax(g_i))
    f_star, best = freqs[k], g_i[k]
    brackets = []
    if refine and len(freqs) > 1:
        lo = math.log(freqs[max(k - 1, 0)])
        hi = math.log(freqs[min(k + 1, len(freqs) - 1)])
        invphi = (math.sqrt(5.0) - 1.0) / 2.0
        c, d = hi - invphi * (hi - lo), lo + invphi * (hi - lo)
        brackets.append((math.exp(lo), math.exp(hi)))
        while math.exp(hi - lo) > (1 + rel_tol) / (1 - rel_tol):
            if at(math.exp(c))[0] >= at(math.exp(d))[0]:
                hi, d = d, c
                c = hi - invphi * (hi - lo)
            else:
                lo, c = c, d
                d = lo + invphi * (hi - lo)
            brackets.append((math.exp(lo), math.exp(hi)))
        for f, (gi, _) in cache.items():
            if gi > best:
                f_star, best = f, gi
    return FrequencySweep(tuple(freqs), tuple(g_i), tuple(g_p), f_star, best, tuple(brackets),
                          nondecreasing(g_p, slack), is_unimodal(g_i, slack))


# ---------------------------------------------------------------------------
# noise calibration


@dataclass(frozen=True)
class Calibration:
    noise_w: float | None
    residual: float
    degenerate: bool
    means: tuple[float, ...]

    @property
    def found(self) -> bool:
        return self.noise_w is not None and self.residual == 0.0

    @property
    def noise_dbw(self) -> float:
        if not self.noise_w:
            return -math.inf
        return 10.0 * math.log10(self.noise_w)


def _interval_violation(values, lo, hi) -> float:
    v = np.asarray(values)
    return float(np.sum(np.maximum(lo - v, 0.0) + np.maximum(v - hi, 0.0)))


def room_means_with_noise(grids, noise_w: float) -> list[float]:
    out = []
    for g in grids:
        b_o = np.array([r.breakdown.i_o for r in g.results])
        b_b = np.array([r.breakdown.i_b for r in g.results])
        out.append(float(np.mean((b_o + noise_w) / (b_b + noise_w))))
    return out


def calibrate_noise(grids, target=(41.0, 46.0), n_grid: int = 400) -> Calibration:
    """Noise power placing every per-room mean ``g_i`` inside ``target``.

    Scans zero plus a log-spaced noise grid spanning the interference levels
    and keeps the smallest noise with the least total interval violation.
    ``noise_w=None`` with a positive residual means no noise level fits.
    """
    lo, hi = target
    if not lo <= hi:
        raise ValueError("target interval must satisfy lo <= hi")
    grids = list(grids)
    if not grids:
        raise ValueError("no rooms to calibrate on")
    i_all = np.array([[r.breakdown.i_o, r.breakdown.i_b] for g in grids for r in g.results])
    degenerate = bool(np.allclose(i_all[:, 0], i_all[:, 1], rtol=1e-12, atol=0.0))
    positive = i_all[i_all > 0]
    floor = positive.min() if positive.size else 1e-30
    ceil = positive.max() if positive.size else 1.0
    candidates = np.concatenate(([0.0], np.geomspace(floor * 1e-4, ceil * 1e4, n_grid)))
    best_noise, best_res, best_means = None, math.inf, ()
    for noise in candidates:
        means = room_means_with_noise(grids, noise)
        res = _interval_violation(means, lo, hi)
        if res < best_res:
            best_noise, best_res, best_means = float(noise), res, tuple(means)
        if degenerate or res == 0.0:
            break
    return Calibration(best_noise if best_res == 0.0 else None, best_res, degenerate, best_means)
