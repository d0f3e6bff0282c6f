"""Received intended/interference power and the two BWP gains.

The transmitter field has uniform density ``P_T`` over the disk of radius
``r_max`` around the UE, in both the open-space benchmark and the building
(walls change propagation, not deployment).  A transmitter contributes
intended power when it is detectable, i.e. inside the coverage distance of
the gain model that applies to its link, and interference otherwise.

Two quadrature schemes are available for the in-building integrals:

``"ray"``
    Midpoint rule in angle.  Along each ray the crossings are located
    exactly and each radial segment is integrated in closed form from the
    cumulative radial power of its gain model.
``"grid"``
    Plain polar midpoint grid (geometric radial spacing), each sample
    classified individually.  Slower and less accurate; kept as an
    independent cross-check of the ray scheme.
"""
from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from . import kernels
from .geometry import TOL, BuildingLayout, Point2D, crossing_count, link_crossings
from .propagation import (
    InBuildingLOS,
    InBuildingNLOS,
    OpenSpaceTwoRay,
    PathGainModel,
    Scenario,
    coverage_distance,
    radial_profile,
)

OPEN_SPACE = OpenSpaceTwoRay()
LOS = InBuildingLOS()
NLOS = InBuildingNLOS()
NLOS_CHOICES = ("single-slope", "multiwall")


@dataclass(frozen=True)
class QuadratureConfig:
    n_theta: int = 1024
    n_r: int = 400
    refine: int = 1
    r_max: float | None = None
    scheme: str = "ray"

    def __post_init__(self):
        if self.n_theta < 4 or self.n_r < 4 or self.refine < 1:
            raise ValueError("quadrature resolutions must be positive")
        if self.scheme not in ("ray", "grid"):
            raise ValueError(f"unknown quadrature scheme {self.scheme!r}")
        if self.r_max is not None and not self.r_max > 0:
            raise ValueError("r_max override must be positive")

    @property
    def angles(self) -> np.ndarray:
        n = 2 * ((self.n_theta * self.refine + 1) // 2)  # even keeps mirror symmetry exact
        return (np.arange(n) + 0.5) * (2.0 * math.pi / n)

    @property
    def radial_cells(self) -> int:
        return self.n_r * self.refine

    def refined(self, factor: int = 2) -> "QuadratureConfig":
        return dataclasses.replace(self, refine=self.refine * factor)

    def apply(self, scenario: Scenario) -> Scenario:
        if self.r_max is None or self.r_max == scenario.r_max_m:
            return scenario
        return scenario.replace(r_max_m=self.r_max)


DEFAULT_QUAD = QuadratureConfig()


@dataclass(frozen=True)
class PowerBreakdown:
    p_o: float
    i_o: float
    p_b_los: float
    p_b_nlos: float
    i_b_los: float
    i_b_nlos: float

    @property
    def p_b(self) -> float:
        return self.p_b_los + self.p_b_nlos

    @property
    def i_b(self) -> float:
        return self.i_b_los + self.i_b_nlos

    def as_dict(self) -> dict[str, float]:
        d = dataclasses.asdict(self)
        d.update(p_b=self.p_b, i_b=self.i_b)
        return d


@dataclass(frozen=True)
class BwpResult:
    ue: Point2D
    breakdown: PowerBreakdown
    noise_w: float
    g_p: float
    g_i: float
    gamma_ratio: float

    @property
    def sinr_building(self) -> float:
        b = self.breakdown
        return b.p_b / (b.i_b + self.noise_w)

    @property
    def sinr_open(self) -> float:
        b = self.breakdown
        return b.p_o / (b.i_o + self.noise_w)


def gains(breakdown: PowerBreakdown, noise_w: float) -> tuple[float, float, float]:
    """``(g_p, g_i, g_p * g_i)`` for a power breakdown."""
    b = breakdown
    g_p = b.p_b / b.p_o
    g_i = (b.i_o + noise_w) / (b.i_b + noise_w)
    return g_p, g_i, g_p * g_i


# ---------------------------------------------------------------------------
# regions


def classify_region(layout: BuildingLayout | None, scenario: Scenario, ue, tx,
                    nlos: str = "single-slope") -> str:
    """Region tag of the transmitter at ``tx`` as seen from ``ue``.

    With ``layout=None`` the open-space tags ``PO``/``IO`` are returned,
    otherwise ``PL``/``IL`` (LOS link) or ``PN``/``IN`` (NLOS link).
    """
    r = math.hypot(tx[0] - ue[0], tx[1] - ue[1])
    if r <= 0:
        raise ValueError("tx and ue coincide")
    if layout is None:
        return "PO" if r <= coverage_distance(OPEN_SPACE, scenario) else "IO"
    crossings = link_crossings(layout, tx, ue)
    if not crossings:
        return "PL" if r <= coverage_distance(LOS, scenario) else "IL"
    if nlos == "multiwall":
        loss = sum(c[2] for c in crossings)
        radius = float(radial_profile(LOS, scenario).radius(loss))
    else:
        radius = coverage_distance(NLOS, scenario)
    return "PN" if r <= radius else "IN"


@lru_cache(maxsize=256)
def open_space_powers(scenario: Scenario, model: PathGainModel = OPEN_SPACE) -> tuple[float, float]:
    """``(p_o, i_o)``: intended and interference power in open space.

    Radial integrals of ``P_T G_O(r) 2 pi r`` over ``[0, R_O]`` and
    ``[R_O, r_max]`` (the gain is held constant inside the clamp radius).
    """
    radius = coverage_distance(model, scenario)
    if radius >= scenario.r_max_m:
        raise ValueError("coverage distance reaches r_max; enlarge r_max_m")
    prof = radial_profile(model, scenario)
    c_r, c_max = prof.cumulative(np.array([radius, scenario.r_max_m]))
    return 2.0 * math.pi * float(c_r), 2.0 * math.pi * float(c_max - c_r)


# ---------------------------------------------------------------------------
# in-building integrals


def _check_ue(layout: BuildingLayout, ue) -> Point2D:
    ue = Point2D(float(ue[0]), float(ue[1]))
    if not layout.contains(ue, strict=True):
        raise ValueError(f"UE {tuple(ue)} is not strictly inside the layout bounds {layout.bounds}")
    return ue


def building_powers(layout: BuildingLayout, scenario: Scenario, ue,
                    quad: QuadratureConfig | None = None, *, nlos: str = "single-slope",
                    los_model: PathGainModel | None = None,
                    nlos_model: PathGainModel | None = None,
                    open_model: PathGainModel | None = None) -> PowerBreakdown:
    """Polar quadrature of the in-building powers around ``ue``.

    ``nlos`` selects the NLOS law: ``"single-slope"`` (one exponent for every
    obstructed link) or ``"multiwall"`` (LOS law minus the losses of the
    crossed walls).  The ``*_model`` overrides replace the LOS, NLOS and
    open-space laws; they exist for consistency checks.
    """
    if nlos not in NLOS_CHOICES:
        raise ValueError(f"nlos must be one of {NLOS_CHOICES}")
    quad = quad or DEFAULT_QUAD
    scenario = quad.apply(scenario)
    ue = _check_ue(layout, ue)
    los_model = los_model or LOS
    nlos_model = nlos_model or NLOS
    p_o, i_o = open_space_powers(scenario, open_model or OPEN_SPACE)

    theta = quad.angles
    dirs = np.column_stack((np.cos(theta), np.sin(theta)))
    if quad.scheme == "ray":
        parts = _ray_scheme(layout, scenario, ue, dirs, nlos, los_model, nlos_model)
    else:
        parts = _grid_scheme(layout, scenario, ue, dirs, quad.radial_cells, nlos, los_model, nlos_model)
    dtheta = 2.0 * math.pi / len(theta)
    p_l, p_n, i_l, i_n = (float(np.sum(x)) * dtheta for x in parts)
    return PowerBreakdown(p_o, i_o, p_l, p_n, i_l, i_n)


def _ray_scheme(layout, scenario, ue, dirs, nlos, los_model, nlos_model):
    rmax = scenario.r_max_m
    walls = layout.wall_array
    prof_l = radial_profile(los_model, scenario)
    c_l = prof_l.cumulative

    if nlos == "multiwall":
        t, att = kernels.all_hits(ue.x, ue.y, dirs, rmax, walls, TOL)
        first = t[:, 0] if t.shape[1] else np.full(len(dirs), np.inf)
    else:
        first = kernels.first_hits(ue.x, ue.y, dirs, rmax, walls, TOL)

    los_end = np.minimum(first, rmax)
    p_los = c_l(np.minimum(los_end, prof_l.radius()))
    i_los = c_l(los_end) - p_los

    if nlos == "multiwall":
        if t.shape[1] == 0:
            zero = np.zeros(len(dirs))
            return p_los, zero, i_los, zero
        start = np.minimum(t, rmax)
        end = np.concatenate((start[:, 1:], np.full((len(dirs), 1), rmax)), axis=1)
        loss = np.cumsum(att, axis=1)
        with np.errstate(over="ignore", invalid="ignore"):
            scale = np.where(np.isinf(loss), 0.0, 10.0 ** (-loss / 10.0))
            cut = np.clip(np.nan_to_num(prof_l.radius(loss), nan=0.0), start, end)
        c_start, c_cut, c_end = c_l(start), c_l(cut), c_l(end)
        p_nlos = np.sum(scale * (c_cut - c_start), axis=1)
        i_nlos = np.sum(scale * (c_end - c_cut), axis=1)
    else:
        prof_n = radial_profile(nlos_model, scenario)
        blocked = first < rmax
        cut = np.clip(prof_n.radius(), los_end, rmax)
        c_start, c_cut = prof_n.cumulative(los_end), prof_n.cumulative(cut)
        c_end = float(prof_n.cumulative(rmax))
        p_nlos = np.where(blocked, c_cut - c_start, 0.0)
        i_nlos = np.where(blocked, c_end - c_cut, 0.0)
    return p_los, p_nlos, i_los, i_nlos


def radial_grid(scenario: Scenario, n_r: int) -> tuple[np.ndarray, np.ndarray]:
    """Ring centres and areas per radian: four uniform rings inside the clamp, then geometric."""
    rmin, rmax = scenario.r_min_m, scenario.r_max_m
    edges = np.concatenate((np.linspace(0.0, rmin, 5)[:-1], np.geomspace(rmin, rmax, n_r + 1)))
    a, b = edges[:-1], edges[1:]
    return (a + b) / 2.0, (b * b - a * a) / 2.0


def _grid_scheme(layout, scenario, ue, dirs, n_r, nlos, los_model, nlos_model):
    rc, area = radial_grid(scenario, n_r)
    walls = layout.wall_array
    rmax = scenario.r_max_m
    r_l = coverage_distance(los_model, scenario)
    g_l = los_model.gain(scenario, rc)[None, :] * scenario.p_t * area

    if nlos == "multiwall":
        t, att = kernels.all_hits(ue.x, ue.y, dirs, rmax, walls, TOL)
        loss = np.zeros((len(dirs), len(rc)))
        for j in range(t.shape[1]):
            loss = loss + np.where(t[:, j:j + 1] < rc[None, :], att[:, j:j + 1], 0.0)
        first = t[:, 0] if t.shape[1] else np.full(len(dirs), np.inf)
        blocked = first[:, None] < rc[None, :]
        with np.errstate(over="ignore"):
            g_n = g_l * np.where(np.isinf(loss), 0.0, 10.0 ** (-loss / 10.0))
        radius = radial_profile(los_model, scenario).radius(loss)
    else:
        first = kernels.first_hits(ue.x, ue.y, dirs, rmax, walls, TOL)
        blocked = first[:, None] < rc[None, :]
        g_n = np.broadcast_to(nlos_model.gain(scenario, rc)[None, :] * scenario.p_t * area, blocked.shape)
        radius = coverage_distance(nlos_model, scenario)

    los_p = ~blocked & (rc <= r_l)
    los_i = ~blocked & (rc > r_l)
    nlos_p = blocked & (rc <= radius)
    nlos_i = blocked & ~(rc <= radius)
    g_l = np.broadcast_to(g_l, blocked.shape)
    return (np.sum(np.where(los_p, g_l, 0.0), axis=1), np.sum(np.where(nlos_p, g_n, 0.0), axis=1),
            np.sum(np.where(los_i, g_l, 0.0), axis=1), np.sum(np.where(nlos_i, g_n, 0.0), axis=1))


def evaluate(layout: BuildingLayout, scenario: Scenario, ue, quad: QuadratureConfig | None = None,
             **kwargs) -> BwpResult:
    """Power breakdown and gains at one UE location."""
    quad = quad or DEFAULT_QUAD
    b = building_powers(layout, scenario, ue, quad, **kwargs)
    noise = scenario.noise_w
    g_p, g_i, ratio = gains(b, noise)
    return BwpResult(Point2D(float(ue[0]), float(ue[1])), b, noise, g_p, g_i, ratio)


def with_noise(result: BwpResult, noise_w: float) -> BwpResult:
    """Recompute the gains of ``result`` under a different noise power."""
    g_p, g_i, ratio = gains(result.breakdown, noise_w)
    return BwpResult(result.ue, result.breakdown, noise_w, g_p, g_i, ratio)


__all__ = [
    "BwpResult", "PowerBreakdown", "QuadratureConfig", "DEFAULT_QUAD", "building_powers",
    "classify_region", "crossing_count", "evaluate", "gains", "open_space_powers", "with_noise",
]
