"""Path-gain models and coverage distances.

All gains follow the 3GPP indoor convention: a distance law anchored at the
free-space loss at 1 m, ``32.4 + 20 log10(f_GHz)`` dB.

The open-space benchmark is a two-ray ground-reflection model in one of two
forms (``Scenario.two_ray_form``):

``"crossover"`` (default)
    Free-space law up to the crossover distance ``4 pi h^2 / lambda`` and
    the ``h^4 / r^4`` ground-wave law beyond it, joined continuously.
``"coherent"``
    Phasor sum of the direct ray (length ``r``) and the ground-reflected
    ray (length ``sqrt(r^2 + 4 h^2)``) with reflection coefficient
    ``ground_reflection_coeff``.  Coverage is solved on its free-space
    envelope.

Gains are clamped below ``Scenario.r_min_m``: a transmitter closer than the
clamp radius sees the gain at the clamp radius.
"""
from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy import optimize

SPEED_OF_LIGHT = 299_792_458.0
ANCHOR_DB = 32.4
TWO_RAY_FORMS = ("crossover", "coherent")

_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(16)


@dataclass(frozen=True)
class Scenario:
    """Radio configuration shared by the open-space and in-building cases.

    Power quantities are in dB: ``p_t_dbw_per_m2`` is the transmit power
    density, ``p_th_dbw_per_m2`` the detectability threshold and
    ``noise_dbw`` the thermal noise power (``-inf`` means noise-free).
    """

    frequency_ghz: float
    p_t_dbw_per_m2: float = -34.0
    p_th_dbw_per_m2: float = -110.0
    noise_dbw: float = -math.inf
    n_los: float = 1.73
    n_nlos: float = 3.19
    antenna_height_m: float = 1.2
    r_min_m: float = 0.5
    r_max_m: float = 50_000.0
    ground_reflection_coeff: float = -1.0
    two_ray_form: str = "crossover"

    def __post_init__(self):
        if not 0.5 <= self.frequency_ghz <= 100.0:
            raise ValueError(f"frequency_ghz must lie in [0.5, 100], got {self.frequency_ghz}")
        if not self.p_t_dbw_per_m2 > self.p_th_dbw_per_m2:
            raise ValueError("transmit density must exceed the detectability threshold")
        if not (self.n_los > 0 and self.n_nlos > 0):
            raise ValueError("path-loss exponents must be positive")
        if not 0 < self.r_min_m < self.r_max_m:
            raise ValueError("need 0 < r_min_m < r_max_m")
        if self.antenna_height_m <= 0:
            raise ValueError("antenna_height_m must be positive")
        if not -1.0 <= self.ground_reflection_coeff <= 0.0:
            raise ValueError("ground_reflection_coeff must lie in [-1, 0]")
        if self.two_ray_form not in TWO_RAY_FORMS:
            raise ValueError(f"two_ray_form must be one of {TWO_RAY_FORMS}")
        if math.isnan(self.noise_dbw) or self.noise_dbw == math.inf:
            raise ValueError("noise_dbw must be finite or -inf")

    @property
    def p_t(self) -> float:
        """Transmit power density in W/m^2."""
        return 10.0 ** (self.p_t_dbw_per_m2 / 10.0)

    @property
    def p_th(self) -> float:
        return 10.0 ** (self.p_th_dbw_per_m2 / 10.0)

    @property
    def noise_w(self) -> float:
        if self.noise_dbw == -math.inf:
            return 0.0
        return 10.0 ** (self.noise_dbw / 10.0)

    @property
    def budget_db(self) -> float:
        """Largest path loss at which a transmitter is still detectable."""
        return self.p_t_dbw_per_m2 - self.p_th_dbw_per_m2

    @property
    def wavelength_m(self) -> float:
        return SPEED_OF_LIGHT / (self.frequency_ghz * 1e9)

    @property
    def crossover_m(self) -> float:
        """Distance where the free-space and ground-wave laws meet."""
        return 4.0 * math.pi * self.antenna_height_m**2 / self.wavelength_m

    @property
    def anchor_gain(self) -> float:
        """Linear gain of the distance laws at 1 m."""
        return 10.0 ** (-(ANCHOR_DB + 20.0 * math.log10(self.frequency_ghz)) / 10.0)

    def replace(self, **changes) -> "Scenario":
        return dataclasses.replace(self, **changes)


class PathGainModel:
    """Base class of the path-gain model family."""

    tag = "abstract"

    def gain_db(self, scenario: Scenario, r):
        return 10.0 * np.log10(self.gain(scenario, r))

    def gain(self, scenario: Scenario, r):
        return 10.0 ** (np.asarray(self.gain_db(scenario, r)) / 10.0)


@dataclass(frozen=True)
class OpenSpaceTwoRay(PathGainModel):
    tag = "open-space-two-ray"

    def gain(self, scenario, r):
        return two_ray_gain(scenario, _clamped(scenario, r))

    def gain_db(self, scenario, r):
        return 10.0 * np.log10(self.gain(scenario, r))


@dataclass(frozen=True)
class InBuildingLOS(PathGainModel):
    tag = "in-building-los"

    def gain_db(self, scenario, r):
        return _power_law_db(scenario, scenario.n_los, _clamped(scenario, r))


@dataclass(frozen=True)
class InBuildingNLOS(PathGainModel):
    tag = "in-building-nlos"

    def gain_db(self, scenario, r):
        return _power_law_db(scenario, scenario.n_nlos, _clamped(scenario, r))


@dataclass(frozen=True)
class MultiWall(PathGainModel):
    """LOS distance law minus the losses of the walls crossed by one link."""

    losses_db: tuple[float, ...] = field(default=(10.0,))
    tag = "multi-wall"

    def __post_init__(self):
        if len(self.losses_db) < 1:
            raise ValueError("MultiWall needs at least one crossed wall")
        if any(not loss >= 0 for loss in self.losses_db):
            raise ValueError("wall losses must be non-negative")

    @property
    def crossings(self) -> int:
        return len(self.losses_db)

    @property
    def total_loss_db(self) -> float:
        return float(sum(self.losses_db))

    def gain_db(self, scenario, r):
        return _power_law_db(scenario, scenario.n_los, _clamped(scenario, r)) - self.total_loss_db


def _clamped(scenario: Scenario, r):
    r = np.asarray(r, dtype=float)
    if np.any(~(r > 0)):
        raise ValueError("link distance must be positive")
    out = np.maximum(r, scenario.r_min_m)
    return out if out.ndim else float(out)


def _power_law_db(scenario: Scenario, exponent: float, r):
    return -(ANCHOR_DB + 10.0 * exponent * np.log10(r) + 20.0 * math.log10(scenario.frequency_ghz))


def two_ray_gain(scenario: Scenario, r):
    """Linear open-space gain at horizontal distance ``r`` (no clamp)."""
    r = np.asarray(r, dtype=float)
    k0 = scenario.anchor_gain
    if scenario.two_ray_form == "crossover":
        dc = scenario.crossover_m
        with np.errstate(divide="ignore"):
            return np.where(r <= dc, k0 / r**2, k0 * dc * dc / r**4)
    h2 = 2.0 * scenario.antenna_height_m
    d2 = np.hypot(r, h2)
    delta = h2 * h2 / (r + d2)  # d2 - d1 without cancellation
    k = 2.0 * math.pi / scenario.wavelength_m
    gamma = scenario.ground_reflection_coeff
    return k0 * (1.0 / r**2 + gamma**2 / d2**2 + 2.0 * gamma * np.cos(k * delta) / (r * d2))


def path_gain_db(model: PathGainModel, scenario: Scenario, r):
    """Gain of ``model`` in dB at link distance ``r`` (scalar or array)."""
    return model.gain_db(scenario, r)


def _exponent(model: PathGainModel, scenario: Scenario) -> float:
    if isinstance(model, OpenSpaceTwoRay):
        return 2.0
    if isinstance(model, InBuildingNLOS):
        return scenario.n_nlos
    return scenario.n_los


def detect_radius(model: PathGainModel, scenario: Scenario, extra_loss_db=0.0):
    """Distance where the monotone gain law meets the threshold (vectorized, unchecked).

    ``extra_loss_db`` is subtracted from the link budget.
    """
    loss = np.asarray(extra_loss_db, dtype=float)
    if isinstance(model, MultiWall):
        loss = loss + model.total_loss_db
    margin = scenario.budget_db - loss - ANCHOR_DB - 20.0 * math.log10(scenario.frequency_ghz)
    radius = 10.0 ** (margin / (10.0 * _exponent(model, scenario)))
    if isinstance(model, OpenSpaceTwoRay) and scenario.two_ray_form == "crossover":
        dc = scenario.crossover_m
        radius = np.where(radius > dc, np.sqrt(radius * dc), radius)
    return radius if np.ndim(radius) else float(radius)


def envelope_gain_db(model: PathGainModel, scenario: Scenario, r):
    """Monotone law behind ``model`` (the coherent two-ray loses its ground ray)."""
    if isinstance(model, OpenSpaceTwoRay) and scenario.two_ray_form == "coherent":
        return _power_law_db(scenario, 2.0, _clamped(scenario, r))
    return model.gain_db(scenario, r)


def coverage_distance(model: PathGainModel, scenario: Scenario) -> float:
    """Distance ``R`` with ``P_T G(R) = P_th`` on the monotone law of ``model``.

    Raises ``ValueError`` when the solution lies beyond ``r_max_m``.
    """
    radius = detect_radius(model, scenario)
    if radius > scenario.r_max_m:
        raise ValueError(
            f"coverage distance {radius:.4g} m exceeds r_max_m={scenario.r_max_m} for {model.tag}")
    return radius


def coverage_distance_numeric(model: PathGainModel, scenario: Scenario) -> float:
    """Root-finding route to the coverage distance (independent of the closed form)."""
    target = -scenario.budget_db
    lo, hi = math.log(scenario.r_min_m), math.log(scenario.r_max_m)

    def residual(log_r):
        return float(envelope_gain_db(model, scenario, math.exp(log_r))) - target

    if residual(hi) > 0:
        raise ValueError("threshold not reached within r_max_m")
    return math.exp(optimize.brentq(residual, lo, hi, xtol=1e-14, rtol=1e-15))


# ---------------------------------------------------------------------------
# radial profiles: C(r) = P_T * int_0^r G(rho) rho d(rho)


class RadialProfile:
    """Cumulative radial power of one gain model under one scenario."""

    def __init__(self, model: PathGainModel, scenario: Scenario):
        self.model = model
        self.scenario = scenario

    def cumulative(self, r):
        raise NotImplementedError

    def radius(self, extra_loss_db=0.0):
        return detect_radius(self.model, self.scenario, extra_loss_db)

    def _inner(self, r):
        s = self.scenario
        g = float(self.model.gain(s, s.r_min_m))
        return s.p_t * g * np.minimum(r, s.r_min_m) ** 2 / 2.0


class PowerLawProfile(RadialProfile):
    def __init__(self, model, scenario):
        super().__init__(model, scenario)
        self.exponent = _exponent(model, scenario)
        extra = model.total_loss_db if isinstance(model, MultiWall) else 0.0
        self.k = scenario.p_t * scenario.anchor_gain * 10.0 ** (-extra / 10.0)

    def cumulative(self, r):
        r = np.asarray(r, dtype=float)
        rmin = self.scenario.r_min_m
        outer = np.maximum(r, rmin)
        return self._inner(r) + self.k * _power_integral(rmin, outer, self.exponent)


def _power_integral(a, b, n):
    """``int_a^b r^(1-n) dr``."""
    if abs(n - 2.0) < 1e-12:
        return np.log(b / a)
    return (b ** (2.0 - n) - a ** (2.0 - n)) / (2.0 - n)


class CrossoverProfile(RadialProfile):
    def cumulative(self, r):
        r = np.asarray(r, dtype=float)
        s = self.scenario
        rmin, dc = s.r_min_m, s.crossover_m
        k = s.p_t * s.anchor_gain
        near = np.log(np.clip(r, rmin, max(dc, rmin)) / rmin)
        far_start = max(dc, rmin)
        rf = np.maximum(r, far_start)
        far = dc * dc * (far_start**-2 - rf**-2) / 2.0
        return self._inner(r) + k * (near + far)


class CoherentProfile(RadialProfile):
    """Tabulated cumulative power of the oscillating two-ray gain.

    Table edges sit where the path difference crosses multiples of the
    wavelength, so each panel holds one oscillation and a 16-point
    Gauss-Legendre rule is accurate to near machine precision.
    """

    def __init__(self, model, scenario):
        super().__init__(model, scenario)
        self.edges = _coherent_edges(scenario)
        panels = self._panel(self.edges[:-1], self.edges[1:])
        c0 = float(self._inner(scenario.r_min_m))
        self.table = c0 + np.concatenate(([0.0], np.cumsum(panels)))

    def _panel(self, a, b):
        mid, half = (a + b) / 2.0, (b - a) / 2.0
        x = mid[..., None] + half[..., None] * _GL_NODES
        f = two_ray_gain(self.scenario, x) * x
        return self.scenario.p_t * half * (f @ _GL_WEIGHTS)

    def cumulative(self, r):
        r = np.asarray(r, dtype=float)
        s = self.scenario
        if np.any(r > self.edges[-1] * (1 + 1e-12)):
            raise ValueError("radius beyond r_max_m")
        rc = np.clip(r, s.r_min_m, self.edges[-1])
        idx = np.clip(np.searchsorted(self.edges, rc, side="right") - 1, 0, len(self.edges) - 2)
        out = self.table[idx] + self._panel(self.edges[idx], rc)
        return np.where(r < s.r_min_m, self._inner(r), out)


def _coherent_edges(scenario: Scenario) -> np.ndarray:
    lam = scenario.wavelength_m
    h2 = 2.0 * scenario.antenna_height_m
    rmin, rmax = scenario.r_min_m, scenario.r_max_m

    def delta(r):
        return h2 * h2 / (r + math.hypot(r, h2))

    m = np.arange(math.floor(delta(rmax) / lam) + 1, math.ceil(delta(rmin) / lam))
    d = m * lam
    d = d[(d > delta(rmax)) & (d < delta(rmin))]
    cuts = (h2 * h2 - d * d) / (2.0 * d)
    edges = np.unique(np.concatenate(([rmin, rmax], cuts)))
    # long panels are split geometrically so the slow tail stays resolved
    pieces = [edges[:1]]
    for lo, hi in zip(edges[:-1], edges[1:]):
        n = max(1, math.ceil(math.log(hi / lo) / math.log(1.15)))
        pieces.append(np.geomspace(lo, hi, n + 1)[1:])
    return np.concatenate(pieces)


@lru_cache(maxsize=512)
def radial_profile(model: PathGainModel, scenario: Scenario) -> RadialProfile:
    """Cached cumulative-power helper for a (model, scenario) pair."""
    if isinstance(model, OpenSpaceTwoRay):
        if scenario.two_ray_form == "crossover":
            return CrossoverProfile(model, scenario)
        return CoherentProfile(model, scenario)
    return PowerLawProfile(model, scenario)
