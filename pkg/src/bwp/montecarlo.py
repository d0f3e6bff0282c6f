"""Finite-N random deployments as an oracle for the continuum integrals.

Each repetition drops ``n_elements`` transmitters uniformly on the disk of
radius ``r_max`` around the UE.  Every element carries the power
``P_T * pi * r_max^2 / N`` and is classified and attenuated exactly like a
quadrature sample, so the sample sum is an unbiased estimate of each
integral.  Repetition ``k`` draws from ``PCG64(SeedSequence([seed, k]))``.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import kernels
from .core import LOS, NLOS, NLOS_CHOICES, OPEN_SPACE, PowerBreakdown
from .geometry import TOL, BuildingLayout
from .propagation import PathGainModel, Scenario, coverage_distance, radial_profile

PRNG = "numpy PCG64, SeedSequence([seed, repetition])"
_FIELDS = ("p_o", "i_o", "p_b_los", "p_b_nlos", "i_b_los", "i_b_nlos")


@dataclass(frozen=True)
class McConfig:
    n_elements: int = 1_000_000
    seed: int = 0
    repetitions: int = 20
    chunk: int = 1 << 17

    def __post_init__(self):
        if self.n_elements < 1 or self.repetitions < 1 or self.chunk < 1:
            raise ValueError("n_elements, repetitions and chunk must be >= 1")


@dataclass(frozen=True)
class McResult:
    mean: PowerBreakdown
    stderr: PowerBreakdown
    samples: np.ndarray  # (repetitions, 6) per-repetition estimates in _FIELDS order
    config: McConfig

    def z_scores(self, reference: PowerBreakdown) -> dict[str, float]:
        """``(reference - mean) / stderr`` per power term (sub-terms and totals)."""
        out = {}
        for name in (*_FIELDS, "p_b", "i_b"):
            se = self.stderr_of(name)
            diff = getattr(reference, name) - getattr(self.mean, name)
            out[name] = 0.0 if diff == 0 else (diff / se if se > 0 else math.inf)
        return out

    def stderr_of(self, name: str) -> float:
        """Standard error of a sub-term or of the ``p_b`` / ``i_b`` totals."""
        if name in _FIELDS:
            return getattr(self.stderr, name)
        cols = {"p_b": [2, 3], "i_b": [4, 5]}[name]
        per_rep = self.samples[:, cols].sum(axis=1)
        n = len(per_rep)
        return float(np.std(per_rep, ddof=1) / math.sqrt(n)) if n > 1 else math.nan


def _one_repetition(layout, scenario, ue, cfg, rep, nlos, los_model, nlos_model, open_model):
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence([cfg.seed, rep])))
    rmax = scenario.r_max_m
    weight = scenario.p_t * math.pi * rmax * rmax / cfg.n_elements
    r_o = coverage_distance(open_model, scenario)
    r_l = coverage_distance(los_model, scenario)
    r_n = coverage_distance(nlos_model, scenario)
    prof_l = radial_profile(los_model, scenario)
    walls = layout.wall_array if layout is not None else np.zeros((0, 5))
    acc = np.zeros(6)
    remaining = cfg.n_elements
    while remaining > 0:
        m = min(cfg.chunk, remaining)
        remaining -= m
        r = rmax * np.sqrt(rng.random(m))
        theta = 2.0 * math.pi * rng.random(m)
        r = np.maximum(r, 1e-12)
        g_o = open_model.gain(scenario, r)
        acc[0] += g_o[r <= r_o].sum()
        acc[1] += g_o[r > r_o].sum()

        dirs = np.column_stack((np.cos(theta), np.sin(theta)))
        g_l = los_model.gain(scenario, r)
        if nlos == "multiwall" and len(walls):
            t, att = kernels.all_hits(ue[0], ue[1], dirs, r, walls, TOL)
            blocked = np.isfinite(t[:, 0])
            loss = att.sum(axis=1)
            with np.errstate(over="ignore"):
                g_n = g_l * np.where(np.isinf(loss), 0.0, 10.0 ** (-loss / 10.0))
            intended_n = r <= prof_l.radius(loss)
        else:
            blocked = np.isfinite(kernels.first_hits(ue[0], ue[1], dirs, r, walls, TOL)) \
                if len(walls) else np.zeros(m, dtype=bool)
            g_n = nlos_model.gain(scenario, r)
            intended_n = r <= r_n
        los = ~blocked
        acc[2] += g_l[los & (r <= r_l)].sum()
        acc[3] += g_n[blocked & intended_n].sum()
        acc[4] += g_l[los & (r > r_l)].sum()
        acc[5] += g_n[blocked & ~intended_n].sum()
    return acc * weight


def mc_powers(layout: BuildingLayout | None, scenario: Scenario, ue, cfg: McConfig | None = None, *,
              nlos: str = "single-slope", los_model: PathGainModel | None = None,
              nlos_model: PathGainModel | None = None, open_model: PathGainModel | None = None,
              threads: int = 1) -> McResult:
    """Monte Carlo estimate of the six power terms with standard errors.

    ``layout=None`` means no walls.  Standard errors are the spread of the
    per-repetition estimates divided by ``sqrt(repetitions)`` (NaN for a
    single repetition).
    """
    if nlos not in NLOS_CHOICES:
        raise ValueError(f"nlos must be one of {NLOS_CHOICES}")
    cfg = cfg or McConfig()
    ue = (float(ue[0]), float(ue[1]))
    args = (layout, scenario, ue, cfg)
    models = (nlos, los_model or LOS, nlos_model or NLOS, open_model or OPEN_SPACE)
    if threads > 1 and cfg.repetitions > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            rows = list(pool.map(lambda k: _one_repetition(*args, k, *models), range(cfg.repetitions)))
    else:
        rows = [_one_repetition(*args, k, *models) for k in range(cfg.repetitions)]
    samples = np.array(rows)
    mean = samples.mean(axis=0)
    if cfg.repetitions > 1:
        se = samples.std(axis=0, ddof=1) / math.sqrt(cfg.repetitions)
    else:
        se = np.full(6, math.nan)
    return McResult(PowerBreakdown(*map(float, mean)), PowerBreakdown(*map(float, se)), samples, cfg)
