"""Closed-form lower bounds and nearest-neighbor distance laws.

Two bound families, both plugging in a lower bound beta for the plain-TSP
constant:

  ratio bound        beta / (1 + alpha)
  parametric bound   beta * sqrt(rho*)  with  rho* = c / (c + alpha*beta),

where c is the expected length of connecting one drone node to its nearest
and second-nearest truck-visited points at unit intensity (c = 5/4 under
the Euclidean norm). The same parametric formula is applied to the
rectilinear-truck model with the rectilinear beta plugged in; only the beta
changes, since drone connections stay Euclidean.

A Poisson-process sampling oracle validates the nearest-neighbor laws.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .geometry import substream

NN_CHUNK = 8192


class NormKind(str, Enum):
    L2 = "l2"
    L1 = "l1"


#: Named beta presets: a proven Euclidean lower bound, the empirical Euclidean
#: value, the rectilinear nearest-neighbor bound, and the empirical
#: rectilinear value.
BETA_PRESETS = {
    "gaudio": 0.6277,
    "empirical_l2": 0.71,
    "nn_l1": 0.78332,
    "empirical_l1": 0.90,
}


def ball_area(norm: NormKind, r: float) -> float:
    """Area of the metric ball of radius r."""
    if norm == NormKind.L1:
        return 2.0 * r * r
    return math.pi * r * r


def nn_pdf(norm: NormKind, order: int, n: float, r: float) -> float:
    """Density of the distance from a fixed point to the nearest (order 1)
    or second-nearest (order 2) point of a Poisson process of intensity n."""
    if r < 0:
        raise ValueError(f"r must be >= 0, got {r}")
    if n <= 0:
        raise ValueError(f"intensity must be > 0, got {n}")
    if norm == NormKind.L2:
        if order == 1:
            return 2.0 * math.pi * n * r * math.exp(-math.pi * n * r * r)
        if order == 2:
            return 2.0 * math.pi ** 2 * n ** 2 * r ** 3 * math.exp(-math.pi * n * r * r)
    else:
        if order == 1:
            return 4.0 * n * r * math.exp(-2.0 * n * r * r)
        if order == 2:
            return 8.0 * n ** 2 * r ** 3 * math.exp(-2.0 * n * r * r)
    raise ValueError(f"order must be 1 or 2, got {order}")


def nn_expectation(norm: NormKind, order: int, n: float) -> float:
    """Expected nearest / second-nearest distance at intensity n."""
    if n <= 0:
        raise ValueError(f"intensity must be > 0, got {n}")
    root = math.sqrt(n)
    if norm == NormKind.L2:
        if order == 1:
            return 1.0 / (2.0 * root)
        if order == 2:
            return 3.0 / (4.0 * root)
    else:
        if order == 1:
            return math.sqrt(2.0 * math.pi) / (4.0 * root)
        if order == 2:
            return 3.0 * math.sqrt(2.0 * math.pi) / (8.0 * root)
    raise ValueError(f"order must be 1 or 2, got {order}")


def drone_link_constant() -> float:
    """Unit-intensity cost of tying a drone node to its two nearest truck
    points; derived from the nearest-neighbor expectations, not hard-coded."""
    return nn_expectation(NormKind.L2, 1, 1.0) + nn_expectation(NormKind.L2, 2, 1.0)


def _check_beta_alpha(beta: float, alpha: float) -> None:
    if beta <= 0:
        raise ValueError(f"beta must be > 0, got {beta}")
    if not alpha >= 1.0:
        raise ValueError(f"alpha must be >= 1, got {alpha}")


def lb_ratio(beta: float, alpha: float) -> float:
    """Ratio bound: the makespan is at least the TSP tour over (1 + alpha)."""
    _check_beta_alpha(beta, alpha)
    return beta / (1.0 + alpha)


def rho_star(beta: float, alpha: float) -> float:
    """Truck-node fraction equalizing the truck and drone bound terms."""
    _check_beta_alpha(beta, alpha)
    c = drone_link_constant()
    return c / (c + alpha * beta)


def lb_param(beta: float, alpha: float) -> float:
    """Parametric bound beta * sqrt(rho*); at least lb_ratio for alpha >= 1."""
    return beta * math.sqrt(rho_star(beta, alpha))


def tsp_nn_lower_constant(norm: NormKind) -> float:
    """Nearest-neighbor lower bound for the plain TSP constant (5/8 under l2)."""
    return 0.5 * (nn_expectation(norm, 1, 1.0) + nn_expectation(norm, 2, 1.0))


@dataclass(frozen=True)
class NnDistanceSample:
    norm: NormKind
    intensity: float
    trials: int
    seed: int
    nearest_mean: float
    nearest_stderr: float
    second_mean: float
    second_stderr: float

    def to_dict(self) -> dict:
        return {
            "norm": self.norm.value,
            "intensity": self.intensity,
            "trials": self.trials,
            "seed": self.seed,
            "nearest": {
                "empirical": self.nearest_mean,
                "stderr": self.nearest_stderr,
                "analytic": nn_expectation(self.norm, 1, self.intensity),
            },
            "second": {
                "empirical": self.second_mean,
                "stderr": self.second_stderr,
                "analytic": nn_expectation(self.norm, 2, self.intensity),
            },
        }


def sample_nn_distances(norm: NormKind, n: float, trials: int, seed: int) -> NnDistanceSample:
    """Empirical nearest / second-nearest distances from the origin.

    Each trial draws a homogeneous Poisson process of intensity n on the
    window [-5/sqrt(n), 5/sqrt(n)]^2 (expected count 100; the window is wide
    enough that truncation is far below sampling noise). Trials with fewer
    than two points, probability ~1e-40, are redrawn. Trials are processed in
    fixed chunks with substream-derived seeds, so the result is independent
    of any parallel split.
    """
    if trials < 100:
        raise ValueError(f"need at least 100 trials, got {trials}")
    if n <= 0:
        raise ValueError(f"intensity must be > 0, got {n}")
    half = 5.0 / math.sqrt(n)
    lam = n * (2.0 * half) ** 2

    nearest_parts = []
    second_parts = []
    done = 0
    chunk_idx = 0
    while done < trials:
        m = min(NN_CHUNK, trials - done)
        rng = substream(seed, chunk_idx)
        counts = rng.poisson(lam, size=m)
        while (counts < 2).any():
            bad = counts < 2
            counts[bad] = rng.poisson(lam, size=int(bad.sum()))
        total = int(counts.sum())
        pts = rng.uniform(-half, half, size=(total, 2))
        if norm == NormKind.L1:
            d = np.abs(pts[:, 0]) + np.abs(pts[:, 1])
        else:
            d = np.hypot(pts[:, 0], pts[:, 1])
        maxc = int(counts.max())
        padded = np.full((m, maxc), np.inf)
        mask = np.arange(maxc)[None, :] < counts[:, None]
        padded[mask] = d
        two = np.partition(padded, 1, axis=1)[:, :2]
        nearest_parts.append(two[:, 0])
        second_parts.append(two[:, 1])
        done += m
        chunk_idx += 1

    nearest = np.concatenate(nearest_parts)
    second = np.concatenate(second_parts)
    return NnDistanceSample(
        norm=norm, intensity=n, trials=trials, seed=seed,
        nearest_mean=float(nearest.mean()),
        nearest_stderr=float(nearest.std(ddof=1) / math.sqrt(trials)),
        second_mean=float(second.mean()),
        second_stderr=float(second.std(ddof=1) / math.sqrt(trials)),
    )
