"""Planar points, truck/drone metrics, and seeded random instances.

All randomness in this package flows through `substream`, which builds a
Philox counter-based generator from a root seed plus an integer key path.
Substreams with distinct key paths are statistically independent and fully
reproducible, so chunked or parallel work gives identical results for any
worker count.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

# Recorded in output metadata; part of the reproducibility contract.
GENERATOR_ID = "numpy-philox4x64(SeedSequence)"


def substream(seed: int, *key: int) -> np.random.Generator:
    """Derived generator for (seed, key path); pure function of its arguments."""
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.Philox(ss))


def derive_seed(seed: int, *key: int) -> int:
    """Deterministic child seed for (seed, key path)."""
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=tuple(int(k) for k in key))
    return int(ss.generate_state(1, np.uint64)[0])


class TruckNorm(str, Enum):
    EUCLIDEAN = "euclidean"
    RECTILINEAR = "rectilinear"


@dataclass(frozen=True)
class Point:
    x: float
    y: float


@dataclass(frozen=True)
class MetricPair:
    """Truck norm plus drone speed ratio alpha (drone flies Euclidean / alpha)."""

    truck_norm: TruckNorm = TruckNorm.EUCLIDEAN
    alpha: float = 1.0

    def __post_init__(self):
        if not self.alpha >= 1.0:
            raise ValueError(f"alpha must be >= 1, got {self.alpha}")


@dataclass(frozen=True)
class Instance:
    points: tuple[Point, ...]
    seed: Optional[int] = None

    @property
    def n(self) -> int:
        return len(self.points)

    def coords(self) -> np.ndarray:
        """(n, 2) coordinate array."""
        return np.array([(p.x, p.y) for p in self.points], dtype=float).reshape(-1, 2)


def generate_instance(n: int, seed: int) -> Instance:
    """n i.i.d. Uniform[0,1]^2 points; bit-identical for identical (n, seed)."""
    if n < 0:
        raise ValueError(f"n must be >= 0, got {n}")
    xy = substream(seed).random((n, 2))
    return Instance(points=tuple(Point(float(x), float(y)) for x, y in xy), seed=int(seed))


def instance_from_coords(coords: Sequence[Sequence[float]], seed: Optional[int] = None) -> Instance:
    return Instance(points=tuple(Point(float(x), float(y)) for x, y in coords), seed=seed)


def truck_dist(m: MetricPair, p: Point, q: Point) -> float:
    if m.truck_norm == TruckNorm.RECTILINEAR:
        return abs(p.x - q.x) + abs(p.y - q.y)
    return math.hypot(p.x - q.x, p.y - q.y)


def drone_dist(m: MetricPair, p: Point, q: Point) -> float:
    """Drone travel time: Euclidean distance scaled by 1/alpha."""
    return math.hypot(p.x - q.x, p.y - q.y) / m.alpha


def save_instance(inst: Instance, path) -> None:
    obj = {
        "n": inst.n,
        "seed": inst.seed,
        "points": [[p.x, p.y] for p in inst.points],
    }
    Path(path).write_text(json.dumps(obj) + "\n")


def load_instance(path) -> Instance:
    obj = json.loads(Path(path).read_text())
    pts = obj["points"]
    if len(pts) != obj["n"]:
        raise ValueError(f"{path}: point count {len(pts)} does not match n={obj['n']}")
    for x, y in pts:
        if not (math.isfinite(x) and math.isfinite(y)):
            raise ValueError(f"{path}: non-finite coordinate ({x}, {y})")
    return instance_from_coords(pts, seed=obj.get("seed"))
