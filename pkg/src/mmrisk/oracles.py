"""Scenario-tagged gradient oracles with randomness frozen before optimization.

Every oracle draws its data points once per replication; all gradient queries
within that replication evaluate the field on the same realized points.  Seeds
are split deterministically (splitmix-style), so a (seed, config) pair fully
determines every sample and replications can run in any order or in parallel
with identical results.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .problems import Distribution, GradientField

SL = "SL"
TL = "TL"
FL = "FL"
RL = "RL"
FD = "FD"
SCENARIOS = (SL, TL, FL, RL, FD)

ORACLE_STREAM = 0
ALGORITHM_STREAM = 1

_MASK64 = (1 << 64) - 1
_GAMMA = 0x9E3779B97F4A7C15


def _splitmix64(x: int) -> int:
    x = (x + _GAMMA) & _MASK64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & _MASK64
    return x ^ (x >> 31)


def derive_key(master: int, *path: int) -> int:
    """Pure 64-bit key derivation: fold path components into the master seed."""
    key = master & _MASK64
    for p in path:
        key = _splitmix64(key ^ _splitmix64(p & _MASK64))
    return key


@dataclass(frozen=True)
class Seed:
    """Master seed plus a stream id; children are pure functions of both."""

    master: int
    stream: int = ORACLE_STREAM

    def rng(self) -> np.random.Generator:
        return np.random.default_rng(derive_key(self.master, self.stream))

    def with_stream(self, stream: int) -> "Seed":
        return Seed(self.master, stream)

    def for_replication(self, r: int) -> "Seed":
        return Seed(derive_key(self.master, 0x5EED, r), self.stream)


@dataclass(frozen=True)
class OracleSample:
    """The realized data points of one replication, drawn once and frozen."""

    points: np.ndarray
    scenario: str
    agent_ids: np.ndarray | None = None

    def __post_init__(self):
        pts = np.atleast_2d(np.asarray(self.points, dtype=float))
        pts.flags.writeable = False
        object.__setattr__(self, "points", pts)
        if self.scenario not in SCENARIOS:
            raise ValueError(f"unknown scenario tag {self.scenario!r}")
        if self.agent_ids is not None:
            ids = np.asarray(self.agent_ids, dtype=int)
            if ids.shape != (pts.shape[0],):
                raise ValueError("agent ids are not aligned with the points")
            ids.flags.writeable = False
            object.__setattr__(self, "agent_ids", ids)

    def __len__(self) -> int:
        return self.points.shape[0]


@dataclass(frozen=True)
class Observation:
    """Gradient values returned by one oracle query: a (n, d) array."""

    values: np.ndarray

    def __post_init__(self):
        vals = np.atleast_2d(np.asarray(self.values, dtype=float))
        vals.flags.writeable = False
        object.__setattr__(self, "values", vals)

    def __len__(self) -> int:
        return self.values.shape[0]


def draw_sl(D: Distribution, n: int, seed: Seed) -> OracleSample:
    """n iid training points from the target distribution itself."""
    if n < 1:
        raise ValueError("need at least one sample")
    return OracleSample(D.sample(seed.rng(), n), SL)


def draw_tl(Dprime: Distribution, n: int, seed: Seed) -> OracleSample:
    """n iid points from a source distribution that differs from the target."""
    if n < 1:
        raise ValueError("need at least one sample")
    return OracleSample(Dprime.sample(seed.rng(), n), TL)


def draw_fl(locals_: list[tuple[Distribution, int]], seed: Seed) -> OracleSample:
    """Per-agent iid draws; point i is tagged with its (1-based) agent id."""
    budgets = [int(n_i) for _, n_i in locals_]
    if any(b < 0 for b in budgets):
        raise ValueError("negative per-agent budget")
    if sum(budgets) == 0:
        raise ValueError("all per-agent budgets are zero")
    rng = seed.rng()
    chunks, ids = [], []
    for i, (D_i, n_i) in enumerate(locals_, start=1):
        if n_i > 0:
            chunks.append(D_i.sample(rng, n_i))
            ids.append(np.full(n_i, i, dtype=int))
    return OracleSample(np.vstack(chunks), FL, agent_ids=np.concatenate(ids))


def draw_rl(
    D: Distribution, D_o: Distribution, eta: float, n: int, seed: Seed
) -> OracleSample:
    """Each point independently comes from the outlier law with probability eta."""
    if not 0.0 <= eta <= 1.0:
        raise ValueError("contamination rate must lie in [0, 1]")
    if n < 1:
        raise ValueError("need at least one sample")
    rng = seed.rng()
    corrupt = rng.random(n) < eta
    clean = D.sample(rng, n)
    bad = D_o.sample(rng, n)
    pts = np.where(corrupt[:, None], bad, clean)
    return OracleSample(pts, RL)


def fixed_data(points: np.ndarray) -> OracleSample:
    """A deterministic predetermined design; duplicates are dropped on ingestion."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    if pts.shape[0] == 0:
        raise ValueError("empty design")
    seen: dict[bytes, None] = {}
    keep = []
    for i in range(pts.shape[0]):
        key = pts[i].tobytes()
        if key not in seen:
            seen[key] = None
            keep.append(i)
    return OracleSample(pts[keep], FD)


def load_design(path: str | Path) -> OracleSample:
    """Load a fixed-data design from a JSON document {"points": [[...], ...]}."""
    with open(path) as fh:
        obj = json.load(fh)
    if "points" not in obj:
        raise ValueError("design document needs a 'points' key")
    return fixed_data(np.asarray(obj["points"], dtype=float))


def observe(g: GradientField, sample: OracleSample) -> Observation:
    """Evaluate the field pointwise on the frozen sample.

    Pure: repeated calls with the same field and sample return identical
    values, and a field evaluated at different model parameters sees the
    exact same points.  Input-dimension mismatches surface as shape errors
    from the field itself.
    """
    try:
        values = g(sample.points)
    except ValueError as exc:
        raise ValueError(f"field does not accept the sample's points: {exc}") from exc
    return Observation(values)
