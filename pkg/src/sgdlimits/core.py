"""Summary vectors, trajectories, seeded random streams and trajectory metrics."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import DivergenceError, RangeError, SchemaError

# Round-trippable decimal format for IEEE-754 doubles.
FLOAT_FMT = "%.17g"


@dataclass(frozen=True)
class SummaryVec:
    schema: tuple[str, ...]
    values: np.ndarray

    def __post_init__(self):
        schema = tuple(self.schema)
        values = np.array(self.values, dtype=float).reshape(-1)
        if values.shape[0] != len(schema):
            raise SchemaError(f"{values.shape[0]} values for {len(schema)} coordinates")
        if not np.all(np.isfinite(values)):
            raise DivergenceError(f"non-finite summary values {values}")
        values.setflags(write=False)
        object.__setattr__(self, "schema", schema)
        object.__setattr__(self, "values", values)

    def __getitem__(self, name: str) -> float:
        return float(self.values[self.schema.index(name)])

    def __len__(self) -> int:
        return len(self.schema)

    def as_dict(self) -> dict[str, float]:
        return {k: float(v) for k, v in zip(self.schema, self.values)}

    @classmethod
    def from_dict(cls, schema: Sequence[str], d: dict[str, float]) -> "SummaryVec":
        missing = [k for k in schema if k not in d]
        if missing:
            raise SchemaError(f"missing coordinates {missing}")
        return cls(tuple(schema), np.array([d[k] for k in schema], dtype=float))

    def replace(self, **coords: float) -> "SummaryVec":
        d = self.as_dict()
        for k, v in coords.items():
            if k not in d:
                raise SchemaError(f"unknown coordinate {k!r}")
            d[k] = v
        return SummaryVec.from_dict(self.schema, d)


@dataclass(frozen=True)
class Trajectory:
    """Time-indexed summary values, linearly interpolated between recorded times.

    ``values`` has shape ``(len(times), len(schema))``.
    """

    schema: tuple[str, ...]
    times: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        times = np.array(self.times, dtype=float).reshape(-1)
        values = np.array(self.values, dtype=float).reshape(len(times), -1)
        schema = tuple(self.schema)
        if values.shape[1] != len(schema):
            raise SchemaError(f"values have {values.shape[1]} columns, schema has {len(schema)}")
        if len(times) == 0 or times[0] != 0.0:
            raise RangeError("trajectory must start at t=0")
        if np.any(np.diff(times) <= 0):
            raise RangeError("trajectory times must be strictly increasing")
        times.setflags(write=False)
        values.setflags(write=False)
        object.__setattr__(self, "schema", schema)
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "values", values)

    @property
    def t_end(self) -> float:
        return float(self.times[-1])

    def __len__(self) -> int:
        return len(self.times)

    def point(self, i: int) -> SummaryVec:
        return SummaryVec(self.schema, self.values[i])

    @property
    def points(self) -> list[SummaryVec]:
        return [self.point(i) for i in range(len(self))]

    def final(self) -> SummaryVec:
        return self.point(-1)

    def column(self, name: str) -> np.ndarray:
        return self.values[:, self.schema.index(name)]

    @classmethod
    def from_points(cls, times: Sequence[float], points: Sequence[SummaryVec]) -> "Trajectory":
        schema = points[0].schema
        for p in points:
            if p.schema != schema:
                raise SchemaError("points do not share a schema")
        return cls(schema, np.asarray(times, float), np.stack([p.values for p in points]))


def _interp_many(traj: Trajectory, ts: np.ndarray) -> np.ndarray:
    times = traj.times
    idx = np.searchsorted(times, ts, side="right") - 1
    idx = np.clip(idx, 0, len(times) - 1)
    nxt = np.minimum(idx + 1, len(times) - 1)
    span = times[nxt] - times[idx]
    w = np.where(span > 0, (ts - times[idx]) / np.where(span > 0, span, 1.0), 0.0)
    return traj.values[idx] + w[:, None] * (traj.values[nxt] - traj.values[idx])


def _check_covered(traj: Trajectory, t0: float, t1: float) -> None:
    slack = 1e-12 * max(1.0, abs(traj.t_end))
    if t0 < -slack or t1 > traj.t_end + slack or t0 > t1:
        raise RangeError(f"window [{t0}, {t1}] not covered by [0, {traj.t_end}]")


def interpolate(traj: Trajectory, t: float) -> SummaryVec:
    _check_covered(traj, t, t)
    t = min(max(t, 0.0), traj.t_end)
    return SummaryVec(traj.schema, _interp_many(traj, np.array([t]))[0])


def sup_distance(a: Trajectory, b: Trajectory, window: tuple[float, float] | None = None,
                 grid: int = 1000) -> float:
    """Max Euclidean distance between two interpolated trajectories on a uniform grid."""
    if a.schema != b.schema:
        raise SchemaError(f"schema mismatch: {a.schema} vs {b.schema}")
    if window is None:
        window = (0.0, min(a.t_end, b.t_end))
    t0, t1 = window
    _check_covered(a, t0, t1)
    _check_covered(b, t0, t1)
    ts = np.clip(np.linspace(t0, t1, grid), 0.0, min(a.t_end, b.t_end))
    diff = _interp_many(a, ts) - _interp_many(b, ts)
    return float(np.sqrt((diff ** 2).sum(axis=1)).max())


@dataclass
class RngStream:
    """One independent random stream, fully determined by ``(master_seed, stream_index)``.

    Backed by the counter-based Philox bit generator. Not thread safe; one owner per stream.
    """

    master_seed: int
    stream_index: int
    subkey: tuple[int, ...] = ()
    generator: np.random.Generator = field(init=False, repr=False)

    def __post_init__(self):
        ss = np.random.SeedSequence(entropy=int(self.master_seed) & (2 ** 64 - 1),
                                    spawn_key=(int(self.stream_index), *self.subkey))
        self.generator = np.random.Generator(np.random.Philox(ss))

    def normal(self, size=None) -> np.ndarray:
        return self.generator.standard_normal(size)

    def uniform(self, size=None) -> np.ndarray:
        return self.generator.random(size)

    def child(self, *key: int) -> "RngStream":
        """Independent sub-stream (e.g. per Monte Carlo estimator inside a run)."""
        return RngStream(self.master_seed, self.stream_index, self.subkey + tuple(int(k) for k in key))


def make_rng(master_seed: int, stream_index: int = 0) -> RngStream:
    return RngStream(master_seed, stream_index)


# --- CSV serialization -------------------------------------------------------------------

def trajectory_to_csv(traj: Trajectory) -> str:
    buf = io.StringIO()
    buf.write(",".join(("t",) + traj.schema) + "\n")
    for t, row in zip(traj.times, traj.values):
        buf.write(",".join(FLOAT_FMT % x for x in (t, *row)) + "\n")
    return buf.getvalue()


def write_trajectory_csv(traj: Trajectory, path: str | Path) -> None:
    path = Path(path)
    try:
        path.write_text(trajectory_to_csv(traj))
    except OSError as exc:
        raise OSError(f"cannot write trajectory to {path}: {exc}") from exc


def read_trajectory_csv(path: str | Path) -> Trajectory:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise OSError(f"cannot read trajectory from {path}: {exc}") from exc
    rows = list(csv.reader(io.StringIO(text)))
    header = rows[0]
    if not header or header[0] != "t":
        raise SchemaError(f"{path}: header must start with 't'")
    data = np.array([[float(x) for x in r] for r in rows[1:] if r], dtype=float)
    return Trajectory(tuple(header[1:]), data[:, 0], data[:, 1:])


def stack_mean(trajs: Iterable[Trajectory]) -> Trajectory:
    """Pointwise mean of trajectories recorded on identical time grids."""
    trajs = list(trajs)
    first = trajs[0]
    for tr in trajs[1:]:
        if tr.schema != first.schema or not np.array_equal(tr.times, first.times):
            raise SchemaError("trajectories must share schema and time grid")
    return Trajectory(first.schema, first.times, np.mean([tr.values for tr in trajs], axis=0))
