"""Monte Carlo SER estimation: adaptive stopping, Es/N0 sweeps, Wilson
confidence intervals, and deterministic seed derivation.

Every frame draws from its own random stream, derived from
(master_seed, purpose, point_index, frame_index). Detectors evaluated at the
same grid point therefore see bit-identical channel and noise realizations
(paired comparison), and results do not depend on how frames are partitioned
across workers.
"""

import math
from dataclasses import dataclass

import numpy as np

from .pipeline import RunSpec, esn0_db_to_n0, simulate_link_frame

# Stream purpose tags (first spawn_key entry).
_STREAM_EVAL = 0
_STREAM_TRAIN = 1
_STREAM_TRAIN_MIXED = 2


@dataclass(frozen=True)
class SweepConfig:
    esn0_grid_db: tuple
    master_seed: int
    min_errors: int = 200
    max_symbols: int = 10_000_000
    frame_length: int = 10_000

    def __post_init__(self):
        grid = tuple(float(v) for v in self.esn0_grid_db)
        object.__setattr__(self, "esn0_grid_db", grid)
        if not grid:
            raise ValueError("esn0 grid must be nonempty")
        if any(b <= a for a, b in zip(grid, grid[1:])):
            raise ValueError("esn0 grid must be strictly increasing")
        if self.min_errors < 1:
            raise ValueError("min_errors must be >= 1")
        if self.max_symbols < 1 or self.frame_length < 1:
            raise ValueError("max_symbols and frame_length must be >= 1")
        if not 0 <= self.master_seed < 2**64:
            raise ValueError("master_seed must fit in 64 bits")


@dataclass(frozen=True)
class SerPoint:
    esn0_db: float
    errors: int
    trials: int
    ser: float
    ci_low: float
    ci_high: float

    @classmethod
    def from_counts(cls, esn0_db: float, errors: int, trials: int) -> "SerPoint":
        low, high = wilson_interval(errors, trials)
        return cls(esn0_db=esn0_db, errors=errors, trials=trials,
                   ser=errors / trials, ci_low=low, ci_high=high)


@dataclass
class SerCurve:
    config_digest: str
    detector: str  # "ML" | "DNN"
    csi: str       # "perfect" | "imperfect"
    channel: str   # e.g. "sigma=0.3,L=2"
    points: list   # of SerPoint, one per grid entry


@dataclass(frozen=True)
class PointStreams:
    """Derives the independent random streams used at one grid point."""

    master_seed: int
    point_index: int

    def frame(self, frame_index: int) -> np.random.Generator:
        return np.random.default_rng(np.random.SeedSequence(
            self.master_seed,
            spawn_key=(_STREAM_EVAL, self.point_index, frame_index),
        ))

    def training(self) -> np.random.Generator:
        return np.random.default_rng(np.random.SeedSequence(
            self.master_seed,
            spawn_key=(_STREAM_TRAIN, self.point_index),
        ))


def mixed_training_stream(master_seed: int) -> np.random.Generator:
    """Stream for the train-once (mixed grid) policy, shared by all points."""
    return np.random.default_rng(np.random.SeedSequence(
        master_seed, spawn_key=(_STREAM_TRAIN_MIXED,),
    ))


def wilson_interval(errors: int, trials: int, z: float = 1.96) -> tuple:
    """95% Wilson score interval for a binomial proportion."""
    if trials < 1:
        raise ValueError("trials must be >= 1")
    if not 0 <= errors <= trials:
        raise ValueError("errors must be in 0..trials")
    p = errors / trials
    z2 = z * z
    denom = 1.0 + z2 / trials
    center = (p + z2 / (2.0 * trials)) / denom
    margin = (z / denom) * math.sqrt(p * (1.0 - p) / trials + z2 / (4.0 * trials * trials))
    return max(0.0, center - margin), min(1.0, center + margin)


def run_point(esn0_db: float, run: RunSpec, sweep: SweepConfig, detect,
              streams: PointStreams) -> SerPoint:
    """Estimate SER at one grid point, stopping at min_errors or max_symbols.

    `detect` is any callable (r, h_hat) -> symbol indices.
    """
    n0 = esn0_db_to_n0(esn0_db)
    errors = 0
    trials = 0
    frame_index = 0
    while errors < sweep.min_errors and trials < sweep.max_symbols:
        rng = streams.frame(frame_index)
        frame = simulate_link_frame(run, sweep.frame_length, n0, rng)
        errors += int(np.count_nonzero(detect(frame.r, frame.h_hat) != frame.indices))
        trials += sweep.frame_length
        frame_index += 1
    return SerPoint.from_counts(esn0_db, errors, trials)


def run_sweep(sweep: SweepConfig, run: RunSpec, detector_factory, *,
              detector_label: str, config_digest: str = "") -> SerCurve:
    """Evaluate one detector over the whole Es/N0 grid.

    `detector_factory(esn0_db, streams)` returns the callable to evaluate at
    that point; a factory that trains per point implements the matched-SNR
    policy. Frame streams depend only on (master_seed, point index, frame
    index), so factories for different detectors see identical realizations.
    """
    points = []
    for index, esn0_db in enumerate(sweep.esn0_grid_db):
        streams = PointStreams(sweep.master_seed, index)
        detect = detector_factory(esn0_db, streams)
        points.append(run_point(esn0_db, run, sweep, detect, streams))
    return SerCurve(
        config_digest=config_digest,
        detector=detector_label,
        csi=run.csi.mode.value,
        channel=f"sigma={run.fading.sigma:g},L={run.fading.correlation_length}",
        points=points,
    )
