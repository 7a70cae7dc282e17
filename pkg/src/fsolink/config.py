"""Experiment configuration: a flat `key = value` document with `#` comments
and dotted section prefixes, strictly validated with all defaults resolved.

Example::

    modulation.order = 16
    fading.sigma = 0.3
    fading.correlation_length = 2
    csi.mode = perfect,imperfect
    detectors = ml,dnn
    training.snr_policy = matched
    sweep.esn0_db = 0,2,4,6,8,10
    seed = 1234

Required keys: modulation.order, fading.sigma, seed. Everything else has a
documented default. Unknown keys are rejected. Requesting the DNN detector
requires at least one training.* key so the training setup is explicit.
"""

import dataclasses
from dataclasses import dataclass

from . import neural
from .channel import CsiConfig, CsiMode, FadingConfig
from .detectors import SnrPolicy, TrainingHyperparams
from .modem import SUPPORTED_ORDERS, build_qam
from .montecarlo import SweepConfig
from .pipeline import RunSpec

DEFAULT_GRID = tuple(float(v) for v in range(0, 31, 2))
DEFAULT_OUTPUT_DIR = "results"


class ConfigError(ValueError):
    """A configuration document failed to parse or validate."""


@dataclass(frozen=True)
class ExperimentConfig:
    """Fully-resolved description of one experiment run."""

    modulation_order: int
    fading: FadingConfig
    csi_modes: tuple          # of CsiMode, order as requested
    sigma_e: float
    assumed_correlation_length: int
    detectors: tuple          # subset of ("ml", "dnn")
    training: TrainingHyperparams
    training_esn0_db: float | None
    esn0_grid_db: tuple
    min_errors: int
    max_symbols: int
    frame_length: int
    master_seed: int
    output_dir: str

    def csi_config(self, mode: CsiMode) -> CsiConfig:
        if mode is CsiMode.PERFECT:
            return CsiConfig(mode=mode)
        return CsiConfig(
            mode=mode,
            sigma_e=self.sigma_e,
            assumed_correlation_length=self.assumed_correlation_length,
        )

    def run_spec(self, mode: CsiMode) -> RunSpec:
        return RunSpec(
            constellation=build_qam(self.modulation_order),
            fading=self.fading,
            csi=self.csi_config(mode),
        )

    def sweep_config(self) -> SweepConfig:
        return SweepConfig(
            esn0_grid_db=self.esn0_grid_db,
            master_seed=self.master_seed,
            min_errors=self.min_errors,
            max_symbols=self.max_symbols,
            frame_length=self.frame_length,
        )

    def resolved(self) -> dict:
        """Every resolved parameter, defaults included, as document keys."""
        out = {
            "modulation.order": self.modulation_order,
            "fading.sigma": self.fading.sigma,
            "fading.correlation_length": self.fading.correlation_length,
            "csi.mode": ",".join(m.value for m in self.csi_modes),
            "csi.sigma_e": self.sigma_e,
            "csi.assumed_correlation_length": self.assumed_correlation_length,
            "detectors": ",".join(self.detectors),
            "training.hidden_layers": self.training.hidden_layers,
            "training.neurons_per_layer": self.training.neurons_per_layer,
            "training.iterations": self.training.iterations,
            "training.sample_to_batch_ratio": self.training.sample_to_batch_ratio,
            "training.set_size": self.training.training_set_size,
            "training.learning_rate": self.training.learning_rate,
            "training.snr_policy": self.training.snr_policy.value,
            "sweep.esn0_db": list(self.esn0_grid_db),
            "sweep.min_errors": self.min_errors,
            "sweep.max_symbols": self.max_symbols,
            "sweep.frame_length": self.frame_length,
            "seed": self.master_seed,
            "output_dir": self.output_dir,
        }
        if self.training_esn0_db is not None:
            out["training.esn0_db"] = self.training_esn0_db
        return out

    def digest(self) -> str:
        return neural.config_digest(self.resolved())

    def with_seed(self, seed: int) -> "ExperimentConfig":
        return dataclasses.replace(self, master_seed=int(seed))


def _split_lines(text: str) -> dict:
    pairs = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw.strip()!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if not key:
            raise ConfigError(f"line {lineno}: empty key")
        if key in pairs:
            raise ConfigError(f"duplicate key '{key}'")
        pairs[key] = value
    return pairs


def _take_int(pairs, key, default=None, minimum=None):
    if key not in pairs:
        if default is None:
            raise ConfigError(f"missing required key '{key}'")
        return default
    raw = pairs.pop(key)
    try:
        value = int(raw)
    except ValueError:
        raise ConfigError(f"key '{key}': expected an integer, got {raw!r}") from None
    if minimum is not None and value < minimum:
        raise ConfigError(f"key '{key}': must be >= {minimum}")
    return value


def _take_float(pairs, key, default=None):
    if key not in pairs:
        if default is None:
            raise ConfigError(f"missing required key '{key}'")
        return default
    raw = pairs.pop(key)
    try:
        return float(raw)
    except ValueError:
        raise ConfigError(f"key '{key}': expected a number, got {raw!r}") from None


def _take_list(pairs, key, default):
    if key not in pairs:
        return default
    raw = pairs.pop(key)
    items = tuple(part.strip() for part in raw.split(",") if part.strip())
    if not items:
        raise ConfigError(f"key '{key}': expected a comma-separated list")
    return items


def parse_config(text: str) -> ExperimentConfig:
    """Parse and validate a configuration document, filling in all defaults."""
    pairs = _split_lines(text)
    had_training_section = any(k.startswith("training.") for k in pairs)

    order = _take_int(pairs, "modulation.order")
    if order not in SUPPORTED_ORDERS:
        raise ConfigError(f"key 'modulation.order': must be one of {SUPPORTED_ORDERS}")

    sigma = _take_float(pairs, "fading.sigma")
    if sigma <= 0:
        raise ConfigError("key 'fading.sigma': must be > 0")
    corr = _take_int(pairs, "fading.correlation_length", default=1, minimum=1)
    fading = FadingConfig(sigma=sigma, correlation_length=corr)

    mode_names = _take_list(pairs, "csi.mode", ("perfect",))
    try:
        csi_modes = tuple(CsiMode(m) for m in mode_names)
    except ValueError:
        raise ConfigError("key 'csi.mode': entries must be 'perfect' or 'imperfect'") from None
    if len(set(csi_modes)) != len(csi_modes):
        raise ConfigError("key 'csi.mode': duplicate entries")
    sigma_e = _take_float(pairs, "csi.sigma_e", default=sigma / 2.0)
    if sigma_e < 0:
        raise ConfigError("key 'csi.sigma_e': must be >= 0")
    assumed = _take_int(pairs, "csi.assumed_correlation_length", default=1, minimum=1)
    if CsiMode.IMPERFECT in csi_modes and sigma_e == 0 and assumed == corr:
        raise ConfigError(
            "key 'csi.sigma_e': imperfect CSI needs sigma_e > 0 or an assumed "
            "correlation length different from the true one")

    detector_names = _take_list(pairs, "detectors", ("ml",))
    if any(d not in ("ml", "dnn") for d in detector_names):
        raise ConfigError("key 'detectors': entries must be 'ml' or 'dnn'")
    if len(set(detector_names)) != len(detector_names):
        raise ConfigError("key 'detectors': duplicate entries")
    if "dnn" in detector_names and not had_training_section:
        raise ConfigError(
            "key 'detectors': dnn requested but no training.* keys present; "
            "add a training section (e.g. 'training.snr_policy = matched')")

    policy_raw = pairs.pop("training.snr_policy", SnrPolicy.MATCHED.value)
    try:
        policy = SnrPolicy(policy_raw)
    except ValueError:
        raise ConfigError("key 'training.snr_policy': must be 'matched' or 'mixed'") from None
    try:
        training = TrainingHyperparams(
            hidden_layers=_take_int(pairs, "training.hidden_layers", default=2, minimum=1),
            neurons_per_layer=_take_int(pairs, "training.neurons_per_layer", default=40, minimum=1),
            iterations=_take_int(pairs, "training.iterations", default=1000, minimum=1),
            sample_to_batch_ratio=_take_int(pairs, "training.sample_to_batch_ratio",
                                            default=4, minimum=1),
            training_set_size=_take_int(pairs, "training.set_size", default=100_000, minimum=1),
            learning_rate=_take_float(pairs, "training.learning_rate", default=1e-2),
            snr_policy=policy,
        )
    except ValueError as exc:
        raise ConfigError(f"training section invalid: {exc}") from None
    training_esn0 = None
    if "training.esn0_db" in pairs:
        training_esn0 = _take_float(pairs, "training.esn0_db")

    grid_raw = _take_list(pairs, "sweep.esn0_db", None)
    if grid_raw is None:
        grid = DEFAULT_GRID
    else:
        try:
            grid = tuple(float(v) for v in grid_raw)
        except ValueError:
            raise ConfigError("key 'sweep.esn0_db': entries must be numbers") from None
    if any(b <= a for a, b in zip(grid, grid[1:])):
        raise ConfigError("key 'sweep.esn0_db': must be strictly increasing")

    min_errors = _take_int(pairs, "sweep.min_errors", default=200, minimum=1)
    max_symbols = _take_int(pairs, "sweep.max_symbols", default=10_000_000, minimum=1)
    frame_length = _take_int(pairs, "sweep.frame_length", default=10_000, minimum=1)
    if frame_length % corr != 0:
        raise ConfigError("key 'sweep.frame_length': must be a multiple of "
                          "fading.correlation_length")
    if CsiMode.IMPERFECT in csi_modes and frame_length % assumed != 0:
        raise ConfigError("key 'sweep.frame_length': must be a multiple of "
                          "csi.assumed_correlation_length")

    seed = _take_int(pairs, "seed")
    if not 0 <= seed < 2**64:
        raise ConfigError("key 'seed': must fit in 64 bits")
    output_dir = pairs.pop("output_dir", DEFAULT_OUTPUT_DIR)

    if pairs:
        unknown = next(iter(pairs))
        raise ConfigError(f"unknown key '{unknown}'")

    return ExperimentConfig(
        modulation_order=order,
        fading=fading,
        csi_modes=csi_modes,
        sigma_e=sigma_e,
        assumed_correlation_length=assumed,
        detectors=detector_names,
        training=training,
        training_esn0_db=training_esn0,
        esn0_grid_db=grid,
        min_errors=min_errors,
        max_symbols=max_symbols,
        frame_length=frame_length,
        master_seed=seed,
        output_dir=output_dir,
    )
