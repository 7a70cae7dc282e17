"""The end-to-end link front end shared by training and evaluation.

One frame runs: draw symbol indices, map to QAM, add the unit DC bias, apply
log-normal fading, add AWGN, estimate CSI, and remove the estimated DC
component. Detectors consume the resulting (r, h_hat) pair.
"""

from dataclasses import dataclass

import numpy as np

from .channel import (
    CsiConfig,
    FadingConfig,
    add_awgn,
    apply_channel,
    estimate_csi,
    gen_lognormal,
    remove_dc,
)
from .modem import Constellation, add_dc_bias, map_symbols


def esn0_db_to_n0(esn0_db: float) -> float:
    """Noise variance for a given Es/N0 in dB, with Es = 1 (bias excluded)."""
    return 10.0 ** (-esn0_db / 10.0)


@dataclass(frozen=True)
class RunSpec:
    """Channel-side description of one experiment: what the link looks like."""

    constellation: Constellation
    fading: FadingConfig
    csi: CsiConfig
    bias: float = 1.0


@dataclass(frozen=True)
class LinkFrame:
    """One simulated frame as seen by a detector."""

    indices: np.ndarray  # transmitted symbol indices
    r: np.ndarray        # received samples after DC removal
    h_hat: np.ndarray    # receiver's gain estimates


def simulate_link_frame(run: RunSpec, n: int, n0: float, rng: np.random.Generator) -> LinkFrame:
    """Simulate n symbols through the full front end at noise variance n0.

    Random draws happen in a fixed order (indices, fading, noise, CSI error),
    so perfect- and imperfect-CSI runs with the same stream see identical
    symbols, gains, and noise.
    """
    indices = rng.integers(0, run.constellation.order, size=n)
    tx = add_dc_bias(map_symbols(indices, run.constellation), run.bias)
    h = gen_lognormal(n, run.fading, rng)
    y = add_awgn(apply_channel(tx, h), n0, rng)
    h_hat = estimate_csi(h, run.csi, rng)
    r = remove_dc(y, h_hat, run.bias)
    return LinkFrame(indices=indices, r=r, h_hat=h_hat)
