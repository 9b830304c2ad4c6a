"""Late-reverberation suppression by spectral subtraction.

The late-reverberant power at frame l is modeled as a delayed, attenuated
copy of the smoothed signal power one prediction delay earlier; the ratio
of observed power to that estimate drives a floored spectral gain applied
to the STFT magnitudes (phase untouched).  The decay constant comes from an
RT60 figure — supplied by the caller or estimated blindly from the input.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.ndimage

from .core import (
    AudioBuffer,
    Spectrogram,
    StftConfig,
    default_stft_config,
    istft,
    stft,
)
from .errors import EstimationError, InvalidArgumentError
from .rt60 import estimate_rt60

__all__ = [
    "DereverbConfig",
    "ReverbModel",
    "GainGrid",
    "DereverbDiagnostics",
    "decay_constant",
    "reverberant_psd",
    "spectral_gain",
    "dereverberate",
]

FALLBACK_RT60 = 0.5  # used when blind estimation fails outright


def decay_constant(rt60: float) -> float:
    """Exponential decay constant of a room with the given RT60.

    Defined so the energy envelope e^(-2*delta*t) falls by 60 dB over one
    reverberation time: delta = 3*ln(10)/rt60.
    """
    if rt60 <= 0:
        raise InvalidArgumentError("rt60 must be positive")
    return 3.0 * math.log(10.0) / rt60


@dataclass
class ReverbModel:
    """Exponential-decay room model parameterized by reverberation time."""

    rt60: float
    delta: float = field(init=False)

    def __post_init__(self):
        self.delta = decay_constant(self.rt60)


@dataclass(frozen=True)
class DereverbConfig:
    """Tuning knobs of the suppressor.

    late_delay
        Prediction delay in seconds separating direct sound from the late
        reverberation modeled here (also the PSD look-back distance).
    snr_smoothing
        Exponential smoothing factor for the a-priori SNR recursion.
    gain_floor
        Lower bound on the spectral gain; keeps residual signal audible and
        bounds the worst-case attenuation.
    snr_ceiling
        Cap on the rectified instantaneous SNR before smoothing.  In bins
        that were near-silent the reverberant PSD estimate is vanishingly
        small, so a sudden onset measures an SNR of 10^9 or more; smoothed,
        such a spike would hold the gain open for hundreds of frames after
        the signal stops.  The cap bounds that release time while leaving
        the gain within 1 - 1/sqrt(1 + ceiling) of unity for strong bins.
    stft
        Analysis configuration; None selects the 46 ms default for the
        buffer's sample rate.
    """

    late_delay: float = 0.080
    snr_smoothing: float = 0.9
    gain_floor: float = 0.1
    snr_ceiling: float = 30.0
    stft: StftConfig | None = None

    def __post_init__(self):
        if self.late_delay <= 0:
            raise InvalidArgumentError("late_delay must be positive")
        if not 0.0 <= self.snr_smoothing < 1.0:
            raise InvalidArgumentError("snr_smoothing must lie in [0, 1)")
        if not 0.0 < self.gain_floor < 1.0:
            raise InvalidArgumentError("gain_floor must lie in (0, 1)")
        if self.snr_ceiling <= 0:
            raise InvalidArgumentError("snr_ceiling must be positive")

    def delay_frames(self, frame_period: float) -> int:
        """Prediction delay rounded to whole frames, at least one."""
        return max(1, round(self.late_delay / frame_period))


@dataclass
class GainGrid:
    """Spectral gain plus the SNR grids it was derived from."""

    gain: np.ndarray
    snr_post: np.ndarray
    snr_prio: np.ndarray


@dataclass
class DereverbDiagnostics:
    """What the suppressor did: gains, the RT60 it used, and how it got it."""

    gain_grid: GainGrid
    rt60: float
    rt60_estimated: bool
    rt60_fallback: bool
    mean_gain: float


def reverberant_psd(
    power: np.ndarray,
    model: ReverbModel,
    cfg: DereverbConfig,
    frame_period: float,
) -> np.ndarray:
    """Late-reverberant PSD estimate from delayed, attenuated signal power.

    The smoothed power (3-frame moving average) from ``late_delay`` seconds
    ago is scaled by e^(-2*delta*late_delay).  Frames with no history yet
    (the first delay_frames frames) get a zero estimate.
    """
    power = np.asarray(power, dtype=np.float64)
    if power.ndim != 2 or power.size == 0:
        raise InvalidArgumentError("power must be a non-empty [bands, frames] grid")
    if frame_period <= 0:
        raise InvalidArgumentError("frame_period must be positive")
    shift = cfg.delay_frames(frame_period)
    smoothed = scipy.ndimage.uniform_filter1d(power, size=3, axis=1, mode="nearest")
    attenuation = math.exp(-2.0 * model.delta * cfg.late_delay)
    out = np.zeros_like(power)
    if shift < power.shape[1]:
        out[:, shift:] = attenuation * smoothed[:, :-shift]
    return out


def spectral_gain(
    power: np.ndarray, gamma_rr: np.ndarray, cfg: DereverbConfig
) -> GainGrid:
    """Floored spectral gain from observed power and reverberant PSD.

    Per bin: SNR_post = power / gamma_rr (infinite where the reverberant
    estimate is zero — those bins pass through with unit gain); the
    instantaneous SNR (SNR_post - 1) is half-wave rectified and smoothed
    over frames into an a-priori SNR; the gain 1 - 1/sqrt(1 + SNR_prio) is
    clamped to [gain_floor, 1].
    """
    power = np.asarray(power, dtype=np.float64)
    gamma_rr = np.asarray(gamma_rr, dtype=np.float64)
    if power.shape != gamma_rr.shape:
        raise InvalidArgumentError("power and gamma_rr must have matching shapes")
    n_bands, n_frames = power.shape
    beta = cfg.snr_smoothing

    with np.errstate(divide="ignore", invalid="ignore"):
        snr_post = np.where(gamma_rr > 0.0, power / gamma_rr, np.inf)

    gain = np.empty_like(power)
    snr_prio = np.empty_like(power)
    carry = np.zeros(n_bands)
    seen_valid = np.zeros(n_bands, dtype=bool)
    for l in range(n_frames):
        valid = gamma_rr[:, l] > 0.0
        rectified = np.where(valid, np.maximum(snr_post[:, l] - 1.0, 0.0), 0.0)
        rectified = np.minimum(rectified, cfg.snr_ceiling)
        smoothed = beta * carry + (1.0 - beta) * rectified
        prio = np.where(valid, np.where(seen_valid, smoothed, rectified), carry)
        g = 1.0 - 1.0 / np.sqrt(1.0 + prio)
        gain[:, l] = np.where(valid, np.maximum(g, cfg.gain_floor), 1.0)
        snr_prio[:, l] = prio
        carry = prio
        seen_valid |= valid
    return GainGrid(gain=gain, snr_post=snr_post, snr_prio=snr_prio)


def dereverberate(
    buf: AudioBuffer,
    cfg: DereverbConfig | None = None,
    rt60: float | None = None,
) -> tuple[AudioBuffer, DereverbDiagnostics]:
    """Suppress late reverberation in a signal.

    When ``rt60`` is not supplied it is estimated blindly from the input;
    if that estimation fails the suppressor falls back to 0.5 s and flags
    it in the diagnostics.  Output length equals input length.
    """
    cfg = cfg or DereverbConfig()
    stft_cfg = cfg.stft or default_stft_config(buf.sample_rate)
    grid = stft(buf, stft_cfg)
    power = grid.power()

    estimated = False
    fallback = False
    if rt60 is None:
        try:
            rt60_value = estimate_rt60(buf, stft_cfg).rt60
            estimated = True
        except EstimationError:
            rt60_value = FALLBACK_RT60
            fallback = True
    else:
        if rt60 <= 0:
            raise InvalidArgumentError("rt60 must be positive")
        rt60_value = float(rt60)

    model = ReverbModel(rt60_value)
    frame_period = stft_cfg.frame_period(buf.sample_rate)
    gamma_rr = reverberant_psd(power, model, cfg, frame_period)
    gains = spectral_gain(power, gamma_rr, cfg)

    shaped = Spectrogram(
        bins=grid.bins * gains.gain,
        config=stft_cfg,
        sample_rate=buf.sample_rate,
        num_samples=len(buf),
    )
    out = istft(shaped)
    diagnostics = DereverbDiagnostics(
        gain_grid=gains,
        rt60=rt60_value,
        rt60_estimated=estimated,
        rt60_fallback=fallback,
        mean_gain=float(gains.gain.mean()),
    )
    return out, diagnostics
