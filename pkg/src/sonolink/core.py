"""Sample-domain and STFT-domain primitives.

Everything downstream (modem, RT60 estimation, dereverberation, metrics)
speaks two currencies: :class:`AudioBuffer` for time-domain signals and
:class:`Spectrogram` for one-sided STFT grids.  The forward/inverse pair
implemented here uses a periodic Hann window with weighted overlap-add
resynthesis, so ``istft(stft(x))`` reproduces ``x`` on the interior to
floating-point accuracy for any hop that divides the window length.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.signal

from .errors import InvalidArgumentError

__all__ = [
    "AudioBuffer",
    "StftConfig",
    "Spectrogram",
    "default_stft_config",
    "make_window",
    "stft",
    "istft",
    "convolve",
]


@dataclass(eq=False)
class AudioBuffer:
    """Mono audio signal: float64 samples plus a sample rate in Hz.

    Parameters
    ----------
    samples : array_like
        One-dimensional real sequence, nominal range [-1, 1].
    sample_rate : int
        Sampling frequency in Hz, > 0.
    """

    samples: np.ndarray
    sample_rate: int

    def __post_init__(self):
        self.samples = np.asarray(self.samples, dtype=np.float64)
        if self.samples.ndim != 1:
            raise InvalidArgumentError("AudioBuffer samples must be one-dimensional")
        if not isinstance(self.sample_rate, (int, np.integer)) or self.sample_rate <= 0:
            raise InvalidArgumentError("sample_rate must be a positive integer")
        self.sample_rate = int(self.sample_rate)
        if self.samples.size and not np.isfinite(self.samples).all():
            raise InvalidArgumentError("AudioBuffer samples must be finite")

    def __len__(self) -> int:
        return self.samples.size

    @property
    def duration(self) -> float:
        """Length in seconds."""
        return self.samples.size / self.sample_rate

    def scaled(self, factor: float) -> "AudioBuffer":
        """Return a copy with samples multiplied by ``factor``."""
        return AudioBuffer(self.samples * float(factor), self.sample_rate)


@dataclass(frozen=True)
class StftConfig:
    """Analysis parameters for the STFT.

    ``hop`` must divide ``window_length`` (exact constant-overlap-add), and
    the window length must be even so the one-sided spectrum has
    ``window_length/2 + 1`` bins.
    """

    window_length: int
    hop: int
    window_kind: str = "hann"

    def __post_init__(self):
        if self.window_length < 2 or self.window_length % 2 != 0:
            raise InvalidArgumentError("window_length must be an even integer >= 2")
        if self.hop < 1:
            raise InvalidArgumentError("hop must be >= 1")
        if self.window_length % self.hop != 0:
            raise InvalidArgumentError(
                "hop must divide window_length for exact overlap-add reconstruction"
            )
        if self.window_kind != "hann":
            raise InvalidArgumentError(f"unsupported window kind: {self.window_kind!r}")

    @property
    def num_bins(self) -> int:
        return self.window_length // 2 + 1

    def frame_period(self, sample_rate: int) -> float:
        """Seconds between adjacent frames."""
        return self.hop / sample_rate


def default_stft_config(sample_rate: int) -> StftConfig:
    """46 ms analysis window rounded to the nearest power of two, 93.75% overlap.

    At 44.1 kHz this yields a 2048-sample window with hop 128; at 48 kHz the
    nearest power of two is also 2048.
    """
    if sample_rate <= 0:
        raise InvalidArgumentError("sample_rate must be positive")
    window = int(2 ** round(np.log2(0.046 * sample_rate)))
    window = max(window, 32)
    return StftConfig(window_length=window, hop=window // 16)


@dataclass(eq=False)
class Spectrogram:
    """One-sided complex STFT grid.

    ``bins`` is indexed ``[k, l]`` with ``k`` the frequency bin and ``l`` the
    frame.  ``num_samples`` records the analyzed signal length so the inverse
    transform can trim the zero-padded tail; when absent, ``istft`` returns
    the full overlap-add extent.
    """

    bins: np.ndarray
    config: StftConfig
    sample_rate: int
    num_samples: int | None = None

    def __post_init__(self):
        self.bins = np.asarray(self.bins)
        if self.bins.ndim != 2:
            raise InvalidArgumentError("Spectrogram bins must be a 2-D grid")
        if self.bins.shape[0] != self.config.num_bins:
            raise InvalidArgumentError(
                f"bin count {self.bins.shape[0]} does not match "
                f"window_length {self.config.window_length} (expected {self.config.num_bins})"
            )

    @property
    def num_bands(self) -> int:
        return self.bins.shape[0]

    @property
    def num_frames(self) -> int:
        return self.bins.shape[1]

    @property
    def bin_frequencies(self) -> np.ndarray:
        """Center frequency of each bin in Hz."""
        return np.arange(self.num_bands) * (self.sample_rate / self.config.window_length)

    @property
    def frame_times(self) -> np.ndarray:
        """Start time of each frame in seconds."""
        return np.arange(self.num_frames) * (self.config.hop / self.sample_rate)

    def power(self) -> np.ndarray:
        """Per-bin power envelope |X(k,l)|^2."""
        return np.abs(self.bins) ** 2


def make_window(length: int) -> np.ndarray:
    """Periodic Hann window of the given length.

    Parameters
    ----------
    length : int
        Number of samples, >= 2.

    Returns
    -------
    np.ndarray
        ``0.5 * (1 - cos(2*pi*n/length))`` for n = 0..length-1; w[0] = 0 and
        shifted copies at any hop dividing ``length`` sum to a constant.
    """
    if length < 2:
        raise InvalidArgumentError("window length must be >= 2")
    n = np.arange(length)
    return 0.5 * (1.0 - np.cos(2.0 * np.pi * n / length))


def stft(buf: AudioBuffer, cfg: StftConfig) -> Spectrogram:
    """Forward short-time Fourier transform.

    Frame ``l`` covers samples ``[l*hop, l*hop + window_length)``; the final
    frames are zero-padded past the end of the signal so every sample is
    analyzed.  No padding is applied before the first sample.

    Parameters
    ----------
    buf : AudioBuffer
        Signal to analyze; must be at least one window long.
    cfg : StftConfig
        Window/hop configuration.

    Returns
    -------
    Spectrogram
        One-sided spectrum, ``window_length//2 + 1`` bins per frame.
    """
    x = buf.samples
    win = cfg.window_length
    if x.size < win:
        raise InvalidArgumentError(
            f"buffer of {x.size} samples is shorter than one window ({win})"
        )
    n_frames = 1 + int(np.ceil((x.size - win) / cfg.hop))
    padded_len = (n_frames - 1) * cfg.hop + win
    if padded_len > x.size:
        x = np.concatenate([x, np.zeros(padded_len - x.size)])
    frames = np.lib.stride_tricks.sliding_window_view(x, win)[:: cfg.hop]
    window = make_window(win)
    bins = np.fft.rfft(frames * window, axis=1).T
    return Spectrogram(bins=bins, config=cfg, sample_rate=buf.sample_rate,
                       num_samples=buf.samples.size)


def istft(spec: Spectrogram) -> AudioBuffer:
    """Inverse STFT via weighted overlap-add.

    Each frame is inverse-transformed, re-windowed, and accumulated; the
    result is normalized by the summed squared window so unmodified spectra
    reconstruct the original samples exactly wherever the window envelope is
    nonzero (everything except sample 0, where the Hann window is zero).
    """
    cfg = spec.config
    win = cfg.window_length
    n_frames = spec.num_frames
    if n_frames < 1:
        raise InvalidArgumentError("cannot invert an empty spectrogram")
    window = make_window(win)
    frames = np.fft.irfft(spec.bins.T, n=win, axis=1) * window
    total = (n_frames - 1) * cfg.hop + win
    out = np.zeros(total)
    norm = np.zeros(total)
    win_sq = window * window
    for l in range(n_frames):
        start = l * cfg.hop
        out[start:start + win] += frames[l]
        norm[start:start + win] += win_sq
    nonzero = norm > 0.0
    out[nonzero] /= norm[nonzero]
    if spec.num_samples is not None:
        out = out[: spec.num_samples]
    return AudioBuffer(out, spec.sample_rate)


def convolve(signal: AudioBuffer, ir: AudioBuffer) -> AudioBuffer:
    """Full linear convolution of a signal with an impulse response.

    Output length is ``len(signal) + len(ir) - 1``.  scipy picks the FFT
    path for long inputs; it agrees with the direct form to ~1e-15 relative,
    far inside the 1e-9 contract.
    """
    if signal.sample_rate != ir.sample_rate:
        raise InvalidArgumentError(
            f"sample-rate mismatch: {signal.sample_rate} vs {ir.sample_rate}"
        )
    if len(signal) == 0 or len(ir) == 0:
        raise InvalidArgumentError("convolve requires non-empty inputs")
    out = scipy.signal.convolve(signal.samples, ir.samples, mode="full", method="auto")
    return AudioBuffer(out, signal.sample_rate)
