"""Simulated acoustic channels.

A statistical room-impulse-response generator (direct impulse followed by
exponentially decaying white Gaussian noise with exact, known RT60), a
convolution + noise channel, and a loader for user-supplied RIR corpora
(directory of WAV files with an optional ``labels.csv`` sidecar).
"""

from __future__ import annotations

import csv
import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .core import AudioBuffer, convolve
from .dereverb import decay_constant
from .errors import InvalidArgumentError
from .wavio import wav_read, wav_write

__all__ = [
    "RirSpec",
    "ChannelSpec",
    "CorpusEntry",
    "synth_rir",
    "apply_channel",
    "load_rir_corpus",
    "save_rir_corpus",
]


@dataclass(frozen=True)
class RirSpec:
    """Recipe for a synthetic room impulse response.

    The tail is white Gaussian noise shaped by e^(-delta*t); its total energy
    is scaled to ``rt60`` (in units of the unit impulse's energy), so with the
    default direct_gain the direct-to-reverberant energy ratio is exactly
    0 dB at rt60 = 1.0 s and scales as 1/rt60.  ``direct_gain`` moves only
    the direct path, making it the direct-to-reverberant control: a receiver
    far from the source sees direct_gain < 1.
    """

    rt60: float
    length: float | None = None
    direct_gain: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if not (self.rt60 > 0.0 and np.isfinite(self.rt60)):
            raise InvalidArgumentError(f"rt60 must be positive, got {self.rt60}")
        if self.length is not None:
            if not (np.isfinite(self.length) and self.length >= self.rt60 / 2.0):
                raise InvalidArgumentError(
                    f"length must be at least rt60/2 = {self.rt60 / 2.0}, got {self.length}"
                )
        if not (self.direct_gain > 0.0 and np.isfinite(self.direct_gain)):
            raise InvalidArgumentError("direct_gain must be positive and finite")

    @property
    def effective_length(self) -> float:
        return 1.5 * self.rt60 if self.length is None else self.length


@dataclass(frozen=True)
class ChannelSpec:
    """Channel = impulse response, optional white noise, optional peak target."""

    rir: "AudioBuffer | RirSpec"
    snr_db: float | None = None
    normalize: float | None = None
    noise_seed: int = 0

    def __post_init__(self):
        if self.snr_db is not None and not np.isfinite(self.snr_db):
            raise InvalidArgumentError("snr_db must be finite when given")
        if self.normalize is not None and not (
            self.normalize > 0.0 and np.isfinite(self.normalize)
        ):
            raise InvalidArgumentError("normalize target must be positive")


@dataclass
class CorpusEntry:
    name: str
    audio: AudioBuffer
    rt60: float | None = None


def synth_rir(spec: RirSpec, sample_rate: int) -> AudioBuffer:
    """Generate a reproducible impulse response with known decay rate.

    Sample 0 carries the direct path; samples 1..n-1 carry seeded Gaussian
    noise under the envelope e^(-delta*t), rescaled so the tail energy hits
    the target exactly (the generator's empirical decay then matches the
    requested rt60 up to the noise realization).
    """
    n = round(spec.effective_length * sample_rate)
    if n < 2:
        raise InvalidArgumentError(
            f"RIR length {spec.effective_length} s is under 2 samples at {sample_rate} Hz"
        )
    delta = decay_constant(spec.rt60)
    t = np.arange(1, n, dtype=np.float64) / sample_rate
    rng = np.random.default_rng(spec.seed)
    tail = rng.standard_normal(n - 1) * np.exp(-delta * t)
    tail_energy = float(np.dot(tail, tail))
    if tail_energy == 0.0:
        raise InvalidArgumentError("degenerate RIR tail (zero energy)")
    tail *= np.sqrt(spec.rt60 / tail_energy)

    samples = np.empty(n, dtype=np.float64)
    samples[0] = spec.direct_gain
    samples[1:] = tail
    return AudioBuffer(samples, sample_rate)


def apply_channel(signal: AudioBuffer, chan: ChannelSpec) -> AudioBuffer:
    """Convolve with the channel RIR, then add noise / normalize as asked.

    Noise is scaled so its measured power is exactly the convolved signal
    power times 10^(-snr_db/10).
    """
    rir = chan.rir
    if isinstance(rir, RirSpec):
        rir = synth_rir(rir, signal.sample_rate)
    out = convolve(signal, rir)

    if chan.snr_db is not None:
        signal_power = float(np.mean(out.samples**2))
        if signal_power == 0.0:
            raise InvalidArgumentError("cannot set an SNR against a silent signal")
        noise = np.random.default_rng(chan.noise_seed).standard_normal(len(out))
        noise_power = float(np.mean(noise**2))
        target_power = signal_power * 10.0 ** (-chan.snr_db / 10.0)
        noise *= np.sqrt(target_power / noise_power)
        out = AudioBuffer(out.samples + noise, out.sample_rate)

    if chan.normalize is not None:
        peak = float(np.max(np.abs(out.samples)))
        if peak == 0.0:
            raise InvalidArgumentError("cannot peak-normalize a silent signal")
        out = out.scaled(chan.normalize / peak)

    return out


def _read_labels(path: Path) -> dict[str, float]:
    labels: dict[str, float] = {}
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or "file" not in reader.fieldnames or "rt60" not in reader.fieldnames:
            warnings.warn(f"{path}: expected header 'file,rt60'; labels ignored")
            return labels
        for row in reader:
            try:
                labels[row["file"]] = float(row["rt60"])
            except (TypeError, ValueError):
                warnings.warn(f"{path}: bad rt60 for {row.get('file')!r}; row ignored")
    return labels


def load_rir_corpus(
    directory, sample_rate: int | None = None
) -> list[CorpusEntry]:
    """Load every readable WAV in a directory, sorted by filename.

    An optional ``labels.csv`` (header ``file,rt60``) attaches ground-truth
    reverberation times by filename.  Files that fail to read, or whose rate
    differs from ``sample_rate`` (or from the first loaded file when not
    given), are skipped with a warning; no resampling is attempted.
    """
    directory = Path(directory)
    if not directory.is_dir():
        raise InvalidArgumentError(f"not a directory: {directory}")

    labels_path = directory / "labels.csv"
    labels = _read_labels(labels_path) if labels_path.is_file() else {}

    entries: list[CorpusEntry] = []
    reference_rate = sample_rate
    for path in sorted(directory.iterdir()):
        if not (path.is_file() and path.suffix.lower() == ".wav"):
            continue
        try:
            with warnings.catch_warnings():
                warnings.simplefilter("ignore")  # stereo downmix notes are fine here
                audio = wav_read(path)
        except Exception as exc:
            warnings.warn(f"skipping {path.name}: {exc}")
            continue
        if reference_rate is None:
            reference_rate = audio.sample_rate
        elif audio.sample_rate != reference_rate:
            warnings.warn(
                f"skipping {path.name}: {audio.sample_rate} Hz != expected {reference_rate} Hz"
            )
            continue
        rt60 = labels.get(path.name, labels.get(path.stem))
        entries.append(CorpusEntry(name=path.name, audio=audio, rt60=rt60))
    return entries


def save_rir_corpus(entries: list[CorpusEntry], directory) -> None:
    """Write entries as float32 WAVs plus a labels.csv for the labeled ones."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    labeled = []
    for entry in entries:
        name = entry.name if entry.name.lower().endswith(".wav") else entry.name + ".wav"
        wav_write(directory / name, entry.audio, bit_depth=32)
        if entry.rt60 is not None:
            labeled.append((name, entry.rt60))
    if labeled:
        with open(directory / "labels.csv", "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["file", "rt60"])
            writer.writerows(labeled)
