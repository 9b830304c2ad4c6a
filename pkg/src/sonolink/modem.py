"""FSK packet modem: byte payloads to tone sequences and back.

A packet is a concatenation of 80 ms tones drawn from a 32-tone alphabet:
two fixed preamble symbols, one payload-length symbol, the payload packed
into 5-bit symbols, and Reed-Solomon parity.  Payloads longer than a single
GF(32) codeword can carry are split across several equally-sized codewords,
each with its own parity group appended after all the data symbols.

Demodulation measures per-tone magnitudes with a sliding-window DTFT
(Goertzel-style single-bin magnitudes, evaluated as one matrix product per
window set), picks the strongest tone per symbol slot, and hands
low-confidence symbols to the Reed-Solomon decoder as erasures.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from . import rs
from .core import AudioBuffer
from .errors import FecError, InvalidArgumentError

__all__ = [
    "ProtocolProfile",
    "Packet",
    "DecodeResult",
    "AUDIBLE",
    "ULTRASONIC",
    "profile_by_name",
    "tone_frequencies",
    "pack_symbols",
    "unpack_payload",
    "packet_symbols",
    "encode_packet",
    "detect_preamble",
    "demodulate_symbols",
    "decode_packet",
]

ERASURE_CONFIDENCE = 1.5  # best/second-best ratio below which a symbol is untrusted
PREAMBLE_SNR = 6.0  # preamble tone must exceed this multiple of the median tone


@dataclass(frozen=True)
class ProtocolProfile:
    """Immutable modem configuration for one frequency band.

    Tones are spaced evenly across [band_low, band_high]; the alphabet size
    is fixed at 32 so each symbol carries 5 bits and Reed-Solomon coding
    lives in GF(32).
    """

    name: str
    band_low: float
    band_high: float
    tone_count: int = 32
    symbol_duration: float = 0.080
    preamble: tuple[int, int] = (0, 31)
    rs_parity: int = 8
    max_payload: int = 26  # payload symbols (16 bytes at 5 bits/symbol)
    ramp_time: float = 0.005
    amplitude: float = 0.5

    def __post_init__(self):
        if self.tone_count != rs.FIELD_SIZE:
            raise InvalidArgumentError("tone_count must be 32 (one tone per GF(32) symbol)")
        if not 0 < self.band_low < self.band_high:
            raise InvalidArgumentError("require 0 < band_low < band_high")
        if self.symbol_duration <= 0:
            raise InvalidArgumentError("symbol_duration must be positive")
        spacing = (self.band_high - self.band_low) / (self.tone_count - 1)
        if spacing < 4.0 / self.symbol_duration:
            raise InvalidArgumentError(
                f"tone spacing {spacing:.1f} Hz is below the 4/symbol_duration "
                f"separation bound ({4.0 / self.symbol_duration:.1f} Hz)"
            )
        if len(self.preamble) != 2 or not all(
            0 <= s < self.tone_count for s in self.preamble
        ):
            raise InvalidArgumentError("preamble must be a pair of valid symbols")
        if not 1 <= self.rs_parity < rs.MAX_CODEWORD:
            raise InvalidArgumentError("rs_parity must lie in 1..30")
        if self.max_payload < 2:
            raise InvalidArgumentError("max_payload must allow at least one byte")
        if self.ramp_time < 0 or 2 * self.ramp_time > self.symbol_duration:
            raise InvalidArgumentError("ramps must fit inside the symbol")
        if not 0 < self.amplitude <= 1:
            raise InvalidArgumentError("amplitude must lie in (0, 1]")

    @property
    def max_payload_bytes(self) -> int:
        return min(self.max_payload * rs.SYMBOL_BITS // 8, rs.MAX_CODEWORD)

    def symbol_samples(self, sample_rate: int) -> int:
        return int(round(self.symbol_duration * sample_rate))


AUDIBLE = ProtocolProfile(name="audible", band_low=1700.0, band_high=10500.0)
ULTRASONIC = ProtocolProfile(name="ultrasonic", band_low=18000.0, band_high=20000.0)


def profile_by_name(name: str) -> ProtocolProfile:
    try:
        return {"audible": AUDIBLE, "ultrasonic": ULTRASONIC}[name.lower()]
    except KeyError:
        raise InvalidArgumentError(f"unknown profile {name!r}") from None


def tone_frequencies(profile: ProtocolProfile, sample_rate: int) -> np.ndarray:
    """Center frequency of each tone, validated against Nyquist."""
    freqs = np.linspace(profile.band_low, profile.band_high, profile.tone_count)
    if freqs[-1] >= sample_rate / 2:
        raise InvalidArgumentError(
            f"top tone {freqs[-1]:.0f} Hz is not below Nyquist ({sample_rate / 2:.0f} Hz)"
        )
    return freqs


@dataclass
class Packet:
    """A payload of 1..16 bytes; the length must fit the 5-bit length symbol."""

    payload: bytes

    def __post_init__(self):
        self.payload = bytes(self.payload)
        if not 1 <= len(self.payload) <= 16:
            raise InvalidArgumentError("payload must be 1..16 bytes")


@dataclass
class DecodeResult:
    """Outcome of one decode attempt.

    ``failure`` is None on success, else one of ``"no-preamble"``,
    ``"length-symbol-invalid"`` or ``"fec-failure"``.  On success each
    decoded Reed-Solomon block satisfied 2*corrected + erasures <= parity.
    """

    payload: bytes | None
    preamble_offset: int
    symbol_confidences: np.ndarray = field(default_factory=lambda: np.zeros(0))
    corrected_errors: int = 0
    erasures_used: int = 0
    failure: str | None = None

    @property
    def ok(self) -> bool:
        return self.payload is not None


# ---------------------------------------------------------------------------
# bit packing

def pack_symbols(payload: bytes) -> list[int]:
    """Pack bytes into 5-bit symbols, MSB first, zero-padded at the tail."""
    if not payload:
        return []
    total_bits = 8 * len(payload)
    n_symbols = -(-total_bits // rs.SYMBOL_BITS)
    value = int.from_bytes(payload, "big") << (n_symbols * rs.SYMBOL_BITS - total_bits)
    return [
        (value >> (rs.SYMBOL_BITS * (n_symbols - 1 - i))) & (rs.FIELD_SIZE - 1)
        for i in range(n_symbols)
    ]


def unpack_payload(symbols, n_bytes: int) -> bytes:
    """Inverse of pack_symbols: recover n_bytes from the symbol stream."""
    symbols = list(symbols)
    if n_bytes < 0 or len(symbols) * rs.SYMBOL_BITS < 8 * n_bytes:
        raise InvalidArgumentError("not enough symbols for the requested byte count")
    value = 0
    for s in symbols:
        value = (value << rs.SYMBOL_BITS) | int(s)
    value >>= len(symbols) * rs.SYMBOL_BITS - 8 * n_bytes
    return int(value).to_bytes(n_bytes, "big") if n_bytes else b""


def _rs_block_sizes(n_data: int, nparity: int) -> list[int]:
    """Split data symbols into the fewest equal-ish Reed-Solomon blocks."""
    max_data = rs.MAX_CODEWORD - nparity
    n_blocks = -(-n_data // max_data)
    q, r = divmod(n_data, n_blocks)
    return [q + 1] * r + [q] * (n_blocks - r)


def packet_symbols(pkt: Packet, profile: ProtocolProfile) -> list[int]:
    """Body symbols of a packet: length, payload data, then parity groups."""
    data = pack_symbols(pkt.payload)
    if len(data) > profile.max_payload:
        raise InvalidArgumentError(
            f"payload needs {len(data)} symbols, profile allows {profile.max_payload}"
        )
    parity: list[int] = []
    offset = 0
    for size in _rs_block_sizes(len(data), profile.rs_parity):
        codeword = rs.rs_encode(data[offset:offset + size], profile.rs_parity)
        parity.extend(codeword[size:])
        offset += size
    return [len(pkt.payload)] + data + parity


# ---------------------------------------------------------------------------
# synthesis

@lru_cache(maxsize=8)
def _tone_bank(profile: ProtocolProfile, sample_rate: int) -> np.ndarray:
    """One ramped sinusoid per tone, shape [tone_count, symbol_samples]."""
    freqs = tone_frequencies(profile, sample_rate)
    n = profile.symbol_samples(sample_rate)
    t = np.arange(n) / sample_rate
    bank = profile.amplitude * np.sin(2.0 * np.pi * np.outer(freqs, t))
    ramp = int(round(profile.ramp_time * sample_rate))
    if ramp > 0:
        # raised-cosine attack/release over the first/last ramp samples
        shape = 0.5 * (1.0 - np.cos(np.pi * np.arange(ramp) / ramp))
        bank[:, :ramp] *= shape
        bank[:, n - ramp:] *= shape[::-1]
    bank.setflags(write=False)
    return bank


def encode_packet(pkt: Packet, profile: ProtocolProfile, sample_rate: int) -> AudioBuffer:
    """Synthesize the tone sequence for a packet.

    The result is the concatenation of 2 preamble symbols, 1 length symbol,
    the packed payload symbols, and the Reed-Solomon parity symbols, each a
    ramped sinusoid of ``symbol_duration`` seconds at peak amplitude 0.5.
    """
    symbols = list(profile.preamble) + packet_symbols(pkt, profile)
    bank = _tone_bank(profile, sample_rate)
    return AudioBuffer(bank[symbols].reshape(-1), sample_rate)


# ---------------------------------------------------------------------------
# analysis

@lru_cache(maxsize=8)
def _dtft_tables(profile: ProtocolProfile, sample_rate: int):
    """cos/sin kernels for full-symbol and central-80% window magnitudes."""
    freqs = tone_frequencies(profile, sample_rate)
    sym = profile.symbol_samples(sample_rate)
    skip = int(round(0.1 * sym))
    core = sym - 2 * skip

    def kernels(length: int):
        phase = 2.0 * np.pi * np.outer(np.arange(length), freqs) / sample_rate
        c = np.cos(phase)
        s = np.sin(phase)
        c.setflags(write=False)
        s.setflags(write=False)
        return c, s

    return kernels(sym), kernels(core), skip, core


def _window_magnitudes(x: np.ndarray, starts: np.ndarray, kernels) -> np.ndarray:
    """Per-tone DTFT magnitudes of windows x[s : s+L] for each start s."""
    cos_tab, sin_tab = kernels
    length = cos_tab.shape[0]
    windows = x[starts[:, None] + np.arange(length)[None, :]]
    return np.hypot(windows @ cos_tab, windows @ sin_tab)


def detect_preamble(buf: AudioBuffer, profile: ProtocolProfile) -> list[int]:
    """Scan for the two-symbol preamble; returns candidate sample offsets.

    A sliding symbol-length window advances by symbol/8.  An offset is a hit
    when the first preamble tone dominates its window and the second
    preamble tone dominates the window one symbol later, each exceeding 6x
    the median magnitude of the non-preamble tones in its own window.  Hits
    closer than one symbol apart collapse to the strongest of their cluster;
    the returned offsets are sorted ascending.
    """
    x = buf.samples
    full, _, _, _ = _dtft_tables(profile, buf.sample_rate)
    sym = profile.symbol_samples(buf.sample_rate)
    hop = max(1, sym // 8)
    if x.size < 2 * sym:
        return []
    starts = np.arange(0, x.size - 2 * sym + 1, hop)
    mags_first = _window_magnitudes(x, starts, full)
    mags_second = _window_magnitudes(x, starts + sym, full)

    tone_a, tone_b = profile.preamble
    others = [t for t in range(profile.tone_count) if t not in {tone_a, tone_b}]
    floor_first = np.median(mags_first[:, others], axis=1)
    floor_second = np.median(mags_second[:, others], axis=1)
    hits = (mags_first[:, tone_a] > PREAMBLE_SNR * floor_first) & (
        mags_second[:, tone_b] > PREAMBLE_SNR * floor_second
    )
    if not hits.any():
        return []

    positions = starts[hits]
    scores = mags_first[hits, tone_a] + mags_second[hits, tone_b]
    # Per cluster keep the earliest hit as well as the strongest: reverberant
    # tails bias the peak score late, while the true packet start is at the
    # front edge of its cluster.
    candidates: list[int] = []

    def flush(first: int, best: int) -> None:
        candidates.append(first)
        if best != first:
            candidates.append(best)

    cluster_first = cluster_best = int(positions[0])
    cluster_score = float(scores[0])
    last_pos = positions[0]
    for pos, score in zip(positions[1:], scores[1:]):
        if pos - last_pos > sym:
            flush(cluster_first, cluster_best)
            cluster_first = int(pos)
            cluster_score = -1.0
        if score > cluster_score:
            cluster_best, cluster_score = int(pos), float(score)
        last_pos = pos
    flush(cluster_first, cluster_best)
    return candidates


def demodulate_symbols(
    buf: AudioBuffer, start_offset: int, count: int, profile: ProtocolProfile
) -> tuple[np.ndarray, np.ndarray]:
    """Demodulate ``count`` symbols starting at a sample offset.

    Magnitudes of all tones are measured over the central 80% of each
    symbol window (tolerant to alignment error up to the excluded 10%).

    Returns
    -------
    (symbols, confidences)
        Strongest tone index per slot and the best/second-best magnitude
        ratio (inf when only one tone carries any energy).
    """
    x = buf.samples
    _, core_kernels, skip, core = _dtft_tables(profile, buf.sample_rate)
    sym = profile.symbol_samples(buf.sample_rate)
    if count < 1:
        raise InvalidArgumentError("count must be >= 1")
    starts = start_offset + np.arange(count) * sym + skip
    if start_offset < 0 or starts[-1] + core > x.size:
        raise InvalidArgumentError(
            f"symbol windows [{start_offset}, {starts[-1] + core}) exceed "
            f"buffer of {x.size} samples"
        )
    mags = _window_magnitudes(x, starts, core_kernels)
    order = np.argsort(mags, axis=1)
    symbols = order[:, -1]
    best = mags[np.arange(count), order[:, -1]]
    second = mags[np.arange(count), order[:, -2]]
    with np.errstate(divide="ignore", invalid="ignore"):
        confidences = np.where(second > 0.0, best / np.maximum(second, 1e-300), np.inf)
    confidences = np.where((second == 0.0) & (best == 0.0), 1.0, confidences)
    return symbols.astype(np.int64), confidences


def _demodulate_body(buf, offset, profile):
    """Demodulate length + body for one preamble candidate.

    Returns (payload, confidences, corrected, erasures) or raises
    _CandidateFailure carrying the failure label.
    """
    sym = profile.symbol_samples(buf.sample_rate)
    body_start = offset + 2 * sym
    try:
        length_sym, length_conf = demodulate_symbols(buf, body_start, 1, profile)
    except InvalidArgumentError:
        raise _CandidateFailure("length-symbol-invalid") from None
    n_bytes = int(length_sym[0])
    if not 1 <= n_bytes <= profile.max_payload_bytes:
        raise _CandidateFailure("length-symbol-invalid")

    n_data = -(-8 * n_bytes // rs.SYMBOL_BITS)
    block_sizes = _rs_block_sizes(n_data, profile.rs_parity)
    body_count = n_data + profile.rs_parity * len(block_sizes)
    try:
        symbols, confidences = demodulate_symbols(
            buf, body_start + sym, body_count, profile
        )
    except InvalidArgumentError:
        raise _CandidateFailure("length-symbol-invalid") from None

    data_symbols: list[int] = []
    corrected = 0
    erasures_used = 0
    data_off = 0
    parity_off = n_data
    for size in block_sizes:
        block_idx = np.concatenate(
            [
                np.arange(data_off, data_off + size),
                np.arange(parity_off, parity_off + profile.rs_parity),
            ]
        )
        codeword = [int(symbols[i]) for i in block_idx]
        conf = confidences[block_idx]
        weak = np.nonzero(conf < ERASURE_CONFIDENCE)[0]
        # Cap erasures two below the parity budget, keeping the least
        # trusted: spending the whole budget leaves no unused syndromes to
        # catch a wrong solve, and a garbage candidate would then "decode".
        weak = weak[np.argsort(conf[weak], kind="stable")]
        weak = weak[: max(0, profile.rs_parity - 2)]
        try:
            decoded, fixed = rs.rs_decode(codeword, profile.rs_parity, erasures=weak)
            erasures_used += len(weak)
        except FecError:
            try:
                decoded, fixed = rs.rs_decode(codeword, profile.rs_parity)
            except FecError:
                raise _CandidateFailure("fec-failure") from None
        data_symbols.extend(decoded)
        corrected += fixed
        data_off += size
        parity_off += profile.rs_parity

    payload = unpack_payload(data_symbols, n_bytes)
    all_conf = np.concatenate([length_conf, confidences])
    return payload, all_conf, corrected, erasures_used


class _CandidateFailure(Exception):
    def __init__(self, label: str):
        super().__init__(label)
        self.label = label


_FAILURE_RANK = {"no-preamble": 0, "length-symbol-invalid": 1, "fec-failure": 2}


def decode_packet(buf: AudioBuffer, profile: ProtocolProfile) -> DecodeResult:
    """Full receive pipeline: preamble search, demodulation, FEC.

    Preamble candidates are tried earliest-first (under reverberation the
    direct path precedes its echoes); the first candidate whose
    Reed-Solomon blocks all decode wins.  Failures are reported through
    ``DecodeResult.failure`` rather than exceptions.
    """
    candidates = detect_preamble(buf, profile)
    if not candidates:
        return DecodeResult(payload=None, preamble_offset=-1, failure="no-preamble")
    worst = "no-preamble"
    for offset in candidates:
        try:
            payload, confidences, corrected, erasures = _demodulate_body(
                buf, offset, profile
            )
        except _CandidateFailure as fail:
            if _FAILURE_RANK[fail.label] > _FAILURE_RANK[worst]:
                worst = fail.label
            continue
        return DecodeResult(
            payload=payload,
            preamble_offset=offset,
            symbol_confidences=confidences,
            corrected_errors=corrected,
            erasures_used=erasures,
        )
    return DecodeResult(payload=None, preamble_offset=candidates[0], failure=worst)
