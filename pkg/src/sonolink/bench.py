"""End-to-end benchmark: packets through reverberant channels, with reports.

For every impulse response in a synthetic RT60 sweep (or a user corpus),
each generated packet is encoded, pushed through the channel, decoded as-is,
dereverberated, and decoded again; per-RIR rows collect decode rates,
distortion and reverberation-reduction metrics, and the blind RT60 estimate.

Reports are fully deterministic given the config seed: work items derive
their randomness from per-item seed sequences, aggregation is
order-independent, and wall-clock timing goes to stderr rather than into
the report files.
"""

from __future__ import annotations

import csv
import json
import math
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from .core import AudioBuffer, default_stft_config, stft
from .dereverb import DereverbConfig, dereverberate
from .errors import EstimationError, InvalidArgumentError
from .metrics import lsd, rr
from .modem import Packet, decode_packet, encode_packet, profile_by_name
from .rt60 import estimate_rt60
from .simulate import ChannelSpec, RirSpec, apply_channel, load_rir_corpus, synth_rir

__all__ = [
    "SCHEMA_VERSION",
    "BenchConfig",
    "RirRow",
    "BenchReport",
    "run_benchmark",
    "write_report",
    "read_report",
]

SCHEMA_VERSION = 1

# Domain separators for per-item seed derivation; arbitrary but frozen, so
# reports stay reproducible across releases.
_RIR_TAG = 101
_PAYLOAD_TAG = 202
_NOISE_TAG = 303


@dataclass(frozen=True)
class BenchConfig:
    """Benchmark shape: channel sweep, packet counts, reproducibility seed."""

    profile: str = "audible"
    sample_rate: int = 44100
    rt60_values: tuple[float, ...] = (0.4, 0.8, 1.2, 1.6, 2.0)
    rirs_per_rt: int = 20
    packets_per_rir: int = 20
    payload_bytes: int = 4
    direct_gain: float = 0.7
    corpus_dir: str | None = None
    snr_db: float | None = None
    seed: int = 0
    dereverb: str = "both"
    threads: int | None = None

    def __post_init__(self):
        profile_by_name(self.profile)  # raises on unknown names
        if self.packets_per_rir < 1:
            raise InvalidArgumentError("packets_per_rir must be at least 1")
        if self.rirs_per_rt < 1:
            raise InvalidArgumentError("rirs_per_rt must be at least 1")
        if not self.rt60_values and self.corpus_dir is None:
            raise InvalidArgumentError("rt60_values must be non-empty for a synthetic sweep")
        if any(not (v > 0 and math.isfinite(v)) for v in self.rt60_values):
            raise InvalidArgumentError("rt60_values must all be positive")
        if not 1 <= self.payload_bytes <= 16:
            raise InvalidArgumentError("payload_bytes must be in 1..16")
        if not (self.direct_gain > 0 and math.isfinite(self.direct_gain)):
            raise InvalidArgumentError("direct_gain must be positive")
        if self.dereverb not in ("on", "off", "both"):
            raise InvalidArgumentError("dereverb must be 'on', 'off', or 'both'")
        if self.threads is not None and self.threads < 1:
            raise InvalidArgumentError("threads must be at least 1")
        if self.snr_db is not None and not math.isfinite(self.snr_db):
            raise InvalidArgumentError("snr_db must be finite")

    def serializable(self) -> dict:
        """Config as report-ready JSON. ``threads`` is execution detail, not
        part of the experiment's identity, so it stays out."""
        return {
            "profile": self.profile,
            "sample_rate": self.sample_rate,
            "rt60_values": list(self.rt60_values),
            "rirs_per_rt": self.rirs_per_rt,
            "packets_per_rir": self.packets_per_rir,
            "payload_bytes": self.payload_bytes,
            "direct_gain": self.direct_gain,
            "corpus_dir": self.corpus_dir,
            "snr_db": self.snr_db,
            "seed": self.seed,
            "dereverb": self.dereverb,
        }


@dataclass
class RirRow:
    """One impulse response's results, averaged over its packets."""

    rir_id: str
    true_rt60: float | None
    estimated_rt60: float | None
    decode_rate_before: float
    decode_rate_after: float | None
    mean_lsd_before: float | None
    mean_lsd_after: float | None
    mean_rr: float | None
    failures: int


CSV_COLUMNS = [
    "rir_id",
    "true_rt60",
    "estimated_rt60",
    "decode_rate_before",
    "decode_rate_after",
    "mean_lsd_before",
    "mean_lsd_after",
    "mean_rr",
    "failures",
]


@dataclass
class BenchReport:
    config: dict
    rows: list[RirRow]
    aggregates: dict
    errors: list[dict]
    schema_version: int = SCHEMA_VERSION

    def to_dict(self) -> dict:
        return {
            "schema_version": self.schema_version,
            "config": self.config,
            "rows": [asdict(r) for r in self.rows],
            "aggregates": self.aggregates,
            "errors": self.errors,
        }


def _round4(value) -> float | None:
    if value is None:
        return None
    value = float(value)
    if not math.isfinite(value):
        return None
    return round(value, 4)


def _item_seed(*entropy) -> int:
    return int(np.random.SeedSequence(entropy).generate_state(1, np.uint64)[0])


def _process_rir(cfg: BenchConfig, profile, rt_index, rir_index, true_rt60, rir, rir_id):
    """Run every packet of one impulse response; exceptions become counts."""
    fs = rir.sample_rate
    stft_cfg = default_stft_config(fs)
    want_dereverb = cfg.dereverb in ("on", "both")
    dcfg = DereverbConfig(stft=stft_cfg)

    before_hits = 0
    after_hits = 0
    lsd_before_vals: list[float] = []
    lsd_after_vals: list[float] = []
    rr_vals: list[float] = []
    failures = 0
    estimated: float | None = None

    for j in range(cfg.packets_per_rir):
        try:
            payload_rng = np.random.default_rng(
                np.random.SeedSequence((cfg.seed, _PAYLOAD_TAG, rt_index, rir_index, j))
            )
            payload = payload_rng.bytes(cfg.payload_bytes)
            dry = encode_packet(Packet(payload), profile, fs)
            chan = ChannelSpec(
                rir=rir,
                snr_db=cfg.snr_db,
                noise_seed=_item_seed(cfg.seed, _NOISE_TAG, rt_index, rir_index, j),
            )
            wet = apply_channel(dry, chan)

            before = decode_packet(wet, profile)
            if before.payload == payload:
                before_hits += 1

            if j == 0:
                try:
                    estimated = estimate_rt60(wet, stft_cfg).rt60
                except EstimationError:
                    estimated = None

            if want_dereverb:
                processed, _diag = dereverberate(wet, dcfg, rt60=estimated)
                after = decode_packet(processed, profile)
                if after.payload == payload:
                    after_hits += 1

                clean = np.zeros(len(wet))
                clean[: len(dry)] = dry.samples
                clean_spec = stft(AudioBuffer(clean, fs), stft_cfg)
                wet_spec = stft(wet, stft_cfg)
                proc_spec = stft(processed, stft_cfg)
                lsd_before_vals.append(lsd(clean_spec, wet_spec))
                lsd_after_vals.append(lsd(clean_spec, proc_spec))
                rr_vals.append(rr(wet_spec, proc_spec, clean_spec)[0])
        except Exception:
            failures += 1

    n = cfg.packets_per_rir
    return RirRow(
        rir_id=rir_id,
        true_rt60=_round4(true_rt60),
        estimated_rt60=_round4(estimated),
        decode_rate_before=_round4(100.0 * before_hits / n),
        decode_rate_after=_round4(100.0 * after_hits / n) if want_dereverb else None,
        mean_lsd_before=_round4(np.mean(lsd_before_vals)) if lsd_before_vals else None,
        mean_lsd_after=_round4(np.mean(lsd_after_vals)) if lsd_after_vals else None,
        mean_rr=_round4(np.mean(rr_vals)) if rr_vals else None,
        failures=failures,
    )


def _mean_or_none(values) -> float | None:
    values = [v for v in values if v is not None]
    return _round4(np.mean(values)) if values else None


def _aggregate(rows: list[RirRow]) -> dict:
    agg = {
        "row_count": len(rows),
        "decode_rate_before": _mean_or_none(r.decode_rate_before for r in rows),
        "decode_rate_after": _mean_or_none(r.decode_rate_after for r in rows),
        "mean_lsd_before": _mean_or_none(r.mean_lsd_before for r in rows),
        "mean_lsd_after": _mean_or_none(r.mean_lsd_after for r in rows),
        "mean_rr": _mean_or_none(r.mean_rr for r in rows),
    }

    paired = [
        (r.mean_lsd_before, r.mean_lsd_after)
        for r in rows
        if r.mean_lsd_before is not None and r.mean_lsd_after is not None
    ]
    agg["lsd_improved_fraction"] = (
        _round4(sum(after < before for before, after in paired) / len(paired))
        if paired
        else None
    )

    estimates = [
        (r.estimated_rt60, r.true_rt60)
        for r in rows
        if r.estimated_rt60 is not None and r.true_rt60 is not None
    ]
    agg["rt60_mae"] = (
        _round4(np.mean([abs(e - t) for e, t in estimates])) if estimates else None
    )
    agg["rt60_estimates"] = len(estimates)

    by_rt: dict[str, list[RirRow]] = {}
    for row in rows:
        key = "unlabeled" if row.true_rt60 is None else f"{row.true_rt60:g}"
        by_rt.setdefault(key, []).append(row)
    agg["by_rt60"] = {
        key: {
            "rows": len(group),
            "decode_rate_before": _mean_or_none(r.decode_rate_before for r in group),
            "decode_rate_after": _mean_or_none(r.decode_rate_after for r in group),
            "mean_lsd_before": _mean_or_none(r.mean_lsd_before for r in group),
            "mean_lsd_after": _mean_or_none(r.mean_lsd_after for r in group),
            "mean_rr": _mean_or_none(r.mean_rr for r in group),
            "estimated_rt60": _mean_or_none(r.estimated_rt60 for r in group),
        }
        for key, group in sorted(by_rt.items())
    }
    return agg


def _thread_count(cfg: BenchConfig) -> int:
    if cfg.threads is not None:
        return cfg.threads
    env = os.environ.get("SONOLINK_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            pass
    return min(os.cpu_count() or 1, 8)


def run_benchmark(cfg: BenchConfig) -> BenchReport:
    """Execute the sweep and return the deterministic report.

    Per-packet failures are counted in their row; per-RIR failures become
    entries in the report's ``errors`` list.  Neither aborts the run.
    Timing is printed to stderr only, keeping report bytes seed-determined.
    """
    profile = profile_by_name(cfg.profile)
    errors: list[dict] = []
    work = []  # (rt_index, rir_index, true_rt60, rir_buffer, rir_id)

    if cfg.corpus_dir is not None:
        entries = load_rir_corpus(cfg.corpus_dir, cfg.sample_rate)
        for i, entry in enumerate(entries):
            work.append((0, i, entry.rt60, entry.audio, entry.name))
    else:
        for ri, rt in enumerate(cfg.rt60_values):
            for si in range(cfg.rirs_per_rt):
                rir_id = f"rt{rt:g}_r{si:02d}"
                try:
                    rir = synth_rir(
                        RirSpec(
                            rt60=rt,
                            direct_gain=cfg.direct_gain,
                            seed=_item_seed(cfg.seed, _RIR_TAG, ri, si),
                        ),
                        cfg.sample_rate,
                    )
                except Exception as exc:
                    errors.append({"rir_id": rir_id, "error": str(exc)})
                    continue
                work.append((ri, si, rt, rir, rir_id))

    def run_item(item):
        try:
            return _process_rir(cfg, profile, *item)
        except Exception as exc:  # a whole-RIR failure: report it, keep going
            return {"rir_id": item[4], "error": str(exc)}

    n_threads = _thread_count(cfg)
    started = time.perf_counter()
    if n_threads == 1 or len(work) <= 1:
        outcomes = [run_item(item) for item in work]
    else:
        with ThreadPoolExecutor(max_workers=n_threads) as pool:
            outcomes = list(pool.map(run_item, work))
    elapsed = time.perf_counter() - started

    rows = [o for o in outcomes if isinstance(o, RirRow)]
    errors.extend(o for o in outcomes if not isinstance(o, RirRow))

    total_signals = len(work) * cfg.packets_per_rir
    if total_signals:
        print(
            f"[bench] {len(work)} impulse responses x {cfg.packets_per_rir} packets "
            f"in {elapsed:.1f} s ({elapsed / total_signals:.3f} s/signal)",
            file=sys.stderr,
        )

    return BenchReport(
        config=cfg.serializable(),
        rows=rows,
        aggregates=_aggregate(rows),
        errors=errors,
    )


def _csv_cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return f"{value:.4f}"
    return str(value)


def write_report(report: BenchReport, directory, formats=("json", "csv")) -> dict[str, Path]:
    """Write report.json / report.csv into a directory; returns the paths."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    paths: dict[str, Path] = {}
    if "json" in formats:
        path = directory / "report.json"
        text = json.dumps(report.to_dict(), sort_keys=True, indent=2, allow_nan=False)
        path.write_text(text + "\n")
        paths["json"] = path
    if "csv" in formats:
        path = directory / "report.csv"
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(CSV_COLUMNS)
            for row in report.rows:
                record = asdict(row)
                writer.writerow([_csv_cell(record[col]) for col in CSV_COLUMNS])
        paths["csv"] = path
    return paths


def read_report(path) -> dict:
    """Load a report.json back into the dict form of BenchReport.to_dict()."""
    with open(path) as fh:
        return json.load(fh)
