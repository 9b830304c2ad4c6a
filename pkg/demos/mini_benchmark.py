"""A scaled-down benchmark sweep with the full reporting pipeline.

Runs in well under a minute; the real sweep (see the bench subcommand's
defaults) uses 20 rooms per reverberation time and 20 packets per room.
"""

import tempfile

from sonolink.bench import BenchConfig, run_benchmark, write_report


def main():
    cfg = BenchConfig(
        sample_rate=22050,
        rt60_values=(0.4, 1.2, 2.0),
        rirs_per_rt=3,
        packets_per_rir=2,
        payload_bytes=4,
        seed=7,
    )
    report = run_benchmark(cfg)
    agg = report.aggregates

    print(f"{'rt60':>6} {'before %':>9} {'after %':>8} {'RR dB':>7} {'est rt60':>9}")
    for key, group in agg["by_rt60"].items():
        print(
            f"{key:>6} {group['decode_rate_before']:>9.1f} "
            f"{group['decode_rate_after']:>8.1f} {group['mean_rr']:>7.2f} "
            f"{group['estimated_rt60']:>9.2f}"
        )
    print(
        f"\noverall: decode {agg['decode_rate_before']:.1f}% -> "
        f"{agg['decode_rate_after']:.1f}%, rt60 MAE {agg['rt60_mae']:.3f} s, "
        f"LSD improved for {100 * agg['lsd_improved_fraction']:.0f}% of rooms"
    )

    with tempfile.TemporaryDirectory() as tmp:
        paths = write_report(report, tmp)
        print("report files:", ", ".join(p.name for p in paths.values()))


if __name__ == "__main__":
    main()
