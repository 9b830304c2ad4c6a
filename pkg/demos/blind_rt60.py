"""How well does the blind reverberation-time estimator track the truth?

A packet recorded through each synthetic room is all the estimator sees --
no access to the impulse response itself.
"""

from sonolink.modem import Packet, encode_packet, profile_by_name
from sonolink.rt60 import estimate_rt60
from sonolink.simulate import ChannelSpec, RirSpec, apply_channel

FS = 44100


def main():
    dry = encode_packet(Packet(b"probe!"), profile_by_name("audible"), FS)

    print(f"{'true rt60':>10} {'estimate':>10} {'error':>8} {'bands':>6}")
    for rt60 in (0.4, 0.8, 1.2, 1.6, 2.0):
        wet = apply_channel(
            dry, ChannelSpec(rir=RirSpec(rt60=rt60, direct_gain=0.7, seed=1))
        )
        est = estimate_rt60(wet)
        print(
            f"{rt60:>10.2f} {est.rt60:>10.2f} {abs(est.rt60 - rt60):>8.2f} "
            f"{est.bands_used:>6}"
        )


if __name__ == "__main__":
    main()
