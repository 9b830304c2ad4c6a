"""Encode a short message as sound, decode it, then survive corruption.

The second half deliberately silences two data symbols in the waveform to
show the error correction absorbing the damage.
"""

import numpy as np

from sonolink.core import AudioBuffer
from sonolink.modem import Packet, decode_packet, encode_packet, profile_by_name


def main():
    fs = 44100
    profile = profile_by_name("audible")
    payload = b"hello, room"

    audio = encode_packet(Packet(payload), profile, fs)
    print(f"payload: {payload!r} ({len(payload)} bytes)")
    print(f"encoded: {audio.duration:.2f} s at {fs} Hz, peak {np.max(np.abs(audio.samples)):.2f}")

    result = decode_packet(audio, profile)
    print(f"clean decode: {result.payload!r}  failure={result.failure}")

    # wipe out two data-symbol windows entirely
    sym = profile.symbol_samples(fs)
    damaged = audio.samples.copy()
    for slot in (4, 6):
        damaged[slot * sym : (slot + 1) * sym] = 0.0
    result = decode_packet(AudioBuffer(damaged, fs), profile)
    print(
        f"after silencing symbols 4 and 6: {result.payload!r}  "
        f"(corrected_errors={result.corrected_errors}, erasures_used={result.erasures_used})"
    )


if __name__ == "__main__":
    main()
