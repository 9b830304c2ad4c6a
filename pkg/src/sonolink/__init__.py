"""sonolink: data over sound, and the room acoustics that get in its way.

Modules
-------
core
    Audio containers, STFT analysis/synthesis, convolution.
wavio
    WAV file reading and writing.
rs
    Reed-Solomon coding over GF(32) with errors-and-erasures decoding.
modem
    Multi-tone FSK packet encoder, preamble detector, and decoder.
rt60
    Blind reverberation-time estimation from subband energy decay.
dereverb
    Late-reverberation suppression by spectral gain.
metrics
    Log spectral distortion, reverberation reduction, decode rates.
simulate
    Synthetic impulse responses, channel application, RIR corpora.
bench
    End-to-end benchmark harness with JSON/CSV reports.
cli
    The ``sonolink`` command-line tool.
"""

from .bench import (
    SCHEMA_VERSION,
    BenchConfig,
    BenchReport,
    RirRow,
    read_report,
    run_benchmark,
    write_report,
)
from .core import (
    AudioBuffer,
    Spectrogram,
    StftConfig,
    convolve,
    default_stft_config,
    istft,
    make_window,
    stft,
)
from .dereverb import (
    FALLBACK_RT60,
    DereverbConfig,
    DereverbDiagnostics,
    GainGrid,
    ReverbModel,
    decay_constant,
    dereverberate,
    reverberant_psd,
    spectral_gain,
)
from .errors import (
    EmptyBandError,
    EstimationError,
    FecError,
    FormatError,
    InvalidArgumentError,
    MetricError,
    NoPeakError,
    SonolinkError,
)
from .metrics import MetricReport, decode_rate, lsd, metric_report, rr
from .modem import (
    AUDIBLE,
    ULTRASONIC,
    DecodeResult,
    Packet,
    ProtocolProfile,
    decode_packet,
    demodulate_symbols,
    detect_preamble,
    encode_packet,
    packet_symbols,
    profile_by_name,
    tone_frequencies,
)
from .rs import FIELD_SIZE, MAX_CODEWORD, generator_poly, rs_decode, rs_encode
from .rt60 import (
    RtEstimate,
    SubbandEnvelope,
    decay_start,
    edc,
    estimate_rt60,
    fit_rt60_band,
    subband_envelopes,
)
from .simulate import (
    ChannelSpec,
    CorpusEntry,
    RirSpec,
    apply_channel,
    load_rir_corpus,
    save_rir_corpus,
    synth_rir,
)
from .wavio import wav_read, wav_write

__version__ = "0.1.0"
