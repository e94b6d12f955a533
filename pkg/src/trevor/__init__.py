"""TREVOR: zero-involvement pairing from shared ambient audio.

Two co-located devices turn their own recordings into matching 256-bit
strings via the dominant eigenvectors of a binned-spectrum Gram matrix,
then agree on a random key with a Reed–Solomon fuzzy commitment.
Nothing derived from the raw signal crosses the wire.
"""

from .errors import (
    ConfigError,
    ConvergenceWarning,
    DegenerateInputError,
    DimensionError,
    EmptyInputError,
    FormatError,
    FramingError,
    InsufficientDataError,
    ParseError,
    ProtocolError,
    TrevorError,
)
from .ingest import ChannelModel, EnvironmentSpec, SampleBuffer, load_csv, load_wav, synthesize_environment
from .spectral import ObservationMatrix, SpectralConfig, block_fft_magnitude, build_observation_matrix
from .eigen import CovarianceMatrix, EigenBasis, covariance, extract_basis, power_method
from .quantize import (
    BitSequence,
    SymbolSequence,
    bit_error_rate,
    means_quantize,
    quantize_bits,
    schurmann_sigg_quantize,
    to_bits,
    trevor_quantize,
)
from .reconcile import FuzzyCommitment, RsParams, commit, decommit, rs_decode, rs_encode
from .protocol import PairingConfig, PairingSession, WireMessage, pair_loopback, run_pairing
from .syncbleed import AttackReport, TransferEstimate, apply_inverse, fit_transfer, run_attack
from .randomness import SuiteReport, run_suite, run_tests

__version__ = "0.1.0"
