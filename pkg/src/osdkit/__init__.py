"""Ordered statistics decoding with guesswork-complexity bounds for the BI-AWGN channel."""

from .bounds import (
    BoundResult,
    GuessworkQuery,
    arikan_bounds,
    evaluate,
    hamming_subset_bound_iid,
    mld_order,
    na_bler,
    na_snr,
    optimize_q,
    ordered_segment_bound,
    osd_bler,
    osd_guesswork_bound,
    renyi_cond_entropy,
    saturation_threshold,
)
from .channel import ChannelParams, llr, transmit
from .codes import CRC6, CrcSpec, build_ebch, crc_attach, crc_check, puncture, random_code
from .gf2 import Gf2Matrix, NotAGeneratorError, encode, systematic_form
from .orderstats import ErrorCountPmf, OrderedReception, QuadratureError, error_count_pmf, mrb_error_prob, order_reception
from .osd import (
    CccConfig,
    DecodeOutcome,
    OsdDecoder,
    ccc_cutoff,
    decode_ccc,
    decode_genie,
    decode_identify,
    simulate_decoder,
    tep_at,
    tep_count,
    tep_rank,
)

__version__ = "0.1.0"
