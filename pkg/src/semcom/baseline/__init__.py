from .jpeg import (Bitstream, bits_to_bytes, bytes_to_bits, jpeg_decode_image,
                   jpeg_encode, jpeg_encode_image, jpeg_roundtrip)
from .ldpc import LdpcCode, gf2_rank, gf2_rref, ldpc_decode, ldpc_encode, make_regular_ldpc, parity_ok
from .pipeline import BaselineConfig, baseline_transmit, get_code, transmit_bytes, transmit_image
from .qam import LLR_CLIP, hard_bits, qam_demodulate, qam_modulate

__all__ = [
    "BaselineConfig", "Bitstream", "LLR_CLIP", "LdpcCode", "baseline_transmit",
    "bits_to_bytes", "bytes_to_bits", "get_code", "gf2_rank", "gf2_rref",
    "hard_bits", "jpeg_decode_image", "jpeg_encode", "jpeg_encode_image",
    "jpeg_roundtrip", "ldpc_decode", "ldpc_encode", "make_regular_ldpc",
    "parity_ok", "qam_demodulate", "qam_modulate", "transmit_bytes",
    "transmit_image",
]
