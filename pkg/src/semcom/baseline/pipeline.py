"""Separation-based transmission pipeline: JPEG + LDPC + 4-QAM over the channel.

Each image's JPEG bytes are framed into LDPC codewords, modulated, passed
through the shared channel module, soft-demodulated, and decoded.  If any
frame fails belief propagation (or the recovered bytes are not a decodable
JPEG), the frame is declared lost and the output is a mid-gray image so
quality metrics stay defined; this is the digital cliff.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
import torch

from ..channel import Channel, ChannelConfig
from .jpeg import bits_to_bytes, bytes_to_bits, jpeg_decode_image, jpeg_encode_image
from .ldpc import LdpcCode, ldpc_decode, ldpc_encode, make_regular_ldpc
from .qam import qam_demodulate, qam_modulate

FAILURE_FILL = 0.5


@dataclass
class BaselineConfig:
    jpeg_quality: int = 75
    ldpc_n: int = 1024
    ldpc_k: int = 512
    ldpc_max_iters: int = 50
    qam_order: int = 4
    code_seed: int = 0

    def __post_init__(self):
        if self.qam_order != 4:
            raise ValueError("only 4-QAM is supported")


@lru_cache(maxsize=4)
def _cached_code(n: int, k: int, seed: int) -> LdpcCode:
    return make_regular_ldpc(n=n, k=k, seed=seed)


def get_code(config: BaselineConfig) -> LdpcCode:
    return _cached_code(config.ldpc_n, config.ldpc_k, config.code_seed)


def _through_channel(symbols: np.ndarray, snr_db: float, channel_type: str,
                     seed: int) -> tuple[np.ndarray, np.ndarray | None]:
    """Send complex symbols through the shared channel; returns (received, |h|²)."""
    reals = torch.from_numpy(
        np.stack([symbols.real, symbols.imag], axis=-1).reshape(-1).astype(np.float64))
    ch = Channel(ChannelConfig(type=channel_type, snr_db=snr_db, seed=seed))
    out, realization = ch(reals)
    received = out.reshape(-1, 2).numpy()
    received = received[:, 0] + 1j * received[:, 1]
    fading_mag2 = None
    if realization.fading is not None:
        fading_mag2 = realization.fading.abs().pow(2).reshape(-1).numpy()
    return received, fading_mag2


def transmit_bytes(data: bytes, snr_db: float, channel_type: str,
                   config: BaselineConfig, seed: int = 0) -> tuple[bytes, bool]:
    """Carry a byte payload through LDPC + 4-QAM + channel; (payload, all frames ok)."""
    code = get_code(config)
    bits = bytes_to_bits(data)
    n_bits = bits.size
    pad = (-n_bits) % code.k
    bits = np.concatenate([bits, np.zeros(pad, dtype=np.uint8)])
    frames = bits.reshape(-1, code.k)
    coded = np.concatenate([ldpc_encode(frame, code).bits for frame in frames])
    symbols = qam_modulate(coded)
    received, fading_mag2 = _through_channel(symbols, snr_db, channel_type, seed)
    llr = qam_demodulate(received, snr_db, fading_mag2)
    ok = True
    decoded_bits = []
    for f in range(frames.shape[0]):
        frame_llr = llr[f * code.n:(f + 1) * code.n]
        msg, success = ldpc_decode(frame_llr, code, config.ldpc_max_iters)
        ok = ok and success
        decoded_bits.append(msg.bits)
    decoded = np.concatenate(decoded_bits)[:n_bits]
    return bits_to_bytes(decoded)[:len(data)], ok


def transmit_image(image: np.ndarray, snr_db: float, channel_type: str,
                   config: BaselineConfig, seed: int = 0) -> tuple[np.ndarray, bool]:
    """Transmit one image; on any frame failure returns the mid-gray fill."""
    payload = jpeg_encode_image(image, config.jpeg_quality)
    recovered, ok = transmit_bytes(payload, snr_db, channel_type, config, seed)
    if ok:
        try:
            return jpeg_decode_image(recovered), True
        except OSError:
            # Parity passed on a wrong codeword and corrupted the JPEG stream.
            ok = False
    return np.full_like(np.asarray(image, dtype=np.float64), FAILURE_FILL), ok


def baseline_transmit(images, snr_db: float, channel_type: str = "awgn",
                      config: BaselineConfig | None = None,
                      seed: int = 0) -> tuple[torch.Tensor, np.ndarray]:
    """Full pipeline over an image batch.

    Returns (reconstructed batch, per-image ok flags); failed images are
    mid-gray so PSNR remains computable.
    """
    config = config or BaselineConfig()
    arr = images.detach().cpu().numpy() if hasattr(images, "detach") else np.asarray(images)
    outs, oks = [], []
    for i in range(arr.shape[0]):
        out, ok = transmit_image(arr[i], snr_db, channel_type, config, seed + i)
        outs.append(out)
        oks.append(ok)
    batch = torch.from_numpy(np.stack(outs).astype(np.float32))
    return batch, np.asarray(oks, dtype=bool)
