"""Gray-mapped 4-QAM (QPSK) modulation and soft demodulation.

Bit pairs map to (I, Q) components independently with unit average symbol
energy: bit 0 -> +1/sqrt(2), bit 1 -> -1/sqrt(2).  Adjacent constellation
points therefore differ in exactly one bit.  The demodulator emits per-bit
log-likelihood ratios (positive favours bit 0), clipped to +/-20.
"""

from __future__ import annotations

import math

import numpy as np

QAM_ORDER = 4
BITS_PER_SYMBOL = 2
LLR_CLIP = 20.0

_AMP = 1.0 / math.sqrt(2.0)


def qam_modulate(bits: np.ndarray) -> np.ndarray:
    """Map a bit vector (even length) to unit-energy QPSK symbols."""
    bits = np.asarray(bits, dtype=np.int64)
    if bits.size % BITS_PER_SYMBOL:
        raise ValueError(f"bit count {bits.size} is not a multiple of {BITS_PER_SYMBOL}")
    pairs = bits.reshape(-1, 2)
    i = (1 - 2 * pairs[:, 0]) * _AMP
    q = (1 - 2 * pairs[:, 1]) * _AMP
    return i + 1j * q


def qam_demodulate(symbols: np.ndarray, snr_db: float,
                   fading_mag2: np.ndarray | None = None) -> np.ndarray:
    """Per-bit LLRs for received (possibly equalized) QPSK symbols.

    snr_db sets the complex noise variance sigma^2 = 10^(-snr_db/10) at unit
    signal power; for an equalized fading channel, fading_mag2 = |h|^2 scales
    the effective per-symbol noise variance up by 1/|h|^2.
    """
    symbols = np.asarray(symbols, dtype=np.complex128)
    if math.isinf(snr_db):
        llr_i = np.sign(symbols.real) * LLR_CLIP
        llr_q = np.sign(symbols.imag) * LLR_CLIP
    else:
        sigma2 = 10.0 ** (-snr_db / 10.0)
        nvar = np.full(symbols.shape, sigma2, dtype=np.float64)
        if fading_mag2 is not None:
            nvar = nvar / np.maximum(np.asarray(fading_mag2, dtype=np.float64), 1e-12)
        llr_i = 4.0 * _AMP * symbols.real / nvar
        llr_q = 4.0 * _AMP * symbols.imag / nvar
    llr = np.stack([llr_i, llr_q], axis=-1).reshape(-1)
    return np.clip(llr, -LLR_CLIP, LLR_CLIP)


def hard_bits(llr: np.ndarray) -> np.ndarray:
    """Hard decisions from LLRs (positive -> 0)."""
    return (np.asarray(llr) < 0).astype(np.uint8)
