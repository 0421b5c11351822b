"""JPEG source coding and bit/byte packing for the separation-based baseline."""

from __future__ import annotations

import io
from dataclasses import dataclass

import numpy as np
from PIL import Image


@dataclass
class Bitstream:
    """Binary vector carried through the digital pipeline."""

    bits: np.ndarray

    def __post_init__(self):
        self.bits = np.asarray(self.bits, dtype=np.uint8)
        if self.bits.ndim != 1 or not np.isin(self.bits, (0, 1)).all():
            raise ValueError("bits must be a 1-D vector of 0/1 entries")

    @property
    def length(self) -> int:
        return int(self.bits.size)


def bytes_to_bits(data: bytes) -> np.ndarray:
    return np.unpackbits(np.frombuffer(data, dtype=np.uint8))


def bits_to_bytes(bits: np.ndarray) -> bytes:
    return np.packbits(np.asarray(bits, dtype=np.uint8)).tobytes()


def _check_quality(quality: int) -> None:
    if not 1 <= int(quality) <= 100:
        raise ValueError(f"JPEG quality must be in [1, 100], got {quality}")


def _to_pil(image: np.ndarray) -> Image.Image:
    arr = np.clip(np.asarray(image, dtype=np.float64) * 255.0, 0, 255).round().astype(np.uint8)
    return Image.fromarray(arr, mode="RGB")


def jpeg_encode_image(image: np.ndarray, quality: int) -> bytes:
    """Encode one (H, W, 3) image with values in [0, 1] into JPEG bytes."""
    _check_quality(quality)
    buf = io.BytesIO()
    _to_pil(image).save(buf, format="JPEG", quality=int(quality))
    return buf.getvalue()


def jpeg_decode_image(data: bytes) -> np.ndarray:
    """Decode JPEG bytes back to a float image in [0, 1]."""
    img = Image.open(io.BytesIO(data))
    img.load()
    return np.asarray(img.convert("RGB"), dtype=np.float64) / 255.0


def jpeg_encode(image: np.ndarray, quality: int) -> Bitstream:
    """JPEG bytes of one image as a bitstream."""
    return Bitstream(bytes_to_bits(jpeg_encode_image(image, quality)))


def jpeg_roundtrip(image: np.ndarray, quality: int) -> np.ndarray:
    return jpeg_decode_image(jpeg_encode_image(image, quality))
