"""Window-attention building blocks for the transformer codec.

Token grids are channel-last tensors of shape (batch, h, w, dim).  Attention
is restricted to non-overlapping windows; shifted blocks cyclically roll the
grid and mask attention between tokens that were not spatially adjacent
before the roll, using -inf logits so masked weights are exactly zero after
softmax.
"""

from __future__ import annotations

import torch
import torch.nn as nn

# Integer-dB SNR buckets covered by the learned target embedding.
SNR_BUCKET_MIN = 0
SNR_BUCKET_MAX = 15
NUM_SNR_BUCKETS = SNR_BUCKET_MAX - SNR_BUCKET_MIN + 1


def partition_patches(images: torch.Tensor, patch_size: int) -> torch.Tensor:
    """Split (B, H, W, C) images into non-overlapping patches.

    Returns a raw token grid (B, H/p, W/p, p*p*C); raises if the patch size
    does not divide the image dimensions.
    """
    b, h, w, c = images.shape
    if h % patch_size or w % patch_size:
        raise ValueError(f"patch size {patch_size} does not divide image dims {h}x{w}")
    p = patch_size
    x = images.reshape(b, h // p, p, w // p, p, c)
    x = x.permute(0, 1, 3, 2, 4, 5)
    return x.reshape(b, h // p, w // p, p * p * c)


def assemble_patches(grid: torch.Tensor, patch_size: int, channels: int = 3) -> torch.Tensor:
    """Inverse of :func:`partition_patches`."""
    b, gh, gw, d = grid.shape
    p = patch_size
    if d != p * p * channels:
        raise ValueError(f"token dim {d} does not match patch {p}x{p}x{channels}")
    x = grid.reshape(b, gh, gw, p, p, channels)
    x = x.permute(0, 1, 3, 2, 4, 5)
    return x.reshape(b, gh * p, gw * p, channels)


def merge_patches(grid: torch.Tensor) -> torch.Tensor:
    """Concatenate each 2x2 token neighbourhood in raster order.

    Ordering is (top-left, top-right, bottom-left, bottom-right); grid sides
    halve and the channel dimension grows by a factor of four.
    """
    b, h, w, d = grid.shape
    if h % 2 or w % 2:
        raise ValueError(f"patch merge requires even grid sides, got {h}x{w}")
    tl = grid[:, 0::2, 0::2, :]
    tr = grid[:, 0::2, 1::2, :]
    bl = grid[:, 1::2, 0::2, :]
    br = grid[:, 1::2, 1::2, :]
    return torch.cat([tl, tr, bl, br], dim=-1)


def split_patches(grid: torch.Tensor) -> torch.Tensor:
    """Inverse of :func:`merge_patches`: quarters the channel dim, doubles sides."""
    b, h, w, d = grid.shape
    if d % 4:
        raise ValueError(f"cannot split token dim {d} into 2x2 neighbourhood")
    q = d // 4
    out = grid.new_zeros((b, h * 2, w * 2, q))
    out[:, 0::2, 0::2, :] = grid[..., 0 * q:1 * q]
    out[:, 0::2, 1::2, :] = grid[..., 1 * q:2 * q]
    out[:, 1::2, 0::2, :] = grid[..., 2 * q:3 * q]
    out[:, 1::2, 1::2, :] = grid[..., 3 * q:4 * q]
    return out


def window_partition(x: torch.Tensor, window: int) -> torch.Tensor:
    """(B, h, w, D) -> (B·nW, window², D) window sequences."""
    b, h, w, d = x.shape
    x = x.reshape(b, h // window, window, w // window, window, d)
    x = x.permute(0, 1, 3, 2, 4, 5)
    return x.reshape(-1, window * window, d)


def window_reverse(windows: torch.Tensor, window: int, h: int, w: int) -> torch.Tensor:
    """Inverse of :func:`window_partition`."""
    d = windows.shape[-1]
    b = windows.shape[0] // ((h // window) * (w // window))
    x = windows.reshape(b, h // window, w // window, window, window, d)
    x = x.permute(0, 1, 3, 2, 4, 5)
    return x.reshape(b, h, w, d)


def shift_attention_mask(h: int, w: int, window: int, shift: int,
                         dtype: torch.dtype = torch.float32) -> torch.Tensor:
    """Per-window additive mask (nW, window², window²) for shifted attention.

    Tokens wrapped around by the cyclic shift land in the same window as
    tokens from the opposite image edge; entries between different wrap
    regions are -inf so their post-softmax attention is exactly zero.
    """
    region = torch.zeros((1, h, w, 1), dtype=dtype)
    cnt = 0
    spans = (slice(0, -window), slice(-window, -shift), slice(-shift, None))
    for hs in spans:
        for ws in spans:
            region[:, hs, ws, :] = cnt
            cnt += 1
    region_windows = window_partition(region, window).squeeze(-1)  # (nW, window²)
    diff = region_windows.unsqueeze(1) - region_windows.unsqueeze(2)
    mask = torch.zeros_like(diff)
    mask[diff != 0] = float("-inf")
    return mask


class SnrEmbedding(nn.Module):
    """Learned target embedding of the quantized SNR (integer dB bucket)."""

    def __init__(self, dim: int):
        super().__init__()
        self.table = nn.Embedding(NUM_SNR_BUCKETS, dim)

    @staticmethod
    def bucket(snr_db: float) -> int:
        if snr_db == float("inf"):
            return SNR_BUCKET_MAX - SNR_BUCKET_MIN
        q = int(round(float(snr_db)))
        return min(max(q, SNR_BUCKET_MIN), SNR_BUCKET_MAX) - SNR_BUCKET_MIN

    def forward(self, snr_db: float) -> torch.Tensor:
        idx = torch.tensor(self.bucket(snr_db), device=self.table.weight.device)
        return self.table(idx)


class WindowAttention(nn.Module):
    """Multi-head self-attention inside one window."""

    def __init__(self, dim: int, num_heads: int):
        super().__init__()
        if dim % num_heads:
            raise ValueError(f"dim {dim} not divisible by {num_heads} heads")
        self.dim = dim
        self.num_heads = num_heads
        self.scale = (dim // num_heads) ** -0.5
        self.qkv = nn.Linear(dim, dim * 3)
        self.proj = nn.Linear(dim, dim)

    def forward(self, x: torch.Tensor, mask: torch.Tensor | None = None,
                return_attn: bool = False):
        b_, n, c = x.shape
        qkv = self.qkv(x).reshape(b_, n, 3, self.num_heads, c // self.num_heads)
        qkv = qkv.permute(2, 0, 3, 1, 4)
        q, k, v = qkv[0], qkv[1], qkv[2]
        attn = (q @ k.transpose(-2, -1)) * self.scale
        if mask is not None:
            nw = mask.shape[0]
            attn = attn.reshape(b_ // nw, nw, self.num_heads, n, n) + mask.unsqueeze(0).unsqueeze(2)
            attn = attn.reshape(b_, self.num_heads, n, n)
        attn = attn.softmax(dim=-1)
        out = (attn @ v).transpose(1, 2).reshape(b_, n, c)
        out = self.proj(out)
        if return_attn:
            return out, attn
        return out


class SwinBlock(nn.Module):
    """One windowed-attention layer: (S)W-MSA with target embedding, then MLP.

    shift must be 0 (plain windows) or window // 2 (shifted windows); the
    token grid sides must be divisible by the window size.
    """

    def __init__(self, dim: int, num_heads: int, window: int, shift: int = 0,
                 mlp_ratio: float = 2.0):
        super().__init__()
        if shift not in (0, window // 2):
            raise ValueError(f"shift must be 0 or window//2, got {shift} for window {window}")
        self.dim = dim
        self.window = window
        self.shift = shift
        self.norm1 = nn.LayerNorm(dim)
        self.attn = WindowAttention(dim, num_heads)
        self.norm2 = nn.LayerNorm(dim)
        hidden = int(dim * mlp_ratio)
        self.mlp = nn.Sequential(nn.Linear(dim, hidden), nn.ReLU(), nn.Linear(hidden, dim))
        self._mask_cache: dict[tuple, torch.Tensor] = {}

    def _check_grid(self, h: int, w: int):
        if self.window > h or self.window > w:
            raise ValueError(f"window {self.window} larger than token grid {h}x{w}")
        if h % self.window or w % self.window:
            raise ValueError(f"window {self.window} does not tile token grid {h}x{w}")

    def _mask(self, h: int, w: int, dtype: torch.dtype) -> torch.Tensor | None:
        if self.shift == 0:
            return None
        key = (h, w, dtype)
        if key not in self._mask_cache:
            self._mask_cache[key] = shift_attention_mask(h, w, self.window, self.shift, dtype)
        return self._mask_cache[key]

    def forward(self, x: torch.Tensor, emb: torch.Tensor,
                return_attn: bool = False):
        b, h, w, d = x.shape
        self._check_grid(h, w)
        shortcut = x
        x = self.norm1(x) + emb
        if self.shift:
            x = torch.roll(x, shifts=(-self.shift, -self.shift), dims=(1, 2))
        windows = window_partition(x, self.window)
        attended = self.attn(windows, mask=self._mask(h, w, x.dtype), return_attn=return_attn)
        if return_attn:
            attended, attn = attended
        x = window_reverse(attended, self.window, h, w)
        if self.shift:
            x = torch.roll(x, shifts=(self.shift, self.shift), dims=(1, 2))
        x = shortcut + x
        x = x + self.mlp(self.norm2(x))
        if return_attn:
            return x, attn
        return x
