from .backbones import CnnDecoder, CnnEncoder, SwinCodecConfig, SwinDecoder, SwinEncoder
from .codec import BACKBONES, SemanticCodec, codec_loss, validate_image_batch
from .swin import (NUM_SNR_BUCKETS, SnrEmbedding, SwinBlock, WindowAttention,
                   assemble_patches, merge_patches, partition_patches,
                   shift_attention_mask, split_patches, window_partition,
                   window_reverse)

__all__ = [
    "BACKBONES", "CnnDecoder", "CnnEncoder", "NUM_SNR_BUCKETS", "SemanticCodec",
    "SnrEmbedding", "SwinBlock", "SwinCodecConfig", "SwinDecoder", "SwinEncoder",
    "WindowAttention", "assemble_patches", "codec_loss", "merge_patches",
    "partition_patches", "shift_attention_mask", "split_patches",
    "validate_image_batch", "window_partition", "window_reverse",
]
