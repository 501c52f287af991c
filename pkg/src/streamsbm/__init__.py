"""Streaming, memory-limited community detection for sparse block models."""
from .assign import classify_all, greedy_assign
from .baseline import BlockPowerConfig, block_power_stream
from .labels import ClusterAssignment
from .memory import MemoryMeter
from .metrics import misclassification, regime_classify
from .sbm import SbmGraph, SbmParams, generate, open_stream, restrict_to_green
from .spectral import classify_green
from .streaming import StreamConfig, offline_stream, online_stream

__version__ = "0.1.0"

__all__ = [
    "BlockPowerConfig", "ClusterAssignment", "MemoryMeter", "SbmGraph", "SbmParams", "StreamConfig",
    "block_power_stream", "classify_all", "classify_green", "generate", "greedy_assign", "misclassification",
    "offline_stream", "online_stream", "open_stream", "regime_classify", "restrict_to_green",
]
