"""Double-barrier knock-out pricing under regime-switching Levy models with memory."""

__version__ = "0.1.0"

from .models import (
    BrownianDrift,
    KouJumpDiffusion,
    KoBoL,
    LevyModel,
    char_exponent,
    analyticity_strip,
)
from .histories import HistoryIndex, MemoryChain, enumerate_histories, shift

__all__ = [
    "BrownianDrift",
    "KouJumpDiffusion",
    "KoBoL",
    "LevyModel",
    "char_exponent",
    "analyticity_strip",
    "HistoryIndex",
    "MemoryChain",
    "enumerate_histories",
    "shift",
]
