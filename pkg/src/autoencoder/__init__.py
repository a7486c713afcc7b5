from .network import (
    AEParams,
    Gradients,
    backward,
    encode,
    forward,
    init_kaiming,
    load_checkpoint,
    loss,
    save_checkpoint,
)
from .trainer import AdamState, PlateauScheduler, adam_step, encode_song, train

__all__ = [
    "AEParams",
    "Gradients",
    "backward",
    "encode",
    "forward",
    "init_kaiming",
    "load_checkpoint",
    "loss",
    "save_checkpoint",
    "AdamState",
    "PlateauScheduler",
    "adam_step",
    "encode_song",
    "train",
]
