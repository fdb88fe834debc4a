from .layers import ACTIVATIONS, BatchNorm, Dense, Dropout, Network, Tape, glorot_uniform, sigmoid
from .losses import BCE_CLAMP, LOSS_KINDS, binary_cross_entropy, loss, mse
from .optim import Adam, AdamParams
from .serialize import (FORMAT_HEADER, dumps_network, load_network, loads_network,
                        save_network)

__all__ = [
    "ACTIVATIONS", "BatchNorm", "Dense", "Dropout", "Network", "Tape",
    "glorot_uniform", "sigmoid", "BCE_CLAMP", "LOSS_KINDS",
    "binary_cross_entropy", "loss", "mse", "Adam", "AdamParams",
    "FORMAT_HEADER", "dumps_network", "load_network", "loads_network",
    "save_network",
]
