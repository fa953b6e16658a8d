"""Layer library and architectures."""
from freqgan.nn.layers import (
    BatchNorm, Conv, Linear, Module, ResBlock, SNConv, frozen, set_power_iteration, sn_normalize,
)
