"""
Dense Layers

Fully connected layers and multilayer perceptrons built from Tensor
primitives. Used by the MLP classifier and the VAE encoder/decoder.
"""

from typing import List, Optional, Sequence

import numpy as np

from ..utils.errors import DimensionError
from .probability import SeededRng
from .tensor import Tensor, broadcast_add, matmul, relu


class Dense:
    """Affine map x ↦ xW + b on row batches."""

    def __init__(self, in_dim: int, out_dim: int, rng: Optional[SeededRng] = None,
                 scale: Optional[float] = None):
        """
        Create a layer with He-scaled normal weights and zero bias.

        Args:
            in_dim: Input width
            out_dim: Output width
            rng: Source of the initial weights; zeros when omitted
            scale: Weight standard deviation, default √(2 / in_dim)
        """
        self.in_dim = in_dim
        self.out_dim = out_dim
        std = np.sqrt(2.0 / in_dim) if scale is None else scale
        init = rng.normal((in_dim, out_dim)) * std if rng is not None else np.zeros((in_dim, out_dim))
        self.weight = Tensor(init, requires_grad=True, name="weight")
        self.bias = Tensor(np.zeros(out_dim), requires_grad=True, name="bias")

    def __call__(self, x: Tensor) -> Tensor:
        if x.shape[-1] != self.in_dim:
            raise DimensionError(f"dense layer expects width {self.in_dim}, got {x.shape[-1]}")
        return broadcast_add(matmul(x, self.weight), self.bias)

    def parameters(self) -> List[Tensor]:
        return [self.weight, self.bias]


class Mlp:
    """Stack of Dense layers with relu between them and no output activation."""

    def __init__(self, sizes: Sequence[int], rng: Optional[SeededRng] = None):
        if len(sizes) < 2:
            raise DimensionError(f"an MLP needs at least input and output widths, got {sizes}")
        self.sizes = [int(s) for s in sizes]
        self.layers = [
            Dense(self.sizes[i], self.sizes[i + 1], rng.stream(f"layer{i}") if rng else None)
            for i in range(len(self.sizes) - 1)
        ]

    def __call__(self, x: Tensor) -> Tensor:
        h = x
        for i, layer in enumerate(self.layers):
            h = layer(h)
            if i < len(self.layers) - 1:
                h = relu(h)
        return h

    def parameters(self) -> List[Tensor]:
        params: List[Tensor] = []
        for layer in self.layers:
            params.extend(layer.parameters())
        return params

    def freeze(self) -> None:
        """Stop tracking gradients for every weight."""
        for p in self.parameters():
            p.requires_grad = False
            p.grad = None
