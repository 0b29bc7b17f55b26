"""Tensor autodiff, probability primitives, optimizers and dense layers."""
