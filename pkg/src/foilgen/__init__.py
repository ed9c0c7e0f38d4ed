"""Diffusion-model airfoil generation with a panel-method evaluator."""

__version__ = "0.1.0"
