"""Checkpoints and result export."""
