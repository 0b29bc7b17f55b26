"""Explainer configuration, training and parameter selection."""
