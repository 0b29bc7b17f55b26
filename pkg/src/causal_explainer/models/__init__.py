"""Classifier handles and generative maps."""
