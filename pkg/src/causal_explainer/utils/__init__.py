"""Utility modules for logging, errors and report templates."""
