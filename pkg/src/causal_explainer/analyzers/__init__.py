"""Causal-influence estimators, exact discrete references and explanation analyses."""
