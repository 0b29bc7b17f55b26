"""
Causal Explainer

Learns generative causal explanations of black-box classifiers: a generative
map whose causal latent factors carry the information the classifier's
output depends on, while the remaining factors reproduce the data.
"""

__version__ = "0.1.0"
__author__ = "Causal Explainer Team"
