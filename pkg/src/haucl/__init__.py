"""Hypergraph autoencoder and contrastive fusion for emotion recognition in conversation."""

__version__ = "0.1.0"
