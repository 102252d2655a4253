"""Corpus manifests, mixture simulation and batching."""
