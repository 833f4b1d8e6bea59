"""Hierarchical multimodal retrieval engine.

Builds a summary tree over fused text+visual chunk embeddings, routes
queries to one of three retrieval strategies by classification entropy,
and adapts strategy preference from feedback via an exponential moving
average.
"""

__version__ = "0.1.0"

TEXT_DIM = 1024
VISUAL_DIM = 768
