"""Model sidecar: a small HTTP service speaking the retrieval engine's
provider wire contract (/embed_text, /embed_image, /summarize, /classify,
/health)."""

__version__ = "0.1.0"

TEXT_DIM = 1024
VISUAL_DIM = 768
