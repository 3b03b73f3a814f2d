"""Character identification from a cast list over precomputed embeddings."""

__version__ = "0.1.0"
