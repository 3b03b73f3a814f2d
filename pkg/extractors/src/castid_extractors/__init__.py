"""Batch adapters producing CMEB embedding files from images and audio.

The character-identification engine consumes embeddings through CMEB files
only; these scripts sit on the other side of that file boundary and never
import the engine.
"""

__version__ = "0.1.0"
