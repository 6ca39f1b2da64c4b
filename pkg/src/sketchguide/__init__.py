"""Real-time drawing guidance engine.

Turns an in-progress sketch plus a text prompt into four refined guidance
sketches per drawing round: a similarity gate decides whether a stroke is
worth a generation round, a stream-batched few-step denoising pipeline
produces candidate images through a pluggable neural backend, and an
edge-preserving recursive filter refines the extracted line drawings.
"""

__version__ = "0.1.0"
