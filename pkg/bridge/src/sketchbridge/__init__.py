"""Protocol server wrapping model inference behind the tensor wire format.

The bridge answers the five capability ops (encode_prompt, vae_encode,
vae_decode, predict_noise, extract_lines) over length-prefixed binary
frames. Real checkpoints are deployment configuration; the built-in
"reference" adapters are deterministic numeric stand-ins that pin the
protocol for conformance testing.
"""

__version__ = "0.1.0"
