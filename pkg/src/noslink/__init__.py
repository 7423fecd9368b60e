"""Link-level simulation toolkit for learned near-orthogonal superposition
(NOS) coding over block-fading MIMO channels.

Core pieces: a portable learned-codebook format with correlation analysis,
the NOS superposition encoder, a CRC-assisted looped K-best tree-search
decoder, an inference-only neural receiver, and a polar-coded QPSK baseline
with ML MIMO detection -- all driven by a Monte-Carlo PER/BER harness that
is exposed both as a FastAPI service and as a thin-client CLI.
"""

__version__ = "0.1.0"
