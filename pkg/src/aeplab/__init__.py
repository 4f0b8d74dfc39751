"""aeplab: a desk-scale laboratory for output statistics of random codebooks
on discrete memoryless channels.

Core package layout:

- ``channel``: alphabets, distributions, channels, single-letter quantities
- ``typicality``: typicality tests and exact type-class probabilities
- ``codebook``: random codebook generation, statistics, and the binary format
- ``experiments``: the verification harness (equipartition, entropy rates,
  codebook statistics, joint typicality, decoding checks)
- ``relay``: lossless block compression with and without codebook knowledge
- ``service``: FastAPI wrapper exposing the above to clients
- ``cli``: thin command-line client of the service
"""

__version__ = "0.1.0"
