"""Threshold additive homomorphic aggregation toolkit.

Additive BFV/CKKS over an RNS polynomial ring, their L-out-of-L threshold
variants with smudging-noise countermeasures, an exact-arithmetic parameter
planner, and a simulated federated private-average aggregation protocol.
"""

__version__ = "0.1.0"
