"""
ccnp-lab: contrastive conditional neural processes at desk scale.
"""

__version__ = "1.0.0"
