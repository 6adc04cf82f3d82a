"""Tri-view geo-retrieval toolkit.

Builds aligned drone/street/satellite datasets from georeferenced rasters,
trains a text-bridged contrastive alignment objective at desk scale, and
evaluates cross-view retrieval with the full metric suite.
"""

__version__ = "0.1.0"
