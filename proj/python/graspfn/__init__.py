"""Grasp functions over a planar pose grid."""

from ._core import *  # noqa: F401,F403

__version__ = "0.1.0"
