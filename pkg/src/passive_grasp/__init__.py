"""Passive stability analysis of preloaded multi-fingered grasps."""

__version__ = "0.1.0"
