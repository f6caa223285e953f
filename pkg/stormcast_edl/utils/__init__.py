"""Utility functions for the nowcasting workbench."""

from stormcast_edl.utils.atomic import atomic_write_bytes, atomic_write_json, atomic_write_text

__all__ = ["atomic_write_bytes", "atomic_write_json", "atomic_write_text"]
