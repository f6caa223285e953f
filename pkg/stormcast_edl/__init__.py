"""Evidential storm nowcasting workbench with ensemble and MC-dropout baselines."""

__version__ = "0.1.0"
