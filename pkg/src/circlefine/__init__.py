"""Multicritical circle maps: partitions, distortion tools, fine grids,
and quasisymmetry experiments."""

__version__ = "0.1.0"
