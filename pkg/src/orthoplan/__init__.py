"""Deterministic clear-aligner planning pipeline.

Dual-agent tooth-state estimation with confidence-weighted fusion, a
six-category composite biomechanical scoring engine with severity penalties,
and a multi-frame 6-DoF treatment simulator. CPU-only and fully seeded.
"""

__version__ = "0.1.0"
