"""
QIPA Separation Lab - exact desk-scale checks of iterative power algorithm bounds.
"""

__version__ = "0.1.0"
