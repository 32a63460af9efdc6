"""
Tests for the QIPA Separation Lab.
"""
