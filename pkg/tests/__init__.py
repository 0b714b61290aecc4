"""
Test package for guidec.
"""
