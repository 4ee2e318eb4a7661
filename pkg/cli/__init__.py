"""
Command-line workflows and file formats.
"""
