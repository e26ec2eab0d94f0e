# ui/__init__.py
"""
Command line interface for planlab
"""
