# utils/__init__.py
"""
Utility modules for planlab: logging, configuration and file access
"""

import os
from pathlib import Path


def planlab_home():
    """Directory holding config.json and logs (PLANLAB_HOME overrides ~/.planlab)"""
    override = os.environ.get('PLANLAB_HOME')
    if override:
        return Path(override)
    return Path.home() / '.planlab'
