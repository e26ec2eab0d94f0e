#!/usr/bin/env python3
"""
planlab - plan verification, C*-RASP compilation and plan datasets

Usage: python main.py COMMAND [options]   (python main.py --help)
"""

import os
import sys

# Add the current directory to the path for imports
sys.path.append(os.path.dirname(os.path.abspath(__file__)))

from ui.cli import main  # noqa: E402

if __name__ == "__main__":
    sys.exit(main())
