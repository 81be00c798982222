#!/usr/bin/env python3
"""
Down-up chains on leaf-labelled binary trees.
Command-line entry point; see ``downup --help`` for the subcommands.
"""

import sys

from src.cli import main

if __name__ == "__main__":
    sys.exit(main())
