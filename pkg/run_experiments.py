#!/usr/bin/env python3
"""
Quick run script for the experiment harness
Usage: python run_experiments.py <subcommand> [options]
"""

import sys
from pathlib import Path

# Add project root to path
sys.path.insert(0, str(Path(__file__).parent))

# Import from cdrodeo package
from cdrodeo.cli import main

if __name__ == "__main__":
    sys.exit(main())
