"""
Class Refinery
Console entry point
"""
import sys

from refinery.cli import main

if __name__ == "__main__":
    sys.exit(main())
