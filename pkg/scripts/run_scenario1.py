"""Sweep the task complexity ratio (10 experiments)."""
import sys

from run_sweep import main

if __name__ == "__main__":
    sys.exit(main(["scenario1", *sys.argv[1:]]))
