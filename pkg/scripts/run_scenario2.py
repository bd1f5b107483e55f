"""Sweep the deadline from 2 s to 10 s (9 experiments)."""
import sys

from run_sweep import main

if __name__ == "__main__":
    sys.exit(main(["scenario2", *sys.argv[1:]]))
