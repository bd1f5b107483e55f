"""Compare the exact solvers with exhaustive enumeration on small random instances."""
import sys

from fogopt.cli import main

if __name__ == "__main__":
    sys.exit(main(["compare", *sys.argv[1:]]))
