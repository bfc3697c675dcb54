"""Decide every corpus formula (and the variants) and print a verdict table."""
import sys

from rdfplus.cli import run

if __name__ == "__main__":
    sys.exit(run(["--mode", "corpus", "--variants", *sys.argv[1:]]))
