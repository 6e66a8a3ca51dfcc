#!/usr/bin/env python3
"""Step-size sweep on the rotating-cosine problem (table1 + figure1 CSVs)."""
import sys

from glmstab.cli import main

if __name__ == "__main__":
    sys.exit(main(["table1", "--out", "out/table1", *sys.argv[1:]]))
