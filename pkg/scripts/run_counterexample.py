#!/usr/bin/env python3
"""Resonant scalar forcing: stable frozen spectra, exponentially growing iterates."""
import sys

from glmstab.cli import main

if __name__ == "__main__":
    sys.exit(main(["counterexample", "--out", "out/counterexample", *sys.argv[1:]]))
