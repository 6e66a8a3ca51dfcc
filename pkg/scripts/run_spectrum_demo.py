#!/usr/bin/env python3
"""Full QR-trail spectrum of the discrete transitions, with continuous oracle."""
import sys

from glmstab.cli import main

if __name__ == "__main__":
    sys.exit(main([
        "spectrum", "--h", "0.075", "--tfinal", "40", "--mode", "frame",
        "--oracle-h", "0.001", "--out", "out/spectrum", *sys.argv[1:],
    ]))
