#!/usr/bin/env python3
"""Order check: global error and restart-defect slopes for each tableau."""
import sys

from glmstab.cli import main

if __name__ == "__main__":
    code = 0
    for method in ("bdf2", "ab2", "be"):
        code |= main(["converge", "--method", method,
                      "--out", f"out/converge_{method}", *sys.argv[1:]])
    sys.exit(code)
