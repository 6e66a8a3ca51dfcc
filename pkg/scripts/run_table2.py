#!/usr/bin/env python3
"""Amplitude sweep at fixed step size, both b2 readings (table2 + figure2).

Pass --b1-reading corrected to see the variant that reproduces the published
exponent column.
"""
import sys

from glmstab.cli import main

if __name__ == "__main__":
    sys.exit(main(["table2", "--out", "out/table2", *sys.argv[1:]]))
