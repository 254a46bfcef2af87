#!/usr/bin/env python3
"""
Minimum Kullback entropy estimator
Estimates quantum states and weak processes from a prior state and measured data.
"""

from src.cli import main

if __name__ == '__main__':
    main()
