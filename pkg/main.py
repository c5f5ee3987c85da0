#!/usr/bin/env python
# -*- coding: utf-8 -*-

"""
Main entry point for the threshold RMAB experiments
"""

import sys

from threshold_rmab.cli import main

if __name__ == '__main__':
    sys.exit(main())
