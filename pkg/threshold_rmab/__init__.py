"""
Restless multi-armed bandit cost minimization under a reward threshold
"""

__version__ = "0.1.0"
