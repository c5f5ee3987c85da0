"""
Utility modules for the threshold RMAB toolkit
"""
