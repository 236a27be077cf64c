"""
Sweep planning
"""
