"""
FOP
---
Description: Insertion point enumeration and the optimal target position
"""

from .code import FopResult, InsertionPoint, enumerate_insertion_points, find_optimal_position

__all__ = ['FopResult', 'InsertionPoint', 'enumerate_insertion_points', 'find_optimal_position']
