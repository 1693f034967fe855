"""
Ordering
--------
Description: Pre-move and the sliding-window target order
"""

from .code import OrderState, initial_order, next_target, pre_move

__all__ = ['OrderState', 'initial_order', 'next_target', 'pre_move']
