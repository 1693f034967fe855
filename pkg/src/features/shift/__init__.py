"""
Shift
-----
Description: Trial insertion and overlap removal by sorted single-pass shifting
"""

from .code import Direction, multi_pass_shift, sacs_shift, shift_both_phases, trial_insert

__all__ = ['Direction', 'multi_pass_shift', 'sacs_shift', 'shift_both_phases', 'trial_insert']
