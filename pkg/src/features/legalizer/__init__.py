"""
Legalizer
---------
Description: The legalization loop and its configuration
"""

from .code import RunReport, legalize
from .config import LegalizeConfig, load_config

__all__ = ['RunReport', 'legalize', 'LegalizeConfig', 'load_config']
