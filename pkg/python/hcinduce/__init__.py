"""
Class hierarchy induction and hierarchical classification for flat-labeled
multi-class data.
"""

import logging

try:
    from ._version import version as __version__
except ImportError:  # not installed through setuptools_scm
    __version__ = "0.0.0.dev0"


log = logging.getLogger(__name__)

SCHEME_KINDS = ("fc", "global", "lcpn", "lcpn_plus", "lcpn_plus_f")
HC_SCHEME_KINDS = SCHEME_KINDS[1:]


class DataError(Exception):
    pass


class NumericError(ArithmeticError):
    pass
