"""QRES: a marketplace that ranks cloud providers against customer security
requirements without revealing either side's secSLA.

Submodules are imported on demand so that logger configuration and the
first circuit build do not happen at package import time.
"""

__version__ = "0.1.0"

__all__: list[str] = []
