"""Inexact accelerated stochastic ADMM for ``min f(x) + g(y)  s.t.  Ax + By = b``."""

__version__ = "0.1.0"
