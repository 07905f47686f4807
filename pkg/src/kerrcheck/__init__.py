"""Numerical verification toolkit for the Kerr geometry.

Modules: ``kerr_metric`` (metric and domain checks), ``jets`` (forward-mode
Taylor arithmetic), ``diffgeo`` (connection, curvature, wave operator),
``frames`` (null frames and their transformations), ``horizontal``
(Ricci coefficients, curvature components, sphere tools), ``carter``
(Killing tensor and Carter operator), ``rw_evolver`` (Regge-Wheeler
evolution), ``sampler`` and ``cli``.
"""

from .kerr_metric import BLPoint, DomainError, KerrParams, metric

__all__ = ["BLPoint", "DomainError", "KerrParams", "metric"]
__version__ = "0.1.0"
