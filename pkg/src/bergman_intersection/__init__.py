"""Numerical experiments on Bergman projections over intersections of domains.

Modules: ``geometry`` (the lens and its conformal map, Reinhardt pieces),
``quadrature``, ``bergman`` (kernels and projections), ``regularity``
(Sobolev norms and corner blow-up), ``hankel`` (moments and Hilbert-Schmidt
sums) and ``pproperty`` (exceptional points and plurisubharmonic distances).
"""
__version__ = "0.1.0"

from .errors import *  # noqa: F401,F403
from .geometry import DomainId, LensMap, contains, lens_map, lens_map_deriv, lens_map_inverse
from .quadrature import QuadratureSpec, integrate_disc, integrate_lens, integrate_radial_improper
from .bergman import (
    BumpSpec, bergman_project, chi, disc_kernel, lens_kernel, product_kernel, projection_constant,
)
from .regularity import NormSpec, Verdict, divergence_probe, lp_norm, sobolev_norm_sq
from .hankel import MomentTable, admissible, build_table, hs_partial_sum, moment
from .pproperty import (
    complex_hessian, distance_sq, exceptional_points, psh_certify, sample_intersection,
)

__all__ = [
    "DomainId", "LensMap", "contains", "lens_map", "lens_map_deriv", "lens_map_inverse",
    "QuadratureSpec", "integrate_disc", "integrate_lens", "integrate_radial_improper",
    "BumpSpec", "bergman_project", "chi", "disc_kernel", "lens_kernel", "product_kernel",
    "projection_constant",
    "NormSpec", "Verdict", "divergence_probe", "lp_norm", "sobolev_norm_sq",
    "MomentTable", "admissible", "build_table", "hs_partial_sum", "moment",
    "complex_hessian", "distance_sq", "exceptional_points", "psh_certify", "sample_intersection",
]
