"""Differential calculus on persistence barcodes.

Sublevel-set persistence with simplex-pairing templates, local lifts of
barcode-valued maps, losses on ordered barcodes, and gradient descent on
filtration parameters.
"""
from ._kernels import BACKEND
from .barcode_space import bottleneck, bottleneck_matching, quotient, wasserstein, wasserstein_matching
from .barcodes import Barcode, OrderedBarcode
from .complex import (
    FilterFunction,
    PreorderSignature,
    SimplicialComplex,
    build_complex,
    gap_radius,
    ordering_equivalent,
    preorder,
    validate_filter,
)
from .differential import (
    BarcodeDifferential,
    Lift,
    build_lift,
    chain_rule,
    differential,
    directional_derivative,
    taylor_remainder_check,
)
from .errors import *  # noqa: F401,F403
from .losses import (
    GaussianImageSpec,
    Scalarized,
    WeightingFunction,
    bottleneck_to,
    linear_representation,
    persistence_image,
    total_persistence,
    wasserstein_to,
)
from .optimizer import LossTerm, OptimizationProblem, SupNormRegularizer, Trace, run, step
from .parametrizations import distance_to_point, ellipsoid_rips, height, lower_star, raw_filter, rips
from .persistence import BarcodeTemplate, TotalBarcodeTemplate, barcode_template, diagram, diagrams, perm_lift, total_template

__version__ = "0.1.0"
