"""Code generation for shift-invariant spline reconstruction spaces.

The package turns a declarative description of a reconstruction space
(lattice cosets, region of evaluation, BSP sub-regions, reference
polynomials) into verified SSA programs with software-pipelined memory
fetches, interprets them, emits them as LLVM assembly, checks them against
independent oracles, and sweeps the scheduling parameter space.
"""

from .codegen import GenConfig, generate
from .emit import emit_text, validate_text
from .ir import DataVolume, interpret, interpret_batch
from .model import (
    SplineSpace,
    load_fixture,
    load_space,
    parse_space,
    serialize_space,
    validate_space,
)
from .oracle import basis_from_delta, convolution_eval, reference_eval
from .poly import Poly, group_polynomial, horner_factorize, poly_eval
from .schedule import EvalPlan, ScheduleParams, schedule_pipeline

__all__ = [
    "DataVolume",
    "EvalPlan",
    "GenConfig",
    "Poly",
    "ScheduleParams",
    "SplineSpace",
    "basis_from_delta",
    "convolution_eval",
    "emit_text",
    "generate",
    "group_polynomial",
    "horner_factorize",
    "interpret",
    "interpret_batch",
    "load_fixture",
    "load_space",
    "parse_space",
    "poly_eval",
    "reference_eval",
    "schedule_pipeline",
    "serialize_space",
    "validate_space",
    "validate_text",
]

__version__ = "0.1.0"
