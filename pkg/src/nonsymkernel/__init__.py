"""Numerical construction and verification of a nonlocal counterexample.

For a non-symmetric kernel of order ``alpha < 1`` comparable to
``|y|^(-n-alpha)``, the package builds coefficients ``a, c`` and a profile
``u`` of ``x_1`` with ``L u = 0`` in the unit ball while ``u`` breaks any
prescribed modulus of continuity at the origin, then checks every claim by
independent quadrature.
"""
from .construction import (ConstructionError, Counterexample, GridSpec, build_counterexample,
                           build_for_r)
from .operators import apply_L, apply_L1, apply_L2, apply_L3, apply_L4, apply_L_direct, extremal
from .params import KernelDescriptor, ProblemParams, ReductionConstants, reduction_constants
from .profiles import (ClampedRamp, HolderWedge, Modulus, SmoothStep, UnitRamp, clamped_ramp,
                       holder_wedge, smooth_step, sum_profiles)
from .quadrature import QuadConfig, QuadResult
from .verify import VerificationReport, VerifyConfig, verify

__all__ = [
    "ConstructionError", "Counterexample", "GridSpec", "build_counterexample", "build_for_r",
    "apply_L", "apply_L1", "apply_L2", "apply_L3", "apply_L4", "apply_L_direct", "extremal",
    "KernelDescriptor", "ProblemParams", "ReductionConstants", "reduction_constants",
    "ClampedRamp", "HolderWedge", "Modulus", "SmoothStep", "UnitRamp", "clamped_ramp",
    "holder_wedge", "smooth_step", "sum_profiles", "QuadConfig", "QuadResult",
    "VerificationReport", "VerifyConfig", "verify",
]
__version__ = "0.1.0"
