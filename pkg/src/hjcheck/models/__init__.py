"""Constructors for the built-in model families."""

from hjcheck.models.canonical import (
    CanonicalModel,
    build_canonical,
    canonical_bivector,
    closed_form_check,
    legendre,
    legendre_inv,
)
from hjcheck.models.extended import (
    ForcedModel,
    TimeDependentModel,
    build_forced,
    build_time_dependent,
    forced_section_check,
    mu_relatedness_defect,
    tdep_hj_check,
)
from hjcheck.models.nonholonomic import (
    NonholonomicModel,
    build_nonholonomic,
    nh_hj_check,
    nh_section_check,
    nonholonomic_particle,
)
from hjcheck.models.registry import REGISTRY, Model, build_model

__all__ = [
    "CanonicalModel",
    "ForcedModel",
    "Model",
    "NonholonomicModel",
    "REGISTRY",
    "TimeDependentModel",
    "build_canonical",
    "build_forced",
    "build_model",
    "build_nonholonomic",
    "build_time_dependent",
    "canonical_bivector",
    "closed_form_check",
    "forced_section_check",
    "legendre",
    "legendre_inv",
    "mu_relatedness_defect",
    "nh_hj_check",
    "nh_section_check",
    "nonholonomic_particle",
    "tdep_hj_check",
]
