"""Dual-side machinery: matrix functionals, cb-norms, CP cones, nu, extensions."""

from matreg.duality.bidual import attaining_functional, bidual_check, separating_functional
from matreg.duality.cb import (
    CbNormResult,
    CpResult,
    ExtensionResult,
    PipelineResult,
    arveson_extend,
    corner_map,
    corner_unitization,
    cp_membership,
    dual_cb_norm,
    extension_pipeline,
    psd_completion,
)
from matreg.duality.functional import (
    MatrixFunctional,
    apply,
    extension_apply,
    functional_from_values,
    linear_form,
    offdiag,
)
from matreg.duality.radius import (
    NuResult,
    dilation,
    nu,
    nu_dual,
    phi_value,
    phi_witness,
    selection_pattern,
)

__all__ = [
    "attaining_functional", "bidual_check", "separating_functional", "CbNormResult",
    "CpResult", "ExtensionResult", "PipelineResult", "arveson_extend", "corner_map",
    "corner_unitization", "cp_membership", "dual_cb_norm", "extension_pipeline",
    "psd_completion", "MatrixFunctional", "apply", "extension_apply",
    "functional_from_values", "linear_form", "offdiag", "NuResult", "dilation", "nu",
    "nu_dual", "phi_value", "phi_witness", "selection_pattern",
]
