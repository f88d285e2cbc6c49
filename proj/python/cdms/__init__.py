"""Shape sensing for a continuum dexterous manipulator from FBG wavelength shifts."""

from ._cdms import (
    N_FEATURES,
    N_MARKERS,
    N_SEGMENTS,
    CdmsError,
    Mlp,
    adam_update,
    common_mode_correct,
    constrained_bend,
    default_config,
    eval,
    free_bend_curvature,
    gen,
    gradient_check,
    infer,
    sensor_features,
    shape,
    spearman,
    strain_from_shift,
    tip_angle,
    train,
    wavelength_shift,
)

__all__ = [
    "N_FEATURES",
    "N_MARKERS",
    "N_SEGMENTS",
    "CdmsError",
    "Mlp",
    "adam_update",
    "common_mode_correct",
    "constrained_bend",
    "default_config",
    "eval",
    "free_bend_curvature",
    "gen",
    "gradient_check",
    "infer",
    "sensor_features",
    "shape",
    "spearman",
    "strain_from_shift",
    "tip_angle",
    "train",
    "wavelength_shift",
]
