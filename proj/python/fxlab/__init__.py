"""Guitar effect synthesis, mel features and recognition networks."""

from ._fxlab import (
    CLIP_SAMPLES,
    EFFECTS,
    SAMPLE_RATE,
    FxlabError,
    Model,
    binomial_two_sided_p,
    controls,
    discrete_grid,
    featurize,
    generate_dataset,
    normalize_peak,
    process,
    read_wav,
    settings_accuracy,
    skewness,
    synth_note,
    train,
    write_wav,
)

__all__ = [
    "CLIP_SAMPLES",
    "EFFECTS",
    "SAMPLE_RATE",
    "FxlabError",
    "Model",
    "binomial_two_sided_p",
    "controls",
    "discrete_grid",
    "featurize",
    "generate_dataset",
    "normalize_peak",
    "process",
    "read_wav",
    "settings_accuracy",
    "skewness",
    "synth_note",
    "train",
    "write_wav",
]
