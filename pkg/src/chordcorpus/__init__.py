"""Playable two-hand piano chord corpus: generation, statistics, analysis."""

from .analysis import (
    DesignMatrix,
    OLSFit,
    RegressionReport,
    SingularDesignError,
    fit_ols,
    permutation_test,
    residualize,
    run_two_model_protocol,
    stratified_sample_indices,
)
from .chords import (
    HAND_SPAN,
    KEYBOARD_HIGH,
    KEYBOARD_LOW,
    MAX_NOTES,
    HandAssignment,
    Voicing,
    hand_assignment,
    is_playable,
    midi_to_frequency,
)
from .corpus_io import (
    CorpusFormatError,
    CorpusRecord,
    HashMismatchError,
    HeaderMismatchError,
    MalformedRowError,
    read_shards,
    write_shards,
)
from .features import (
    VoicingFeatures,
    compute_features,
    compute_icv,
    compute_moments,
)
from .generate import (
    ExhaustionError,
    GenerationConfig,
    count_exhaustive,
    enumerate_exhaustive,
    generate_corpus,
    sample_monte_carlo,
)
from .psycho import (
    build_dissonance_matrix,
    chord_dissonance,
    harmonicity,
    pl_pair_dissonance,
)

__version__ = "0.1.0"

__all__ = [
    "CorpusFormatError",
    "CorpusRecord",
    "DesignMatrix",
    "ExhaustionError",
    "GenerationConfig",
    "HAND_SPAN",
    "HandAssignment",
    "HashMismatchError",
    "HeaderMismatchError",
    "KEYBOARD_HIGH",
    "KEYBOARD_LOW",
    "MAX_NOTES",
    "MalformedRowError",
    "OLSFit",
    "RegressionReport",
    "SingularDesignError",
    "Voicing",
    "VoicingFeatures",
    "build_dissonance_matrix",
    "chord_dissonance",
    "compute_features",
    "compute_icv",
    "compute_moments",
    "count_exhaustive",
    "enumerate_exhaustive",
    "fit_ols",
    "generate_corpus",
    "hand_assignment",
    "harmonicity",
    "is_playable",
    "midi_to_frequency",
    "permutation_test",
    "pl_pair_dissonance",
    "read_shards",
    "residualize",
    "run_two_model_protocol",
    "sample_monte_carlo",
    "stratified_sample_indices",
    "write_shards",
]
