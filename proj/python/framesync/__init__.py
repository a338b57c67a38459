"""Video stream synchronization from per-frame embeddings."""

from ._core import (
    EmbeddingSequence,
    EvalReport,
    LabeledPair,
    ModelParams,
    SimilarityMatrix,
    SyncPrediction,
    SynthConfig,
    abs_frame_error,
    add_positional_bias,
    adjust_extreme,
    aggregate_report,
    deserialize_model,
    dtw_path,
    extract_pixel_features,
    gen_fair_corpus,
    gen_latent_pair,
    gen_positional_biased_pair,
    inject_offset_fair,
    inject_offset_leaky,
    noise_substitute,
    pad_to_square,
    pairwise_neg_l2,
    predict_argmax,
    predict_dtw,
    predict_learned,
    predict_naive,
    read_eseq,
    read_manifest,
    render_pgm,
    row_softmax,
    run_benchmark,
    run_bias_experiment,
    run_duration_sweep,
    sample_offset,
    serialize_model,
    sliding_window_pool,
    train_classifier,
    write_eseq,
    write_manifest,
)

__version__ = "1.0.0"

__all__ = [
    "EmbeddingSequence",
    "EvalReport",
    "LabeledPair",
    "ModelParams",
    "SimilarityMatrix",
    "SyncPrediction",
    "SynthConfig",
    "abs_frame_error",
    "add_positional_bias",
    "adjust_extreme",
    "aggregate_report",
    "deserialize_model",
    "dtw_path",
    "extract_pixel_features",
    "gen_fair_corpus",
    "gen_latent_pair",
    "gen_positional_biased_pair",
    "inject_offset_fair",
    "inject_offset_leaky",
    "noise_substitute",
    "pad_to_square",
    "pairwise_neg_l2",
    "predict_argmax",
    "predict_dtw",
    "predict_learned",
    "predict_naive",
    "read_eseq",
    "read_manifest",
    "render_pgm",
    "row_softmax",
    "run_benchmark",
    "run_bias_experiment",
    "run_duration_sweep",
    "sample_offset",
    "serialize_model",
    "sliding_window_pool",
    "train_classifier",
    "write_eseq",
    "write_manifest",
]
