"""Python bindings for the maldyn behavior-log toolkit."""

from ._maldyn import (
    Action,
    BehaviorLog,
    Error,
    MalImage,
    TokenText,
    bleu,
    cosine_sim,
    hybrid_similarity,
    image_similarity,
    js_div,
    kl_div,
    load_log,
    parse_log,
    run_cli,
    sample_to_image,
    serialize_tokens,
    synthetic_corpus,
    text_similarity,
    to_pgm,
    to_token_text,
    to_xml,
    wasserstein_1d,
    write_synthetic_corpus,
)

__all__ = [name for name in dir() if not name.startswith("_")]
