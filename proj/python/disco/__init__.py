"""Disentangled intent contrastive learning for cold-start cross-domain recommendation."""

import json as _json

from . import _core
from ._core import (
    DiscoError,
    affinity_matrix,
    baseline,
    batch_intent_similarity,
    edge_coefficients,
    elbo,
    generate_synthetic,
    gradcheck,
    intent_prior,
    inter_loss,
    intra_loss,
    log_marginal,
    orthogonality_loss,
    pairwise_softmax,
    prepare,
    probability,
    rank_candidates,
    ranking_metrics,
    rec_loss,
    score,
    total_loss,
    variational_posterior,
    walk_targets,
)

__all__ = [
    "DiscoError",
    "affinity_matrix",
    "baseline",
    "batch_intent_similarity",
    "default_config",
    "edge_coefficients",
    "elbo",
    "evaluate",
    "generate_synthetic",
    "gradcheck",
    "intent_prior",
    "inter_loss",
    "intra_loss",
    "log_marginal",
    "orthogonality_loss",
    "pairwise_softmax",
    "prepare",
    "probability",
    "rank_candidates",
    "ranking_metrics",
    "rec_loss",
    "score",
    "total_loss",
    "train",
    "variational_posterior",
    "walk_targets",
]


def default_config():
    """Default training configuration as a dict."""
    return _json.loads(_core.default_config())


def train(data_dir, out_dir, config=None, resume=False):
    """Train on a prepared data directory; returns the training report dict.

    ``config`` overrides defaults key by key; unknown keys raise DiscoError.
    """
    text = _json.dumps(config) if config else ""
    return _json.loads(_core.train(text, str(data_dir), str(out_dir), resume))


def evaluate(ckpt_dir, data_dir, direction="s2t", negatives=-1, k=-1, validation=False):
    """Cold-start HR/NDCG of a checkpoint; negatives and k default to the checkpoint config."""
    return _core.evaluate(str(ckpt_dir), str(data_dir), direction, negatives, k, validation)
