"""Python bindings for the vigraph C++ core."""

import json as _json

from ._core import (
    Graph,
    Model,
    VigraphError,
    compute_metrics,
    construct_scenario,
    default_config,
    embed,
    kl_standard_normal,
    load_dataset,
    save_dataset,
    siamese_contrastive_loss,
    structure_reconstruction_loss,
)
from ._core import generate as _generate
from ._core import resolve_config as _resolve_config
from ._core import run_pipeline as _run_pipeline
from ._core import train as _train


def _config_text(config):
    if config is None:
        return ""
    return config if isinstance(config, str) else _json.dumps(config)


def resolve_config(config):
    """Defaults with `config` (dict or JSON text) applied; raises on schema violations."""
    return _resolve_config(_config_text(config))


def train(graph, config=None, seed=0):
    """Train the VGAE; returns (model, history csv text)."""
    return _train(graph, _config_text(config), seed)


def generate(model, graph, scenario, seed=0):
    """Sample minority latents; returns (latents, class ids, source nodes)."""
    text = scenario if isinstance(scenario, str) else _json.dumps(scenario)
    return _generate(model, graph, text, seed)


def run_pipeline(graph, lam, mode="rigorous", seeds=(0,), config=None, dataset="graph"):
    """Construct, train, generate and evaluate; returns the report dict."""
    return _run_pipeline(graph, lam, mode, list(seeds), _config_text(config), dataset)


__all__ = [
    "Graph",
    "Model",
    "VigraphError",
    "compute_metrics",
    "construct_scenario",
    "default_config",
    "embed",
    "generate",
    "kl_standard_normal",
    "load_dataset",
    "resolve_config",
    "run_pipeline",
    "save_dataset",
    "siamese_contrastive_loss",
    "structure_reconstruction_loss",
    "train",
]
