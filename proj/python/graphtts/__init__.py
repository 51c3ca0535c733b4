"""Character-graph TTS toolkit."""

import json

from ._graphtts import (
    ConfigError,
    ConfigMismatch,
    EmptyGraph,
    Model,
    UnknownSymbol,
    graph_dot,
)
from . import _graphtts

__all__ = [
    "ConfigError",
    "ConfigMismatch",
    "EmptyGraph",
    "Model",
    "UnknownSymbol",
    "build_graph",
    "gen_corpus",
    "graph_dot",
    "gradcheck",
    "new_model",
]


def build_graph(text, symbols=None):
    """Graph of `text` as a dict with "nodes" and "edges"."""
    return json.loads(_graphtts.graph_json(text, symbols))


def gen_corpus(config=None, seed=0):
    """Synthetic corpus as a list of {"text", "frames"} dicts."""
    cfg = None if config is None else json.dumps(config)
    lines = _graphtts.corpus_jsonl(cfg, seed).splitlines()
    return [json.loads(line) for line in lines if line]


def new_model(config, symbols):
    return Model(json.dumps(config), symbols)


def gradcheck(config=None, seed=0, eps=1e-5):
    cfg = None if config is None else json.dumps(config)
    return _graphtts.gradcheck(cfg, seed, eps)
