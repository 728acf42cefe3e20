"""Python interface to the hear core library.

Structured values cross the boundary as JSON text; the helpers below parse
them into plain Python objects.
"""

import json

from . import _hear
from ._hear import (
    SCHEMA_VERSION,
    FormatError,
    config_hash,
    corruption_stats,
    macro_f1,
    normalize_model,
    render_report,
    select_threshold,
)

__all__ = [
    "SCHEMA_VERSION",
    "FormatError",
    "config_hash",
    "corrupt_corpus",
    "corruption_stats",
    "default_config",
    "evaluate",
    "generate_corpus",
    "generate_environments",
    "generate_suite",
    "macro_f1",
    "normalize_model",
    "parse_jsonl",
    "render_report",
    "run_experiment",
    "select_threshold",
    "train",
]


def parse_jsonl(text, expected_format=None):
    """Returns (header, records) of a hear JSONL document."""
    lines = [json.loads(line) for line in text.splitlines() if line.strip()]
    if not lines:
        raise FormatError("empty document")
    header = lines[0]
    if expected_format is not None and header.get("format") != expected_format:
        raise FormatError(f"expected {expected_format}, got {header.get('format')}")
    return header, lines[1:]


def _config_text(config):
    if config is None:
        return ""
    return config if isinstance(config, str) else json.dumps(config)


def default_config():
    return json.loads(_hear.default_config())


def generate_environments(seed, count, config=None):
    return _hear.generate_environments(seed, count, _config_text(config))


def generate_corpus(seed, environments, routes_per_env):
    """(environments JSONL, corpus JSONL)."""
    return _hear.generate_corpus(seed, environments, routes_per_env)


def corrupt_corpus(environments, corpus, rates=None, seed=0):
    """Corrupts a corpus; rates=None uses the calibrated defaults."""
    if rates is None:
        return _hear.corrupt_corpus(environments, corpus, {}, seed, True)
    return _hear.corrupt_corpus(environments, corpus, dict(rates), seed, False)


def generate_suite(out_dir, config=None):
    _hear.generate_suite(_config_text(config), str(out_dir))


def train(data_dir, out_dir):
    _hear.train(str(data_dir), str(out_dir))


def evaluate(data_dir, models_dir):
    return json.loads(_hear.evaluate(str(data_dir), str(models_dir)))


def run_experiment(config=None):
    return json.loads(_hear.run_experiment(_config_text(config)))
