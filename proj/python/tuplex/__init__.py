"""Two-stage multi-tuple extraction: pointer-network entity spans, then
attention-based allocation into (material, property, value, condition,
condition value) tuples."""

import json as _json

from . import _tuplex
from ._tuplex import TuplexError, decode_spans, f1_score, read_embeddings

__version__ = _tuplex.__version__

__all__ = [
    "TuplexError",
    "canonicalize",
    "corpus_stats",
    "decode_spans",
    "embed_synthetic",
    "evaluate",
    "extract",
    "f1_score",
    "generate_corpus",
    "read_embeddings",
    "run",
    "select",
    "train_allocator",
    "train_extractor",
]


def _text(doc):
    return doc if isinstance(doc, str) else _json.dumps(doc, default=str)


def generate_corpus(n_sentences, seed, **options):
    return _json.loads(_tuplex.generate_corpus(n_sentences, seed, **options))


def canonicalize(corpus):
    """Validated corpus in canonical JSON form (a string)."""
    return _tuplex.canonicalize(_text(corpus))


def corpus_stats(corpus):
    stats = _json.loads(_tuplex.corpus_stats(_text(corpus)))
    stats["by_count"] = {int(k): v for k, v in stats["by_count"].items()}
    return stats


def select(corpus, selector, seed=0):
    return _json.loads(_tuplex.select(_text(corpus), str(selector), seed))


def embed_synthetic(corpus, path, dim=32, seed=0):
    return _tuplex.embed_synthetic(_text(corpus), str(path), dim, seed)


def train_extractor(corpus, embeddings, seed, **hyper):
    return _json.loads(_tuplex.train_extractor(_text(corpus), str(embeddings), seed, **hyper))


def train_allocator(corpus, embeddings, seed, lambda_=1.2, **hyper):
    return _json.loads(_tuplex.train_allocator(_text(corpus), str(embeddings), seed, lambda_=lambda_, **hyper))


def extract(corpus, embeddings, extractor, allocator, threads=1):
    return _json.loads(
        _tuplex.extract(_text(corpus), str(embeddings), _text(extractor), _text(allocator), threads)
    )


def evaluate(gold, predictions, dataset="all", config="default"):
    return _json.loads(_tuplex.evaluate(_text(gold), _text(predictions), dataset, config))


def run(command, config):
    """Runs one command line subcommand with `config` (a dict in the
    --config file layout); returns its log output."""
    return _tuplex.run(command, _text(config))
