"""Lexical retrieval, passage reranking and evaluation toolkit."""

from ._core import (
    Bm25Index,
    NGramLm,
    aggregate_article,
    answer_f1,
    evaluate,
    f_beta,
    filter_scored,
    nfc,
    normalize,
    prf,
    remove_stopwords,
    representative_passage_index,
    segment,
    select_indomain,
    select_relevant,
    tokenize,
)

__all__ = [
    "Bm25Index",
    "NGramLm",
    "aggregate_article",
    "answer_f1",
    "evaluate",
    "f_beta",
    "filter_scored",
    "nfc",
    "normalize",
    "prf",
    "remove_stopwords",
    "representative_passage_index",
    "segment",
    "select_indomain",
    "select_relevant",
    "tokenize",
]
