"""Python bindings for the structure-induced transformer."""

from ._sit import (
    Run,
    SitError,
    bleu,
    build_graph,
    gen_corpus,
    graph_json,
    lex,
    parse,
    rouge_l,
    sbt,
    train,
)

__all__ = [
    "Run",
    "SitError",
    "bleu",
    "build_graph",
    "gen_corpus",
    "graph_json",
    "lex",
    "parse",
    "rouge_l",
    "sbt",
    "train",
]
