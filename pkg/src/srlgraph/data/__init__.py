"""Bundled toy corpus (50 training and 10 held-out sentences, column format) and its config."""

from __future__ import annotations

from importlib import resources

TRAIN = "toy_train.txt"
DEV = "toy_dev.txt"
CONFIG = "toy.cfg"


def path(name: str):
    return resources.files(__name__) / name


def load(name: str):
    from ..io import read_corpus

    with resources.as_file(path(name)) as p:
        return read_corpus(p)
