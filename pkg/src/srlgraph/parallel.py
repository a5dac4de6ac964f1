"""Process pool for decoding sentence shards in parallel."""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor

_MODEL = None


def _init(model) -> None:
    global _MODEL
    _MODEL = model


def _decode(args):
    sentences, order, batch_tokens = args
    return _MODEL.decode(sentences, order=order, batch_tokens=batch_tokens, workers=1)


def shards(items: list, k: int) -> list[list]:
    """Split into at most k contiguous, nearly equal, nonempty pieces."""
    k = max(1, min(k, len(items)))
    size, extra = divmod(len(items), k)
    out, start = [], 0
    for i in range(k):
        end = start + size + (1 if i < extra else 0)
        out.append(items[start:end])
        start = end
    return out


def parallel_decode(model, sentences: list, order, batch_tokens: int, workers: int) -> list:
    parts = shards(list(sentences), workers)
    with ProcessPoolExecutor(len(parts), initializer=_init, initargs=(model,)) as pool:
        results = pool.map(_decode, [(p, order, batch_tokens) for p in parts])
        return [s for chunk in results for s in chunk]
