"""Order-preserving thread pool capped by the ``ROUGHFLOW_THREADS`` variable."""

from __future__ import annotations

import os
from collections.abc import Callable, Iterable
from concurrent.futures import ThreadPoolExecutor
from typing import TypeVar

from .errors import InputError

T = TypeVar("T")
R = TypeVar("R")

ENV_VAR = "ROUGHFLOW_THREADS"


def thread_cap() -> int:
    raw = os.environ.get(ENV_VAR)
    if raw is None or raw.strip() == "":
        return max(1, min(8, os.cpu_count() or 1))
    try:
        value = int(raw)
    except ValueError as exc:
        raise InputError(f"{ENV_VAR} must be a positive integer, got {raw!r}") from exc
    if value < 1:
        raise InputError(f"{ENV_VAR} must be a positive integer, got {raw!r}")
    return value


def pmap(fn: Callable[[T], R], items: Iterable[T]) -> list[R]:
    """``[fn(x) for x in items]``, possibly evaluated concurrently; result order is fixed."""
    items = list(items)
    workers = min(thread_cap(), len(items))
    if workers <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))
