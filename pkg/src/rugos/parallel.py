"""Worker-count control for the numba kernels."""

import os
from contextlib import contextmanager

import numba

ENV_THREADS = "RUGOS_THREADS"


def max_workers():
    return numba.config.NUMBA_NUM_THREADS


def default_workers():
    """Worker count from ``RUGOS_THREADS``, else every available thread."""
    env = os.environ.get(ENV_THREADS)
    if env:
        try:
            return max(1, min(int(env), max_workers()))
        except ValueError:
            raise ValueError(f"{ENV_THREADS} must be an integer, got {env!r}") from None
    return max_workers()


def set_workers(n):
    n = max(1, min(int(n), max_workers()))
    numba.set_num_threads(n)
    return n


@contextmanager
def worker_count(n):
    """Temporarily run kernels on ``n`` threads (``None`` leaves it alone)."""
    if n is None:
        yield numba.get_num_threads()
        return
    previous = numba.get_num_threads()
    try:
        yield set_workers(n)
    finally:
        numba.set_num_threads(previous)
