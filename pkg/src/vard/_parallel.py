"""Process-level parallel map gated by the VARD_THREADS environment variable.

Results are collected by index, so the reduction is deterministic whatever
the completion order; any pool failure falls back to the serial path.
"""

from __future__ import annotations

import os

__all__ = ["worker_count", "parallel_map"]


def worker_count() -> int:
    env = os.environ.get("VARD_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            pass
    return os.cpu_count() or 1


def parallel_map(fn, args_list):
    """Map a picklable top-level function over argument tuples."""
    args_list = list(args_list)
    workers = min(worker_count(), len(args_list))
    if workers <= 1:
        return [fn(a) for a in args_list]
    try:
        import concurrent.futures
        import multiprocessing

        ctx = multiprocessing.get_context("fork")
        with concurrent.futures.ProcessPoolExecutor(workers, mp_context=ctx) as ex:
            return list(ex.map(fn, args_list))
    except (ImportError, OSError, ValueError):
        return [fn(a) for a in args_list]
