"""Order-preserving replicate parallelism.

Replicates draw from per-replicate sub-streams, so their results do not
depend on scheduling; this helper just fans a pure function over argument
tuples and returns results in input order, which keeps every downstream
aggregate and CSV byte-identical for any worker count.
"""

from __future__ import annotations

import multiprocessing

__all__ = ["map_indexed"]


def map_indexed(fn, args_list, workers: int = 1) -> list:
    args_list = list(args_list)
    if workers <= 1 or len(args_list) <= 1:
        return [fn(a) for a in args_list]
    chunk = max(1, len(args_list) // (4 * workers))
    with multiprocessing.Pool(processes=workers) as pool:
        return pool.map(fn, args_list, chunksize=chunk)
