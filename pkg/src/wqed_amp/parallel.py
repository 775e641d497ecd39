"""Ordered process-pool map that survives interruption."""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from typing import Callable, Sequence


def ordered_map(fn: Callable, tasks: Sequence, workers: int = 1) -> tuple[list, bool]:
    """Apply ``fn`` to every task, returning results in task order.

    On KeyboardInterrupt the results finished so far (a prefix, in order) are
    returned with ``complete=False`` instead of propagating the interrupt.
    """
    out = []
    try:
        if workers <= 1 or len(tasks) <= 1:
            for t in tasks:
                out.append(fn(t))
        else:
            with ProcessPoolExecutor(max_workers=workers) as ex:
                futures = [ex.submit(fn, t) for t in tasks]
                try:
                    for f in futures:
                        out.append(f.result())
                except KeyboardInterrupt:
                    for f in futures:
                        f.cancel()
                    raise
    except KeyboardInterrupt:
        return out, False
    return out, True
