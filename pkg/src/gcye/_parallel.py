import os
from concurrent.futures import ThreadPoolExecutor


def thread_count() -> int:
    raw = os.environ.get("GCYE_THREADS", "")
    try:
        n = int(raw)
    except ValueError:
        n = os.cpu_count() or 1
    return max(1, n)


def pmap(fn, items):
    """Ordered map, threaded when GCYE_THREADS (or the core count) exceeds 1.

    Results never depend on the thread count; only wall time does.
    """
    items = list(items)
    n = min(thread_count(), len(items))
    if n <= 1:
        return [fn(it) for it in items]
    with ThreadPoolExecutor(max_workers=n) as ex:
        return list(ex.map(fn, items))
