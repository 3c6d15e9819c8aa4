"""Optional process-level parallelism over independent jobs (replicas, sweep cells)."""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor

_DEFAULT_JOBS = 1


def set_default_jobs(jobs: int):
    global _DEFAULT_JOBS
    if jobs < 1:
        raise ValueError(f"jobs must be >= 1, got {jobs}")
    _DEFAULT_JOBS = int(jobs)


def default_jobs() -> int:
    return _DEFAULT_JOBS


def pmap(fn, items, jobs: int | None = None) -> list:
    """``[fn(x) for x in items]``, fanned out over at most ``jobs`` worker processes.

    Results come back in input order, so reductions over them are
    independent of the worker count. ``fn`` must be picklable (module level).
    """
    items = list(items)
    jobs = default_jobs() if jobs is None else jobs
    jobs = min(jobs, len(items)) if items else 1
    if jobs <= 1:
        return [fn(x) for x in items]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, items))
