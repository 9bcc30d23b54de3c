from typing import Callable, List, Sequence, TypeVar

from joblib import Parallel, delayed

T = TypeVar("T")
R = TypeVar("R")


def run_ordered(fn: Callable[[T], R], items: Sequence[T], workers: int = 1) -> List[R]:
    """Map fn over items on a thread pool; results always come back in item order."""
    if workers <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    return list(Parallel(n_jobs=workers, prefer="threads")(delayed(fn)(item) for item in items))
