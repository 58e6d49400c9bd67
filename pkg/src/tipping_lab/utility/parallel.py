import asyncio
from concurrent.futures import ProcessPoolExecutor
from typing import Any, Callable, List, Sequence, Tuple

from tqdm import tqdm


async def map_async(func: Callable[..., Any], jobs: Sequence[Tuple], workers: int = 1,
                    progress: bool = False, desc: str = "") -> List[Any]:
    """func(*job) for every job, in job order. workers > 1 fans out to a process pool."""
    if workers <= 1:
        return [func(*job) for job in tqdm(jobs, desc=desc, disable=not progress)]
    loop = asyncio.get_running_loop()
    with ProcessPoolExecutor(max_workers=workers) as pool:
        futures = [loop.run_in_executor(pool, func, *job) for job in jobs]
        bar = tqdm(total=len(futures), desc=desc, disable=not progress)
        for future in futures:
            future.add_done_callback(lambda _: bar.update(1))
        try:
            return list(await asyncio.gather(*futures))
        finally:
            bar.close()


def map_sync(func: Callable[..., Any], jobs: Sequence[Tuple], workers: int = 1,
             progress: bool = False, desc: str = "") -> List[Any]:
    if workers <= 1:
        return [func(*job) for job in tqdm(jobs, desc=desc, disable=not progress)]
    return asyncio.run(map_async(func, jobs, workers, progress, desc))
