"""Per-model work spread over worker processes.

Results always come back in input order, so the number of jobs never changes what
is written.
"""

from __future__ import annotations

import logging
from collections.abc import Callable, Sequence
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from functools import partial
from multiprocessing import get_context
from typing import TypeVar

from caufrac.arithmetic import DEFAULT_TOLERANCE
from caufrac.empirical import EmpiricalModel
from caufrac.fraction import MethodChoice, full_report, report_orders
from caufrac.scenario import DEFAULT_SECTION_CAP
from caufrac.stats import ModelReport, model_report

logger = logging.getLogger(__name__)

T = TypeVar("T")
R = TypeVar("R")


def run_batch(func: Callable[[T], R], items: Sequence[T], jobs: int = 1) -> list[R]:
    """Apply ``func`` to every item, in ``jobs`` spawned processes when above 1."""
    if jobs <= 1 or len(items) <= 1:
        return [func(item) for item in items]

    workers = min(jobs, len(items))
    logger.info("Running %d items on %d workers", len(items), workers)
    with ProcessPoolExecutor(
        max_workers=workers, mp_context=get_context("spawn")
    ) as pool:
        return list(pool.map(func, items))


@dataclass(frozen=True)
class FractionOptions:
    method: MethodChoice = MethodChoice.auto
    section_cap: int = DEFAULT_SECTION_CAP
    tolerance: float = DEFAULT_TOLERANCE
    include_witness: bool = False


def _fractions_of(model: EmpiricalModel, options: FractionOptions) -> ModelReport:
    results = full_report(
        model,
        options.method,
        orders=report_orders(model.scenario),
        cap=options.section_cap,
        tolerance=options.tolerance,
    )
    return model_report(model, results, options.include_witness)


def fractions_batch(
    models: Sequence[EmpiricalModel], options: FractionOptions, jobs: int = 1
) -> list[ModelReport]:
    """Fractions of every model for its report orders, sorted by model id."""
    ordered = sorted(models, key=lambda model: model.model_id or "")
    return run_batch(partial(_fractions_of, options=options), ordered, jobs)
