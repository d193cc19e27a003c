"""Task queue module for parameter sweeps.

Each sweep point is a Celery task that receives its own integer seed, split from the run
seed, and returns a JSON-ready dict. Without a broker the tasks run eagerly, on a local
process pool when ``WORKERS > 1``; results are always returned in submission order.
"""

import logging
from concurrent.futures import ProcessPoolExecutor
from typing import Any, Dict, List, Sequence

import numpy as np
from celery import Celery, Task, group
from celery.signals import setup_logging

from cli.config import settings
from cli.logging_setup import configure_logging
from cli.models import RunConfig
from modules.blockenc.reflector import make_reflector, spectral_reflector
from modules.energysearch.search import GroundEnergySearch
from modules.exceptions import ContractViolation
from modules.groundprep.preparer import PrepProblem, prepare_with_bound
from modules.hamlib.benchmarks import make_single_qubit
from modules.hamlib.loader import build_family
from modules.linalg.dense import operator_norm_diff

logger = logging.getLogger(__name__)

# Initialize Celery app
celery_app = Celery('qgsp')
celery_app.conf.broker_url = settings.REDIS_URI
celery_app.conf.result_backend = settings.REDIS_URI
celery_app.conf.task_always_eager = settings.CELERY_EAGER
celery_app.conf.task_eager_propagates = True


@setup_logging.connect
def configure_worker_logging(**kwargs: Any) -> None:
    """Install the stderr handler in Celery workers instead of Celery's own."""
    configure_logging(settings.LOG_LEVEL, settings.LOG_JSON)


def spawn_seeds(seed: int, count: int) -> List[int]:
    """Independent integer seeds for ``count`` tasks, derived from one run seed."""
    children = np.random.SeedSequence(seed).spawn(count)
    return [int(child.generate_state(1, dtype=np.uint32)[0]) for child in children]


def reflector_error(a: float, delta: float, eps: float) -> float:
    """``‖REF(0, δ, ε) block − R_{<0}‖`` on the single-qubit family ``H(a)``."""
    instance = make_single_qubit(a)
    ref = make_reflector(instance.encoding, 0.0, delta, eps)
    return operator_norm_diff(ref.block(), spectral_reflector(instance.H, 0.0))


@celery_app.task(name='modules.sweeps.tasks.reflector_error_point', bind=True)
def reflector_error_point(self, a: float, delta: float, eps: float) -> Dict[str, float]:
    """One row of the reflector error sweep."""
    try:
        return {"a": float(a), "operator_norm_error": reflector_error(a, delta, eps)}
    except Exception as e:
        logger.error(f"Reflector error point a={a} failed: {e}")
        raise


@celery_app.task(name='modules.sweeps.tasks.prepare_instance', bind=True)
def prepare_instance(self, config: Dict[str, Any], seed: int) -> Dict[str, Any]:
    """Build the configured instance and prepare its ground state with a known bound."""
    cfg = RunConfig.model_validate(config)
    logger.info(f"Preparing {cfg.family.value} instance with seed {seed}")
    try:
        rng = np.random.default_rng(seed)
        instance = build_family(cfg, rng)
        problem = PrepProblem.from_instance(
            instance, gamma=cfg.gamma, eps=cfg.eps, delta_gap=cfg.delta_gap, mu=cfg.mu
        )
        result = prepare_with_bound(problem, rng, deterministic=cfg.deterministic)
        payload = result.to_json()
        payload["seed"] = seed
        return payload
    except Exception as e:
        logger.error(f"Preparation with seed {seed} failed: {e}")
        raise


@celery_app.task(name='modules.sweeps.tasks.search_run', bind=True)
def search_run(self, config: Dict[str, Any], seed: int) -> Dict[str, Any]:
    """One ground-energy search; records whether the bracket holds the exact ``λ_0``."""
    cfg = RunConfig.model_validate(config)
    if cfg.h is None:
        raise ContractViolation("search_run needs the grid spacing h")
    try:
        rng = np.random.default_rng(seed)
        instance = build_family(cfg, rng)
        search = GroundEnergySearch.from_instance(
            instance, cfg.gamma, cfg.h, cfg.vartheta, ae_mode=cfg.ae_mode, shift=cfg.shift
        )
        bracket = search.run(rng)
        payload = bracket.to_json()
        payload.update(
            {
                "seed": seed,
                "ground_energy": instance.ground_energy,
                "contains": bracket.contains(instance.ground_energy),
            }
        )
        return payload
    except Exception as e:
        logger.error(f"Search with seed {seed} failed: {e}")
        raise


def _invoke(name: str, args: Sequence[Any]) -> Any:
    return celery_app.tasks[name](*args)


def run_sweep(task: Task, arg_list: Sequence[Sequence[Any]]) -> List[Any]:
    """Run ``task`` over every argument tuple and return the results in order."""
    arg_list = [tuple(args) for args in arg_list]
    logger.info(f"Running {len(arg_list)} x {task.name}")
    if not celery_app.conf.task_always_eager:
        return group(task.s(*args) for args in arg_list).apply_async().get()
    if settings.WORKERS > 1 and len(arg_list) > 1:
        with ProcessPoolExecutor(
            max_workers=settings.WORKERS,
            initializer=configure_logging,
            initargs=(settings.LOG_LEVEL, settings.LOG_JSON),
        ) as pool:
            return list(pool.map(_invoke, [task.name] * len(arg_list), arg_list))
    return [task.apply(args=args).get() for args in arg_list]


def reflector_sweep(points: int, delta: float, eps: float) -> List[Dict[str, float]]:
    """Operator-norm error of ``REF(0, δ, ε)`` over ``a`` on a uniform grid of ``[0, 1]``."""
    grid = np.linspace(0.0, 1.0, points)
    return run_sweep(reflector_error_point, [(float(a), delta, eps) for a in grid])


def seeded_runs(task: Task, config: RunConfig, runs: int) -> List[Dict[str, Any]]:
    """``runs`` repetitions of a configured task with seeds split from ``config.seed``."""
    payload = config.model_dump(mode="json")
    return run_sweep(task, [(payload, seed) for seed in spawn_seeds(config.seed, runs)])
