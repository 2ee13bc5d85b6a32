"""Concurrent benchmark runner.

Every (method variant, seed) pair is one independent repetition: generate
the sequence, detect, score against the planted truth, and record wall time
and resident memory. Repetitions run in a process pool driven by asyncio;
results are sorted by (label, seed) before aggregation, so the tables do
not depend on completion order.
"""

import asyncio
import logging
import time
from concurrent.futures import ProcessPoolExecutor
from typing import Any, Dict, List, Optional, Tuple

import numpy as np
import pandas as pd
import psutil

from geodesic_dcd.commands.experiment import ExperimentConfig, MethodVariant, truth_key
from geodesic_dcd.core.graph import PartitionSequence, SnapshotSequence
from geodesic_dcd.core.metrics import score_sequence
from geodesic_dcd.core.pipeline import detect_fixed_k, detect_variable_k
from geodesic_dcd.errors import ConfigError
from geodesic_dcd.sbm.generators import generate

logger = logging.getLogger(__name__)

RUN_COLUMNS = ["label", "seed", "score_mean", "score_median", "wall_time_s", "rss_mb"]


def default_jobs() -> int:
    """Physical core count (1 when psutil cannot tell)."""
    return psutil.cpu_count(logical=False) or 1


def detect(seq: SnapshotSequence, variant: MethodVariant) -> PartitionSequence:
    """Run fixed- or variable-k detection, whichever the variant's config asks for."""
    if variant.pipeline.variable:
        parts, _ = detect_variable_k(seq, variant.pipeline)
    else:
        parts, _ = detect_fixed_k(seq, variant.pipeline)
    return parts


def run_repetition(experiment: ExperimentConfig, variant: MethodVariant,
                   seed: int) -> Tuple[Dict[str, Any], List[float]]:
    """One seeded repetition; module-level so worker processes can import it.

    Returns:
        (run row, per-snapshot scores)
    """
    sample = generate(experiment.sbm.with_seed(seed))
    truth = sample.truths[truth_key(variant.pipeline.method.method)]

    start = time.perf_counter()
    pred = detect(sample.sequence, variant)
    elapsed = time.perf_counter() - start

    trace = score_sequence(truth, pred, metric=experiment.metric,
                           threshold=experiment.threshold, mask=experiment.mask)
    row = {
        "label": variant.label,
        "seed": int(seed),
        "score_mean": float(np.mean(trace.values)) if len(trace.values) else float("nan"),
        "score_median": trace.summary["median"],
        "wall_time_s": elapsed,
        "rss_mb": psutil.Process().memory_info().rss / 2**20,
    }
    return row, trace.values.tolist()


async def run_bench(experiment: ExperimentConfig,
                    jobs: Optional[int] = None) -> Tuple[pd.DataFrame, pd.DataFrame]:
    """Run every (variant, seed) repetition concurrently.

    Args:
        experiment: Parsed experiment; needs an ``sbm`` section
        jobs: Worker processes; defaults to the physical core count. With
            one job the repetitions run in the default thread executor.

    Returns:
        (runs, scores): one row per repetition, and the long per-snapshot
        table (label, seed, t_index, value)

    Raises:
        ConfigError: No sbm section
    """
    if experiment.sbm is None:
        raise ConfigError("bench needs an sbm section to regenerate data per seed", field="sbm")
    jobs = jobs or default_jobs()
    pairs = [(variant, seed) for variant in experiment.variants()
             for seed in experiment.seed_list()]
    logger.info("bench_start", extra={"data": {"experiment": experiment.name,
                                               "repetitions": len(pairs), "jobs": jobs}})

    loop = asyncio.get_running_loop()
    if jobs == 1:
        futures = [loop.run_in_executor(None, run_repetition, experiment, v, s) for v, s in pairs]
        results = await asyncio.gather(*futures)
    else:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            futures = [loop.run_in_executor(pool, run_repetition, experiment, v, s)
                       for v, s in pairs]
            results = await asyncio.gather(*futures)

    runs = pd.DataFrame([row for row, _ in results], columns=RUN_COLUMNS)
    scores = pd.DataFrame(
        [{"label": row["label"], "seed": row["seed"], "t_index": i, "value": value}
         for row, values in results for i, value in enumerate(values)],
        columns=["label", "seed", "t_index", "value"])
    runs = runs.sort_values(["label", "seed"], kind="stable").reset_index(drop=True)
    scores = scores.sort_values(["label", "seed", "t_index"], kind="stable").reset_index(drop=True)
    return runs, scores


def summarize(runs: pd.DataFrame) -> pd.DataFrame:
    """Mean ± std of the per-repetition mean score, its quartiles, and mean wall time."""
    grouped = runs.groupby("label", sort=True)
    summary = pd.DataFrame({
        "repetitions": grouped["seed"].count(),
        "score_mean": grouped["score_mean"].mean(),
        "score_std": grouped["score_mean"].std(ddof=0),
        "score_q25": grouped["score_mean"].quantile(0.25),
        "score_median": grouped["score_mean"].median(),
        "score_q75": grouped["score_mean"].quantile(0.75),
        "wall_time_mean_s": grouped["wall_time_s"].mean(),
        "rss_max_mb": grouped["rss_mb"].max(),
    })
    return summary.reset_index()


def snapshot_quantiles(scores: pd.DataFrame) -> pd.DataFrame:
    """Per (label, t_index): median and quartiles over seeds, the error bars of the figures."""
    grouped = scores.groupby(["label", "t_index"], sort=True)["value"]
    return pd.DataFrame({
        "q25": grouped.quantile(0.25),
        "median": grouped.median(),
        "q75": grouped.quantile(0.75),
    }).reset_index()
