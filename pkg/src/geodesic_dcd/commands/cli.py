"""
geodesic-dcd command line

    geodesic-dcd generate --config fig5 --seed 7
    geodesic-dcd detect   --config fig12 --out results/merge
    geodesic-dcd score    truth.json partitions.json --metric ami
    geodesic-dcd geocheck --config fig1a
    geodesic-dcd bench    --config fig5 --jobs 4

``--config`` takes a JSON file or the name of a bundled config.
"""

import asyncio
import functools
import json
import sys
from pathlib import Path
from typing import List, Optional

import click
import numpy as np
import pandas as pd

from geodesic_dcd import __version__
from geodesic_dcd.commands.bench import default_jobs, run_bench, snapshot_quantiles, summarize
from geodesic_dcd.commands.experiment import ExperimentConfig, load_experiment
from geodesic_dcd.core.graph import SnapshotSequence
from geodesic_dcd.core.io import (
    dump_model,
    dump_partitions,
    dump_sequence,
    load_partitions,
    load_sequence,
)
from geodesic_dcd.core.mcm import MethodSpec
from geodesic_dcd.core.metrics import METRICS, SOFT_THRESHOLD, score_sequence
from geodesic_dcd.core.pipeline import (
    build_mcms,
    detect_fixed_k,
    detect_variable_k,
    geodesic_ratio,
    geodesic_structure_check,
)
from geodesic_dcd.errors import ConfigError, GeodesicDCDError, InputError
from geodesic_dcd.sbm.generators import SbmSample, generate
from geodesic_dcd.utils.log import configure_logging


def handle_errors(command):
    """Turn library errors into ``ERROR: ...`` on stderr and the error's exit code."""

    @functools.wraps(command)
    def wrapper(*args, **kwargs):
        try:
            return command(*args, **kwargs)
        except GeodesicDCDError as e:
            click.echo(f"ERROR: {e}", err=True)
            sys.exit(e.exit_code)

    return wrapper


def _out_dir(experiment: ExperimentConfig, out: Optional[str]) -> Path:
    path = Path(out) if out else experiment.out_dir / experiment.name
    path.mkdir(parents=True, exist_ok=True)
    return path


def _sample(experiment: ExperimentConfig, seed: Optional[int]) -> SbmSample:
    if experiment.sbm is None:
        raise ConfigError("this command needs an sbm section", field="sbm")
    sbm = experiment.sbm if seed is None else experiment.sbm.with_seed(seed)
    return generate(sbm)


def _write_sample(sample: SbmSample, out_dir: Path) -> List[Path]:
    written = [out_dir / "sequence.json"]
    dump_sequence(sample.sequence, written[0])
    for name, truth in sample.truths.items():
        path = out_dir / ("truth.json" if name == "truth" else f"truth_{name}.json")
        dump_partitions(truth, path)
        written.append(path)
    if sample.tree is not None:
        path = out_dir / "tree.json"
        with open(path, 'w', encoding='utf-8') as f:
            json.dump(sample.tree.to_dict(), f, indent=2)
            f.write("\n")
        written.append(path)
    return written


def _sequence(experiment: ExperimentConfig, seed: Optional[int],
              out_dir: Path) -> SnapshotSequence:
    """The external input if the experiment names one, otherwise a generated sample."""
    if experiment.input is not None:
        return load_sequence(experiment.input)
    sample = _sample(experiment, seed)
    _write_sample(sample, out_dir)
    return sample.sequence


def _parse_mask(value: Optional[str]) -> List[int]:
    """``--mask`` is a JSON file holding a list of indices, or a comma list like ``3,4,5``."""
    if not value:
        return []
    path = Path(value)
    if path.is_file():
        try:
            with open(path, 'r', encoding='utf-8') as f:
                data = json.load(f)
        except json.JSONDecodeError as e:
            raise ConfigError(f"invalid JSON in mask file {path}: {e}", field="mask") from e
        if not isinstance(data, list) or not all(isinstance(i, int) for i in data):
            raise ConfigError("mask file must hold a list of snapshot indices", field="mask")
        return data
    try:
        return [int(part) for part in value.split(",") if part.strip()]
    except ValueError:
        raise InputError(f"mask is neither a file nor a comma separated index list: {value}")


@click.group()
@click.version_option(__version__, prog_name="geodesic-dcd")
@click.option('-v', '--verbose', count=True, help='-v for progress records, -vv for fit iterations')
def main(verbose: int):
    """Dynamic community detection with Grassmann geodesics."""
    configure_logging(verbose)


@main.command(name="generate")
@click.option('--config', 'config', required=True, help='Experiment file or bundled config name')
@click.option('--out', default=None, help='Output directory')
@click.option('--seed', type=int, default=None, help='Override the generator seed')
@handle_errors
def generate_command(config: str, out: Optional[str], seed: Optional[int]):
    """Sample a synthetic sequence and its ground truth."""
    experiment = load_experiment(config)
    sample = _sample(experiment, seed)
    out_dir = _out_dir(experiment, out)
    for path in _write_sample(sample, out_dir):
        click.echo(f"[OK] Wrote {path}")


@main.command(name="detect")
@click.option('--config', 'config', required=True, help='Experiment file or bundled config name')
@click.option('--out', default=None, help='Output directory')
@click.option('--seed', type=int, default=None, help='Override the generator seed')
@handle_errors
def detect_command(config: str, out: Optional[str], seed: Optional[int]):
    """Detect communities on the experiment's sequence."""
    experiment = load_experiment(config)
    out_dir = _out_dir(experiment, out)
    seq = _sequence(experiment, seed, out_dir)
    pipeline = experiment.pipeline

    if pipeline.variable:
        parts, table = detect_variable_k(seq, pipeline)
        table.to_frame().to_csv(out_dir / "benefit.csv", index=False)
        with open(out_dir / "benefit.json", 'w', encoding='utf-8') as f:
            json.dump(table.to_dict(), f)
            f.write("\n")
        click.echo(f"[OK] Community counts per snapshot: {list(parts.k_per_step)}")
    else:
        parts, report = detect_fixed_k(seq, pipeline)
        with open(out_dir / "fit_report.json", 'w', encoding='utf-8') as f:
            json.dump(report.to_dict(), f, indent=2)
            f.write("\n")
        if report.model is not None:
            dump_model(report.model, out_dir / "model.json")
        if not report.converged:
            click.echo(f"[WARN] Geodesic fit stopped after {report.iterations} iterations "
                       "without converging")

    dump_partitions(parts, out_dir / "partitions.json")
    click.echo(f"[OK] Wrote {out_dir / 'partitions.json'}")


@main.command(name="score")
@click.argument('truth', type=click.Path())
@click.argument('pred', type=click.Path())
@click.option('--metric', type=click.Choice(METRICS), default="ami", show_default=True)
@click.option('--threshold', type=float, default=SOFT_THRESHOLD, show_default=True,
              help='Membership cutoff for the soft score')
@click.option('--mask', default=None, help='Snapshots to leave out: JSON file or "3,4,5"')
@click.option('--out', default=None, help='CSV file (stdout if omitted)')
@handle_errors
def score_command(truth: str, pred: str, metric: str, threshold: float, mask: Optional[str],
                  out: Optional[str]):
    """Score predicted partitions against ground truth, snapshot by snapshot."""
    trace = score_sequence(load_partitions(truth), load_partitions(pred), metric=metric,
                           threshold=threshold, mask=_parse_mask(mask))
    frame = trace.to_frame()
    if out:
        Path(out).parent.mkdir(parents=True, exist_ok=True)
        frame.to_csv(out, index=False)
        click.echo(f"[OK] Median {metric}: {trace.summary['median']:.4f}")
    else:
        click.echo(frame.to_csv(index=False), nl=False)


@main.command(name="geocheck")
@click.option('--config', 'config', default=None, help='Experiment file or bundled config name')
@click.option('--input', 'input_path', default=None, type=click.Path(),
              help='Sequence file (instead of --config)')
@click.option('--method', default=None, help='Method tag; defaults to the config pipeline method')
@click.option('--which', type=int, default=None, help='Eigenvector index (1 for Laplacian MCMs)')
@click.option('--out', default=None, help='Output directory')
@click.option('--seed', type=int, default=None, help='Override the generator seed')
@handle_errors
def geocheck_command(config: Optional[str], input_path: Optional[str], method: Optional[str],
                     which: Optional[int], out: Optional[str], seed: Optional[int]):
    """Singular values and planar projections of the stacked top eigenvectors."""
    if config is None and input_path is None:
        raise InputError("give --config or --input")
    if config is not None:
        experiment = load_experiment(config)
        out_dir = _out_dir(experiment, out)
        seq = _sequence(experiment, seed, out_dir)
        spec = experiment.pipeline.method
        which = experiment.which if which is None else which
    else:
        seq = load_sequence(input_path)
        out_dir = Path(out) if out else Path(input_path).resolve().parent
        out_dir.mkdir(parents=True, exist_ok=True)
        spec = MethodSpec(method or "SMM")
        which = which or 0
    if method is not None and config is not None:
        spec = MethodSpec(method)

    sigma, proj = geodesic_structure_check(build_mcms(seq, spec), which=which)
    pd.DataFrame({"index": np.arange(len(sigma)), "sigma": sigma}).to_csv(
        out_dir / "sigma.csv", index=False)
    T = seq.T
    pd.DataFrame({
        "t_index": np.tile(np.arange(T), 2),
        "sign": np.repeat([1, -1], T),
        "x": proj[:, 0],
        "y": proj[:, 1],
    }).to_csv(out_dir / "projections.csv", index=False)
    click.echo(f"[OK] sigma_3/sigma_1 = {geodesic_ratio(sigma):.3e}")


@main.command(name="bench")
@click.option('--config', 'config', required=True, help='Experiment file or bundled config name')
@click.option('--out', default=None, help='Output directory')
@click.option('--jobs', type=int, default=None, help='Worker processes (default: physical cores)')
@click.option('--seed', 'seeds', type=int, multiple=True,
              help='Run only these seeds (repeatable)')
@handle_errors
def bench_command(config: str, out: Optional[str], jobs: Optional[int], seeds: tuple):
    """Run seeded repetitions of every method variant and summarize the scores."""
    experiment = load_experiment(config)
    if seeds:
        experiment = ExperimentConfig(**{**experiment.__dict__, "seeds": tuple(seeds)})
    if jobs is not None and jobs < 1:
        raise ConfigError("must be at least 1", field="jobs")
    out_dir = _out_dir(experiment, out)

    jobs = jobs or default_jobs()
    click.echo(f"Running {len(experiment.variants()) * len(experiment.seed_list())} "
               f"repetitions on {jobs} worker(s)...")
    runs, scores = asyncio.run(run_bench(experiment, jobs))
    summary = summarize(runs)

    runs.to_csv(out_dir / "runs.csv", index=False)
    scores.to_csv(out_dir / "scores.csv", index=False)
    snapshot_quantiles(scores).to_csv(out_dir / "quantiles.csv", index=False)
    summary.to_csv(out_dir / "summary.csv", index=False)

    for row in summary.itertuples(index=False):
        click.echo(f"  {row.label:<14} {experiment.metric} {row.score_mean:.3f} "
                   f"± {row.score_std:.3f}  ({row.wall_time_mean_s:.2f}s)")
    click.echo(f"[OK] Wrote {out_dir / 'summary.csv'}")


if __name__ == '__main__':
    main()
