"""Experiment documents: one JSON file per reproducible run.

A document combines a generator section (``sbm``) or an external sequence
(``input``), the detection parameters (``pipeline``), the score to report
and the repetitions to run. ``methods`` lists the variants compared by
``bench``; each entry is a label plus PipelineConfig overrides:

    {"label": "S-NSC", "method": {"method": "NSC"}, "geodesic": false}
"""

from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple, Union

from geodesic_dcd.core.mcm import Method
from geodesic_dcd.core.metrics import METRICS, SOFT_THRESHOLD
from geodesic_dcd.core.pipeline import PipelineConfig
from geodesic_dcd.errors import ConfigError
from geodesic_dcd.sbm.config import SbmConfig
from geodesic_dcd.utils.config_loader import load_config, merge_config

DEFAULTS: Dict[str, Any] = {
    "metric": "ami",
    "threshold": SOFT_THRESHOLD,
    "repetitions": 1,
    "pipeline": {},
    "mask": [],
    "which": 0,
}

KNOWN_SECTIONS = {"schema_version", "name", "description", "sbm", "input", "truth", "pipeline",
                  "metric", "threshold", "repetitions", "seeds", "out_dir", "methods", "mask",
                  "which", "_source"}


@dataclass(frozen=True)
class MethodVariant:
    """One compared method: a label and its full pipeline configuration."""

    label: str
    pipeline: PipelineConfig


@dataclass(frozen=True, eq=False)
class ExperimentConfig:
    """A parsed experiment document."""

    name: str
    pipeline: PipelineConfig
    sbm: Optional[SbmConfig] = None
    input: Optional[Path] = None
    truth: Optional[Path] = None
    metric: str = "ami"
    threshold: Optional[float] = SOFT_THRESHOLD
    repetitions: int = 1
    seeds: Optional[Tuple[int, ...]] = None
    out_dir: Path = Path("results")
    methods: Tuple[MethodVariant, ...] = ()
    mask: Tuple[int, ...] = ()
    which: int = 0
    source: Optional[str] = field(default=None, repr=False)

    def seed_list(self) -> List[int]:
        """Explicit seeds if given, otherwise 0..repetitions-1."""
        if self.seeds:
            return list(self.seeds)
        return list(range(self.repetitions))

    def variants(self) -> Tuple[MethodVariant, ...]:
        """Compared methods; the ``pipeline`` section alone when none are listed."""
        if self.methods:
            return self.methods
        label = ("G-" if self.pipeline.geodesic else "S-") + self.pipeline.method.method.value
        return (MethodVariant(label=label, pipeline=self.pipeline),)

    def with_seed(self, seed: int) -> "ExperimentConfig":
        if self.sbm is None:
            return self
        return ExperimentConfig(**{**self.__dict__, "sbm": self.sbm.with_seed(seed)})

    @classmethod
    def from_document(cls, document: Dict[str, Any]) -> "ExperimentConfig":
        """Validate and convert a merged document.

        Raises:
            ConfigError: Unknown section, bad value, or neither sbm nor input given
        """
        unknown = set(document) - KNOWN_SECTIONS
        if unknown:
            raise ConfigError(f"unknown sections {sorted(unknown)}", field="document")

        sbm = None
        if document.get("sbm") is not None:
            if not isinstance(document["sbm"], dict):
                raise ConfigError("must be an object", field="sbm")
            sbm = SbmConfig.from_dict(document["sbm"])
        input_path = Path(document["input"]) if document.get("input") else None
        if sbm is None and input_path is None:
            raise ConfigError("give either an sbm section or an input sequence", field="sbm")

        pipeline_doc = document.get("pipeline") or {}
        if not isinstance(pipeline_doc, dict):
            raise ConfigError("must be an object", field="pipeline")
        pipeline = PipelineConfig.from_dict(pipeline_doc)

        metric = document.get("metric", "ami")
        if metric not in METRICS:
            raise ConfigError(f"expected one of {METRICS}, got {metric!r}", field="metric")

        repetitions = document.get("repetitions", 1)
        if not isinstance(repetitions, int) or repetitions < 1:
            raise ConfigError("must be a positive integer", field="repetitions")

        seeds = document.get("seeds")
        if seeds is not None:
            if not isinstance(seeds, list) or not all(isinstance(s, int) for s in seeds):
                raise ConfigError("must be a list of integers", field="seeds")
            seeds = tuple(seeds)

        methods = tuple(_parse_variant(pipeline_doc, entry, i)
                        for i, entry in enumerate(document.get("methods") or []))

        mask = document.get("mask") or []
        if not isinstance(mask, list) or not all(isinstance(i, int) for i in mask):
            raise ConfigError("must be a list of snapshot indices", field="mask")

        threshold = document.get("threshold", SOFT_THRESHOLD)
        if threshold is not None and not 0.0 <= float(threshold) < 1.0:
            raise ConfigError("must lie in [0, 1)", field="threshold")

        return cls(
            name=str(document.get("name") or Path(document.get("_source", "experiment")).stem),
            pipeline=pipeline,
            sbm=sbm,
            input=input_path,
            truth=Path(document["truth"]) if document.get("truth") else None,
            metric=metric,
            threshold=None if threshold is None else float(threshold),
            repetitions=repetitions,
            seeds=seeds,
            out_dir=Path(document.get("out_dir") or "results"),
            methods=methods,
            mask=tuple(mask),
            which=int(document.get("which", 0)),
            source=document.get("_source"),
        )


def _parse_variant(base: Dict[str, Any], entry: Union[Dict[str, Any], Any],
                   index: int) -> MethodVariant:
    where = f"methods[{index}]"
    if not isinstance(entry, dict) or "label" not in entry:
        raise ConfigError("each method needs a label", field=where)
    overrides = {k: v for k, v in entry.items() if k != "label"}
    # the method object is replaced whole, never merged key by key
    merged = merge_config({k: v for k, v in base.items() if k != "method"}, overrides)
    if "method" not in overrides and "method" in base:
        merged["method"] = base["method"]
    try:
        pipeline = PipelineConfig.from_dict(merged)
    except ConfigError as e:
        raise ConfigError(str(e), field=where)
    return MethodVariant(label=str(entry["label"]), pipeline=pipeline)


def truth_key(method: Method) -> str:
    """Which generated ground truth a method is scored against."""
    if method is Method.SCC_SEND:
        return "send"
    if method is Method.SCC_RECEIVE:
        return "receive"
    return "truth"


def load_experiment(name_or_path: Union[str, Path]) -> ExperimentConfig:
    """Load a bundled or on-disk experiment document.

    Example:
        >>> exp = load_experiment("fig5")
        >>> [v.label for v in exp.variants()][:2]
        ['G-NSC', 'S-NSC']
    """
    return ExperimentConfig.from_document(load_config(name_or_path, DEFAULTS))
