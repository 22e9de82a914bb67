"""Experiment runner: (dataset x method x seed) runs, aggregation, and report files."""

from __future__ import annotations

import csv
import json
import logging
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np
import yaml

from . import nn
from .baselines import RebalanceMethod, apply_method
from .bilevel import MuboConfig, inner_loop, read_trace, write_trace
from .data import load_csv, standardize, stratified_split
from .errors import DivergenceError
from .metrics import confusion, loss_breakdown, metrics_report

log = logging.getLogger(__name__)

METRIC_KEYS = ("f1_m", "f1_M", "f1", "prec_m", "prec_M", "precision", "rec_m", "rec_M", "recall")
LOSS_KEYS = ("J_m", "J_M", "J_T_M", "J_F_M")


@dataclass
class RunConfig:
    dataset: str
    label_column: str = "label"
    positive_label: str = "1"
    method: str = "mubo"
    mubo: MuboConfig = field(default_factory=MuboConfig)
    test_fraction: float = 0.2
    n_runs: int = 5
    base_seed: int = 0
    out_dir: str | None = None
    workers: int = 1
    smote_k: int = 5
    # epochs for the final model of non-MUBO methods; None means mubo.max_epochs
    baseline_epochs: int | None = None

    def __post_init__(self):
        if isinstance(self.mubo, dict):
            self.mubo = MuboConfig(**self.mubo)
        self.method = RebalanceMethod.parse(self.method).value
        self.positive_label = str(self.positive_label)
        if self.n_runs < 1:
            raise ValueError("n_runs must be >= 1")
        if not 0.0 < self.test_fraction < 1.0:
            raise ValueError("test_fraction must lie in (0, 1)")
        if self.workers < 1:
            raise ValueError("workers must be >= 1")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["mubo"] = self.mubo.to_dict()
        return d

    @classmethod
    def from_dict(cls, d: dict, base_dir=None) -> "RunConfig":
        d = dict(d)
        ds = d.pop("dataset")
        if isinstance(ds, dict):
            d.setdefault("label_column", ds.get("label_column", "label"))
            d.setdefault("positive_label", ds.get("positive_label", "1"))
            ds = ds["path"]
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        path = Path(ds)
        if base_dir is not None and not path.is_absolute():
            path = Path(base_dir) / path
        return cls(dataset=str(path), **d)

    @classmethod
    def load(cls, path) -> "RunConfig":
        path = Path(path)
        with path.open(encoding="utf-8") as fh:
            raw = yaml.safe_load(fh)
        if not isinstance(raw, dict):
            raise ValueError(f"{path}: config must be a mapping")
        return cls.from_dict(raw, base_dir=path.parent)


@dataclass
class RunRecord:
    run: int
    seed: int
    status: str
    wall_time: float
    metrics: dict = field(default_factory=dict)
    losses: dict = field(default_factory=dict)
    n_train: int = 0
    n_train_minority: int = 0
    n_test: int = 0
    n_synthetic: int = 0
    stop_reason: str | None = None
    error: str | None = None
    trace_file: str | None = None
    trace: list | None = None

    def to_dict(self) -> dict:
        d = asdict(self)
        d.pop("trace")
        return d


@dataclass
class RunReport:
    config: dict
    runs: list[RunRecord]
    aggregate: dict

    @property
    def n_ok(self) -> int:
        return sum(r.status == "ok" for r in self.runs)


def aggregate(runs) -> dict:
    """Mean and population variance of every metric over successful runs.

    Runs where a metric is undefined are left out of that metric's statistics.
    """
    out = {}
    ok = [r for r in runs if r.status == "ok"]
    for key in METRIC_KEYS:
        vals = [r.metrics.get(key) for r in ok]
        vals = [v for v in vals if v is not None]
        if vals:
            arr = np.asarray(vals, dtype=np.float64)
            out[key] = {"mean": float(arr.mean()), "variance": float(arr.var()), "n": len(vals)}
        else:
            out[key] = {"mean": None, "variance": None, "n": 0}
    return out


def train_final_model(X, y, cfg: MuboConfig, seed, epochs: int | None = None):
    """Fresh network trained with the inner-loop settings on ``(X, y)``."""
    init_seq, _, shuffle_seq = np.random.SeedSequence(seed).spawn(3)
    params = nn.init_params(X.shape[1], int(init_seq.generate_state(1)[0]))
    if epochs is not None:
        cfg = MuboConfig(**{**cfg.to_dict(), "max_epochs": epochs})
    result = inner_loop(
        params, nn.AdamState.zeros_like(params), X, y, cfg, np.random.default_rng(shuffle_seq)
    )
    return result.params


def evaluate(params, X, y):
    z = nn.output(params, X)
    pred = nn.predict(z)
    losses = nn.per_sample_loss(z, y)
    counts = confusion(pred, y)
    return metrics_report(counts), loss_breakdown(losses, pred, y)


def run_single(cfg: RunConfig, run: int, dataset=None) -> RunRecord:
    seed = cfg.base_seed + run
    start = time.perf_counter()
    ds = dataset if dataset is not None else load_csv(cfg.dataset, cfg.label_column, cfg.positive_label)
    train, test = stratified_split(ds, cfg.test_fraction, seed)
    train, test, _ = standardize(train, test)
    record = RunRecord(run=run, seed=seed, status="ok", wall_time=0.0, n_test=len(test))
    try:
        reb = apply_method(cfg.method, train, cfg.mubo, seed, k=cfg.smote_k)
        if reb.mubo is not None:
            params = reb.mubo.params
            record.trace = reb.mubo.trace
            record.stop_reason = reb.mubo.stop_reason
        else:
            epochs = cfg.baseline_epochs if cfg.baseline_epochs is not None else cfg.mubo.max_epochs
            params = train_final_model(reb.features, reb.labels, cfg.mubo, seed, epochs)
        report, losses = evaluate(params, test.features, test.labels)
    except DivergenceError as exc:
        log.warning("run %d (seed %d) diverged: %s", run, seed, exc)
        record.status = "diverged"
        record.error = str(exc)
    else:
        record.metrics = report.to_dict()
        record.losses = losses.to_dict()
        record.n_train = len(reb.labels)
        record.n_train_minority = int(reb.labels.sum())
        record.n_synthetic = reb.n_synthetic
    record.wall_time = time.perf_counter() - start
    return record


def run_experiment(cfg: RunConfig) -> RunReport:
    ds = load_csv(cfg.dataset, cfg.label_column, cfg.positive_label)
    if cfg.workers > 1 and cfg.n_runs > 1:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            futures = [pool.submit(run_single, cfg, i, ds) for i in range(cfg.n_runs)]
            runs = [f.result() for f in futures]
    else:
        runs = [run_single(cfg, i, ds) for i in range(cfg.n_runs)]
    for r in runs:
        if r.status == "ok":
            log.info("run %d seed %d: F1=%s (%.1fs)", r.run, r.seed, r.metrics.get("f1"), r.wall_time)
    return RunReport(config=cfg.to_dict(), runs=runs, aggregate=aggregate(runs))


def _csv_cell(v):
    if v is None:
        return "null"
    return repr(v) if isinstance(v, float) else str(v)


def _parse_cell(s: str):
    if s == "null" or s == "":
        return None
    try:
        return int(s)
    except ValueError:
        pass
    try:
        return float(s)
    except ValueError:
        return s


FLAT_COLUMNS = (
    ["run", "seed", "status", "wall_time", "n_train", "n_train_minority", "n_test", "n_synthetic"]
    + list(METRIC_KEYS)
    + list(LOSS_KEYS)
    + ["stop_reason", "error"]
)


def emit_report(report: RunReport, out_dir) -> dict:
    """Write report.json, runs.csv and (for MUBO runs) traces/run_<i>.jsonl."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = {}
    for r in report.runs:
        if r.trace is not None:
            rel = f"traces/run_{r.run}.jsonl"
            write_trace(r.trace, out / rel)
            r.trace_file = rel
    doc = {
        "config": report.config,
        "runs": [r.to_dict() for r in report.runs],
        "aggregate": report.aggregate,
    }
    path = out / "report.json"
    path.write_text(json.dumps(doc, indent=2) + "\n", encoding="utf-8")
    written["report"] = path

    table = out / "runs.csv"
    with table.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(FLAT_COLUMNS)
        for r in report.runs:
            flat = {**r.to_dict(), **{k: r.metrics.get(k) for k in METRIC_KEYS}, **{k: r.losses.get(k) for k in LOSS_KEYS}}
            w.writerow([_csv_cell(flat.get(c)) for c in FLAT_COLUMNS])
    written["table"] = table
    written["traces"] = [out / r.trace_file for r in report.runs if r.trace_file]
    return written


def load_report(out_dir) -> RunReport:
    out = Path(out_dir)
    doc = json.loads((out / "report.json").read_text(encoding="utf-8"))
    runs = []
    for d in doc["runs"]:
        rec = RunRecord(**d)
        if rec.trace_file:
            rec.trace = read_trace(out / rec.trace_file)
        runs.append(rec)
    return RunReport(config=doc["config"], runs=runs, aggregate=doc["aggregate"])


def load_runs_table(path) -> list[RunRecord]:
    """Rebuild run records (metrics and losses only) from a runs.csv table."""
    runs = []
    with Path(path).open(newline="", encoding="utf-8") as fh:
        for row in csv.DictReader(fh):
            vals = {k: _parse_cell(v) for k, v in row.items()}
            runs.append(
                RunRecord(
                    run=vals["run"],
                    seed=vals["seed"],
                    status=vals["status"],
                    wall_time=float(vals["wall_time"]),
                    metrics={k: vals.get(k) for k in METRIC_KEYS},
                    losses={k: vals.get(k) for k in LOSS_KEYS},
                    n_train=vals["n_train"],
                    n_train_minority=vals["n_train_minority"],
                    n_test=vals["n_test"],
                    n_synthetic=vals["n_synthetic"],
                    stop_reason=vals.get("stop_reason"),
                    error=vals.get("error"),
                )
            )
    return runs


def reaggregate(paths) -> dict:
    """Aggregate the runs found in one or more runs.csv files (or their directories)."""
    runs = []
    for p in paths:
        p = Path(p)
        runs.extend(load_runs_table(p / "runs.csv" if p.is_dir() else p))
    return aggregate(runs)


def format_summary(agg: dict) -> str:
    lines = []
    for key in METRIC_KEYS:
        a = agg.get(key, {})
        if a.get("mean") is None:
            lines.append(f"{key:>10}: n/a")
        else:
            lines.append(f"{key:>10}: {a['mean']:.4f} (var {a['variance']:.3g}, n={a['n']})")
    return "\n".join(lines)


def all_diverged(report: RunReport) -> bool:
    return bool(report.runs) and all(r.status == "diverged" for r in report.runs)

