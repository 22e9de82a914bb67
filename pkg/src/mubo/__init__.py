"""Majority undersampling with bilevel optimization for imbalanced binary data."""

from .baselines import RebalanceMethod, apply_method, random_undersample, smote
from .bilevel import (
    MuboConfig,
    MuboResult,
    MuboSelector,
    OuterTraceEntry,
    check_step,
    draw_micro_sample,
    inner_loop,
    majority_loss,
    micro_size,
    run_mubo,
)
from .data import Dataset, load_csv, partition_classes, standardize, stratified_split
from .harness import RunConfig, RunReport, emit_report, load_report, run_experiment
from .metrics import confusion, f1_scores, loss_breakdown, metrics_report, precision_recall

__version__ = "0.1.0"
