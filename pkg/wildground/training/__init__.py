"""Training, evaluation, ablation and gradient-check engines."""
from .ablation import SUITES, AblationRunner, Variant, summarize_rows
from .artifacts import RunDirectory, find_config, read_records, read_summary
from .evaluator import (
    EvaluationResult,
    ModelPredictor,
    OraclePredictor,
    Prediction,
    RandomPredictor,
    evaluate,
    load_model,
    make_predictor,
    write_evaluation,
)
from .gradcheck import CASES, run_suite, uncovered_ops
from .trainer import Trainer

__all__ = [
    "AblationRunner",
    "CASES",
    "EvaluationResult",
    "ModelPredictor",
    "OraclePredictor",
    "Prediction",
    "RandomPredictor",
    "RunDirectory",
    "SUITES",
    "Trainer",
    "Variant",
    "evaluate",
    "find_config",
    "load_model",
    "make_predictor",
    "read_records",
    "read_summary",
    "run_suite",
    "summarize_rows",
    "uncovered_ops",
    "write_evaluation",
]
