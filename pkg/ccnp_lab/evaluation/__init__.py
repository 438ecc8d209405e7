from ccnp_lab.evaluation.metrics import (
    EvalResult,
    amplitude_shift,
    evaluate,
    evaluate_shots,
    merge_reports,
    predictive_log_likelihood,
    reconstruction_mse,
)
from ccnp_lab.evaluation.probe import coefficient_inference
from ccnp_lab.evaluation.tables import read_csv, write_csv

__all__ = [
    "EvalResult",
    "amplitude_shift",
    "coefficient_inference",
    "evaluate",
    "evaluate_shots",
    "merge_reports",
    "predictive_log_likelihood",
    "read_csv",
    "reconstruction_mse",
    "write_csv",
]
