"""Multi-view TSK fuzzy classifier with a cooperating hidden view."""

from .coop import (CoopConfig, CoopModel, coop_fit, coop_objective, coop_predict, derive_seed,
                   fit_consequents, solve_consequents, update_weights)
from .dataset import (MultiViewDataset, accuracy, decode_argmax, load_multiview_csv,
                      one_hot_encode, stratified_kfold, write_multiview_csv)
from .fcm import fcm_cluster
from .harness import ExperimentConfig, emit_report, run_experiment
from .hidden_view import build_graph, nmf_infer_test, nmf_train
from .pipeline import HiddenConfig, fit_cvh, predict_cvh
from .tsk import Antecedents, FuzzyRuleBase, dump_rules, estimate_antecedents, map_features

__version__ = "0.1.0"

__all__ = [
    "Antecedents", "CoopConfig", "CoopModel", "ExperimentConfig", "FuzzyRuleBase",
    "HiddenConfig", "MultiViewDataset", "accuracy", "build_graph", "coop_fit",
    "coop_objective", "coop_predict", "decode_argmax", "derive_seed", "dump_rules",
    "emit_report", "estimate_antecedents", "fcm_cluster", "fit_consequents", "fit_cvh",
    "load_multiview_csv", "map_features", "nmf_infer_test", "nmf_train", "one_hot_encode",
    "predict_cvh", "run_experiment", "solve_consequents", "stratified_kfold",
    "update_weights", "write_multiview_csv",
]
