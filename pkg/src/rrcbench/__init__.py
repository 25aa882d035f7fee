from .baseclf import ClassifierKind, cross_predict_supports, predict_support, predict_supports, train
from .campaign import CampaignConfig, load_config, parse_config, read_results, run_campaign
from .cli import main
from .core import Dataset, SeededRng, SupportVector, decide, stratified_kfold, summarize
from .datasets import cfs_select, generate_synthetic, load_dataset
from .dist import BetaSpec, TruncNormSpec, rrc_sd, truncnorm_match_mean
from .evaluation import compute_losses, confusion_counts, evaluate_predictions, tune_raw, tune_scm
from .rrc import MeanMode, Variant, build_rrc, class_probabilities, class_probabilities_mc, rrc_probabilities
from .scm import build_scm, corrected_posterior, scm_decide
from .stats import bergman_hommel_adjust, compare_criteria, friedman_test, wilcoxon_signed_rank

__all__ = [
    "BetaSpec",
    "CampaignConfig",
    "ClassifierKind",
    "Dataset",
    "MeanMode",
    "SeededRng",
    "SupportVector",
    "TruncNormSpec",
    "Variant",
    "bergman_hommel_adjust",
    "build_rrc",
    "build_scm",
    "cfs_select",
    "class_probabilities",
    "class_probabilities_mc",
    "compare_criteria",
    "compute_losses",
    "confusion_counts",
    "corrected_posterior",
    "cross_predict_supports",
    "decide",
    "evaluate_predictions",
    "friedman_test",
    "generate_synthetic",
    "load_config",
    "load_dataset",
    "main",
    "parse_config",
    "predict_support",
    "predict_supports",
    "read_results",
    "rrc_probabilities",
    "rrc_sd",
    "run_campaign",
    "scm_decide",
    "stratified_kfold",
    "summarize",
    "train",
    "tune_raw",
    "tune_scm",
    "wilcoxon_signed_rank",
]
