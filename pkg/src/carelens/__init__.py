"""carelens: per-participant intoxication detection models from wearable
sensor windows, explained through four XAI views and delivered via an
emotion-adaptive chat service."""

from .affect import (
    AffectState,
    EmotionObservation,
    TextSentiment,
    aggregate_window,
    analyze_text,
    classify_frame,
    fuse,
)
from .boosting import EnsembleModel, train_boosted
from .causal import CausalGraph, causal_discover
from .charts import ChartSpec, render_artifact
from .chat import ChatService, ExplanationService, ServiceCore
from .cohort import ModelRegistry, train_cohort
from .counterfactual import Counterfactual, counterfactual_search
from .evaluation import ModelMetrics, evaluate, select_best
from .gateway import HttpGateway, MockGateway
from .prompts import PromptBundle, assemble, quantize_importance, quantize_probability
from .rules import Rule, RulesModel, extract_rules
from .sensors import (
    FeatureMatrix,
    SensorRecord,
    WindowFrame,
    extract_features,
    label_windows,
    preprocess,
    segment_windows,
)
from .shapley import ShapAttribution, shap_explain
from .stats import TTestResult, compare_report, paired_ttest, stars
from .synthetic import generate_synthetic_cohort
from .tree import TreeModel, train_tree

__version__ = "0.1.0"

__all__ = [
    "AffectState", "EmotionObservation", "TextSentiment", "aggregate_window",
    "analyze_text", "classify_frame", "fuse",
    "EnsembleModel", "train_boosted",
    "CausalGraph", "causal_discover",
    "ChartSpec", "render_artifact",
    "ChatService", "ExplanationService", "ServiceCore",
    "ModelRegistry", "train_cohort",
    "Counterfactual", "counterfactual_search",
    "ModelMetrics", "evaluate", "select_best",
    "HttpGateway", "MockGateway",
    "PromptBundle", "assemble", "quantize_importance", "quantize_probability",
    "Rule", "RulesModel", "extract_rules",
    "FeatureMatrix", "SensorRecord", "WindowFrame", "extract_features",
    "label_windows", "preprocess", "segment_windows",
    "ShapAttribution", "shap_explain",
    "TTestResult", "compare_report", "paired_ttest", "stars",
    "generate_synthetic_cohort",
    "TreeModel", "train_tree",
]
