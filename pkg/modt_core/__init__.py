"""
MoDT Core Module
Mixture of Decision Trees: weighted CART experts, linear softmax gating, EM training.
"""

from .data import Dataset, load_dataset, train_test_split
from .errors import ModtError
from .forest import RandomForest, fit_random_forest, rf_predict
from .gating import GateMode, GatingModel, estimate_expert_count, select_gating_features
from .model_io import load_model, save_model
from .predict import MoDTModel, evaluate, explain, model_complexity, predict, predict_with_experts
from .search import BenchmarkProtocol, SearchSpace, benchmark, random_search
from .trainer import TrainConfig, TrainingTrace, train
from .tree import DecisionTree, fit_tree

__all__ = [
    'Dataset', 'load_dataset', 'train_test_split',
    'ModtError',
    'RandomForest', 'fit_random_forest', 'rf_predict',
    'GateMode', 'GatingModel', 'estimate_expert_count', 'select_gating_features',
    'load_model', 'save_model',
    'MoDTModel', 'evaluate', 'explain', 'model_complexity', 'predict', 'predict_with_experts',
    'BenchmarkProtocol', 'SearchSpace', 'benchmark', 'random_search',
    'TrainConfig', 'TrainingTrace', 'train',
    'DecisionTree', 'fit_tree',
]
