"""Phishing URL detection with a deep Q-network over 14 binary URL features."""

from .dataset import LabeledUrl, SplitPlan, VectorizedDataset, kfold, load_csv, split, vectorize, write_csv
from .dqn_agent import AgentConfig, Experience, ReplayMemory, TrainingStats, classify, reward, train
from .metrics import ConfusionMatrix, RelevanceReport, confusion, report
from .neuralnet import NetworkParams, NetworkSpec, init_network, load_params, save_params
from .url_lexer import (
    FEATURE_NAMES,
    FeatureVector,
    HostEvidence,
    MissingEvidencePolicy,
    ParsedUrl,
    extract_features,
    parse_url,
)

__version__ = "0.1.0"
