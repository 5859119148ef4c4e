"""Training side of the phaseline estimators.

Prepares datasets through the phaseline command line, trains the two
convolutional difference estimators with torch, and exports weights and
parity fixtures in the shared binary formats.
"""

from .dataset import Segment, load_dataset, load_segment, prepare_dataset
from .features import causal_log_magnitude, feature_blocks
from .model import DifferenceEstimator, export_model, import_model
from .parity import export_parity_fixture, forward_grid, inference_side_outputs
from .train import (
    TrainConfig,
    TrainingDivergedError,
    cosine_loss_sum,
    train_and_export,
    train_model,
    training_awe,
)

__version__ = "0.1.0"
