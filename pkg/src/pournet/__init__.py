"""Sequence learning for pouring: predict container weight curves from
rotation angle and container/material features with from-scratch stacked
LSTM/GRU networks, and score predictions with exact DTW and FastDTW."""

from .data import (NormalizationSpec, PaddedBatch, PouringSequence,
                   RawForceReading, StaticFeatures, TimeStep,
                   average_initial_force, fit_normalization, load_dataset,
                   pad_and_batch, save_dataset, sensed_force, split_dataset)
from .dtw import (DTWResult, TestsetScore, dtw_exact, export_alignment,
                  fastdtw, score_testset, validate_warp_path)
from .network import (CellKind, ForwardCache, GateParams, GRUCellParams,
                      LSTMCellParams, NetworkConfig, NetworkParams,
                      gru_cell_forward, init_params, load_checkpoint,
                      lstm_cell_forward, network_backward, network_forward,
                      numerical_gradient, save_checkpoint)
from .optim import AdamState, NonFiniteGradientError, adam_step, init_adam, mse_loss
from .synth import SynthParams, generate_dataset, generate_sequence
from .training import (TrainConfig, TrainingDivergedError, TrainReport,
                       evaluate_model, export_loss_curve, export_prediction,
                       predict, train)

__version__ = "0.1.0"
