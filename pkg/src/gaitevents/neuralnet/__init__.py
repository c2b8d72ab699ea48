from .layers import (GRU, LSTM, Bidirectional, Concat, Conv1D, Dense, Flatten, Layer,
                     LinearActivation, MaxPool1D, ReLU, Reshape, SelfAttention, Sequential,
                     ShapeError, StateError, TimeDistributed)
from .model import (Adam, EarlyStopping, Model, TrainConfig, TrainHistory, TrainingError,
                    evaluate_loss, load_checkpoint, mse, predict, save_checkpoint, train)

__all__ = [
    "GRU", "LSTM", "Bidirectional", "Concat", "Conv1D", "Dense", "Flatten", "Layer",
    "LinearActivation", "MaxPool1D", "ReLU", "Reshape", "SelfAttention", "Sequential",
    "ShapeError", "StateError", "TimeDistributed",
    "Adam", "EarlyStopping", "Model", "TrainConfig", "TrainHistory", "TrainingError",
    "evaluate_loss", "load_checkpoint", "mse", "predict", "save_checkpoint", "train",
]
