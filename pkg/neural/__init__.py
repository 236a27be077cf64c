"""
Minimal trainable-layer kit: dense, LSTM, GRU, 1-D convolution, dropout,
MSE, Adam and a finite-difference gradient checker
"""
from neural.gradcheck import gradient_check
from neural.layers import (
    GRU, LSTM, Conv1d, Dense, Dropout, Flatten, Reshape,
    conv1d_forward, dense_forward, dropout_apply, gru_step, lstm_step,
)
from neural.losses import mse_loss
from neural.network import Network, backward
from neural.optim import AdamState, adam_update
from neural.params import (
    Conv1dParams, DenseParams, GruParams, LstmParams, ParameterSet,
    load_parameters, save_parameters,
)
