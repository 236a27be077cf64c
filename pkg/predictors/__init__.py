"""
Predictor families: builder, closed-form linear baseline and training loop
"""
from predictors.builder import Model, build_model, init_params, load_model, save_model
from predictors.linear import fit_linear_closed_form
from predictors.trainer import EarlyStopping, train
