from .cells import (
    DenseLayer,
    GruCellParams,
    LstmCellParams,
    bce_loss,
    bce_sigmoid_grad,
    dense_backward,
    dense_forward,
    dropout_apply,
    gru_cell_forward,
    gru_sequence_backward,
    gru_sequence_forward,
    lstm_cell_forward,
    lstm_sequence_backward,
    lstm_sequence_forward,
    sigmoid,
)
from .optim import AdamState, adam_step
from .training import (
    NonFiniteError,
    TrainHyperparams,
    TrainResult,
    compute_gradients,
    finite_diff_grad,
    max_relative_error,
    scalar_finite_diff,
    train,
)
