from .hybrid import HybridConfig, HybridModel, hybrid_forward, predict_window
from .logistic import (
    LogisticConfig,
    LogisticModel,
    lag_features,
    logistic_fit,
    logistic_predict,
    walk_forward_predict,
)
from .recurrent import RecurrentConfig, RecurrentModel, build_baseline_recurrent
