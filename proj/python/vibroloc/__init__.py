"""Floor-vibration footstep localization."""

from ._core import (
    ConfigError,
    DataError,
    NumericError,
    __version__,
    detect_events,
    fit_pca,
    kalman_filter,
    load_states,
    rms_normalize,
    run_experiment,
    simulate_campaign,
    train_ridge,
)

__all__ = [
    "ConfigError",
    "DataError",
    "NumericError",
    "__version__",
    "detect_events",
    "fit_pca",
    "kalman_filter",
    "load_states",
    "rms_normalize",
    "run_experiment",
    "simulate_campaign",
    "train_ridge",
]
