"""Gene-environment interaction power analysis toolkit."""

from ._core import (
    ConfigError,
    DataError,
    GenotypeData,
    auc,
    grm,
    lmm_scan,
    logistic,
    min_p_score,
    pca,
    penetrance,
    roc,
    run_cli,
    scan_logistic,
    waffect,
)

__all__ = [
    "ConfigError",
    "DataError",
    "GenotypeData",
    "auc",
    "grm",
    "lmm_scan",
    "logistic",
    "min_p_score",
    "pca",
    "penetrance",
    "roc",
    "run_cli",
    "scan_logistic",
    "waffect",
]

__version__ = "0.1.0"
