"""Machine-learning utility and quantile coverage of synthetic data."""
import logging
import warnings

import numpy as np
from sklearn.exceptions import ConvergenceWarning
from sklearn.linear_model import LogisticRegression
from sklearn.metrics import f1_score

from distvae.data_core.schema import Schema
from distvae.data_core.table import apply_scaling, encode_rows, standardize
from distvae.errors import MetricError

logger = logging.getLogger(__name__)

RIDGE_LAMBDA = 1e-6
MARE_FLOOR = 1e-8


def features_without(table, target):
    """One-hot encoder features of every column except target."""
    keep = [j for j, name in enumerate(table.schema.names) if name != target]
    columns = tuple(table.schema.columns[j] for j in keep)
    return encode_rows(table.rows[:, keep], Schema(columns))


def fit_least_squares(X, y):
    """Normal-equation solution without intercept; ridge when X^T X is singular."""
    gram = X.T @ X
    rhs = X.T @ y
    k = gram.shape[0]
    if np.linalg.matrix_rank(gram) < k:
        logger.warning(f"Singular normal equations ({k} features); falling back to ridge {RIDGE_LAMBDA}")
        return np.linalg.solve(gram + RIDGE_LAMBDA * np.eye(k), rhs)
    try:
        return np.linalg.solve(gram, rhs)
    except np.linalg.LinAlgError:
        logger.warning(f"Normal equations failed to solve; falling back to ridge {RIDGE_LAMBDA}")
        return np.linalg.solve(gram + RIDGE_LAMBDA * np.eye(k), rhs)


def mare(y_true, y_pred):
    y_true = np.asarray(y_true, dtype=np.float64)
    y_pred = np.asarray(y_pred, dtype=np.float64)
    return float(np.mean(np.abs(y_true - y_pred) / np.maximum(np.abs(y_true), MARE_FLOOR)))


def fit_classifier(X, y):
    """Multinomial logistic regression without intercept, or None for single-class labels."""
    if np.unique(y).size < 2:
        return None
    model = LogisticRegression(fit_intercept=False, max_iter=1000)
    with warnings.catch_warnings():
        warnings.simplefilter('ignore', ConvergenceWarning)
        model.fit(X, y)
    return model


def mlu(real_train, real_test, synth, regression_target, classification_target):
    """(MARE, macro F1) of linear models fit on synth and scored on real_test.

    Tables are in native units; features are standardized with the real
    training statistics and one-hot encoded, the regression target stays native.
    """
    schema = real_train.schema
    if schema.column(regression_target).is_discrete:
        raise MetricError(f"regression target {regression_target} must be continuous or ordinal")
    if not schema.column(classification_target).is_discrete:
        raise MetricError(f"classification target {classification_target} must be discrete")
    if synth.n_rows == 0 or real_test.n_rows == 0:
        raise MetricError("mlu needs non-empty synthetic and test tables")
    if len(schema) < 2:
        raise MetricError("mlu needs at least one feature column besides the target")

    _, stats = standardize(real_train)
    synth_s = apply_scaling(synth, stats)
    test_s = apply_scaling(real_test, stats)

    reg = schema.index(regression_target)
    coef = fit_least_squares(features_without(synth_s, regression_target), synth.rows[:, reg])
    predicted = features_without(test_s, regression_target) @ coef
    mare_value = mare(real_test.rows[:, reg], predicted)

    cls = schema.index(classification_target)
    y_synth = synth.rows[:, cls].astype(np.int64)
    y_test = real_test.rows[:, cls].astype(np.int64)
    classifier = fit_classifier(features_without(synth_s, classification_target), y_synth)
    if classifier is None:
        logger.warning(f"Synthetic {classification_target} has a single class; predicting it everywhere")
        labels = np.full(y_test.shape, y_synth[0] if y_synth.size else 0)
    else:
        labels = classifier.predict(features_without(test_s, classification_target))
    f1 = float(f1_score(y_test, labels, average='macro', zero_division=0))
    logger.info(f"MLu: MARE={mare_value:.4f} F1={f1:.4f}")
    return mare_value, f1


def vrate(test_column, synth_column, alpha):
    """Fraction of test values strictly below the synthetic alpha-quantile."""
    if not 0 < alpha < 1:
        raise MetricError(f"alpha must lie in (0, 1), got {alpha}")
    test_column = np.asarray(test_column, dtype=np.float64).reshape(-1)
    synth_column = np.asarray(synth_column, dtype=np.float64).reshape(-1)
    if test_column.size == 0 or synth_column.size == 0:
        raise MetricError("vrate needs non-empty test and synthetic samples")
    threshold = np.quantile(synth_column, alpha)
    return float(np.mean(test_column < threshold))
