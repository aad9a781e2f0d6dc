"""Privacy metrics: distance to closest record, membership inference and attribute disclosure."""
import logging

import numpy as np
from sklearn.metrics import accuracy_score, f1_score, roc_auc_score
from sklearn.neighbors import NearestNeighbors

from distvae.distvae_model.training import prepare_training_table, train
from distvae.errors import MetricError, SchemaError
from distvae.eval_metrics.utility import fit_classifier
from distvae.synthesis.sampling import generate, posterior_means

logger = logging.getLogger(__name__)

DCR_PERCENTILE = 5


def _nearest_distances(reference, queries, skip_self):
    n_neighbors = 2 if skip_self else 1
    index = NearestNeighbors(n_neighbors=n_neighbors).fit(reference)
    distances, _ = index.kneighbors(queries)
    return distances[:, n_neighbors - 1]


def dcr(real, synth):
    """5th percentiles of nearest-record distances (real->synth, real->real, synth->synth).

    Continuous/ordinal columns only, in whatever units the tables carry
    (standardized in the evaluation pipeline). Self-pairs are excluded from
    the within-table distances.
    """
    if real.schema.continuous_indices != synth.schema.continuous_indices:
        raise SchemaError("dcr needs tables with the same continuous columns")
    if not real.schema.continuous_indices:
        raise MetricError("dcr needs at least one continuous column")
    if real.n_rows < 2 or synth.n_rows < 2:
        raise MetricError(f"dcr needs at least 2 rows per table, got {real.n_rows} and {synth.n_rows}")
    a, b = real.continuous_block(), synth.continuous_block()
    rs = np.percentile(_nearest_distances(b, a, skip_self=False), DCR_PERCENTILE)
    rr = np.percentile(_nearest_distances(a, a, skip_self=True), DCR_PERCENTILE)
    ss = np.percentile(_nearest_distances(b, b, skip_self=True), DCR_PERCENTILE)
    logger.info(f"DCR: R&S={rs:.4f} R={rr:.4f} S={ss:.4f}")
    return float(rs), float(rr), float(ss)


def score_attack(membership, scores):
    """(accuracy at a 0.5 threshold, ROC AUC) of membership scores."""
    membership = np.asarray(membership, dtype=np.int64)
    scores = np.asarray(scores, dtype=np.float64)
    if np.unique(membership).size < 2:
        raise MetricError("membership labels must contain both members and non-members")
    accuracy = accuracy_score(membership, (scores >= 0.5).astype(np.int64))
    return float(accuracy), float(roc_auc_score(membership, scores))


def fit_attack_models(representations, membership, classes):
    """One in/out classifier per class value; classes whose records carry one label are skipped."""
    models = {}
    for c in np.unique(classes):
        mask = classes == c
        model = fit_classifier(representations[mask], membership[mask])
        if model is None:
            logger.warning(f"Attack model for class {int(c)} skipped: its shadow records carry one label")
        models[int(c)] = model
    return models


def attack_scores(models, representations, classes):
    """Member probability per record from its class's attack model (0.5 when skipped)."""
    scores = np.full(len(classes), 0.5)
    for c, model in models.items():
        mask = classes == c
        if model is not None and mask.any():
            scores[mask] = model.predict_proba(representations[mask])[:, 1]
    return scores


def membership_inference(checkpoint, real_train, real_test, classification_target=None, seed=0):
    """Shadow-model membership attack on the encoder representations.

    Shadow train/test sets are generated from the target model and a shadow
    DistVAE is trained on the shadow train set with the target's config. The
    attack classifiers learn in/out from shadow posterior means, one per class
    of classification_target (a single model when it is None), and are scored
    on a balanced sample of real training members and real test non-members.
    """
    if real_train.n_rows == 0 or real_test.n_rows == 0:
        raise MetricError("membership_inference needs non-empty real train and test tables")
    config = checkpoint.config
    shadow_train = generate(checkpoint, real_train.n_rows, seed)
    shadow_test = generate(checkpoint, real_test.n_rows, seed + 1)
    shadow = train(prepare_training_table(shadow_train, config), config)
    logger.info(f"Shadow model trained on {shadow_train.n_rows} generated rows")

    def classes_of(table):
        if classification_target is None:
            return np.zeros(table.n_rows, dtype=np.int64)
        return table.column(classification_target).astype(np.int64)

    representations = np.vstack([posterior_means(shadow, shadow_train), posterior_means(shadow, shadow_test)])
    membership = np.r_[np.ones(shadow_train.n_rows, dtype=np.int64), np.zeros(shadow_test.n_rows, dtype=np.int64)]
    classes = np.r_[classes_of(shadow_train), classes_of(shadow_test)]
    models = fit_attack_models(representations, membership, classes)

    m = min(real_train.n_rows, real_test.n_rows)
    rng = np.random.default_rng(seed)
    members = real_train.take(np.sort(rng.choice(real_train.n_rows, m, replace=False)))
    outsiders = real_test.take(np.sort(rng.choice(real_test.n_rows, m, replace=False)))
    eval_reps = np.vstack([posterior_means(checkpoint, members), posterior_means(checkpoint, outsiders)])
    eval_classes = np.r_[classes_of(members), classes_of(outsiders)]
    truth = np.r_[np.ones(m, dtype=np.int64), np.zeros(m, dtype=np.int64)]
    accuracy, auc = score_attack(truth, attack_scores(models, eval_reps, eval_classes))
    logger.info(f"Membership inference: accuracy={accuracy:.4f} AUC={auc:.4f}")
    return accuracy, auc


def majority_vote(labels, levels):
    """Row-wise most frequent label of an (n, k) matrix; ties go to the lowest level."""
    labels = np.asarray(labels, dtype=np.int64)
    counts = np.zeros((labels.shape[0], levels), dtype=np.int64)
    np.add.at(counts, (np.arange(labels.shape[0])[:, None], labels), 1)
    return np.argmax(counts, axis=1)


def attribute_disclosure(real_train, synth, known_columns, secret_columns, k):
    """Macro F1 of recovering secret discrete columns from the k nearest synthetic records.

    Neighbours are found by L2 distance over the known continuous/ordinal
    columns, which should be standardized.
    """
    schema = real_train.schema
    if synth.schema != schema:
        raise SchemaError("attribute_disclosure needs tables with the same schema")
    if not known_columns or not secret_columns:
        raise MetricError("attribute_disclosure needs known and secret columns")
    if k < 1:
        raise MetricError(f"k must be >= 1, got {k}")
    for name in known_columns:
        if schema.column(name).is_discrete:
            raise MetricError(f"known column {name} must be continuous or ordinal")
    for name in secret_columns:
        if not schema.column(name).is_discrete:
            raise MetricError(f"secret column {name} must be discrete")
    if synth.n_rows == 0 or real_train.n_rows == 0:
        raise MetricError("attribute_disclosure needs non-empty tables")
    if k > synth.n_rows:
        logger.warning(f"k={k} exceeds the {synth.n_rows} synthetic rows; clamping")
        k = synth.n_rows

    known = [schema.index(name) for name in known_columns]
    index = NearestNeighbors(n_neighbors=k).fit(synth.rows[:, known])
    neighbours = index.kneighbors(real_train.rows[:, known], return_distance=False)

    scores = []
    for name in secret_columns:
        j = schema.index(name)
        votes = synth.rows[:, j].astype(np.int64)[neighbours]
        predicted = majority_vote(votes, schema.columns[j].levels)
        truth = real_train.rows[:, j].astype(np.int64)
        scores.append(f1_score(truth, predicted, average='macro', zero_division=0))
    return float(np.mean(scores))
