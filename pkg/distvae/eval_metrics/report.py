import json
import logging
from dataclasses import dataclass, field

import numpy as np

from distvae.data_core.table import apply_scaling, standardize
from distvae.errors import MetricError, SchemaError
from distvae.eval_metrics.privacy import attribute_disclosure, dcr, membership_inference
from distvae.eval_metrics.similarity import correlation_distance, ks_statistic, wasserstein1
from distvae.eval_metrics.utility import mlu, vrate
from settings.config import config as default_config

logger = logging.getLogger(__name__)

REPORT_FIELDS = ('mare', 'f1', 'ks_cont', 'ks_disc', 'wd1_cont', 'wd1_disc', 'corr_dist',
                 'dcr_rs', 'dcr_rr', 'dcr_ss', 'vrate', 'attr_disclosure_f1')
MIA_FIELDS = ('mia_accuracy', 'mia_auc')


@dataclass
class MetricReport:
    mare: float
    f1: float
    ks_cont: float
    ks_disc: float
    wd1_cont: float
    wd1_disc: float
    corr_dist: float
    dcr_rs: float
    dcr_rr: float
    dcr_ss: float
    vrate: dict = field(default_factory=dict)
    attr_disclosure_f1: dict = field(default_factory=dict)
    mia_accuracy: float = None
    mia_auc: float = None

    def to_dict(self):
        """Fixed field order; map keys as strings; MIA fields only when computed."""
        out = {}
        for name in REPORT_FIELDS:
            value = getattr(self, name)
            out[name] = {str(key): float(v) for key, v in value.items()} if isinstance(value, dict) else float(value)
        if self.mia_accuracy is not None:
            out['mia_accuracy'] = float(self.mia_accuracy)
            out['mia_auc'] = float(self.mia_auc)
        return out


def save_report(report, path):
    with open(path, 'w', encoding='utf-8') as file:
        json.dump(report.to_dict(), file, indent=2)
        file.write('\n')
    logger.info(f"Metric report written to {path}")


def _marginal_mean(metric, real, synth, indices, kind):
    if not indices:
        logger.warning(f"No {kind} columns; reporting 0.0 for the {kind} {metric.__name__}")
        return 0.0
    return float(np.mean([metric(real.rows[:, j], synth.rows[:, j]) for j in indices]))


def default_secret_columns(schema, regression_target, classification_target):
    """Discrete columns other than the MLu targets, or every discrete column if that leaves none."""
    discrete = [schema.columns[j].name for j in schema.discrete_indices]
    secrets = [name for name in discrete if name not in (regression_target, classification_target)]
    return secrets or discrete


def evaluate(real_train, real_test, synth, regression_target, classification_target, checkpoint=None,
             with_mia=False, known_columns=None, secret_columns=None, seed=0,
             vrate_alphas=None, disclosure_k=None):
    """Every metric on native-unit tables; distance-based metrics use real-train standardization."""
    schema = real_train.schema
    if real_test.schema != schema or synth.schema != schema:
        raise SchemaError("real-train, real-test and synthetic tables must share one schema")
    if with_mia and checkpoint is None:
        raise MetricError("membership inference needs the target model checkpoint")
    vrate_alphas = default_config['vrate_alphas'] if vrate_alphas is None else vrate_alphas
    disclosure_k = default_config['disclosure_k'] if disclosure_k is None else disclosure_k

    real_s, stats = standardize(real_train)
    synth_s = apply_scaling(synth, stats)
    cont, disc = schema.continuous_indices, schema.discrete_indices

    mare_value, f1 = mlu(real_train, real_test, synth, regression_target, classification_target)
    rs, rr, ss = dcr(real_s, synth_s)

    vrates = {}
    for alpha in vrate_alphas:
        if cont:
            vrates[alpha] = float(np.mean([vrate(real_test.rows[:, j], synth.rows[:, j], alpha) for j in cont]))
    if not cont:
        logger.warning("No continuous columns; Vrate map left empty")

    known_columns = list(known_columns) if known_columns else schema.continuous_names
    secret_columns = (list(secret_columns) if secret_columns
                      else default_secret_columns(schema, regression_target, classification_target))
    disclosure = {}
    if secret_columns and known_columns:
        for k in disclosure_k:
            disclosure[k] = attribute_disclosure(real_s, synth_s, known_columns, secret_columns, k)
    else:
        logger.warning("No known or secret columns; attribute disclosure map left empty")

    report = MetricReport(
        mare=mare_value,
        f1=f1,
        ks_cont=_marginal_mean(ks_statistic, real_s, synth_s, cont, 'continuous'),
        ks_disc=_marginal_mean(ks_statistic, real_s, synth_s, disc, 'discrete'),
        wd1_cont=_marginal_mean(wasserstein1, real_s, synth_s, cont, 'continuous'),
        wd1_disc=_marginal_mean(wasserstein1, real_s, synth_s, disc, 'discrete'),
        corr_dist=correlation_distance(real_s, synth_s),
        dcr_rs=rs,
        dcr_rr=rr,
        dcr_ss=ss,
        vrate=vrates,
        attr_disclosure_f1=disclosure,
    )
    if with_mia:
        report.mia_accuracy, report.mia_auc = membership_inference(
            checkpoint, real_train, real_test, classification_target, seed)
    logger.info(f"Evaluation done: KS cont={report.ks_cont:.4f} CorrDist={report.corr_dist:.4f}")
    return report
