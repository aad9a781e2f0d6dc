"""Command line: split, train, generate, cdf and evaluate.

Exit codes are 0 on success, 1 when a command fails (a DistVAEError or an I/O error) and 2 for usage
errors (argparse).
"""
import argparse
import json
import logging

from distvae.data_core.schema import load_schema
from distvae.data_core.table import load_csv, train_test_split, write_csv
from distvae.distvae_model.checkpoint import load_checkpoint, save_checkpoint
from distvae.distvae_model.config import TrainConfig
from distvae.distvae_model.training import prepare_training_table, train
from distvae.errors import ConfigError, DistVAEError
from distvae.eval_metrics.report import evaluate, save_report
from distvae.synthesis.cdf import default_grid, estimate_cdf, export_cdf
from distvae.synthesis.sampling import generate
from settings.config import config as default_config

logger = logging.getLogger(__name__)

# CLI flag -> TrainConfig key
TRAIN_FLAGS = {
    'epochs': 'epochs',
    'batch_size': 'batch_size',
    'lr': 'learning_rate',
    'beta': 'beta',
    'latent_dim': 'latent_dim',
    'knots': 'knot_count',
    'hidden': 'hidden_width',
    'hidden_layers': 'hidden_layers',
}


def non_negative_int(text):
    value = int(text)
    if value < 0:
        raise argparse.ArgumentTypeError(f"expected a non-negative integer, got {text}")
    return value


def positive_int(text):
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return value


def column_list(text):
    return [name.strip() for name in text.split(',') if name.strip()]


def read_config_file(path):
    try:
        with open(path, 'r', encoding='utf-8') as file:
            overrides = json.load(file)
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}")
    except json.JSONDecodeError as err:
        raise ConfigError(f"config file {path} is not valid JSON: {err}")
    if not isinstance(overrides, dict):
        raise ConfigError(f"config file {path} must hold a JSON object")
    return overrides


def train_config_from_args(args):
    """settings defaults < --config file < individual flags."""
    overrides = read_config_file(args.config) if args.config else {}
    for flag, key in TRAIN_FLAGS.items():
        value = getattr(args, flag)
        if value is not None:
            overrides[key] = value
    overrides['seed'] = args.seed
    return TrainConfig.from_mapping(overrides)


def cmd_train(args):
    config = train_config_from_args(args)
    schema = load_schema(args.schema)
    table = prepare_training_table(load_csv(args.data, schema), config)

    def print_epoch(epoch, loss):
        print(f"epoch {epoch}: total={loss.total:.6f} crps={loss.crps_recon:.6f} "
              f"discrete={loss.discrete_recon:.6f} kl={loss.kl:.6f}")

    checkpoint = train(table, config, on_epoch=print_epoch)
    save_checkpoint(checkpoint, args.out)


def cmd_split(args):
    table = load_csv(args.data, load_schema(args.schema))
    train_part, test_part = train_test_split(table, args.test_fraction, args.seed)
    write_csv(train_part, args.train_out)
    write_csv(test_part, args.test_out)


def cmd_generate(args):
    checkpoint = load_checkpoint(args.model)
    write_csv(generate(checkpoint, args.n, args.seed), args.out)


def cmd_cdf(args):
    checkpoint = load_checkpoint(args.model)
    grid = default_grid(checkpoint, args.column, args.points)
    curve = estimate_cdf(checkpoint, args.column, grid, args.mc, args.seed)
    k = list(checkpoint.scaling.names).index(args.column)
    export_cdf(curve, args.out, loc=checkpoint.scaling.mean[k], scale=checkpoint.scaling.stddev[k])


def cmd_evaluate(args):
    schema = load_schema(args.schema)
    real_train = load_csv(args.real_train, schema)
    real_test = load_csv(args.real_test, schema)
    synth = load_csv(args.synth, schema)
    checkpoint = load_checkpoint(args.model) if args.model else None
    report = evaluate(real_train, real_test, synth, args.regression_target, args.classification_target,
                      checkpoint=checkpoint, with_mia=args.with_mia, known_columns=args.known_columns,
                      secret_columns=args.secret_columns, seed=args.seed)
    save_report(report, args.out)


def build_parser():
    parser = argparse.ArgumentParser(prog='distvae', description='Distributional VAE synthesizer for tabular data')
    commands = parser.add_subparsers(dest='command', required=True)

    p = commands.add_parser('split', help='split a CSV into real-train and real-test parts')
    p.add_argument('--data', required=True)
    p.add_argument('--schema', required=True)
    p.add_argument('--test-fraction', dest='test_fraction', type=float, default=default_config['test_fraction'])
    p.add_argument('--seed', type=non_negative_int, default=0)
    p.add_argument('--train-out', dest='train_out', default='train.csv')
    p.add_argument('--test-out', dest='test_out', default='test.csv')
    p.set_defaults(handler=cmd_split)

    p = commands.add_parser('train', help='train a model and write its checkpoint')
    p.add_argument('--data', required=True)
    p.add_argument('--schema', required=True)
    p.add_argument('--seed', required=True, type=non_negative_int)
    p.add_argument('--out', default='model.ckpt')
    p.add_argument('--config', help='JSON file overriding the training defaults')
    p.add_argument('--epochs', type=positive_int)
    p.add_argument('--batch-size', dest='batch_size', type=positive_int)
    p.add_argument('--lr', type=float)
    p.add_argument('--beta', type=float)
    p.add_argument('--latent-dim', dest='latent_dim', type=positive_int)
    p.add_argument('--knots', type=positive_int)
    p.add_argument('--hidden', type=positive_int)
    p.add_argument('--hidden-layers', dest='hidden_layers', type=positive_int)
    p.set_defaults(handler=cmd_train)

    p = commands.add_parser('generate', help='write synthetic rows as CSV')
    p.add_argument('--model', required=True)
    p.add_argument('--n', required=True, type=non_negative_int)
    p.add_argument('--seed', required=True, type=non_negative_int)
    p.add_argument('--out', default='synthetic.csv')
    p.set_defaults(handler=cmd_generate)

    p = commands.add_parser('cdf', help="export a column's estimated CDF")
    p.add_argument('--model', required=True)
    p.add_argument('--column', required=True)
    p.add_argument('--mc', type=positive_int, default=default_config['cdf_mc_samples'])
    p.add_argument('--points', type=positive_int, default=default_config['cdf_grid_points'])
    p.add_argument('--seed', type=non_negative_int, default=0)
    p.add_argument('--out', default='cdf.csv')
    p.set_defaults(handler=cmd_cdf)

    p = commands.add_parser('evaluate', help='compute the metric report')
    p.add_argument('--real-train', dest='real_train', required=True)
    p.add_argument('--real-test', dest='real_test', required=True)
    p.add_argument('--synth', required=True)
    p.add_argument('--schema', required=True)
    p.add_argument('--regression-target', dest='regression_target', required=True)
    p.add_argument('--classification-target', dest='classification_target', required=True)
    p.add_argument('--model', help='target checkpoint, needed by --with-mia')
    p.add_argument('--with-mia', dest='with_mia', action='store_true')
    p.add_argument('--known-columns', dest='known_columns', type=column_list)
    p.add_argument('--secret-columns', dest='secret_columns', type=column_list)
    p.add_argument('--seed', type=non_negative_int, default=0)
    p.add_argument('--out', default='report.json')
    p.set_defaults(handler=cmd_evaluate)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO)
    try:
        args.handler(args)
    except DistVAEError as err:
        logger.error(f"{args.command} failed: {err}")
        return 1
    except (OSError, ValueError) as err:
        logger.error(f"{args.command} failed: {err}")
        return 1
    return 0
