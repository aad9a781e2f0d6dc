# Default configuration
config = {
    # training (Adam moments are the usual defaults)
    'epochs': 100,
    'batch_size': 256,
    'learning_rate': 0.001,
    'beta': 0.5,
    'latent_dim': 2,
    'knot_count': 10,
    'hidden_width': 64,
    'hidden_layers': 2,
    'seed': 0,
    'adam_beta1': 0.9,
    'adam_beta2': 0.999,
    'adam_eps': 1e-8,

    # data
    'clip_percentiles': False,

    # synthesis
    'ordinal_rounding': 'nearest_level',
    'cdf_mc_samples': 5000,
    'cdf_grid_points': 201,

    # evaluation
    'test_fraction': 0.2,
    'vrate_alphas': [0.1, 0.3, 0.5, 0.7, 0.9],
    'disclosure_k': [1, 10, 100],
}

# Keys every config mapping must carry after defaults are merged
required_keys = [
    'epochs', 'batch_size', 'learning_rate', 'beta', 'latent_dim',
    'knot_count', 'hidden_width', 'hidden_layers', 'seed',
]
