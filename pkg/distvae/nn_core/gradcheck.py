import numpy as np


def central_difference(loss_fn, param, h=1e-5):
    """Numerical gradient of loss_fn() w.r.t. every entry of param (perturbed in place)."""
    grad = np.zeros_like(param)
    flat = param.reshape(-1)
    out = grad.reshape(-1)
    for k in range(flat.size):
        saved = flat[k]
        flat[k] = saved + h
        up = loss_fn()
        flat[k] = saved - h
        down = loss_fn()
        flat[k] = saved
        out[k] = (up - down) / (2.0 * h)
    return grad


def relative_error(analytic, numeric, floor=1e-8):
    """Block-wise relative error: max |a - n| over max(|a|, |n|)."""
    analytic = np.asarray(analytic, dtype=np.float64)
    numeric = np.asarray(numeric, dtype=np.float64)
    scale = max(np.max(np.abs(analytic), initial=0.0), np.max(np.abs(numeric), initial=0.0), floor)
    return float(np.max(np.abs(analytic - numeric), initial=0.0) / scale)
