"""Pure numpy fallback for the compiled JSA kernel."""
import numpy as np


def jsa_sum(ksum, weight, group, ksub, length, num_threads=1, chunk=4096):
    """out[p] = sum_n weight[g, n] * phi(length * (ksum[g, n] - ksub[p])).

    ``g = group[p]`` and ``phi(x) = sinc(x/2) exp(i x/2)``; ``num_threads`` is
    accepted for signature parity and ignored.
    """
    ksub = np.asarray(ksub, dtype=float)
    group = np.asarray(group)
    out = np.empty(ksub.shape[0], dtype=complex)
    for start in range(0, ksub.shape[0], chunk):
        sl = slice(start, start + chunk)
        g = group[sl]
        y = 0.5 * length * (ksum[g] - ksub[sl, None])
        small = np.abs(y) < 1e-8
        ysafe = np.where(small, 1.0, y)
        sc = np.where(small, 1.0 - y * y / 6.0, np.sin(ysafe) / ysafe)
        wt = weight[g] * sc
        out.real[sl] = (wt * np.cos(y)).sum(axis=1)
        out.imag[sl] = (wt * np.sin(y)).sum(axis=1)
    return out
