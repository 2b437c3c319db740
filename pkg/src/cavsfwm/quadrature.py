"""Composite Gauss-Legendre rules on panels with geometric grading around peaks."""
import functools

import numpy as np


@functools.lru_cache(maxsize=32)
def _leggauss(n):
    x, w = np.polynomial.legendre.leggauss(n)
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


def panel_rule(breaks, n):
    """Nodes and weights of an ``n``-point Gauss-Legendre rule on every panel."""
    b = np.asarray(breaks, dtype=float)
    if b.size < 2:
        return np.empty(0), np.empty(0)
    x, w = _leggauss(int(n))
    mid = 0.5 * (b[1:] + b[:-1])
    half = 0.5 * (b[1:] - b[:-1])
    nodes = (mid[:, None] + half[:, None] * x[None, :]).ravel()
    weights = (half[:, None] * w[None, :]).ravel()
    return nodes, weights


def graded_breaks(centers, width, lo, hi, ratio=2.0, start=0.125):
    """Breakpoints in [lo, hi] clustering geometrically around each peak.

    Around every center ``c`` the points ``c +- width * start * ratio**k`` are
    added until they leave the interval.  The result always includes the ends.
    """
    pts = [lo, hi]
    if width > 0 and hi > lo:
        span = hi - lo
        kmax = int(np.ceil(np.log(max(span / (width * start), 1.0)) / np.log(ratio))) + 1
        offs = width * start * ratio ** np.arange(kmax + 1)
        for c in np.atleast_1d(centers):
            if c < lo - span or c > hi + span:
                continue
            pts.append(c)
            pts.extend(c + offs)
            pts.extend(c - offs)
    b = np.unique(np.clip(np.asarray(pts, dtype=float), lo, hi))
    # drop panels narrower than rounding noise
    keep = np.concatenate(([True], np.diff(b) > 1e-12 * max(abs(lo), abs(hi), 1.0)))
    b = b[keep]
    b[-1] = hi
    return b


def refine(breaks, factor=2):
    """Split every panel into ``factor`` equal parts."""
    b = np.asarray(breaks, dtype=float)
    t = np.linspace(0.0, 1.0, factor + 1)[:-1]
    out = (b[:-1, None] + (b[1:] - b[:-1])[:, None] * t[None, :]).ravel()
    return np.append(out, b[-1])
