"""Numpy reference implementation of the inner stepping loop.

One chunk advances the spectral state through ``noise.shape[0]`` steps of the
exponential Euler scheme

    c <- decay * (c + P (-dt * drift(u) + a_n(u) xi)),   u = S c,

keeping the linear part exact mode-wise.  The state update, the stochastic
convolution recursion, the martingale sum and both quadratic variation
accumulators are advanced in place; per-step scalar series are written into
caller-provided row slices, recorded from the state BEFORE each step (the
caller appends the final row).

The Cython extension mirrors these operations one for one.  Keep any change
to the arithmetic in sync there, in the same order, or the backends drift
apart by more than rounding.
"""
from __future__ import annotations

import math

import numpy as np

from .model import _fd_derivative

__all__ = ["run_chunk"]


def run_chunk(
    c,
    jc,
    mart,
    qv_realized,
    qv_predicted,
    noise,
    synth,
    proj,
    kmat,
    decay,
    b_factor,
    dt,
    dx,
    sqrt_L,
    vmax_limit,
    lam,
    inv_n,
    slope,
    mass_out,
    pos_out,
    db_out,
):
    """Advance the state in place; returns (status, bad_step).

    status 0: chunk completed; 1: velocity guard tripped; 2: non-finite
    field.  ``bad_step`` is the chunk-local step index (meaningless for
    status 0).  kmat may be None, which drops the transport term entirely.
    """
    nsteps, N = noise.shape
    for i in range(nsteps):
        u = synth @ c
        if not np.all(np.isfinite(u)):
            return 2, i
        mass_out[i] = sqrt_L * c[0]
        pos_out[i] = np.count_nonzero(u >= 0.0) / N
        cb = b_factor * c
        db_out[i] = math.sqrt(np.sum(cb * cb)) + math.sqrt(np.sum(c * c))
        sig = np.where(u < 0.0, 0.0, np.where(u < inv_n, slope * u, np.sqrt(lam * np.maximum(u, 0.0))))
        z = sig * noise[i]
        zc = proj @ z
        if kmat is not None:
            conv = kmat @ u
            vmax = np.max(np.abs(conv))
            if vmax > vmax_limit:
                return 1, i
            r = -dt * _fd_derivative(u * conv, dx) + z
            rc = proj @ r
        else:
            rc = zc
        np.multiply(decay, c + rc, out=c)
        np.multiply(decay, jc + zc, out=jc)
        mart += z
        qv_realized += z * z
        qv_predicted += sig * sig * (dt / dx)
    return 0, nsteps
