# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled inner stepping loop.

Semantics mirror _stepper_py.run_chunk operation for operation (same update
order, same branch structure); only summation order inside the BLAS matvecs
and the scalar reductions may differ from numpy, so the two backends agree
to rounding, not bitwise.  Keep any arithmetic change in sync with the
numpy version.
"""

import numpy as np

from libc.math cimport fabs, isfinite, sqrt

from scipy.linalg.cython_blas cimport dgemv


def run_chunk(
    double[::1] c,
    double[::1] jc,
    double[::1] mart,
    double[::1] qv_realized,
    double[::1] qv_predicted,
    double[:, ::1] noise,
    double[:, ::1] synth,
    double[:, ::1] proj,
    kmat,
    double[::1] decay,
    double[::1] b_factor,
    double dt,
    double dx,
    double sqrt_L,
    double vmax_limit,
    double lam,
    double inv_n,
    double slope,
    double[::1] mass_out,
    double[::1] pos_out,
    double[::1] db_out,
):
    """Advance the state in place; returns (status, bad_step).

    Same contract as the numpy implementation: status 0 done, 1 velocity
    guard, 2 non-finite field; kmat None drops the transport term.
    """
    cdef int nsteps = noise.shape[0]
    cdef int N = noise.shape[1]
    cdef int J = c.shape[0]
    cdef int has_kernel = 0 if kmat is None else 1
    cdef double[:, ::1] km = None
    if has_kernel:
        km = kmat

    scratch = np.empty((8, N))
    cdef double[:, ::1] w = scratch
    rc_zc = np.empty((2, J))
    cdef double[:, ::1] wj = rc_zc

    cdef int i, k, j, cntpos, status = 0, bad = nsteps
    cdef double sb, sc, uk, vmax, av, two_dx = 2.0 * dx, qs = dt / dx
    cdef double one = 1.0, zero = 0.0
    cdef int ione = 1
    cdef char trans = b'T'

    with nogil:
        for i in range(nsteps):
            # u = synth @ c (row-major synth seen as its transpose by BLAS)
            dgemv(&trans, &J, &N, &one, &synth[0, 0], &J, &c[0], &ione, &zero, &w[0, 0], &ione)
            for k in range(N):
                if not isfinite(w[0, k]):
                    status = 2
                    bad = i
                    break
            if status:
                break
            mass_out[i] = sqrt_L * c[0]
            cntpos = 0
            for k in range(N):
                if w[0, k] >= 0.0:
                    cntpos += 1
            pos_out[i] = cntpos / (<double> N)
            sb = 0.0
            sc = 0.0
            for j in range(J):
                sb += (b_factor[j] * c[j]) * (b_factor[j] * c[j])
                sc += c[j] * c[j]
            db_out[i] = sqrt(sb) + sqrt(sc)
            # sig = a_n(u), z = sig * xi
            for k in range(N):
                uk = w[0, k]
                if uk < 0.0:
                    w[1, k] = 0.0
                elif uk < inv_n:
                    w[1, k] = slope * uk
                else:
                    w[1, k] = sqrt(lam * uk)
                w[2, k] = w[1, k] * noise[i, k]
            # zc = proj @ z
            dgemv(&trans, &N, &J, &one, &proj[0, 0], &N, &w[2, 0], &ione, &zero, &wj[1, 0], &ione)
            if has_kernel:
                # conv = kmat @ u, velocity guard, drift, r = -dt drift + z
                dgemv(&trans, &N, &N, &one, &km[0, 0], &N, &w[0, 0], &ione, &zero, &w[3, 0], &ione)
                vmax = 0.0
                for k in range(N):
                    av = fabs(w[3, k])
                    if av > vmax:
                        vmax = av
                if vmax > vmax_limit:
                    status = 1
                    bad = i
                    break
                for k in range(N):
                    w[4, k] = w[0, k] * w[3, k]
                for k in range(1, N - 1):
                    w[5, k] = (w[4, k + 1] - w[4, k - 1]) / two_dx
                w[5, 0] = (-3.0 * w[4, 0] + 4.0 * w[4, 1] - w[4, 2]) / two_dx
                w[5, N - 1] = (3.0 * w[4, N - 1] - 4.0 * w[4, N - 2] + w[4, N - 3]) / two_dx
                for k in range(N):
                    w[6, k] = -dt * w[5, k] + w[2, k]
                dgemv(&trans, &N, &J, &one, &proj[0, 0], &N, &w[6, 0], &ione, &zero, &wj[0, 0], &ione)
            else:
                for j in range(J):
                    wj[0, j] = wj[1, j]
            for j in range(J):
                c[j] = decay[j] * (c[j] + wj[0, j])
                jc[j] = decay[j] * (jc[j] + wj[1, j])
            for k in range(N):
                mart[k] += w[2, k]
                qv_realized[k] += w[2, k] * w[2, k]
                qv_predicted[k] += w[1, k] * w[1, k] * qs
    return status, bad
