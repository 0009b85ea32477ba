"""Compiled per-event kernels behind the streaming engine.

Same math as the plain modules (model/ekf/pseudo_meas/assoc), restated with
scalar arithmetic and preallocated scratch so one event costs on the order
of a microsecond. tests/test_engine.py pins this path against the reference
implementation on identical streams.

State rows are always 10 wide; dimension d in {8, 10} selects how much is
live. Buffer records are rows [px-, py-, theta-, xi_x, xi_y, rho].
"""

import math

import numpy as np
from numba import njit


@njit(cache=True)
def _flow(pbx, pby, wx, wy, wz, f):
    fx = wx * pbx * pby / f - wy * (f + pbx * pbx / f) + wz * pby
    fy = wx * (f + pby * pby / f) - wy * pbx * pby / f - wz * pbx
    return fx, fy


@njit(cache=True)
def _predict_inplace(xs, covs, d, dt, wx, wy, wz, f, cx, cy, Q, F, T2):
    pbx = xs[0] - cx
    pby = xs[1] - cy
    fx, fy = _flow(pbx, pby, wx, wy, wz, f)
    a00 = (pby * wx - 2.0 * pbx * wy) / f
    a01 = wz + pbx * wx / f
    a10 = -wz - pby * wy / f
    a11 = (2.0 * pby * wx - pbx * wy) / f

    v0 = xs[2]
    v1 = xs[3]
    xs[0] = xs[0] + (v0 + fx) * dt
    xs[1] = xs[1] + (v1 + fy) * dt
    xs[2] = v0 + dt * wz * v1
    xs[3] = v1 - dt * wz * v0
    xs[4] = xs[4] + (xs[5] - wz) * dt
    if d == 10:
        d0 = xs[8]
        d1 = xs[9]
        xs[8] = d0 + dt * wz * d1
        xs[9] = d1 - dt * wz * d0

    for i in range(d):
        for j in range(d):
            F[i, j] = 1.0 if i == j else 0.0
    F[0, 0] += dt * a00
    F[0, 1] += dt * a01
    F[1, 0] += dt * a10
    F[1, 1] += dt * a11
    F[0, 2] = dt
    F[1, 3] = dt
    F[2, 3] = dt * wz
    F[3, 2] = -dt * wz
    F[4, 5] = dt
    if d == 10:
        F[8, 9] = dt * wz
        F[9, 8] = -dt * wz

    for i in range(d):
        for j in range(d):
            acc = 0.0
            for k in range(d):
                acc += F[i, k] * covs[k, j]
            T2[i, j] = acc
    for i in range(d):
        for j in range(d):
            acc = 0.0
            for k in range(d):
                acc += T2[i, k] * F[j, k]
            covs[i, j] = acc + dt * Q[i, j]


@njit(cache=True)
def _update_inplace(xs, covs, d, xi0, xi1, rho, nf,
                    bufrec, nbuf, bcount, beta, lam_floor,
                    C, K, B, T1, T2, S3, SI):
    warm = bcount >= nbuf
    m = 3 if warm else 2
    for r in range(m):
        for c in range(d):
            C[r, c] = 0.0

    th = xs[4]
    l1 = xs[6]
    l2 = xs[7]
    cth = math.cos(th)
    sth = math.sin(th)
    il1 = 1.0 / l1
    il2 = 1.0 / l2
    li00 = cth * cth * il1 + sth * sth * il2
    li11 = sth * sth * il1 + cth * cth * il2
    li01 = cth * sth * (il1 - il2)

    w0 = xi0 - xs[0]
    w1 = xi1 - xs[1]
    if nf:
        w0 -= rho * xs[8]
        w1 -= rho * xs[9]
    h0 = li00 * w0 + li01 * w1
    h1 = li01 * w0 + li11 * w1

    C[0, 0] = -li00
    C[0, 1] = -li01
    C[1, 0] = -li01
    C[1, 1] = -li11
    gdiff = il1 - il2
    s2t = 2.0 * sth * cth
    c2t = cth * cth - sth * sth
    C[0, 4] = gdiff * (-s2t * w0 + c2t * w1)
    C[1, 4] = gdiff * (c2t * w0 + s2t * w1)
    u0 = cth * w0 + sth * w1
    u1 = -sth * w0 + cth * w1
    C[0, 6] = -cth * u0 * il1 * il1
    C[1, 6] = -sth * u0 * il1 * il1
    C[0, 7] = sth * u1 * il2 * il2
    C[1, 7] = -cth * u1 * il2 * il2
    if nf:
        C[0, 8] = -rho * li00
        C[0, 9] = -rho * li01
        C[1, 8] = -rho * li01
        C[1, 9] = -rho * li11

    r22 = 1.0
    z2 = 0.0
    if warm:
        inv1b = 1.0 / (1.0 + beta)
        gsum = 0.0
        zl0 = 0.0
        zl1 = 0.0
        for j in range(nbuf):
            wj0 = bufrec[j, 3] - bufrec[j, 0]
            wj1 = bufrec[j, 4] - bufrec[j, 1]
            if nf:
                wj0 -= bufrec[j, 5] * xs[8]
                wj1 -= bufrec[j, 5] * xs[9]
            cj = math.cos(bufrec[j, 2])
            sj = math.sin(bufrec[j, 2])
            uj0 = cj * wj0 + sj * wj1
            uj1 = -sj * wj0 + cj * wj1
            chi0 = (cj * uj0 * il1 - sj * uj1 * il2) * inv1b
            chi1 = (sj * uj0 * il1 + cj * uj1 * il2) * inv1b
            gsum += chi0 * chi0 + chi1 * chi1
            zl0 += (chi0 * cj + chi1 * sj) * uj0 * il1 * il1
            zl1 += (-chi0 * sj + chi1 * cj) * uj1 * il2 * il2
        C[2, 6] = -2.0 * inv1b * zl0
        C[2, 7] = -2.0 * inv1b * zl1
        z2 = 2.0 * nbuf - gsum
        r22 = 4.0 * nbuf
    z0 = -h0
    z1 = -h1

    for r in range(m):
        for c in range(d):
            acc = 0.0
            for k in range(d):
                acc += C[r, k] * covs[k, c]
            T1[r, c] = acc
    for r in range(m):
        for c in range(m):
            acc = 0.0
            for k in range(d):
                acc += T1[r, k] * C[c, k]
            S3[r, c] = acc
    S3[0, 0] += 1.0
    S3[1, 1] += 1.0
    if m == 3:
        S3[2, 2] += r22

    if m == 2:
        det = S3[0, 0] * S3[1, 1] - S3[0, 1] * S3[1, 0]
        if not (abs(det) > 1e-300 and math.isfinite(det)):
            return False
        idet = 1.0 / det
        SI[0, 0] = S3[1, 1] * idet
        SI[1, 1] = S3[0, 0] * idet
        SI[0, 1] = -S3[0, 1] * idet
        SI[1, 0] = -S3[1, 0] * idet
    else:
        c00 = S3[1, 1] * S3[2, 2] - S3[1, 2] * S3[2, 1]
        c01 = S3[1, 2] * S3[2, 0] - S3[1, 0] * S3[2, 2]
        c02 = S3[1, 0] * S3[2, 1] - S3[1, 1] * S3[2, 0]
        det = S3[0, 0] * c00 + S3[0, 1] * c01 + S3[0, 2] * c02
        if not (abs(det) > 1e-300 and math.isfinite(det)):
            return False
        idet = 1.0 / det
        SI[0, 0] = c00 * idet
        SI[1, 0] = c01 * idet
        SI[2, 0] = c02 * idet
        SI[0, 1] = (S3[0, 2] * S3[2, 1] - S3[0, 1] * S3[2, 2]) * idet
        SI[1, 1] = (S3[0, 0] * S3[2, 2] - S3[0, 2] * S3[2, 0]) * idet
        SI[2, 1] = (S3[0, 1] * S3[2, 0] - S3[0, 0] * S3[2, 1]) * idet
        SI[0, 2] = (S3[0, 1] * S3[1, 2] - S3[0, 2] * S3[1, 1]) * idet
        SI[1, 2] = (S3[0, 2] * S3[1, 0] - S3[0, 0] * S3[1, 2]) * idet
        SI[2, 2] = (S3[0, 0] * S3[1, 1] - S3[0, 1] * S3[1, 0]) * idet

    # K = covs @ C.T @ SI = T1.T @ SI
    for i in range(d):
        for r in range(m):
            acc = 0.0
            for c in range(m):
                acc += T1[c, i] * SI[c, r]
            if not math.isfinite(acc):
                return False
            K[i, r] = acc

    for i in range(d):
        corr = K[i, 0] * z0 + K[i, 1] * z1
        if m == 3:
            corr += K[i, 2] * z2
        xs[i] += corr
    if xs[6] < lam_floor:
        xs[6] = lam_floor
    if xs[7] < lam_floor:
        xs[7] = lam_floor

    # Joseph form: covs <- B covs B.T + K R K.T with B = I - K C
    for i in range(d):
        for j in range(d):
            acc = 0.0
            for r in range(m):
                acc += K[i, r] * C[r, j]
            B[i, j] = (1.0 if i == j else 0.0) - acc
    for i in range(d):
        for j in range(d):
            acc = 0.0
            for k in range(d):
                acc += B[i, k] * covs[k, j]
            T2[i, j] = acc
    for i in range(d):
        for j in range(i, d):
            acc = 0.0
            for k in range(d):
                acc += T2[i, k] * B[j, k]
            acc += K[i, 0] * K[j, 0] + K[i, 1] * K[j, 1]
            if m == 3:
                acc += K[i, 2] * K[j, 2] * r22
            covs[i, j] = acc
            covs[j, i] = acc
    return True


@njit(cache=True)
def process_chunk(t_s, t_us, ex, ey, erho,
                  d, x, cov, buf, buf_count, buf_head,
                  sigma, last_t, alive, spawned, seeds, prior_diag, init_lam,
                  track_matched,
                  tg, om, gcur,
                  Q, nbuf, beta, alpha, bgain, lam_floor, timeout,
                  nf, oob_abort, f, cx, cy,
                  counters, stream_state,
                  out, store,
                  xs, covs, F, T1, T2, C, K, B, S3, SI):
    """Run one chunk of events through spawn/associate/predict/update.

    counters: [seen, matched, rejected, out_of_order]. Returns (rc, nrec)
    with rc = -1 when an out-of-order event hits the abort policy.
    """
    n_events = t_s.shape[0]
    n_seeds = seeds.shape[0]
    nrec = 0
    has_gyro = tg.shape[0] > 0

    for i in range(n_events):
        t = t_s[i]

        for s in range(n_seeds):
            if spawned[s] == 0 and seeds[s, 0] <= t:
                spawned[s] = 1
                alive[s] = 1
                for a in range(10):
                    x[s, a] = 0.0
                    for b in range(10):
                        cov[s, a, b] = 0.0
                x[s, 0] = seeds[s, 1]
                x[s, 1] = seeds[s, 2]
                x[s, 6] = init_lam
                x[s, 7] = init_lam
                for a in range(d):
                    cov[s, a, a] = prior_diag[a]
                sigma[s] = bgain * init_lam
                last_t[s] = seeds[s, 0]
                buf_count[s] = 0
                buf_head[s] = 0

        if t < stream_state[0]:
            counters[3] += 1
            if oob_abort:
                return -1, nrec
            continue
        stream_state[0] = t
        counters[0] += 1

        for s in range(n_seeds):
            if alive[s] == 1 and t - last_t[s] > timeout:
                alive[s] = 0

        wx = 0.0
        wy = 0.0
        wz = 0.0
        if has_gyro:
            g = gcur[0]
            while g + 1 < tg.shape[0] and tg[g + 1] <= t:
                g += 1
            gcur[0] = g
            if g >= 0:
                wx = om[g, 0]
                wy = om[g, 1]
                wz = om[g, 2]

        best = -1
        bestd = 1e300
        for s in range(n_seeds):
            if alive[s] == 0:
                continue
            dtk = t - last_t[s]
            fx = 0.0
            fy = 0.0
            if has_gyro:
                fx, fy = _flow(x[s, 0] - cx, x[s, 1] - cy, wx, wy, wz, f)
            pcx = x[s, 0] + (x[s, 2] + fx) * dtk
            pcy = x[s, 1] + (x[s, 3] + fy) * dtk
            ddx = ex[i] - pcx
            ddy = ey[i] - pcy
            dist = math.sqrt(ddx * ddx + ddy * ddy)
            if dist < sigma[s] and dist < bestd:
                best = s
                bestd = dist
        if best < 0:
            continue
        s = best
        dt = t - last_t[s]

        for a in range(d):
            xs[a] = x[s, a]
            for b in range(d):
                covs[a, b] = cov[s, a, b]
        _predict_inplace(xs, covs, d, dt, wx, wy, wz, f, cx, cy, Q, F, T2)
        pm0 = xs[0]
        pm1 = xs[1]
        thm = xs[4]
        ok = _update_inplace(xs, covs, d, ex[i], ey[i], erho[i], nf,
                             buf[s], nbuf, buf_count[s], beta, lam_floor,
                             C, K, B, T1, T2, S3, SI)
        if not ok:
            counters[2] += 1
            continue

        for a in range(d):
            x[s, a] = xs[a]
            for b in range(d):
                cov[s, a, b] = covs[a, b]
        hd = buf_head[s]
        buf[s, hd, 0] = pm0
        buf[s, hd, 1] = pm1
        buf[s, hd, 2] = thm
        buf[s, hd, 3] = ex[i]
        buf[s, hd, 4] = ey[i]
        buf[s, hd, 5] = erho[i]
        buf_head[s] = (hd + 1) % nbuf
        if buf_count[s] < nbuf:
            buf_count[s] += 1
        lmax = xs[6] if xs[6] > xs[7] else xs[7]
        disc = math.exp(-alpha * dt)
        sigma[s] = disc * sigma[s] + bgain * (1.0 - disc) * lmax
        last_t[s] = t
        counters[1] += 1
        track_matched[s] += 1

        if store:
            out[nrec, 0] = t_us[i]
            out[nrec, 1] = s
            for a in range(d):
                out[nrec, 2 + a] = xs[a]
                out[nrec, 2 + d + a] = covs[a, a]
            nrec += 1

    return 0, nrec
