"""Compiled scalar kernels for the 2D assembly hot path.

Transcriptions of the component-first face/volume assembly into explicit
per-node loops, compiled with numba. Each kernel evaluates the exact same
expression tree per element as the vectorized reference in operator.py,
with every quadrature contraction grouped by the same palindromic pairing,
so the outputs are bitwise identical; a test pins this. numba's default
configuration keeps strict IEEE float64 semantics (no fused multiply-adds,
no reassociation) and everything here runs single threaded.

Only +, -, *, /, sqrt and abs appear inside the kernels -- all correctly
rounded operations, so bitwise agreement with numpy is a property of the
expression trees alone, not of any math library.

On any inadmissible state a kernel returns a nonzero status and the caller
re-runs the vectorized reference, which raises the same fault it always
did. Set MHDG_NO_COMPILED_KERNELS=1 (or remove numba) to run the reference
path everywhere.
"""

import os

import numpy as np

try:
    from numba import njit
except ImportError:  # pragma: no cover - numba is an install dependency
    njit = None

AVAILABLE = njit is not None and not os.environ.get("MHDG_NO_COMPILED_KERNELS")

if njit is None:  # pragma: no cover
    def njit(**kwargs):
        def wrap(fn):
            return fn
        return wrap


@njit(cache=True)
def _pairsum(buf, n):
    """Palindromic pairwise sum of buf[:n]; same grouping as mesh.paired_sum."""
    if n == 1:
        return buf[0]
    if n == 2:
        return buf[0] + buf[1]
    if n == 3:
        return (buf[0] + buf[2]) + buf[1]
    if n == 4:
        return (buf[0] + buf[3]) + (buf[1] + buf[2])
    h = n // 2
    s = buf[0] + buf[n - 1]
    for i in range(1, h):
        s = s + (buf[i] + buf[n - 1 - i])
    if n % 2 == 1:
        s = s + buf[h]
    return s


@njit(cache=True)
def _flux8(u0, u1, u2, u3, u4, u5, u6, u7, axis, gamma):
    """physical_flux expression tree at one state: the eight flux rows."""
    inv = 1.0 / u0
    mm = u1 * u1 + u2 * u2 + u3 * u3
    bb = u4 * u4 + u5 * u5 + u6 * u6
    mB = u1 * u4 + u2 * u5 + u3 * u6
    ptot = (gamma - 1.0) * (u7 - 0.5 * (mm * inv + bb)) + 0.5 * bb
    if axis == 0:
        un = u1 * inv
        Bn = u4
        f0 = u1
    else:
        un = u2 * inv
        Bn = u5
        f0 = u2
    Bni = Bn * inv
    f1 = un * u1 - Bn * u4
    f2 = un * u2 - Bn * u5
    f3 = un * u3 - Bn * u6
    f4 = un * u4 - Bni * u1
    f5 = un * u5 - Bni * u2
    f6 = un * u6 - Bni * u3
    if axis == 0:
        f1 = f1 + ptot
        f4 = 0.0
    else:
        f2 = f2 + ptot
        f5 = 0.0
    f7 = (u7 + ptot) * un - Bn * (mB * inv)
    return f0, f1, f2, f3, f4, f5, f6, f7


@njit(cache=True)
def _speeds4(u0, u1, u2, u3, u4, u5, u6, u7, axis, gamma):
    """characteristic_speeds tree at one admissible state:
    (C_l, c_fast, lambda_min, lambda_max)."""
    inv = 1.0 / u0
    mm = u1 * u1 + u2 * u2 + u3 * u3
    bb2 = u4 * u4 + u5 * u5 + u6 * u6
    p = (gamma - 1.0) * (u7 - 0.5 * (mm * inv + bb2))
    bb = bb2 * inv
    if axis == 0:
        bn = u4
        un = u1 * inv
    else:
        bn = u5
        un = u2 * inv
    bn2 = bn * bn * inv
    a2 = gamma * p / u0
    s1 = a2 + bb
    d1 = s1 * s1 - 4.0 * a2 * bn2
    if d1 < 0.0:
        d1 = 0.0
    cf = np.sqrt(0.5 * (s1 + np.sqrt(d1)))
    Cs2 = 0.5 * (gamma - 1.0) * p / u0
    s2 = Cs2 + bb
    d2 = s2 * s2 - 4.0 * Cs2 * bn2
    if d2 < 0.0:
        d2 = 0.0
    Cl = np.sqrt(0.5 * (s2 + np.sqrt(d2)))
    return Cl, cf, un - cf, un + cf


@njit(cache=True)
def face_pipeline(TR, TQ, q, axis, gamma, roe, Fh, Sm, Sp):
    """HLL face fluxes and jump-split source terms for one direction.

    TR/TQ are the edge/volume tabulations over the padded grid produced in
    _assemble_2d; the minus/plus trace of each face sits at the column
    offsets fixed by that layout. Writes component-first face arrays and
    returns 0, or 1 on any fault (the caller then re-runs the reference
    path, which raises the exact reference error).
    """
    n1 = Fh.shape[1]
    n2 = Fh.shape[2]
    if axis == 0:
        off_m = q
        off_p = 0
    else:
        off_m = 3 * q
        off_p = 2 * q
    for i in range(n1):
        for j in range(n2):
            if axis == 0:
                mi = i
                mj = j + 1
                pi = i + 1
                pj = j + 1
            else:
                mi = i + 1
                mj = j
                pi = i + 1
                pj = j + 1
            for l in range(q):
                um0 = TR[mi, mj, 0, off_m + l]
                um1 = TR[mi, mj, 1, off_m + l]
                um2 = TR[mi, mj, 2, off_m + l]
                um3 = TR[mi, mj, 3, off_m + l]
                um6 = TR[mi, mj, 4, off_m + l]
                um7 = TR[mi, mj, 5, off_m + l]
                um4 = TQ[mi, mj, 0, off_m + l]
                um5 = TQ[mi, mj, 1, off_m + l]
                up0 = TR[pi, pj, 0, off_p + l]
                up1 = TR[pi, pj, 1, off_p + l]
                up2 = TR[pi, pj, 2, off_p + l]
                up3 = TR[pi, pj, 3, off_p + l]
                up6 = TR[pi, pj, 4, off_p + l]
                up7 = TR[pi, pj, 5, off_p + l]
                up4 = TQ[pi, pj, 0, off_p + l]
                up5 = TQ[pi, pj, 1, off_p + l]

                # trace admissibility, tree of _is_admissible_cm
                if not um0 > 0.0:
                    return 1
                ea = um7 - 0.5 * ((um1 * um1 + um2 * um2 + um3 * um3) / um0
                                  + (um4 * um4 + um5 * um5 + um6 * um6))
                if not ea > 0.0:
                    return 1
                if not up0 > 0.0:
                    return 1
                eb = up7 - 0.5 * ((up1 * up1 + up2 * up2 + up3 * up3) / up0
                                  + (up4 * up4 + up5 * up5 + up6 * up6))
                if not eb > 0.0:
                    return 1

                fa0, fa1, fa2, fa3, fa4, fa5, fa6, fa7 = _flux8(
                    um0, um1, um2, um3, um4, um5, um6, um7, axis, gamma)
                fb0, fb1, fb2, fb3, fb4, fb5, fb6, fb7 = _flux8(
                    up0, up1, up2, up3, up4, up5, up6, up7, axis, gamma)

                Cla, cfa, lmina, lmaxa = _speeds4(
                    um0, um1, um2, um3, um4, um5, um6, um7, axis, gamma)
                Clb, cfb, lminb, lmaxb = _speeds4(
                    up0, up1, up2, up3, up4, up5, up6, up7, axis, gamma)

                sa = np.sqrt(um0)
                sb = np.sqrt(up0)
                ssum = sa + sb
                if axis == 0:
                    ua = um1 / um0
                    ub = up1 / up0
                else:
                    ua = um2 / um0
                    ub = up2 / up0
                wavg = (sa * ua + sb * ub) / ssum
                d4 = up4 - um4
                d5 = up5 - um5
                d6 = up6 - um6
                bjump = np.sqrt(d4 * d4 + d5 * d5 + d6 * d6) / ssum
                t = ua if ua <= wavg else wavg
                alpha_l = t - Cla - bjump
                t = ub if ub >= wavg else wavg
                alpha_r = t + Clb + bjump
                t = lmina if lmina <= lminb else lminb
                v_l = alpha_l if alpha_l <= t else t
                t = lmaxa if lmaxa >= lmaxb else lmaxb
                v_r = alpha_r if alpha_r >= t else t
                if roe:
                    rs = 0.5 * (um0 + up0)
                    mma = um1 * um1 + um2 * um2 + um3 * um3
                    mmb = up1 * up1 + up2 * up2 + up3 * up3
                    bba = um4 * um4 + um5 * um5 + um6 * um6
                    bbb = up4 * up4 + up5 * up5 + up6 * up6
                    pa = (gamma - 1.0) * (um7 - 0.5 * (mma / um0 + bba))
                    pb = (gamma - 1.0) * (up7 - 0.5 * (mmb / up0 + bbb))
                    ps = 0.5 * (pa + pb)
                    B4 = 0.5 * (um4 + up4)
                    B5 = 0.5 * (um5 + up5)
                    B6 = 0.5 * (um6 + up6)
                    bbs = B4 * B4 + B5 * B5 + B6 * B6
                    uns = 0.5 * (ua + ub)
                    Bns = B4 if axis == 0 else B5
                    a2 = gamma * ps / rs
                    s1 = a2 + bbs / rs
                    d1 = s1 * s1 - 4.0 * a2 * (Bns * Bns / rs)
                    if d1 < 0.0:
                        d1 = 0.0
                    cfs = np.sqrt(0.5 * (s1 + np.sqrt(d1)))
                    t = uns - cfs
                    if t < v_l:
                        v_l = t
                    t = uns + cfs
                    if t > v_r:
                        v_r = t
                if v_r - v_l < 1e-30:
                    # vacuum-like symmetric states: widen instead of dividing
                    wa = abs(ua) + cfa
                    wb = abs(ub) + cfb
                    wv = wa if wa >= wb else wb
                    if not wv > 1e-30:
                        wv = 1e-30
                    v_l = -wv
                    v_r = wv

                # HLL intermediate state must be admissible; widen until so
                dF0 = fb0 - fa0
                dF1 = fb1 - fa1
                dF2 = fb2 - fa2
                dF3 = fb3 - fa3
                dF4 = fb4 - fa4
                dF5 = fb5 - fa5
                dF6 = fb6 - fa6
                dF7 = fb7 - fa7
                it = 0
                while True:
                    dv = v_r - v_l
                    h0 = ((v_r * up0 - v_l * um0) - dF0) / dv
                    h1 = ((v_r * up1 - v_l * um1) - dF1) / dv
                    h2 = ((v_r * up2 - v_l * um2) - dF2) / dv
                    h3 = ((v_r * up3 - v_l * um3) - dF3) / dv
                    h4 = ((v_r * up4 - v_l * um4) - dF4) / dv
                    h5 = ((v_r * up5 - v_l * um5) - dF5) / dv
                    h6 = ((v_r * up6 - v_l * um6) - dF6) / dv
                    h7 = ((v_r * up7 - v_l * um7) - dF7) / dv
                    if h0 > 0.0:
                        eh = h7 - 0.5 * ((h1 * h1 + h2 * h2 + h3 * h3) / h0
                                         + (h4 * h4 + h5 * h5 + h6 * h6))
                        if eh > 0.0:
                            break
                    it += 1
                    if it >= 64:
                        return 1
                    grow = 0.5 * dv
                    v_l = v_l - grow
                    v_r = v_r + grow

                v_m = v_l if v_l <= 0.0 else 0.0
                v_p = v_r if v_r >= 0.0 else 0.0
                dvh = v_p - v_m
                if dvh <= 0.0:
                    return 1
                vmvp = v_m * v_p
                Fh[0, i, j, l] = (v_p * fa0 - v_m * fb0 + vmvp * (up0 - um0)) / dvh
                Fh[1, i, j, l] = (v_p * fa1 - v_m * fb1 + vmvp * (up1 - um1)) / dvh
                Fh[2, i, j, l] = (v_p * fa2 - v_m * fb2 + vmvp * (up2 - um2)) / dvh
                Fh[3, i, j, l] = (v_p * fa3 - v_m * fb3 + vmvp * (up3 - um3)) / dvh
                Fh[4, i, j, l] = (v_p * fa4 - v_m * fb4 + vmvp * (up4 - um4)) / dvh
                Fh[5, i, j, l] = (v_p * fa5 - v_m * fb5 + vmvp * (up5 - um5)) / dvh
                Fh[6, i, j, l] = (v_p * fa6 - v_m * fb6 + vmvp * (up6 - um6)) / dvh
                Fh[7, i, j, l] = (v_p * fa7 - v_m * fb7 + vmvp * (up7 - um7)) / dvh

                wm = -v_m / dvh
                wp = v_p / dvh
                if axis == 0:
                    jmp = up4 - um4
                else:
                    jmp = up5 - um5
                cm = wm * jmp
                cp = wp * jmp
                u1a = um1 / um0
                u2a = um2 / um0
                u3a = um3 / um0
                Sm[0, i, j, l] = cm * 0.0
                Sm[1, i, j, l] = cm * um4
                Sm[2, i, j, l] = cm * um5
                Sm[3, i, j, l] = cm * um6
                Sm[4, i, j, l] = cm * u1a
                Sm[5, i, j, l] = cm * u2a
                Sm[6, i, j, l] = cm * u3a
                Sm[7, i, j, l] = cm * (u1a * um4 + u2a * um5 + u3a * um6)
                u1b = up1 / up0
                u2b = up2 / up0
                u3b = up3 / up0
                Sp[0, i, j, l] = cp * 0.0
                Sp[1, i, j, l] = cp * up4
                Sp[2, i, j, l] = cp * up5
                Sp[3, i, j, l] = cp * up6
                Sp[4, i, j, l] = cp * u1b
                Sp[5, i, j, l] = cp * u2b
                Sp[6, i, j, l] = cp * u3b
                Sp[7, i, j, l] = cp * (u1b * up4 + u2b * up5 + u3b * up6)
    return 0


@njit(cache=True)
def cell_terms_k2(TR, TQ, Fx, Fy, Smx, Spx, Smy, Spy,
                  w, w2, rows, pend, D1, E1, O2, a1s, a2s, rsel, norms,
                  vgrad, vxR, vxL, vyT, vyB, normsQ,
                  gamma, dx, dy, mdx, mdy, L, resR, resQ):
    """cell_terms specialized to the k=2 quadrature (q=3, six scalar modes,
    nine LDF modes) with every three-point pairwise sum written out as the
    scalar expression (b0 + b2) + b1. Same trees as the generic kernel, so
    the outputs stay bitwise identical; this one exists because the k=2
    path is the production hot loop."""
    nx = L.shape[0]
    ny = L.shape[1]
    F1c = np.empty((8, 3, 3))
    F2c = np.empty((8, 3, 3))
    MxH = np.empty((6, 3))
    MxL = np.empty((6, 3))
    MyH = np.empty((6, 3))
    MyL = np.empty((6, 3))
    inner1 = np.empty((3, 6, 3))
    inner2 = np.empty((3, 6, 3))
    G14 = np.empty((3, 3))
    G15 = np.empty((3, 3))
    G24 = np.empty((3, 3))
    G25 = np.empty((3, 3))
    w0 = w[0]
    w1 = w[1]
    w2_ = w[2]
    for i in range(nx):
        i1 = i + 1
        for j in range(ny):
            j1 = j + 1
            for iq in range(3):
                for jq in range(3):
                    l = 12 + iq * 3 + jq
                    u0 = TR[i1, j1, 0, l]
                    u1 = TR[i1, j1, 1, l]
                    u2 = TR[i1, j1, 2, l]
                    u3 = TR[i1, j1, 3, l]
                    u6 = TR[i1, j1, 4, l]
                    u7 = TR[i1, j1, 5, l]
                    u4 = TQ[i1, j1, 0, l]
                    u5 = TQ[i1, j1, 1, l]
                    if u0 <= 0.0:
                        return 1
                    f0, f1, f2, f3, f4, f5, f6, f7 = _flux8(
                        u0, u1, u2, u3, u4, u5, u6, u7, 0, gamma)
                    F1c[0, iq, jq] = f0
                    F1c[1, iq, jq] = f1
                    F1c[2, iq, jq] = f2
                    F1c[3, iq, jq] = f3
                    F1c[4, iq, jq] = f4
                    F1c[5, iq, jq] = f5
                    F1c[6, iq, jq] = f6
                    F1c[7, iq, jq] = f7
                    f0, f1, f2, f3, f4, f5, f6, f7 = _flux8(
                        u0, u1, u2, u3, u4, u5, u6, u7, 1, gamma)
                    F2c[0, iq, jq] = f0
                    F2c[1, iq, jq] = f1
                    F2c[2, iq, jq] = f2
                    F2c[3, iq, jq] = f3
                    F2c[4, iq, jq] = f4
                    F2c[5, iq, jq] = f5
                    F2c[6, iq, jq] = f6
                    F2c[7, iq, jq] = f7
                    w2v = w2[iq, jq]
                    G14[iq, jq] = F1c[4, iq, jq] * w2v
                    G15[iq, jq] = F1c[5, iq, jq] * w2v
                    G24[iq, jq] = F2c[4, iq, jq] * w2v
                    G25[iq, jq] = F2c[5, iq, jq] * w2v

            for c in range(8):
                b0 = ((Fx[c, i1, j, 0] - Fx[c, i, j, 0])
                      + (Smx[c, i1, j, 0] + Spx[c, i, j, 0])) * w0
                b1 = ((Fx[c, i1, j, 1] - Fx[c, i, j, 1])
                      + (Smx[c, i1, j, 1] + Spx[c, i, j, 1])) * w1
                b2 = ((Fx[c, i1, j, 2] - Fx[c, i, j, 2])
                      + (Smx[c, i1, j, 2] + Spx[c, i, j, 2])) * w2_
                sx = (b0 + b2) + b1
                b0 = ((Fy[c, i, j1, 0] - Fy[c, i, j, 0])
                      + (Smy[c, i, j1, 0] + Spy[c, i, j, 0])) * w0
                b1 = ((Fy[c, i, j1, 1] - Fy[c, i, j, 1])
                      + (Smy[c, i, j1, 1] + Spy[c, i, j, 1])) * w1
                b2 = ((Fy[c, i, j1, 2] - Fy[c, i, j, 2])
                      + (Smy[c, i, j1, 2] + Spy[c, i, j, 2])) * w2_
                sy = (b0 + b2) + b1
                L[i, j, c] = -(sx / dx + sy / dy)

            for c in range(6):
                cc = rsel[c]
                xh0 = Fx[cc, i1, j, 0]
                xh1 = Fx[cc, i1, j, 1]
                xh2 = Fx[cc, i1, j, 2]
                xl0 = Fx[cc, i, j, 0]
                xl1 = Fx[cc, i, j, 1]
                xl2 = Fx[cc, i, j, 2]
                yh0 = Fy[cc, i, j1, 0]
                yh1 = Fy[cc, i, j1, 1]
                yh2 = Fy[cc, i, j1, 2]
                yl0 = Fy[cc, i, j, 0]
                yl1 = Fy[cc, i, j, 1]
                yl2 = Fy[cc, i, j, 2]
                for r in range(3):
                    r0 = rows[r, 0]
                    r1 = rows[r, 1]
                    r2 = rows[r, 2]
                    MxH[c, r] = (xh0 * r0 + xh2 * r2) + xh1 * r1
                    MxL[c, r] = (xl0 * r0 + xl2 * r2) + xl1 * r1
                    MyH[c, r] = (yh0 * r0 + yh2 * r2) + yh1 * r1
                    MyL[c, r] = (yl0 * r0 + yl2 * r2) + yl1 * r1
                for m in range(3):
                    d0 = D1[m, 0]
                    d1 = D1[m, 1]
                    d2 = D1[m, 2]
                    e0 = E1[m, 0]
                    e1 = E1[m, 1]
                    e2 = E1[m, 2]
                    for jq in range(3):
                        if m >= 1:
                            inner1[m, c, jq] = ((F1c[cc, 0, jq] * d0
                                                 + F1c[cc, 2, jq] * d2)
                                                + F1c[cc, 1, jq] * d1)
                        inner2[m, c, jq] = ((F2c[cc, 0, jq] * e0
                                             + F2c[cc, 2, jq] * e2)
                                            + F2c[cc, 1, jq] * e1)

            for a in range(6):
                aa1 = a1s[a]
                aa2 = a2s[a]
                na = norms[a]
                p1h = pend[aa1, 1]
                p1l = pend[aa1, 0]
                p2h = pend[aa2, 1]
                p2l = pend[aa2, 0]
                for c in range(6):
                    t = (p1h * MxH[c, aa2] - p1l * MxL[c, aa2]) * mdx
                    t += (p2h * MyH[c, aa1] - p2l * MyL[c, aa1]) * mdy
                    if aa1 >= 1:
                        b0 = inner1[aa1, c, 0] * E1[aa2, 0]
                        b1 = inner1[aa1, c, 1] * E1[aa2, 1]
                        b2 = inner1[aa1, c, 2] * E1[aa2, 2]
                        if aa2 >= 1:
                            b0 = b0 + inner2[aa1, c, 0] * O2[aa2, 0]
                            b1 = b1 + inner2[aa1, c, 1] * O2[aa2, 1]
                            b2 = b2 + inner2[aa1, c, 2] * O2[aa2, 2]
                        t += (b0 + b2) + b1
                    elif aa2 >= 1:
                        t += ((inner2[0, c, 0] * O2[aa2, 0]
                               + inner2[0, c, 2] * O2[aa2, 2])
                              + inner2[0, c, 1] * O2[aa2, 1])
                    t /= na
                    resR[i1, j1, c, a] = t

            x40 = Fx[4, i1, j, 0]
            x41 = Fx[4, i1, j, 1]
            x42 = Fx[4, i1, j, 2]
            x50 = Fx[5, i1, j, 0]
            x51 = Fx[5, i1, j, 1]
            x52 = Fx[5, i1, j, 2]
            l40 = Fx[4, i, j, 0]
            l41 = Fx[4, i, j, 1]
            l42 = Fx[4, i, j, 2]
            l50 = Fx[5, i, j, 0]
            l51 = Fx[5, i, j, 1]
            l52 = Fx[5, i, j, 2]
            t40 = Fy[4, i, j1, 0]
            t41 = Fy[4, i, j1, 1]
            t42 = Fy[4, i, j1, 2]
            t50 = Fy[5, i, j1, 0]
            t51 = Fy[5, i, j1, 1]
            t52 = Fy[5, i, j1, 2]
            b40 = Fy[4, i, j, 0]
            b41 = Fy[4, i, j, 1]
            b42 = Fy[4, i, j, 2]
            b50 = Fy[5, i, j, 0]
            b51 = Fy[5, i, j, 1]
            b52 = Fy[5, i, j, 2]
            for a in range(9):
                b0 = x40 * vxR[a, 0, 0] + x50 * vxR[a, 1, 0]
                b1 = x41 * vxR[a, 0, 1] + x51 * vxR[a, 1, 1]
                b2 = x42 * vxR[a, 0, 2] + x52 * vxR[a, 1, 2]
                hi = (b0 + b2) + b1
                b0 = l40 * vxL[a, 0, 0] + l50 * vxL[a, 1, 0]
                b1 = l41 * vxL[a, 0, 1] + l51 * vxL[a, 1, 1]
                b2 = l42 * vxL[a, 0, 2] + l52 * vxL[a, 1, 2]
                fxq = hi - ((b0 + b2) + b1)
                b0 = t40 * vyT[a, 0, 0] + t50 * vyT[a, 1, 0]
                b1 = t41 * vyT[a, 0, 1] + t51 * vyT[a, 1, 1]
                b2 = t42 * vyT[a, 0, 2] + t52 * vyT[a, 1, 2]
                hi = (b0 + b2) + b1
                b0 = b40 * vyB[a, 0, 0] + b50 * vyB[a, 1, 0]
                b1 = b41 * vyB[a, 0, 1] + b51 * vyB[a, 1, 1]
                b2 = b42 * vyB[a, 0, 2] + b52 * vyB[a, 1, 2]
                fyq = hi - ((b0 + b2) + b1)
                tq = fxq * mdx
                tq += fyq * mdy
                s0 = 0.0
                s1 = 0.0
                s2 = 0.0
                for jq in range(3):
                    bv0 = G14[0, jq] * vgrad[a, 0, 0, 0, jq]
                    bv0 += G15[0, jq] * vgrad[a, 1, 0, 0, jq]
                    tv0 = G24[0, jq] * vgrad[a, 0, 1, 0, jq]
                    tv0 += G25[0, jq] * vgrad[a, 1, 1, 0, jq]
                    bv1 = G14[1, jq] * vgrad[a, 0, 0, 1, jq]
                    bv1 += G15[1, jq] * vgrad[a, 1, 0, 1, jq]
                    tv1 = G24[1, jq] * vgrad[a, 0, 1, 1, jq]
                    tv1 += G25[1, jq] * vgrad[a, 1, 1, 1, jq]
                    bv2 = G14[2, jq] * vgrad[a, 0, 0, 2, jq]
                    bv2 += G15[2, jq] * vgrad[a, 1, 0, 2, jq]
                    tv2 = G24[2, jq] * vgrad[a, 0, 1, 2, jq]
                    tv2 += G25[2, jq] * vgrad[a, 1, 1, 2, jq]
                    if jq == 0:
                        s0 = ((bv0 + tv0) + (bv2 + tv2)) + (bv1 + tv1)
                    elif jq == 1:
                        s1 = ((bv0 + tv0) + (bv2 + tv2)) + (bv1 + tv1)
                    else:
                        s2 = ((bv0 + tv0) + (bv2 + tv2)) + (bv1 + tv1)
                tq += (s0 + s2) + s1
                tq /= normsQ[a]
                resQ[i1, j1, a] = tq
    return 0


@njit(cache=True)
def cell_terms(TR, TQ, q, voff, Fx, Fy, Smx, Spx, Smy, Spy,
               w, w2, rows, pend, D1, E1, O2, a1s, a2s, rsel, norms,
               vgrad, vxR, vxL, vyT, vyB, normsQ,
               gamma, dx, dy, mdx, mdy, L, resR, resQ):
    """Per-cell terms of the semidiscrete operator: cell-average residual L,
    scalar-block rows resR and LDF-block rows resQ, written in place.

    Volume fluxes are evaluated on the fly from the TR/TQ tabulation (column
    offset voff), the face arrays come from face_pipeline. Tables follow the
    reference assembly: rows = w-scaled 1D profiles, pend their endpoint
    values, D1/E1/O2 the direction-wise contraction rows, vgrad/vx*/vy* the
    LDF test-function tabulations. Returns 0, or 1 on nonpositive density at
    a volume node (caller re-runs the reference for the exact fault).
    """
    nx = L.shape[0]
    ny = L.shape[1]
    D = norms.shape[0]
    DQ = normsQ.shape[0]
    kp1 = rows.shape[0]
    F1c = np.empty((8, q, q))
    F2c = np.empty((8, q, q))
    MxH = np.empty((6, kp1))
    MxL = np.empty((6, kp1))
    MyH = np.empty((6, kp1))
    MyL = np.empty((6, kp1))
    inner1 = np.empty((kp1, 6, q))
    inner2 = np.empty((kp1, 6, q))
    buf = np.empty(q)
    srow = np.empty(q)
    for i in range(nx):
        for j in range(ny):
            # volume states and both flux directions at the tensor nodes
            for iq in range(q):
                for jq in range(q):
                    l = voff + iq * q + jq
                    u0 = TR[i + 1, j + 1, 0, l]
                    u1 = TR[i + 1, j + 1, 1, l]
                    u2 = TR[i + 1, j + 1, 2, l]
                    u3 = TR[i + 1, j + 1, 3, l]
                    u6 = TR[i + 1, j + 1, 4, l]
                    u7 = TR[i + 1, j + 1, 5, l]
                    u4 = TQ[i + 1, j + 1, 0, l]
                    u5 = TQ[i + 1, j + 1, 1, l]
                    if u0 <= 0.0:
                        return 1
                    f0, f1, f2, f3, f4, f5, f6, f7 = _flux8(
                        u0, u1, u2, u3, u4, u5, u6, u7, 0, gamma)
                    F1c[0, iq, jq] = f0
                    F1c[1, iq, jq] = f1
                    F1c[2, iq, jq] = f2
                    F1c[3, iq, jq] = f3
                    F1c[4, iq, jq] = f4
                    F1c[5, iq, jq] = f5
                    F1c[6, iq, jq] = f6
                    F1c[7, iq, jq] = f7
                    f0, f1, f2, f3, f4, f5, f6, f7 = _flux8(
                        u0, u1, u2, u3, u4, u5, u6, u7, 1, gamma)
                    F2c[0, iq, jq] = f0
                    F2c[1, iq, jq] = f1
                    F2c[2, iq, jq] = f2
                    F2c[3, iq, jq] = f3
                    F2c[4, iq, jq] = f4
                    F2c[5, iq, jq] = f5
                    F2c[6, iq, jq] = f6
                    F2c[7, iq, jq] = f7

            # cell-average residual, all 8 components
            for c in range(8):
                for l in range(q):
                    buf[l] = ((Fx[c, i + 1, j, l] - Fx[c, i, j, l])
                              + (Smx[c, i + 1, j, l] + Spx[c, i, j, l])) * w[l]
                sx = _pairsum(buf, q)
                for l in range(q):
                    buf[l] = ((Fy[c, i, j + 1, l] - Fy[c, i, j, l])
                              + (Smy[c, i, j + 1, l] + Spy[c, i, j, l])) * w[l]
                sy = _pairsum(buf, q)
                L[i, j, c] = -(sx / dx + sy / dy)

            # scalar block: face means against the k+1 edge profiles, then
            # direction-wise volume contractions
            for c in range(6):
                cc = rsel[c]
                for r in range(kp1):
                    for l in range(q):
                        buf[l] = Fx[cc, i + 1, j, l] * rows[r, l]
                    MxH[c, r] = _pairsum(buf, q)
                    for l in range(q):
                        buf[l] = Fx[cc, i, j, l] * rows[r, l]
                    MxL[c, r] = _pairsum(buf, q)
                    for l in range(q):
                        buf[l] = Fy[cc, i, j + 1, l] * rows[r, l]
                    MyH[c, r] = _pairsum(buf, q)
                    for l in range(q):
                        buf[l] = Fy[cc, i, j, l] * rows[r, l]
                    MyL[c, r] = _pairsum(buf, q)
                for m in range(kp1):
                    for jq in range(q):
                        if m >= 1:
                            for iq in range(q):
                                buf[iq] = F1c[cc, iq, jq] * D1[m, iq]
                            inner1[m, c, jq] = _pairsum(buf, q)
                        for iq in range(q):
                            buf[iq] = F2c[cc, iq, jq] * E1[m, iq]
                        inner2[m, c, jq] = _pairsum(buf, q)

            for a in range(D):
                aa1 = a1s[a]
                aa2 = a2s[a]
                for c in range(6):
                    t = (pend[aa1, 1] * MxH[c, aa2]
                         - pend[aa1, 0] * MxL[c, aa2]) * mdx
                    t += (pend[aa2, 1] * MyH[c, aa1]
                          - pend[aa2, 0] * MyL[c, aa1]) * mdy
                    if aa1 >= 1:
                        for jq in range(q):
                            acc = inner1[aa1, c, jq] * E1[aa2, jq]
                            if aa2 >= 1:
                                acc = acc + inner2[aa1, c, jq] * O2[aa2, jq]
                            buf[jq] = acc
                        t += _pairsum(buf, q)
                    elif aa2 >= 1:
                        for jq in range(q):
                            buf[jq] = inner2[aa1, c, jq] * O2[aa2, jq]
                        t += _pairsum(buf, q)
                    t /= norms[a]
                    resR[i + 1, j + 1, c, a] = t

            # LDF block
            for a in range(DQ):
                for l in range(q):
                    buf[l] = (Fx[4, i + 1, j, l] * vxR[a, 0, l]
                              + Fx[5, i + 1, j, l] * vxR[a, 1, l])
                hi = _pairsum(buf, q)
                for l in range(q):
                    buf[l] = (Fx[4, i, j, l] * vxL[a, 0, l]
                              + Fx[5, i, j, l] * vxL[a, 1, l])
                fxq = hi - _pairsum(buf, q)
                for l in range(q):
                    buf[l] = (Fy[4, i, j + 1, l] * vyT[a, 0, l]
                              + Fy[5, i, j + 1, l] * vyT[a, 1, l])
                hi = _pairsum(buf, q)
                for l in range(q):
                    buf[l] = (Fy[4, i, j, l] * vyB[a, 0, l]
                              + Fy[5, i, j, l] * vyB[a, 1, l])
                fyq = hi - _pairsum(buf, q)
                tq = fxq * mdx
                tq += fyq * mdy
                for jq in range(q):
                    for iq in range(q):
                        bv = (F1c[4, iq, jq] * w2[iq, jq]) * vgrad[a, 0, 0, iq, jq]
                        bv += (F1c[5, iq, jq] * w2[iq, jq]) * vgrad[a, 1, 0, iq, jq]
                        tv = (F2c[4, iq, jq] * w2[iq, jq]) * vgrad[a, 0, 1, iq, jq]
                        tv += (F2c[5, iq, jq] * w2[iq, jq]) * vgrad[a, 1, 1, iq, jq]
                        buf[iq] = bv + tv
                    srow[jq] = _pairsum(buf, q)
                tq += _pairsum(srow, q)
                tq /= normsQ[a]
                resQ[i + 1, j + 1, a] = tq
    return 0


@njit(cache=True)
def oe_rates_2d(hiRx, loRx, hiQ1x, loQ1x, hiQ2x, loQ2x,
                hiRy, loRy, hiQ1y, loQ1y, hiQ2y, loQ2y,
                live, den, prefx, prefy, betax, betay,
                dx, dy, q, ratesR, ratesQ):
    """Damping-rate assembly from the per-side jump tabulations.

    The hi/lo arrays are the trace contractions of the solution against the
    derivative tables (weights folded in); this kernel fuses the subtraction,
    absolute value, node sum, derivative-order block sum and the rate
    assembly that the reference path spreads over large intermediates. Trees
    match the reference elementwise, so rates agree bitwise.
    """
    nx = ratesR.shape[0]
    ny = ratesR.shape[1]
    kp1 = ratesR.shape[2]
    sigx = np.empty((nx + 1, ny, 8))
    sigy = np.empty((nx, ny + 1, 8))
    buf = np.empty(q)
    for m in range(kp1):
        off = m * (m + 1) // 2
        top = off + m + 1
        px = prefx[m]
        py = prefy[m]
        for i in range(nx + 1):
            for j in range(ny):
                for c in range(6):
                    s = 0.0
                    for r in range(off, top):
                        for l in range(q):
                            buf[l] = abs(hiRx[i, j, c, r, l]
                                         - loRx[i, j, c, r, l])
                        if r == off:
                            s = _pairsum(buf, q)
                        else:
                            s = s + _pairsum(buf, q)
                    c8 = c if c < 4 else c + 2
                    if live[c8]:
                        sigx[i, j, c8] = px * s / den[c8]
                    else:
                        sigx[i, j, c8] = 0.0
                s = 0.0
                for r in range(off, top):
                    for l in range(q):
                        buf[l] = abs(hiQ1x[i, j, r, l] - loQ1x[i, j, r, l])
                    if r == off:
                        s = _pairsum(buf, q)
                    else:
                        s = s + _pairsum(buf, q)
                if live[4]:
                    sigx[i, j, 4] = px * s / den[4]
                else:
                    sigx[i, j, 4] = 0.0
                s = 0.0
                for r in range(off, top):
                    for l in range(q):
                        buf[l] = abs(hiQ2x[i, j, r, l] - loQ2x[i, j, r, l])
                    if r == off:
                        s = _pairsum(buf, q)
                    else:
                        s = s + _pairsum(buf, q)
                if live[5]:
                    sigx[i, j, 5] = px * s / den[5]
                else:
                    sigx[i, j, 5] = 0.0
        for i in range(nx):
            for j in range(ny + 1):
                for c in range(6):
                    s = 0.0
                    for r in range(off, top):
                        for l in range(q):
                            buf[l] = abs(hiRy[i, j, c, r, l]
                                         - loRy[i, j, c, r, l])
                        if r == off:
                            s = _pairsum(buf, q)
                        else:
                            s = s + _pairsum(buf, q)
                    c8 = c if c < 4 else c + 2
                    if live[c8]:
                        sigy[i, j, c8] = py * s / den[c8]
                    else:
                        sigy[i, j, c8] = 0.0
                s = 0.0
                for r in range(off, top):
                    for l in range(q):
                        buf[l] = abs(hiQ1y[i, j, r, l] - loQ1y[i, j, r, l])
                    if r == off:
                        s = _pairsum(buf, q)
                    else:
                        s = s + _pairsum(buf, q)
                if live[4]:
                    sigy[i, j, 4] = py * s / den[4]
                else:
                    sigy[i, j, 4] = 0.0
                s = 0.0
                for r in range(off, top):
                    for l in range(q):
                        buf[l] = abs(hiQ2y[i, j, r, l] - loQ2y[i, j, r, l])
                    if r == off:
                        s = _pairsum(buf, q)
                    else:
                        s = s + _pairsum(buf, q)
                if live[5]:
                    sigy[i, j, 5] = py * s / den[5]
                else:
                    sigy[i, j, 5] = 0.0
        for i in range(nx):
            for j in range(ny):
                bx = betax[i, j]
                by = betay[i, j]
                for c in range(6):
                    c8 = c if c < 4 else c + 2
                    ratesR[i, j, m, c] = (bx * (sigx[i + 1, j, c8]
                                                + sigx[i, j, c8]) / dx
                                          + by * (sigy[i, j + 1, c8]
                                                  + sigy[i, j, c8]) / dy)
                a = sigx[i + 1, j, 4]
                b = sigx[i + 1, j, 5]
                qhi = a if a >= b else b
                a = sigx[i, j, 4]
                b = sigx[i, j, 5]
                qlo = a if a >= b else b
                a = sigy[i, j + 1, 4]
                b = sigy[i, j + 1, 5]
                rhi = a if a >= b else b
                a = sigy[i, j, 4]
                b = sigy[i, j, 5]
                rlo = a if a >= b else b
                ratesQ[i, j, m] = (bx * (qhi + qlo) / dx
                                   + by * (rhi + rlo) / dy)
    return 0


@njit(cache=True)
def minmax_lastpair(full, mx, mn):
    """Componentwise max and min of full over every axis except axis 2,
    in one pass. Exact regardless of traversal order."""
    n0 = full.shape[0]
    n1 = full.shape[1]
    nc = full.shape[2]
    npt = full.shape[3]
    for c in range(nc):
        mx[c] = full[0, 0, c, 0]
        mn[c] = full[0, 0, c, 0]
    for i in range(n0):
        for j in range(n1):
            for c in range(nc):
                for l in range(npt):
                    v = full[i, j, c, l]
                    if v > mx[c]:
                        mx[c] = v
                    if v < mn[c]:
                        mn[c] = v
    return 0


@njit(cache=True)
def minmax_q_planes(fullQ, Q, mx, mn):
    """max/min of the two in-plane magnetic samples, adding the constant
    member contributions (Q[...,1] to plane 0, Q[...,0] to plane 1) on the
    fly instead of materializing the shifted array."""
    n0 = fullQ.shape[0]
    n1 = fullQ.shape[1]
    npt = fullQ.shape[3]
    mx[0] = fullQ[0, 0, 0, 0] + Q[0, 0, 1]
    mn[0] = mx[0]
    mx[1] = fullQ[0, 0, 1, 0] + Q[0, 0, 0]
    mn[1] = mx[1]
    for i in range(n0):
        for j in range(n1):
            c1 = Q[i, j, 1]
            c2 = Q[i, j, 0]
            for l in range(npt):
                v = fullQ[i, j, 0, l] + c1
                if v > mx[0]:
                    mx[0] = v
                if v < mn[0]:
                    mn[0] = v
                v = fullQ[i, j, 1, l] + c2
                if v > mx[1]:
                    mx[1] = v
                if v < mn[1]:
                    mn[1] = v
    return 0


@njit(cache=True)
def oe_rates_2d_k2(hiRx, loRx, hiQ1x, loQ1x, hiQ2x, loQ2x,
                   hiRy, loRy, hiQ1y, loQ1y, hiQ2y, loQ2y,
                   live, den, prefx, prefy, betax, betay,
                   dx, dy, ratesR, ratesQ):
    """oe_rates_2d specialized to k=2 (three nodes, six derivative columns),
    restructured so every trace array is read exactly once. Same trees."""
    nx = ratesR.shape[0]
    ny = ratesR.shape[1]
    sigx = np.empty((3, nx + 1, ny, 8))
    sigy = np.empty((3, nx, ny + 1, 8))
    px0 = prefx[0]
    px1 = prefx[1]
    px2 = prefx[2]
    py0 = prefy[0]
    py1 = prefy[1]
    py2 = prefy[2]
    for i in range(nx + 1):
        for j in range(ny):
            for c in range(8):
                if c < 6:
                    if c < 4:
                        c8 = c
                    else:
                        c8 = c + 2
                    if not live[c8]:
                        sigx[0, i, j, c8] = 0.0
                        sigx[1, i, j, c8] = 0.0
                        sigx[2, i, j, c8] = 0.0
                        continue
                    s0 = ((abs(hiRx[i, j, c, 0, 0] - loRx[i, j, c, 0, 0])
                           + abs(hiRx[i, j, c, 0, 2] - loRx[i, j, c, 0, 2]))
                          + abs(hiRx[i, j, c, 0, 1] - loRx[i, j, c, 0, 1]))
                    p1 = ((abs(hiRx[i, j, c, 1, 0] - loRx[i, j, c, 1, 0])
                           + abs(hiRx[i, j, c, 1, 2] - loRx[i, j, c, 1, 2]))
                          + abs(hiRx[i, j, c, 1, 1] - loRx[i, j, c, 1, 1]))
                    p2 = ((abs(hiRx[i, j, c, 2, 0] - loRx[i, j, c, 2, 0])
                           + abs(hiRx[i, j, c, 2, 2] - loRx[i, j, c, 2, 2]))
                          + abs(hiRx[i, j, c, 2, 1] - loRx[i, j, c, 2, 1]))
                    s1 = p1 + p2
                    p3 = ((abs(hiRx[i, j, c, 3, 0] - loRx[i, j, c, 3, 0])
                           + abs(hiRx[i, j, c, 3, 2] - loRx[i, j, c, 3, 2]))
                          + abs(hiRx[i, j, c, 3, 1] - loRx[i, j, c, 3, 1]))
                    p4 = ((abs(hiRx[i, j, c, 4, 0] - loRx[i, j, c, 4, 0])
                           + abs(hiRx[i, j, c, 4, 2] - loRx[i, j, c, 4, 2]))
                          + abs(hiRx[i, j, c, 4, 1] - loRx[i, j, c, 4, 1]))
                    p5 = ((abs(hiRx[i, j, c, 5, 0] - loRx[i, j, c, 5, 0])
                           + abs(hiRx[i, j, c, 5, 2] - loRx[i, j, c, 5, 2]))
                          + abs(hiRx[i, j, c, 5, 1] - loRx[i, j, c, 5, 1]))
                    s2 = (p3 + p4) + p5
                elif c == 6:
                    c8 = 4
                    if not live[4]:
                        sigx[0, i, j, 4] = 0.0
                        sigx[1, i, j, 4] = 0.0
                        sigx[2, i, j, 4] = 0.0
                        continue
                    s0 = ((abs(hiQ1x[i, j, 0, 0] - loQ1x[i, j, 0, 0])
                           + abs(hiQ1x[i, j, 0, 2] - loQ1x[i, j, 0, 2]))
                          + abs(hiQ1x[i, j, 0, 1] - loQ1x[i, j, 0, 1]))
                    p1 = ((abs(hiQ1x[i, j, 1, 0] - loQ1x[i, j, 1, 0])
                           + abs(hiQ1x[i, j, 1, 2] - loQ1x[i, j, 1, 2]))
                          + abs(hiQ1x[i, j, 1, 1] - loQ1x[i, j, 1, 1]))
                    p2 = ((abs(hiQ1x[i, j, 2, 0] - loQ1x[i, j, 2, 0])
                           + abs(hiQ1x[i, j, 2, 2] - loQ1x[i, j, 2, 2]))
                          + abs(hiQ1x[i, j, 2, 1] - loQ1x[i, j, 2, 1]))
                    s1 = p1 + p2
                    p3 = ((abs(hiQ1x[i, j, 3, 0] - loQ1x[i, j, 3, 0])
                           + abs(hiQ1x[i, j, 3, 2] - loQ1x[i, j, 3, 2]))
                          + abs(hiQ1x[i, j, 3, 1] - loQ1x[i, j, 3, 1]))
                    p4 = ((abs(hiQ1x[i, j, 4, 0] - loQ1x[i, j, 4, 0])
                           + abs(hiQ1x[i, j, 4, 2] - loQ1x[i, j, 4, 2]))
                          + abs(hiQ1x[i, j, 4, 1] - loQ1x[i, j, 4, 1]))
                    p5 = ((abs(hiQ1x[i, j, 5, 0] - loQ1x[i, j, 5, 0])
                           + abs(hiQ1x[i, j, 5, 2] - loQ1x[i, j, 5, 2]))
                          + abs(hiQ1x[i, j, 5, 1] - loQ1x[i, j, 5, 1]))
                    s2 = (p3 + p4) + p5
                else:
                    c8 = 5
                    if not live[5]:
                        sigx[0, i, j, 5] = 0.0
                        sigx[1, i, j, 5] = 0.0
                        sigx[2, i, j, 5] = 0.0
                        continue
                    s0 = ((abs(hiQ2x[i, j, 0, 0] - loQ2x[i, j, 0, 0])
                           + abs(hiQ2x[i, j, 0, 2] - loQ2x[i, j, 0, 2]))
                          + abs(hiQ2x[i, j, 0, 1] - loQ2x[i, j, 0, 1]))
                    p1 = ((abs(hiQ2x[i, j, 1, 0] - loQ2x[i, j, 1, 0])
                           + abs(hiQ2x[i, j, 1, 2] - loQ2x[i, j, 1, 2]))
                          + abs(hiQ2x[i, j, 1, 1] - loQ2x[i, j, 1, 1]))
                    p2 = ((abs(hiQ2x[i, j, 2, 0] - loQ2x[i, j, 2, 0])
                           + abs(hiQ2x[i, j, 2, 2] - loQ2x[i, j, 2, 2]))
                          + abs(hiQ2x[i, j, 2, 1] - loQ2x[i, j, 2, 1]))
                    s1 = p1 + p2
                    p3 = ((abs(hiQ2x[i, j, 3, 0] - loQ2x[i, j, 3, 0])
                           + abs(hiQ2x[i, j, 3, 2] - loQ2x[i, j, 3, 2]))
                          + abs(hiQ2x[i, j, 3, 1] - loQ2x[i, j, 3, 1]))
                    p4 = ((abs(hiQ2x[i, j, 4, 0] - loQ2x[i, j, 4, 0])
                           + abs(hiQ2x[i, j, 4, 2] - loQ2x[i, j, 4, 2]))
                          + abs(hiQ2x[i, j, 4, 1] - loQ2x[i, j, 4, 1]))
                    p5 = ((abs(hiQ2x[i, j, 5, 0] - loQ2x[i, j, 5, 0])
                           + abs(hiQ2x[i, j, 5, 2] - loQ2x[i, j, 5, 2]))
                          + abs(hiQ2x[i, j, 5, 1] - loQ2x[i, j, 5, 1]))
                    s2 = (p3 + p4) + p5
                d = den[c8]
                sigx[0, i, j, c8] = px0 * s0 / d
                sigx[1, i, j, c8] = px1 * s1 / d
                sigx[2, i, j, c8] = px2 * s2 / d
    for i in range(nx):
        for j in range(ny + 1):
            for c in range(8):
                if c < 6:
                    if c < 4:
                        c8 = c
                    else:
                        c8 = c + 2
                    if not live[c8]:
                        sigy[0, i, j, c8] = 0.0
                        sigy[1, i, j, c8] = 0.0
                        sigy[2, i, j, c8] = 0.0
                        continue
                    s0 = ((abs(hiRy[i, j, c, 0, 0] - loRy[i, j, c, 0, 0])
                           + abs(hiRy[i, j, c, 0, 2] - loRy[i, j, c, 0, 2]))
                          + abs(hiRy[i, j, c, 0, 1] - loRy[i, j, c, 0, 1]))
                    p1 = ((abs(hiRy[i, j, c, 1, 0] - loRy[i, j, c, 1, 0])
                           + abs(hiRy[i, j, c, 1, 2] - loRy[i, j, c, 1, 2]))
                          + abs(hiRy[i, j, c, 1, 1] - loRy[i, j, c, 1, 1]))
                    p2 = ((abs(hiRy[i, j, c, 2, 0] - loRy[i, j, c, 2, 0])
                           + abs(hiRy[i, j, c, 2, 2] - loRy[i, j, c, 2, 2]))
                          + abs(hiRy[i, j, c, 2, 1] - loRy[i, j, c, 2, 1]))
                    s1 = p1 + p2
                    p3 = ((abs(hiRy[i, j, c, 3, 0] - loRy[i, j, c, 3, 0])
                           + abs(hiRy[i, j, c, 3, 2] - loRy[i, j, c, 3, 2]))
                          + abs(hiRy[i, j, c, 3, 1] - loRy[i, j, c, 3, 1]))
                    p4 = ((abs(hiRy[i, j, c, 4, 0] - loRy[i, j, c, 4, 0])
                           + abs(hiRy[i, j, c, 4, 2] - loRy[i, j, c, 4, 2]))
                          + abs(hiRy[i, j, c, 4, 1] - loRy[i, j, c, 4, 1]))
                    p5 = ((abs(hiRy[i, j, c, 5, 0] - loRy[i, j, c, 5, 0])
                           + abs(hiRy[i, j, c, 5, 2] - loRy[i, j, c, 5, 2]))
                          + abs(hiRy[i, j, c, 5, 1] - loRy[i, j, c, 5, 1]))
                    s2 = (p3 + p4) + p5
                elif c == 6:
                    c8 = 4
                    if not live[4]:
                        sigy[0, i, j, 4] = 0.0
                        sigy[1, i, j, 4] = 0.0
                        sigy[2, i, j, 4] = 0.0
                        continue
                    s0 = ((abs(hiQ1y[i, j, 0, 0] - loQ1y[i, j, 0, 0])
                           + abs(hiQ1y[i, j, 0, 2] - loQ1y[i, j, 0, 2]))
                          + abs(hiQ1y[i, j, 0, 1] - loQ1y[i, j, 0, 1]))
                    p1 = ((abs(hiQ1y[i, j, 1, 0] - loQ1y[i, j, 1, 0])
                           + abs(hiQ1y[i, j, 1, 2] - loQ1y[i, j, 1, 2]))
                          + abs(hiQ1y[i, j, 1, 1] - loQ1y[i, j, 1, 1]))
                    p2 = ((abs(hiQ1y[i, j, 2, 0] - loQ1y[i, j, 2, 0])
                           + abs(hiQ1y[i, j, 2, 2] - loQ1y[i, j, 2, 2]))
                          + abs(hiQ1y[i, j, 2, 1] - loQ1y[i, j, 2, 1]))
                    s1 = p1 + p2
                    p3 = ((abs(hiQ1y[i, j, 3, 0] - loQ1y[i, j, 3, 0])
                           + abs(hiQ1y[i, j, 3, 2] - loQ1y[i, j, 3, 2]))
                          + abs(hiQ1y[i, j, 3, 1] - loQ1y[i, j, 3, 1]))
                    p4 = ((abs(hiQ1y[i, j, 4, 0] - loQ1y[i, j, 4, 0])
                           + abs(hiQ1y[i, j, 4, 2] - loQ1y[i, j, 4, 2]))
                          + abs(hiQ1y[i, j, 4, 1] - loQ1y[i, j, 4, 1]))
                    p5 = ((abs(hiQ1y[i, j, 5, 0] - loQ1y[i, j, 5, 0])
                           + abs(hiQ1y[i, j, 5, 2] - loQ1y[i, j, 5, 2]))
                          + abs(hiQ1y[i, j, 5, 1] - loQ1y[i, j, 5, 1]))
                    s2 = (p3 + p4) + p5
                else:
                    c8 = 5
                    if not live[5]:
                        sigy[0, i, j, 5] = 0.0
                        sigy[1, i, j, 5] = 0.0
                        sigy[2, i, j, 5] = 0.0
                        continue
                    s0 = ((abs(hiQ2y[i, j, 0, 0] - loQ2y[i, j, 0, 0])
                           + abs(hiQ2y[i, j, 0, 2] - loQ2y[i, j, 0, 2]))
                          + abs(hiQ2y[i, j, 0, 1] - loQ2y[i, j, 0, 1]))
                    p1 = ((abs(hiQ2y[i, j, 1, 0] - loQ2y[i, j, 1, 0])
                           + abs(hiQ2y[i, j, 1, 2] - loQ2y[i, j, 1, 2]))
                          + abs(hiQ2y[i, j, 1, 1] - loQ2y[i, j, 1, 1]))
                    p2 = ((abs(hiQ2y[i, j, 2, 0] - loQ2y[i, j, 2, 0])
                           + abs(hiQ2y[i, j, 2, 2] - loQ2y[i, j, 2, 2]))
                          + abs(hiQ2y[i, j, 2, 1] - loQ2y[i, j, 2, 1]))
                    s1 = p1 + p2
                    p3 = ((abs(hiQ2y[i, j, 3, 0] - loQ2y[i, j, 3, 0])
                           + abs(hiQ2y[i, j, 3, 2] - loQ2y[i, j, 3, 2]))
                          + abs(hiQ2y[i, j, 3, 1] - loQ2y[i, j, 3, 1]))
                    p4 = ((abs(hiQ2y[i, j, 4, 0] - loQ2y[i, j, 4, 0])
                           + abs(hiQ2y[i, j, 4, 2] - loQ2y[i, j, 4, 2]))
                          + abs(hiQ2y[i, j, 4, 1] - loQ2y[i, j, 4, 1]))
                    p5 = ((abs(hiQ2y[i, j, 5, 0] - loQ2y[i, j, 5, 0])
                           + abs(hiQ2y[i, j, 5, 2] - loQ2y[i, j, 5, 2]))
                          + abs(hiQ2y[i, j, 5, 1] - loQ2y[i, j, 5, 1]))
                    s2 = (p3 + p4) + p5
                d = den[c8]
                sigy[0, i, j, c8] = py0 * s0 / d
                sigy[1, i, j, c8] = py1 * s1 / d
                sigy[2, i, j, c8] = py2 * s2 / d
    for m in range(3):
        for i in range(nx):
            for j in range(ny):
                bx = betax[i, j]
                by = betay[i, j]
                for c in range(6):
                    c8 = c if c < 4 else c + 2
                    ratesR[i, j, m, c] = (bx * (sigx[m, i + 1, j, c8]
                                                + sigx[m, i, j, c8]) / dx
                                          + by * (sigy[m, i, j + 1, c8]
                                                  + sigy[m, i, j, c8]) / dy)
                a = sigx[m, i + 1, j, 4]
                b = sigx[m, i + 1, j, 5]
                qhi = a if a >= b else b
                a = sigx[m, i, j, 4]
                b = sigx[m, i, j, 5]
                qlo = a if a >= b else b
                a = sigy[m, i, j + 1, 4]
                b = sigy[m, i, j + 1, 5]
                rhi = a if a >= b else b
                a = sigy[m, i, j, 4]
                b = sigy[m, i, j, 5]
                rlo = a if a >= b else b
                ratesQ[i, j, m] = (bx * (qhi + qlo) / dx
                                   + by * (rhi + rlo) / dy)
    return 0


@njit(cache=True)
def pp_limit_nodes(TRn, TQn, avg, epsf, R, Q, D, DQ, theta1, theta2):
    """Scaling limiter on the decomposition-node tabulations.

    TRn/TQn are the node contractions of the scalar and LDF blocks, avg the
    interior cell averages. Pass one computes both thetas per cell without
    touching the field (returning 1 if a density node lands exactly on
    zero, where the reference raises); pass two applies the scalings. Trees
    match the reference limiter, so the field and thetas agree bitwise.
    """
    nx = avg.shape[0]
    ny = avg.shape[1]
    npts = TRn.shape[3]
    for i in range(nx):
        for j in range(ny):
            rho_bar = avg[i, j, 0]
            eps1 = epsf if epsf <= rho_bar else rho_bar
            rmin = TRn[i, j, 0, 0]
            for l in range(1, npts):
                v = TRn[i, j, 0, l]
                if v < rmin:
                    rmin = v
            t1 = 1.0
            if rmin < eps1:
                t1 = (rho_bar - eps1) / (rho_bar - rmin)
            theta1[i, j] = t1

            a1 = avg[i, j, 1]
            a2 = avg[i, j, 2]
            a3 = avg[i, j, 3]
            a4 = avg[i, j, 4]
            a5 = avg[i, j, 5]
            a6 = avg[i, j, 6]
            e_bar = avg[i, j, 7] - 0.5 * ((a1 * a1 + a2 * a2 + a3 * a3)
                                          / rho_bar
                                          + (a4 * a4 + a5 * a5 + a6 * a6))
            eps2 = epsf if epsf <= e_bar else e_bar
            first = True
            emin = 0.0
            for l in range(npts):
                u0 = t1 * (TRn[i, j, 0, l] - rho_bar) + rho_bar
                if u0 == 0.0:
                    return 1
                u1 = TRn[i, j, 1, l]
                u2 = TRn[i, j, 2, l]
                u3 = TRn[i, j, 3, l]
                u6 = TRn[i, j, 4, l]
                u7 = TRn[i, j, 5, l]
                u4 = TQn[i, j, 0, l]
                u5 = TQn[i, j, 1, l]
                e = u7 - 0.5 * ((u1 * u1 + u2 * u2 + u3 * u3) / u0
                                + (u4 * u4 + u5 * u5 + u6 * u6))
                if first:
                    emin = e
                    first = False
                elif e < emin:
                    emin = e
            t2 = 1.0
            if emin < eps2:
                t2 = (e_bar - eps2) / (e_bar - emin)
            theta2[i, j] = t2
    for i in range(nx):
        for j in range(ny):
            i1 = i + 1
            j1 = j + 1
            t1 = theta1[i, j]
            t2 = theta2[i, j]
            for a in range(1, D):
                R[i1, j1, 0, a] = R[i1, j1, 0, a] * t1
            for c in range(6):
                for a in range(1, D):
                    R[i1, j1, c, a] = R[i1, j1, c, a] * t2
            for a in range(2, DQ):
                Q[i1, j1, a] = Q[i1, j1, a] * t2
    return 0
