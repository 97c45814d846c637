"""Numba-compiled inner loops for the recursive dynamics algorithms.

Everything in this module operates on flat float64 arrays so the tree
recursions run allocation-free.  Twists and wrenches are 6-vectors ordered
(angular; linear).  Poses are 4x4 homogeneous matrices.  Bodies are indexed
0..N-1 with body 0 the floating base; ``parent[0] == -1``.

Derivative stacks are arrays whose second axis is the derivative order, so
``V[j, k]`` is the k-th time derivative of body j's spatial twist.  The
kernels never allocate inside the recursions: callers hand in a workspace
sized for the requested order.
"""

import numpy as np
from numba import njit

# Pascal's triangle, large enough for every order the kernels support.
_BMAX = 36
_BINOM = np.zeros((_BMAX, _BMAX), dtype=np.float64)
for _n in range(_BMAX):
    _BINOM[_n, 0] = 1.0
    for _k in range(1, _n + 1):
        _BINOM[_n, _k] = _BINOM[_n - 1, _k - 1] + _BINOM[_n - 1, _k]

# Status codes returned by the drivers (numba cannot raise with runtime
# formatted messages; wrappers translate these to exceptions).  A negative
# return value -j flags joint j as degenerate.
OK = 0
ERR_SINGULAR_BASE = 2

DEGENERATE_EPS = 1e-12


# ---------------------------------------------------------------------------
# small fixed-size primitives
# ---------------------------------------------------------------------------

@njit(cache=True)
def se3_bracket(a, b, out):
    """out = ad_a b = (wa x wb ; va x wb + wa x vb)."""
    out[0] = a[1] * b[2] - a[2] * b[1]
    out[1] = a[2] * b[0] - a[0] * b[2]
    out[2] = a[0] * b[1] - a[1] * b[0]
    out[3] = a[4] * b[2] - a[5] * b[1] + a[1] * b[5] - a[2] * b[4]
    out[4] = a[5] * b[0] - a[3] * b[2] + a[2] * b[3] - a[0] * b[5]
    out[5] = a[3] * b[1] - a[4] * b[0] + a[0] * b[4] - a[1] * b[3]


@njit(cache=True)
def se3_coad(a, w, out):
    """out = ad_a^T w for a twist ``a`` and wrench ``w``.

    ad_a^T = [[-[wa], -[va]], [0, -[wa]]] acting on (moment; force).
    """
    out[0] = -(a[1] * w[2] - a[2] * w[1]) - (a[4] * w[5] - a[5] * w[4])
    out[1] = -(a[2] * w[0] - a[0] * w[2]) - (a[5] * w[3] - a[3] * w[5])
    out[2] = -(a[0] * w[1] - a[1] * w[0]) - (a[3] * w[4] - a[4] * w[3])
    out[3] = -(a[1] * w[5] - a[2] * w[4])
    out[4] = -(a[2] * w[3] - a[0] * w[5])
    out[5] = -(a[0] * w[4] - a[1] * w[3])


@njit(cache=True)
def ad_matrix(g, out):
    """out = ad_g as a 6x6 matrix, block form [[ [w],0 ],[ [v],[w] ]]."""
    for i in range(6):
        for j in range(6):
            out[i, j] = 0.0
    out[0, 1] = -g[2]
    out[0, 2] = g[1]
    out[1, 0] = g[2]
    out[1, 2] = -g[0]
    out[2, 0] = -g[1]
    out[2, 1] = g[0]
    out[3, 4] = -g[2]
    out[3, 5] = g[1]
    out[4, 3] = g[2]
    out[4, 5] = -g[0]
    out[5, 3] = -g[1]
    out[5, 4] = g[0]
    out[3, 1] = -g[5]
    out[3, 2] = g[4]
    out[4, 0] = g[5]
    out[4, 2] = -g[3]
    out[5, 0] = -g[4]
    out[5, 1] = g[3]


@njit(cache=True)
def mat6_mul(a, b, out):
    for i in range(6):
        for j in range(6):
            s = 0.0
            for k in range(6):
                s += a[i, k] * b[k, j]
            out[i, j] = s


@njit(cache=True)
def mat6T_mul(a, b, out):
    """out = a^T b."""
    for i in range(6):
        for j in range(6):
            s = 0.0
            for k in range(6):
                s += a[k, i] * b[k, j]
            out[i, j] = s


@njit(cache=True)
def mat6_vec(a, x, out):
    for i in range(6):
        s = 0.0
        for k in range(6):
            s += a[i, k] * x[k]
        out[i] = s


@njit(cache=True, inline="always")
def dot6(a, b):
    s = 0.0
    for i in range(6):
        s += a[i] * b[i]
    return s


@njit(cache=True)
def mat4_mul(a, b, out):
    for i in range(4):
        for j in range(4):
            s = 0.0
            for k in range(4):
                s += a[i, k] * b[k, j]
            out[i, j] = s


@njit(cache=True)
def exp_se3(g, scale, out):
    """out = exp([g] * scale) as a 4x4 homogeneous matrix.

    Closed-form Rodrigues; below ``theta < 1e-8`` the sin/cos coefficient
    ratios switch to 4-term Taylor series to avoid dividing by a vanishing
    angle.
    """
    wx = g[0] * scale
    wy = g[1] * scale
    wz = g[2] * scale
    vx = g[3] * scale
    vy = g[4] * scale
    vz = g[5] * scale
    t2 = wx * wx + wy * wy + wz * wz
    theta = np.sqrt(t2)
    if theta < 1e-8:
        # a = sin(t)/t, b = (1-cos(t))/t^2, c = (t-sin(t))/t^3
        a = 1.0 - t2 / 6.0 + t2 * t2 / 120.0 - t2 * t2 * t2 / 5040.0
        b = 0.5 - t2 / 24.0 + t2 * t2 / 720.0 - t2 * t2 * t2 / 40320.0
        c = (1.0 / 6.0 - t2 / 120.0 + t2 * t2 / 5040.0
             - t2 * t2 * t2 / 362880.0)
    else:
        a = np.sin(theta) / theta
        b = (1.0 - np.cos(theta)) / t2
        c = (theta - np.sin(theta)) / (t2 * theta)
    # R = I + a [w] + b [w]^2 ;  translation = (I + b [w] + c [w]^2) v
    w2xx = -wy * wy - wz * wz
    w2yy = -wx * wx - wz * wz
    w2zz = -wx * wx - wy * wy
    w2xy = wx * wy
    w2xz = wx * wz
    w2yz = wy * wz
    out[0, 0] = 1.0 + b * w2xx
    out[0, 1] = -a * wz + b * w2xy
    out[0, 2] = a * wy + b * w2xz
    out[1, 0] = a * wz + b * w2xy
    out[1, 1] = 1.0 + b * w2yy
    out[1, 2] = -a * wx + b * w2yz
    out[2, 0] = -a * wy + b * w2xz
    out[2, 1] = a * wx + b * w2yz
    out[2, 2] = 1.0 + b * w2zz
    out[0, 3] = ((1.0 + c * w2xx) * vx + (-b * wz + c * w2xy) * vy
                 + (b * wy + c * w2xz) * vz)
    out[1, 3] = ((b * wz + c * w2xy) * vx + (1.0 + c * w2yy) * vy
                 + (-b * wx + c * w2yz) * vz)
    out[2, 3] = ((-b * wy + c * w2xz) * vx + (b * wx + c * w2yz) * vy
                 + (1.0 + c * w2zz) * vz)
    out[3, 0] = 0.0
    out[3, 1] = 0.0
    out[3, 2] = 0.0
    out[3, 3] = 1.0


@njit(cache=True)
def adjoint_matrix(pose, out):
    """out = Ad_C = [[R, 0], [[x]R, R]] for a 4x4 pose."""
    for i in range(3):
        for j in range(3):
            r = pose[i, j]
            out[i, j] = r
            out[3 + i, 3 + j] = r
            out[i, 3 + j] = 0.0
    x0 = pose[0, 3]
    x1 = pose[1, 3]
    x2 = pose[2, 3]
    for j in range(3):
        r0 = pose[0, j]
        r1 = pose[1, j]
        r2 = pose[2, j]
        out[3, j] = x1 * r2 - x2 * r1
        out[4, j] = x2 * r0 - x0 * r2
        out[5, j] = x0 * r1 - x1 * r0


@njit(cache=True)
def adjoint_inv_matrix(pose, out):
    """out = Ad_{C^{-1}} computed without forming C^{-1} explicitly."""
    # C^{-1} = (R^T, -R^T x); Ad blocks: [[R^T, 0], [-R^T [x], R^T]]
    for i in range(3):
        for j in range(3):
            r = pose[j, i]
            out[i, j] = r
            out[3 + i, 3 + j] = r
            out[i, 3 + j] = 0.0
    x0 = pose[0, 3]
    x1 = pose[1, 3]
    x2 = pose[2, 3]
    for i in range(3):
        r0 = pose[0, i]
        r1 = pose[1, i]
        r2 = pose[2, i]
        out[3 + i, 0] = -(r1 * x2 - r2 * x1)
        out[3 + i, 1] = -(r2 * x0 - r0 * x2)
        out[3 + i, 2] = -(r0 * x1 - r1 * x0)


@njit(cache=True)
def apply_adjoint(pose, g, out):
    """out = Ad_C g without building the 6x6 matrix."""
    w0 = pose[0, 0] * g[0] + pose[0, 1] * g[1] + pose[0, 2] * g[2]
    w1 = pose[1, 0] * g[0] + pose[1, 1] * g[1] + pose[1, 2] * g[2]
    w2 = pose[2, 0] * g[0] + pose[2, 1] * g[1] + pose[2, 2] * g[2]
    v0 = pose[0, 0] * g[3] + pose[0, 1] * g[4] + pose[0, 2] * g[5]
    v1 = pose[1, 0] * g[3] + pose[1, 1] * g[4] + pose[1, 2] * g[5]
    v2 = pose[2, 0] * g[3] + pose[2, 1] * g[4] + pose[2, 2] * g[5]
    x0 = pose[0, 3]
    x1 = pose[1, 3]
    x2 = pose[2, 3]
    out[0] = w0
    out[1] = w1
    out[2] = w2
    out[3] = x1 * w2 - x2 * w1 + v0
    out[4] = x2 * w0 - x0 * w2 + v1
    out[5] = x0 * w1 - x1 * w0 + v2


@njit(cache=True)
def spatial_inertia0(pose, mb, out, scratch6):
    """out = Ad_{C^{-1}}^T Mb Ad_{C^{-1}}."""
    ai = scratch6[0]
    tmp = scratch6[1]
    adjoint_inv_matrix(pose, ai)
    mat6_mul(mb, ai, tmp)
    mat6T_mul(ai, tmp, out)


# ---------------------------------------------------------------------------
# LDL^T factorization of the 6x6 base articulated inertia
# ---------------------------------------------------------------------------

@njit(cache=True)
def ldlt6_factor(a, lmat, d):
    """Factor symmetric a = L D L^T (unit lower L).  Returns 0 on success."""
    for j in range(6):
        s = a[j, j]
        for k in range(j):
            s -= lmat[j, k] * lmat[j, k] * d[k]
        if abs(s) < 1e-300:
            return ERR_SINGULAR_BASE
        d[j] = s
        lmat[j, j] = 1.0
        for i in range(j + 1, 6):
            t = a[i, j]
            for k in range(j):
                t -= lmat[i, k] * lmat[j, k] * d[k]
            lmat[i, j] = t / s
    return OK


@njit(cache=True)
def ldlt6_solve(lmat, d, b, out):
    for i in range(6):
        s = b[i]
        for k in range(i):
            s -= lmat[i, k] * out[k]
        out[i] = s
    for i in range(6):
        out[i] /= d[i]
    for i in range(5, -1, -1):
        s = out[i]
        for k in range(i + 1, 6):
            s -= lmat[k, i] * out[k]
        out[i] = s


# ---------------------------------------------------------------------------
# higher-order forward kinematics (pre-order sweep)
# ---------------------------------------------------------------------------

@njit(cache=True)
def fk_fill(parent, preorder, A0, Y, Mb, C01, V1, q, order,
            F, C, S, V, M, Vb, Pb, Pi, scratch6):
    """Fill the kinematics stacks for motion order ``order``.

    Inputs: V1 holds base twist derivatives 0..order, q holds joint variable
    derivatives 0..order+1 (row per body, base row ignored).  On exit
    V carries orders 0..order, S/M/Vb/Pb orders 0..order+1 and Pi orders
    0..order (order+1 of Pi needs the dynamics unknowns).
    """
    n = parent.shape[0]
    tmp = scratch6[2]
    admt = scratch6[3]
    prod = scratch6[4]
    for ii in range(n):
        j = preorder[ii]
        if j == 0:
            for a in range(4):
                for b in range(4):
                    F[0, a, b] = C01[a, b]
            mat4_mul(F[0], A0[0], C[0])
            for r in range(order + 1):
                for a in range(6):
                    V[0, r, a] = V1[r, a]
        else:
            p = parent[j]
            exp_se3(Y[j], q[j, 0], tmp[:4, :4])
            mat4_mul(F[p], tmp[:4, :4], F[j])
            mat4_mul(F[j], A0[j], C[j])
            apply_adjoint(F[j], Y[j], S[j, 0])
            for r1 in range(order + 2):
                if r1 > 0:
                    for a in range(6):
                        S[j, r1, a] = 0.0
                    for r2 in range(r1):
                        c = _BINOM[r1 - 1, r2]
                        se3_bracket(V[j, r2], S[j, r1 - 1 - r2], tmp[0, :6])
                        for a in range(6):
                            S[j, r1, a] += c * tmp[0, a]
                if r1 <= order:
                    for a in range(6):
                        V[j, r1, a] = V[p, r1, a]
                    for r2 in range(r1 + 1):
                        c = _BINOM[r1, r2] * q[j, r1 - r2 + 1]
                        for a in range(6):
                            V[j, r1, a] += c * S[j, r2, a]
        # spatial inertia stack
        spatial_inertia0(C[j], Mb[j], M[j, 0], scratch6)
        for r in range(1, order + 2):
            for a in range(6):
                for b in range(6):
                    M[j, r, a, b] = 0.0
            for k in range(r):
                c = _BINOM[r - 1, k]
                ad_matrix(V[j, k], admt)
                mat6_mul(M[j, r - 1 - k], admt, prod)
                for a in range(6):
                    for b in range(6):
                        M[j, r, a, b] -= c * (prod[a, b] + prod[b, a])
        # bias stacks and momentum
        for r in range(order + 2):
            for a in range(6):
                Vb[j, r, a] = 0.0
                Pb[j, r, a] = 0.0
            if j != 0:
                for k in range(1, r + 1):
                    c = _BINOM[r, k] * q[j, r - k + 1]
                    for a in range(6):
                        Vb[j, r, a] += c * S[j, k, a]
            for k in range(r):
                c = _BINOM[r, k]
                mat6_vec(M[j, r - k], V[j, k], tmp[0, :6])
                for a in range(6):
                    Pb[j, r, a] += c * tmp[0, a]
        for r in range(order + 1):
            mat6_vec(M[j, 0], V[j, r], tmp[0, :6])
            for a in range(6):
                Pi[j, r, a] = tmp[0, a] + Pb[j, r, a]


@njit(cache=True)
def extend_cache(parent, preorder, q, new_order, S, V, M, Vb, Pb, Pi,
                 scratch6):
    """Extend stacks after the dynamics appended V^(new_order), q^(new_order+1).

    Brings S/M/Vb/Pb up to order new_order+1 and Pi up to new_order.
    """
    n = parent.shape[0]
    tmp = scratch6[2]
    admt = scratch6[3]
    prod = scratch6[4]
    r1 = new_order + 1
    for ii in range(n):
        j = preorder[ii]
        if j != 0:
            for a in range(6):
                S[j, r1, a] = 0.0
            for r2 in range(r1):
                c = _BINOM[r1 - 1, r2]
                se3_bracket(V[j, r2], S[j, r1 - 1 - r2], tmp[0, :6])
                for a in range(6):
                    S[j, r1, a] += c * tmp[0, a]
        for a in range(6):
            for b in range(6):
                M[j, r1, a, b] = 0.0
        for k in range(r1):
            c = _BINOM[r1 - 1, k]
            ad_matrix(V[j, k], admt)
            mat6_mul(M[j, r1 - 1 - k], admt, prod)
            for a in range(6):
                for b in range(6):
                    M[j, r1, a, b] -= c * (prod[a, b] + prod[b, a])
        for a in range(6):
            Vb[j, r1, a] = 0.0
            Pb[j, r1, a] = 0.0
        if j != 0:
            for k in range(1, r1 + 1):
                c = _BINOM[r1, k] * q[j, r1 - k + 1]
                for a in range(6):
                    Vb[j, r1, a] += c * S[j, k, a]
        for k in range(r1):
            c = _BINOM[r1, k]
            mat6_vec(M[j, r1 - k], V[j, k], tmp[0, :6])
            for a in range(6):
                Pb[j, r1, a] += c * tmp[0, a]
        mat6_vec(M[j, 0], V[j, new_order], tmp[0, :6])
        for a in range(6):
            Pi[j, new_order, a] = tmp[0, a] + Pb[j, new_order, a]


# ---------------------------------------------------------------------------
# applied-wrench frame conversion (body-fixed stacks -> spatial stacks)
# ---------------------------------------------------------------------------

@njit(cache=True)
def adT_inv_extend(pose, V, r, adT, scratch6):
    """Write order r of the (Ad_{C^{-1}}^T)^(k) stack; lower orders stored.

    (Ad^T)^(r) = -sum_k binom(r-1,k) ad^T_{V^(k)} (Ad^T)^(r-k-1), needing
    twist derivatives only up to r-1.
    """
    if r == 0:
        ai = scratch6[0]
        adjoint_inv_matrix(pose, ai)
        for a in range(6):
            for b in range(6):
                adT[0, a, b] = ai[b, a]
        return
    admt = scratch6[3]
    prod = scratch6[4]
    for a in range(6):
        for b in range(6):
            adT[r, a, b] = 0.0
    for k in range(r):
        c = _BINOM[r - 1, k]
        ad_matrix(V[k], admt)
        mat6T_mul(admt, adT[r - k - 1], prod)
        for a in range(6):
            for b in range(6):
                adT[r, a, b] -= c * prod[a, b]


@njit(cache=True)
def wrench_b2s_order(V, Wb, r, Wsp, adT, scratch6):
    """Write order r of the spatial image of a body-frame wrench stack.

    Lower spatial orders must already be in ``Wsp``; ``adT`` holds the
    adjoint-transpose derivative stack through order r.
    """
    tmp = scratch6[2]
    if r == 0:
        mat6_vec(adT[0], Wb[0], Wsp[0])
        return
    for a in range(6):
        Wsp[r, a] = 0.0
    for k in range(r):
        c = _BINOM[r - 1, k]
        se3_coad(V[k], Wsp[r - k - 1], tmp[0, :6])
        mat6_vec(adT[k], Wb[r - k], tmp[1, :6])
        for a in range(6):
            Wsp[r, a] += c * (tmp[1, a] - tmp[0, a])


@njit(cache=True)
def wrench_body_to_spatial(pose, V, Wb, r, Wsp, adT, scratch6):
    """All spatial derivative orders 0..r of a body-frame wrench stack."""
    for k in range(r + 1):
        adT_inv_extend(pose, V, k, adT, scratch6)
        wrench_b2s_order(V, Wb, k, Wsp, adT, scratch6)


# ---------------------------------------------------------------------------
# H-GRNE: higher-order inverse dynamics (post-order sweep)
# ---------------------------------------------------------------------------

@njit(cache=True)
def id_backward(parent, postorder, S, M, Pi, Wapp, has_wapp, tau_ext, g,
                r, W, Q1, tau):
    """Backward pass: transmitted wrench stacks, base wrench and torques.

    Wapp holds spatial applied-wrench derivative stacks.  On exit W[j, k]
    is the order-k transmitted wrench at joint j (W must come in zeroed),
    Q1 the base generalized wrench stack, tau the joint torque stacks.
    """
    n = parent.shape[0]
    for ii in range(n):
        j = postorder[ii]
        for k in range(r + 1):
            for a in range(6):
                own = Pi[j, k + 1, a] + g * M[j, k, a, 5]
                if has_wapp:
                    own -= Wapp[j, k, a]
                W[j, k, a] += own
        p = parent[j]
        if p >= 0:
            for k in range(r + 1):
                for a in range(6):
                    W[p, k, a] += W[j, k, a]
    for k in range(r + 1):
        for a in range(6):
            Q1[k, a] = W[0, k, a]
    for j in range(1, n):
        for k in range(r + 1):
            qk = 0.0
            for m in range(k + 1):
                qk += _BINOM[k, m] * dot6(S[j, k - m], W[j, m])
            tau[j, k] = qk - tau_ext[j, k]


@njit(cache=True)
def run_id(parent, preorder, postorder, A0, Y, Mb, grav, C01, V1, q,
           Wapp_in, wapp_mode, tau_ext, r,
           F, C, S, V, M, Vb, Pb, Pi, Wapp_sp, W, Q1, tau,
           adT, scratch6):
    """Full inverse-dynamics call: kinematics at motion order r+1 + backward.

    V1 must carry base twist derivatives 0..r+1 and q joint derivatives
    0..r+2.  wapp_mode: 0 none, 1 stacks already spatial, 2 body-frame.
    """
    n = parent.shape[0]
    fk_fill(parent, preorder, A0, Y, Mb, C01, V1, q, r + 1,
            F, C, S, V, M, Vb, Pb, Pi, scratch6)
    has_wapp = wapp_mode != 0
    if wapp_mode == 2:
        for j in range(n):
            wrench_body_to_spatial(C[j], V[j], Wapp_in[j], r, Wapp_sp[j],
                                   adT, scratch6)
    elif wapp_mode == 1:
        for j in range(n):
            for k in range(r + 1):
                for a in range(6):
                    Wapp_sp[j, k, a] = Wapp_in[j, k, a]
    for j in range(n):
        for k in range(r + 1):
            for a in range(6):
                W[j, k, a] = 0.0
    id_backward(parent, postorder, S, M, Pi, Wapp_sp, has_wapp, tau_ext,
                grav, r, W, Q1, tau)
    return OK


# ---------------------------------------------------------------------------
# articulated inertia (configuration-only, shared by FD and hybrid)
# ---------------------------------------------------------------------------

@njit(cache=True)
def articulated_inertia(parent, postorder, S, M, jq_mask, MA, U, D):
    """Post-order accumulation of the articulated-body inertia.

    Joints with ``jq_mask[j]`` True (prescribed motion) contribute their full
    articulated inertia to the parent; the rest are projected through the
    joint.  U[j] = MA[j] S_j and D[j] = S_j^T MA[j] S_j.  Returns -j when
    joint j is degenerate, else 0.
    """
    n = parent.shape[0]
    for j in range(n):
        for a in range(6):
            for b in range(6):
                MA[j, a, b] = M[j, 0, a, b]
    for ii in range(n):
        j = postorder[ii]
        p = parent[j]
        if p < 0:
            continue
        if jq_mask[j]:
            for a in range(6):
                U[j, a] = 0.0
            D[j] = 1.0
            for a in range(6):
                for b in range(6):
                    MA[p, a, b] += MA[j, a, b]
        else:
            mat6_vec(MA[j], S[j, 0], U[j])
            dj = dot6(S[j, 0], U[j])
            if dj < DEGENERATE_EPS:
                return -j
            D[j] = dj
            for a in range(6):
                for b in range(6):
                    MA[p, a, b] += MA[j, a, b] - U[j, a] * U[j, b] / dj
    return OK


# ---------------------------------------------------------------------------
# H-GABI / H-GHYB: higher-order forward and hybrid dynamics
# ---------------------------------------------------------------------------

@njit(cache=True)
def run_articulated(parent, preorder, postorder, A0, Y, Mb, grav,
                    C01, V1_0, q, base_wrench, base_twist, base_mode,
                    prop_frame_body, tau, tau_ext, Wapp_in, wapp_mode,
                    jq_mask, q_presc, r,
                    F, C, S, V, M, Vb, Pb, Pi, Wapp_sp, MA, U, D, WA,
                    Wjoint, qtil, Wprop_sp, Lb, db, adTall, adTb, scratch6):
    """Sequential order loop shared by forward and hybrid dynamics.

    base_mode 0: base wrench given, solve the base twist derivatives
    (plain forward dynamics when jq_mask is all False).  base_mode 1: base
    twist derivatives given (base_twist[k] = (V_1)^(k+1)); the wrench stack
    is emitted into ``Wprop_sp``.

    Unknown joint quantities land in ``q`` (orders k+2) and ``V`` (orders
    k+1); prescribed-motion joints read q_presc[j, k] = q_j^(k+2) and get
    their torque stacks written into ``tau``.
    """
    n = parent.shape[0]
    tmp = scratch6[2]
    rhs = scratch6[5][0]
    sol = scratch6[5][1]
    fk_fill(parent, preorder, A0, Y, Mb, C01, V1_0, q, 0,
            F, C, S, V, M, Vb, Pb, Pi, scratch6)
    st = articulated_inertia(parent, postorder, S, M, jq_mask, MA, U, D)
    if st != OK:
        return st
    if base_mode == 0:
        st = ldlt6_factor(MA[0], Lb, db)
        if st != OK:
            return st
    for j in range(n):
        for k in range(r + 1):
            for a in range(6):
                WA[j, k, a] = 0.0
    for k in range(r + 1):
        # spatial propeller wrench at this order (needs V_1 orders < k only)
        if base_mode == 0:
            if prop_frame_body:
                adT_inv_extend(C[0], V[0], k, adTb, scratch6)
                wrench_b2s_order(V[0], base_wrench, k, Wprop_sp, adTb,
                                 scratch6)
            else:
                for a in range(6):
                    Wprop_sp[k, a] = base_wrench[k, a]
        # applied wrenches at this order
        if wapp_mode == 2:
            for j in range(n):
                adT_inv_extend(C[j], V[j], k, adTall[j], scratch6)
                wrench_b2s_order(V[j], Wapp_in[j], k, Wapp_sp[j], adTall[j],
                                 scratch6)
        elif wapp_mode == 1:
            for j in range(n):
                for a in range(6):
                    Wapp_sp[j, k, a] = Wapp_in[j, k, a]
        # backward sweep
        for ii in range(n):
            j = postorder[ii]
            for a in range(6):
                own = Pb[j, k + 1, a] + grav * M[j, k, a, 5]
                if wapp_mode != 0:
                    own -= Wapp_sp[j, k, a]
                WA[j, k, a] += own
            p = parent[j]
            if p < 0:
                continue
            if jq_mask[j]:
                for a in range(6):
                    tmp[0, a] = S[j, 0, a] * q_presc[j, k] + Vb[j, k + 1, a]
            else:
                tautil = 0.0
                for m in range(k):
                    tautil += _BINOM[k, m] * dot6(S[j, k - m], Wjoint[j, m])
                mat6_vec(MA[j], Vb[j, k + 1], tmp[0, :6])
                for a in range(6):
                    tmp[0, a] += WA[j, k, a]
                qtil[j] = (tau[j, k] + tau_ext[j, k] - tautil
                           - dot6(S[j, 0], tmp[0, :6])) / D[j]
                for a in range(6):
                    tmp[0, a] = S[j, 0, a] * qtil[j] + Vb[j, k + 1, a]
            mat6_vec(MA[j], tmp[0, :6], tmp[1, :6])
            for a in range(6):
                WA[p, k, a] += WA[j, k, a] + tmp[1, a]
        # base
        if base_mode == 0:
            for a in range(6):
                rhs[a] = Wprop_sp[k, a] - WA[0, k, a]
            ldlt6_solve(Lb, db, rhs, sol)
            for a in range(6):
                V[0, k + 1, a] = sol[a]
        else:
            for a in range(6):
                V[0, k + 1, a] = base_twist[k, a]
        mat6_vec(MA[0], V[0, k + 1], tmp[0, :6])
        for a in range(6):
            Wjoint[0, k, a] = tmp[0, a] + WA[0, k, a]
        if base_mode == 1:
            for a in range(6):
                Wprop_sp[k, a] = Wjoint[0, k, a]
        # forward sweep
        for ii in range(1, n):
            j = preorder[ii]
            p = parent[j]
            if jq_mask[j]:
                qdd = q_presc[j, k]
            else:
                qdd = -dot6(U[j], V[p, k + 1]) / D[j] + qtil[j]
            q[j, k + 2] = qdd
            for a in range(6):
                V[j, k + 1, a] = V[p, k + 1, a] + S[j, 0, a] * qdd \
                    + Vb[j, k + 1, a]
            mat6_vec(MA[j], V[j, k + 1], tmp[0, :6])
            for a in range(6):
                Wjoint[j, k, a] = tmp[0, a] + WA[j, k, a]
            if jq_mask[j]:
                qk = 0.0
                for m in range(k + 1):
                    qk += _BINOM[k, m] * dot6(S[j, k - m], Wjoint[j, m])
                tau[j, k] = qk - tau_ext[j, k]
        if k < r:
            extend_cache(parent, preorder, q, k + 1, S, V, M, Vb, Pb, Pi,
                         scratch6)
    return OK
