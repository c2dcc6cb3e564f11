"""Hot numeric loops.

Every kernel here is written in the numba-compatible subset of Python and
wrapped with :func:`wplab._jit.njit`.  With ``WPLAB_DISABLE_NUMBA=1`` the same
source runs uncompiled, and the path-energy and tridiagonal kernels switch to
vectorized numpy / scipy implementations instead of the element loops.

State layout for a point of the model space with ``p`` node blocks and ``m``
flat complex directions (``n = 2p + 2m`` real coordinates)::

    [u_1 .. u_p, theta_1 .. theta_p, Re t_1, Im t_1, ..., Re t_m, Im t_m]

The geodesic state is ``[x (n), xdot (n)]``.
"""
import math

import numpy as np

from ._jit import NUMBA_ENABLED, njit

# ---------------------------------------------------------------------------
# geodesic ODE
# ---------------------------------------------------------------------------

STATUS_LENGTH = 0
STATUS_BOUNDARY = 1
STATUS_STEP_FAILURE = 2


@njit
def geodesic_rhs(y, pert, p, out):
    """Geodesic equation of the diagonal block metric.

    The constants A_i cancel from the Christoffel symbols, so only the
    perturbation coefficients enter.
    """
    dim = y.shape[0]
    n = dim // 2
    for k in range(n):
        out[k] = y[n + k]
        out[n + k] = 0.0
    for i in range(p):
        u = y[i]
        vu = y[n + i]
        vt = y[n + p + i]
        c = pert[i]
        u2 = u * u
        u3 = u2 * u
        u4 = u2 * u2
        f = 1.0 + c * u4
        fp = 4.0 * c * u3
        out[n + i] = -0.5 * (fp / f) * vu * vu + (fp * u3 * u3 + 6.0 * f * u4 * u) / (8.0 * f) * vt * vt
        if vt != 0.0:
            out[n + p + i] = -(fp / f + 6.0 / u) * vu * vt


# Dormand-Prince 5(4)
_C2, _C3, _C4, _C5 = 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0
_A21 = 1.0 / 5.0
_A31, _A32 = 3.0 / 40.0, 9.0 / 40.0
_A41, _A42, _A43 = 44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0
_A51, _A52, _A53, _A54 = 19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0
_A61, _A62, _A63, _A64, _A65 = 9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0
_B1, _B3, _B4, _B5, _B6 = 35.0 / 384.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0
_E1, _E3, _E4, _E5, _E6, _E7 = (
    71.0 / 57600.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
)


@njit
def _dp_step(y, h, pert, p, k1, k2, k3, k4, k5, k6, k7, tmp, ynew, err):
    dim = y.shape[0]
    for j in range(dim):
        tmp[j] = y[j] + h * _A21 * k1[j]
    geodesic_rhs(tmp, pert, p, k2)
    for j in range(dim):
        tmp[j] = y[j] + h * (_A31 * k1[j] + _A32 * k2[j])
    geodesic_rhs(tmp, pert, p, k3)
    for j in range(dim):
        tmp[j] = y[j] + h * (_A41 * k1[j] + _A42 * k2[j] + _A43 * k3[j])
    geodesic_rhs(tmp, pert, p, k4)
    for j in range(dim):
        tmp[j] = y[j] + h * (_A51 * k1[j] + _A52 * k2[j] + _A53 * k3[j] + _A54 * k4[j])
    geodesic_rhs(tmp, pert, p, k5)
    for j in range(dim):
        tmp[j] = y[j] + h * (_A61 * k1[j] + _A62 * k2[j] + _A63 * k3[j] + _A64 * k4[j] + _A65 * k5[j])
    geodesic_rhs(tmp, pert, p, k6)
    for j in range(dim):
        ynew[j] = y[j] + h * (_B1 * k1[j] + _B3 * k3[j] + _B4 * k4[j] + _B5 * k5[j] + _B6 * k6[j])
    geodesic_rhs(ynew, pert, p, k7)
    for j in range(dim):
        err[j] = h * (_E1 * k1[j] + _E3 * k3[j] + _E4 * k4[j] + _E5 * k5[j] + _E6 * k6[j] + _E7 * k7[j])


@njit
def _crossing(y, ytest, p):
    """Index of the block whose u drops from > 0 to <= 0 (lowest ytest), or -1."""
    best = -1
    lowest = 0.0
    for i in range(p):
        if y[i] > 0.0 and ytest[i] <= 0.0:
            if best < 0 or ytest[i] < lowest:
                best = i
                lowest = ytest[i]
    return best


@njit
def integrate_geodesic(y0, pert, p, length, tol, s_grid, max_steps):
    """Adaptive Dormand-Prince integration of the geodesic ODE up to ``length``.

    Records every accepted step when ``s_grid`` is empty, otherwise exactly the
    grid abscissae (the last of which must equal ``length``).  Integration stops
    early when some u_i reaches 0 from above; the crossing is located by
    bisection on the step size followed by one secant correction.

    The local error of each component is measured against
    ``tol * (floor + |y|)`` with floor 1, except the angular velocities: they
    never change sign, so their error is controlled purely relatively, which
    keeps the Clairaut momenta accurate even when they are tiny.

    Returns ``(S, Y, status, event_block, n_steps)``.
    """
    dim = y0.shape[0]
    nh = dim // 2
    floor = np.ones(dim)
    for i in range(p):
        floor[nh + p + i] = 0.0
    dense = s_grid.shape[0] == 0
    cap = 64 if dense else s_grid.shape[0] + 2
    S = np.empty(cap)
    Y = np.empty((cap, dim))
    S[0] = 0.0
    for j in range(dim):
        Y[0, j] = y0[j]
    count = 1

    k1 = np.empty(dim)
    k2 = np.empty(dim)
    k3 = np.empty(dim)
    k4 = np.empty(dim)
    k5 = np.empty(dim)
    k6 = np.empty(dim)
    k7 = np.empty(dim)
    tmp = np.empty(dim)
    ynew = np.empty(dim)
    ytest = np.empty(dim)
    err = np.empty(dim)
    y = y0.copy()
    geodesic_rhs(y, pert, p, k1)

    s = 0.0
    h = min(length, 0.05 * tol ** 0.2)
    gi = 0
    status = STATUS_LENGTH
    event_block = -1
    steps = 0
    while s < length:
        if steps >= max_steps:
            status = STATUS_STEP_FAILURE
            break
        steps += 1
        target = length
        if not dense:
            target = min(length, s_grid[gi])
        hit = False
        h_try = h
        if h_try >= target - s:
            h_try = target - s
            hit = True
        if h_try <= 1e-15 * max(1.0, abs(s)):
            if hit:
                # grid point coincides with the current abscissa
                s = target
                hit = True
            else:
                status = STATUS_STEP_FAILURE
                break
        else:
            _dp_step(y, h_try, pert, p, k1, k2, k3, k4, k5, k6, k7, tmp, ynew, err)
            enorm = 0.0
            finite = True
            for j in range(dim):
                if not (math.isfinite(ynew[j]) and math.isfinite(k7[j])):
                    finite = False
                    break
                sc = tol * (floor[j] + max(abs(y[j]), abs(ynew[j])))
                if sc > 0.0:
                    enorm += (err[j] / sc) ** 2
            if not finite:
                h = 0.25 * h_try
                continue
            enorm = math.sqrt(enorm / dim)
            if enorm > 1.0:
                h = h_try * max(0.2, 0.9 * enorm ** -0.2)
                if h <= 1e-15 * max(1.0, abs(s)):
                    status = STATUS_STEP_FAILURE
                    break
                continue

            ev = _crossing(y, ynew, p)
            if ev >= 0:
                lo = 0.0
                hi = h_try
                while hi - lo > 0.01 * tol * max(1.0, abs(s)):
                    mid = 0.5 * (lo + hi)
                    _dp_step(y, mid, pert, p, k1, k2, k3, k4, k5, k6, k7, tmp, ytest, err)
                    if _crossing(y, ytest, p) >= 0:
                        hi = mid
                    else:
                        lo = mid
                _dp_step(y, hi, pert, p, k1, k2, k3, k4, k5, k6, k7, tmp, ynew, err)
                ev = _crossing(y, ynew, p)
                u_hi = ynew[ev]
                if lo > 0.0:
                    _dp_step(y, lo, pert, p, k1, k2, k3, k4, k5, k6, k7, tmp, ytest, err)
                    u_lo = ytest[ev]
                else:
                    u_lo = y[ev]
                if u_lo > u_hi:
                    hsec = lo + (hi - lo) * u_lo / (u_lo - u_hi)
                    if hsec > 0.0:
                        _dp_step(y, hsec, pert, p, k1, k2, k3, k4, k5, k6, k7, tmp, ytest, err)
                        if abs(ytest[ev]) <= abs(u_hi):
                            hi = hsec
                            for j in range(dim):
                                ynew[j] = ytest[j]
                ynew[ev] = 0.0
                s = s + hi
                if count > 1 and s - S[count - 1] <= 1e-13 * max(1.0, s):
                    # the event coincides with the last recorded grid point
                    count -= 1
                    s = max(s, S[count])
                if count == S.shape[0]:
                    S, Y = _grow(S, Y)
                S[count] = s
                for j in range(dim):
                    Y[count, j] = ynew[j]
                count += 1
                status = STATUS_BOUNDARY
                event_block = ev
                break

            if hit:
                s = target
            else:
                s = s + h_try
            for j in range(dim):
                y[j] = ynew[j]
                k1[j] = k7[j]
            h_prop = h_try * min(5.0, max(0.2, 0.9 * max(enorm, 1e-12) ** -0.2))
            if hit and h_prop < h:
                h_prop = h
            h = h_prop

        if dense or hit:
            if count == S.shape[0]:
                S, Y = _grow(S, Y)
            S[count] = s
            for j in range(dim):
                Y[count, j] = y[j]
            count += 1
            if not dense:
                gi += 1
                if gi >= s_grid.shape[0]:
                    break
    return S[:count].copy(), Y[:count].copy(), status, event_block, steps


@njit
def _grow(S, Y):
    cap = S.shape[0] * 2
    S2 = np.empty(cap)
    Y2 = np.empty((cap, Y.shape[1]))
    S2[: S.shape[0]] = S
    Y2[: S.shape[0]] = Y
    return S2, Y2


# ---------------------------------------------------------------------------
# Clairaut quadrature for a single node block
# ---------------------------------------------------------------------------
# Block metric A f(u) (du^2 + u^6/4 dtheta^2), f = 1 + c u^4.  Along a unit
# speed geodesic with Clairaut constant P = b(u) thetadot, b = (A/4) f u^6:
#     dtheta/du = P sqrt(a) / (sqrt(b) sqrt(b - P^2)),  ds/du = sqrt(ab)/sqrt(b - P^2).
# Substituting u = ubase + w^2 and writing b(u) - P^2 = w^2 D(w) + R removes the
# inverse square-root singularity at a turning point (R = 0 there).

_XGK = np.array(
    [
        0.991455371120812639206854697526329,
        0.949107912342758524526189684047851,
        0.864864423359769072789712788640926,
        0.741531185599394439863864773280788,
        0.586087235467691130294144845693013,
        0.405845151377397166906606412076961,
        0.207784955007898467600689403773245,
        0.0,
    ]
)
_WGK = np.array(
    [
        0.022935322010529224963732008058970,
        0.063092092629978553290700663189204,
        0.104790010322250183839876322541518,
        0.140653259715525918745189590510238,
        0.169004726639267902826583426598550,
        0.190350578064785409913256402421014,
        0.204432940075298892414161999234649,
        0.209482141084727828012999174891714,
    ]
)
_WG = np.array(
    [
        0.129484966168869693270611432679082,
        0.279705391489276667901467771423780,
        0.381830050505118944950369775488975,
        0.417959183673469387755102040816327,
    ]
)


@njit
def block_b(u, A, c):
    u2 = u * u
    return 0.25 * A * (1.0 + c * u2 * u2) * u2 * u2 * u2


@njit
def _clairaut_integrand(w, ubase, R, P, A, c):
    u = ubase + w * w
    # (u^6 - ubase^6)/(u - ubase) and (u^10 - ubase^10)/(u - ubase)
    s6 = 0.0
    s10 = 0.0
    uk = 1.0
    for k in range(10):
        term = uk * ubase ** (9 - k)
        s10 += term
        if k < 6:
            s6 += uk * ubase ** (5 - k)
        uk *= u
    D = 0.25 * A * (s6 + c * s10)
    u4 = u * u * u * u
    a = A * (1.0 + c * u4)
    b = 0.25 * a * u4 * u * u
    if w == 0.0:
        if R == 0.0 and D > 0.0:
            ratio = 1.0 / math.sqrt(D)
        else:
            ratio = 0.0
    else:
        ratio = 1.0 / math.sqrt(D + R / (w * w))
    if P == 0.0:
        th = 0.0
    else:
        th = 2.0 * P * math.sqrt(a / b) * ratio
    ln = 2.0 * math.sqrt(a * b) * ratio
    return th, ln


@njit
def _gk15(lo, hi, ubase, R, P, A, c):
    center = 0.5 * (lo + hi)
    half = 0.5 * (hi - lo)
    th0, ln0 = _clairaut_integrand(center, ubase, R, P, A, c)
    kth = _WGK[7] * th0
    kln = _WGK[7] * ln0
    gth = _WG[3] * th0
    gln = _WG[3] * ln0
    for j in range(7):
        dx = half * _XGK[j]
        th1, ln1 = _clairaut_integrand(center - dx, ubase, R, P, A, c)
        th2, ln2 = _clairaut_integrand(center + dx, ubase, R, P, A, c)
        kth += _WGK[j] * (th1 + th2)
        kln += _WGK[j] * (ln1 + ln2)
        if j % 2 == 1:
            gth += _WG[j // 2] * (th1 + th2)
            gln += _WG[j // 2] * (ln1 + ln2)
    return kth * half, kln * half, abs((kth - gth) * half), abs((kln - gln) * half)


@njit
def clairaut_integrals(ubase, uend, R, P, A, c, epsrel, max_intervals):
    """Twist and length integrals of a block geodesic over u in [ubase, uend].

    Globally adaptive G7-K15 in the variable w = sqrt(u - ubase).
    Returns ``(dtheta, length, err_theta, err_length, converged)``.
    """
    W = math.sqrt(max(uend - ubase, 0.0))
    if W == 0.0:
        return 0.0, 0.0, 0.0, 0.0, True
    los = np.empty(max_intervals)
    his = np.empty(max_intervals)
    ith = np.empty(max_intervals)
    iln = np.empty(max_intervals)
    eth = np.empty(max_intervals)
    eln = np.empty(max_intervals)
    # geometric initial panels resolve the peak near the turning point
    npanel = 0
    edges = np.empty(24)
    edges[0] = 0.0
    nedge = 1
    scale = math.sqrt(ubase) if ubase > 0.0 else W
    e = min(scale, W) * 0.25
    while e < W and nedge < 20:
        edges[nedge] = e
        nedge += 1
        e *= 4.0
    edges[nedge] = W
    nedge += 1
    for k in range(nedge - 1):
        a0 = edges[k]
        b0 = edges[k + 1]
        t1, l1, e1, e2 = _gk15(a0, b0, ubase, R, P, A, c)
        los[npanel] = a0
        his[npanel] = b0
        ith[npanel] = t1
        iln[npanel] = l1
        eth[npanel] = e1
        eln[npanel] = e2
        npanel += 1
    converged = False
    while True:
        tot_th = 0.0
        tot_ln = 0.0
        err_th = 0.0
        err_ln = 0.0
        for k in range(npanel):
            tot_th += ith[k]
            tot_ln += iln[k]
            err_th += eth[k]
            err_ln += eln[k]
        ok_th = err_th <= epsrel * abs(tot_th) or err_th < 1e-300
        ok_ln = err_ln <= epsrel * abs(tot_ln) or err_ln < 1e-300
        if ok_th and ok_ln:
            converged = True
            break
        if npanel + 1 >= max_intervals:
            break
        sth = max(abs(tot_th), 1e-300)
        sln = max(abs(tot_ln), 1e-300)
        worst = 0
        wval = -1.0
        for k in range(npanel):
            v = eth[k] / sth + eln[k] / sln
            if v > wval:
                wval = v
                worst = k
        a0 = los[worst]
        b0 = his[worst]
        mid = 0.5 * (a0 + b0)
        if mid <= a0 or mid >= b0:
            break
        t1, l1, e1, e2 = _gk15(a0, mid, ubase, R, P, A, c)
        t2, l2, e3, e4 = _gk15(mid, b0, ubase, R, P, A, c)
        his[worst] = mid
        ith[worst] = t1
        iln[worst] = l1
        eth[worst] = e1
        eln[worst] = e2
        los[npanel] = mid
        his[npanel] = b0
        ith[npanel] = t2
        iln[npanel] = l2
        eth[npanel] = e3
        eln[npanel] = e4
        npanel += 1
    return tot_th, tot_ln, err_th, err_ln, converged


@njit
def turning_point(P, A, c):
    """Solve b(u) = P^2 for u >= 0 (b is increasing)."""
    target = 4.0 * P * P / A
    if target <= 0.0:
        return 0.0
    u = target ** (1.0 / 6.0)
    if c == 0.0:
        return u
    # u^6 (1 + c u^4) = target; the c = 0 root is an upper bound, Newton descends monotonically
    for _ in range(100):
        u2 = u * u
        u4 = u2 * u2
        u6 = u4 * u2
        g = u6 * (1.0 + c * u4) - target
        dg = 6.0 * u4 * u + 10.0 * c * u4 * u4 * u
        step = g / dg
        u -= step
        if abs(step) <= 1e-16 * u:
            break
    return u


# ---------------------------------------------------------------------------
# discrete path energy
# ---------------------------------------------------------------------------


@njit
def _path_energy_grad_loop(X, A, pert, p):
    N = X.shape[0] - 1
    n = X.shape[1]
    G = np.zeros((N + 1, n))
    W = np.empty((N, n))
    lengths = np.empty(N)
    E = 0.0
    for k in range(N):
        seg = 0.0
        for j in range(n):
            W[k, j] = 1.0
        for i in range(p):
            um = 0.5 * (X[k, i] + X[k + 1, i])
            c = pert[i]
            um2 = um * um
            um4 = um2 * um2
            f = 1.0 + c * um4
            fp = 4.0 * c * um2 * um
            gu = A[i] * f
            gt = 0.25 * A[i] * f * um4 * um2
            dgu = A[i] * fp
            dgt = 0.25 * A[i] * (fp * um4 * um2 + 6.0 * f * um4 * um)
            du = X[k + 1, i] - X[k, i]
            dt = X[k + 1, p + i] - X[k, p + i]
            W[k, i] = gu
            W[k, p + i] = gt
            dm = 0.5 * (dgu * du * du + dgt * dt * dt)
            G[k, i] += dm
            G[k + 1, i] += dm
        for j in range(n):
            d = X[k + 1, j] - X[k, j]
            seg += W[k, j] * d * d
            G[k + 1, j] += 2.0 * W[k, j] * d
            G[k, j] -= 2.0 * W[k, j] * d
        E += seg
        lengths[k] = math.sqrt(seg)
    return E, G, W, lengths


def _path_energy_grad_numpy(X, A, pert, p):
    N = X.shape[0] - 1
    n = X.shape[1]
    mid = 0.5 * (X[1:] + X[:-1])
    D = X[1:] - X[:-1]
    W = np.ones((N, n))
    dW = np.zeros((N, n))
    if p:
        um = mid[:, :p]
        f = 1.0 + pert * um**4
        fp = 4.0 * pert * um**3
        W[:, :p] = A * f
        W[:, p : 2 * p] = 0.25 * A * f * um**6
        dW[:, :p] = A * fp
        dW[:, p : 2 * p] = 0.25 * A * (fp * um**6 + 6.0 * f * um**5)
    seg = (W * D * D).sum(axis=1)
    G = np.zeros((N + 1, n))
    flux = 2.0 * W * D
    G[1:] += flux
    G[:-1] -= flux
    if p:
        dm = 0.5 * (dW[:, :p] * D[:, :p] ** 2 + dW[:, p : 2 * p] * D[:, p : 2 * p] ** 2)
        G[:-1, :p] += dm
        G[1:, :p] += dm
    return float(seg.sum()), G, W, np.sqrt(seg)


@njit
def _tridiag_precondition_loop(W, G):
    """Solve H d = G per coordinate, H the frozen-metric Hessian of the energy.

    Endpoints are pinned: rows 0 and N of the result are zero.
    """
    N = W.shape[0]
    n = W.shape[1]
    out = np.zeros((N + 1, n))
    m = N - 1
    if m <= 0:
        return out
    cp = np.empty(m)
    dp = np.empty(m)
    for j in range(n):
        for r in range(m):
            k = r + 1
            diag = 2.0 * (W[k - 1, j] + W[k, j])
            lower = -2.0 * W[k - 1, j]
            upper = -2.0 * W[k, j]
            rhs = G[k, j]
            if r == 0:
                cp[r] = upper / diag
                dp[r] = rhs / diag
            else:
                den = diag - lower * cp[r - 1]
                cp[r] = upper / den
                dp[r] = (rhs - lower * dp[r - 1]) / den
        out[m, j] = dp[m - 1]
        for r in range(m - 2, -1, -1):
            out[r + 1, j] = dp[r] - cp[r] * out[r + 2, j]
    return out


def _tridiag_precondition_numpy(W, G):
    from scipy.linalg import solve_banded

    N, n = W.shape
    out = np.zeros((N + 1, n))
    if N < 2:
        return out
    ab = np.zeros((3, N - 1))
    for j in range(n):
        w = W[:, j]
        ab[0, 1:] = -2.0 * w[1:-1]
        ab[1, :] = 2.0 * (w[:-1] + w[1:])
        ab[2, :-1] = -2.0 * w[1:-1]
        out[1:N, j] = solve_banded((1, 1), ab, G[1:N, j])
    return out


if NUMBA_ENABLED:
    path_energy_grad = _path_energy_grad_loop
    tridiag_precondition = _tridiag_precondition_loop
else:
    path_energy_grad = _path_energy_grad_numpy
    tridiag_precondition = _tridiag_precondition_numpy


def warmup():
    """Trigger compilation of every kernel once (no-op on the numpy path)."""
    y = np.array([1.0, 0.0, -0.5, 0.1])
    integrate_geodesic(y, np.zeros(1), 1, 0.1, 1e-8, np.empty(0), 1000)
    integrate_geodesic(y, np.zeros(1), 1, 0.1, 1e-8, np.array([0.05, 0.1]), 1000)
    clairaut_integrals(0.5, 1.0, 0.0, 0.1, 1.0, 0.0, 1e-10, 200)
    turning_point(0.1, 1.0, 0.5)
    X = np.array([[1.0, 0.0], [0.8, 0.1], [0.5, 0.2]])
    E, G, W, _ = path_energy_grad(X, np.ones(1), np.zeros(1), 1)
    tridiag_precondition(W, G)
