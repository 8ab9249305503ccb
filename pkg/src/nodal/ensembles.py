"""Samplers for the Gaussian ensembles and their scaled-kernel diagnostics.

Three families: stationary spectral fields on R^m (randomized-frequency
series), real trigonometric polynomials on the torus (Dirichlet-kernel
covariance, evaluated through the FFT), and Kostlan homogeneous polynomials
on the 2-sphere (covariance (x.y)^n). Gradients always come from term-wise
differentiation of the drawn series.
"""

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import gammaln

from .fields import FieldSample, GridWindow
from .sphere import SphereMesh, SphereFieldSample
from .spectral import (AtomSet, CubeLebesgue, GaussianDensity,
                       DegenerateMeasureError, check_rho1, check_rho3)
from .util import (STREAM_COEF, STREAM_FREQ, rng_stream, as_float_array)

DEFAULT_N_MODES = 4096
KOSTLAN_BUDGET = 10_000_000      # monomial-point products per chart evaluation
KOSTLAN_MAX_DEGREE = 512


# ---------------------------------------------------------------------------
# ensemble specs

@dataclass(frozen=True)
class Stationary:
    rho: object
    n_modes: int = DEFAULT_N_MODES

    @property
    def dim(self):
        return self.rho.dim

    @property
    def L(self):
        return 1.0

    def to_config(self):
        return {"kind": "stationary", "rho": self.rho.to_config(),
                "n_modes": self.n_modes}


@dataclass(frozen=True)
class Trigonometric:
    degree: int
    dim: int

    def __post_init__(self):
        if self.degree < 1:
            raise ValueError("degree must be >= 1")

    @property
    def L(self):
        return float(self.degree)

    def to_config(self):
        return {"kind": "trigonometric", "degree": self.degree, "dim": self.dim}


@dataclass(frozen=True)
class Kostlan:
    degree: int
    dim: int = 2                    # chart dimension; ambient is dim + 1

    def __post_init__(self):
        if self.degree < 1:
            raise ValueError("degree must be >= 1")
        if self.dim != 2:
            raise ValueError("only the 2-sphere ensemble is implemented")

    @property
    def L(self):
        return math.sqrt(self.degree)

    def to_config(self):
        return {"kind": "kostlan", "degree": self.degree, "dim": self.dim}


def spec_from_config(cfg):
    kind = cfg.get("kind")
    if kind == "stationary":
        from .spectral import measure_from_config
        return Stationary(measure_from_config(cfg["rho"]),
                          cfg.get("n_modes", DEFAULT_N_MODES))
    if kind == "trigonometric":
        return Trigonometric(cfg["degree"], cfg["dim"])
    if kind == "kostlan":
        return Kostlan(cfg["degree"], cfg.get("dim", 2))
    raise ValueError(f"unknown ensemble kind: {kind!r}")


def limit_measure(spec):
    """Local limiting spectral measure of the ensemble (normalized)."""
    if isinstance(spec, Stationary):
        return spec.rho
    if isinstance(spec, Trigonometric):
        return CubeLebesgue(1.0, spec.dim)
    if isinstance(spec, Kostlan):
        return GaussianDensity(1.0 / (2.0 * math.pi), spec.dim)
    raise TypeError(f"not an ensemble spec: {spec!r}")


# ---------------------------------------------------------------------------
# stationary sampler


_workspaces = {}


def _workspace(key, shape, dtype):
    """Reusable buffers: repeated same-shape sampling dominates runtime here,
    and this platform pays heavy page-fault costs for each large fresh
    allocation."""
    buf = _workspaces.get(key)
    if buf is None or buf.shape != shape or buf.dtype != dtype:
        buf = np.empty(shape, dtype=dtype)
        _workspaces[key] = buf
    return buf


def _mode_matrices(freqs, axes):
    """Per-axis complex phase tables A_j[k, g] = exp(2 pi i lambda_kj x_g)."""
    mats = []
    for j, xs in enumerate(axes):
        shape = (len(freqs), len(xs))
        ph = _workspace(("ph", j), shape, float)
        np.multiply.outer(freqs[:, j], xs, out=ph)
        ph *= 2.0 * np.pi
        mat = _workspace(("mat", j), shape, complex)
        np.cos(ph, out=mat.real)
        np.sin(ph, out=mat.imag)
        mats.append(mat)
    return mats


def _assemble(weights, mats):
    """Re sum_k w_k prod_j A_j[k, g_j], organized as BLAS calls."""
    m = len(mats)
    if m == 1:
        return (mats[0].T @ weights).real
    if m == 2:
        return ((mats[0].T * weights) @ mats[1]).real
    # small-m fallback: peel the leading axis
    lead = mats[0]
    rest = mats[1:]
    out = np.empty([a.shape[1] for a in mats])
    for g in range(lead.shape[1]):
        out[g] = _assemble(weights * lead[:, g], rest)
    return out


def sample_stationary(rho, window, n_modes=DEFAULT_N_MODES, seed=0,
                      sample_index=0, rotation=None, check=True):
    """Field with covariance F rho via randomized frequencies.

    F(x) = n^{-1/2} sum_j (xi_j cos 2 pi lambda_j x + eta_j sin ...) with
    lambda_j iid from rho / rho(R^m). Atomic measures collapse to their exact
    finite expansion and ignore n_modes.
    """
    if check:
        f4 = check_rho1(rho)
        if not np.isfinite(f4):
            raise DegenerateMeasureError("fourth spectral moment is not finite")
        mm = check_rho3(rho)
        if not mm.passed:
            raise DegenerateMeasureError(
                "measure is supported on a hyperplane; the gradient law "
                "degenerates and the field has no well-defined census")
    m = rho.dim
    if window.dim != m:
        raise ValueError("window dimension does not match the measure")
    rng_c = rng_stream(seed, sample_index, STREAM_COEF)
    if isinstance(rho, AtomSet):
        freqs, amps = _atom_modes(rho)
    else:
        rng_f = rng_stream(seed, sample_index, STREAM_FREQ)
        freqs = rho.sample_frequencies(rng_f, n_modes)
        amps = np.full(len(freqs), 1.0 / math.sqrt(len(freqs)))
    if rotation is not None:
        rotation = as_float_array(rotation, "rotation")
        freqs = freqs @ rotation
    coeffs = rng_c.normal(size=(len(freqs), 2))
    w = amps * (coeffs[:, 0] - 1j * coeffs[:, 1])
    axes = window.axes()
    mats = _mode_matrices(freqs, axes)
    values = _assemble(w, mats)
    grads = np.empty((m,) + window.shape)
    for a in range(m):
        grads[a] = _assemble(w * (2j * np.pi * freqs[:, a]), mats)
    meta = {"kind": "stationary", "rho": rho.to_config(), "L": 1.0,
            "n_modes": int(len(freqs)), "seed": int(seed),
            "sample_index": int(sample_index)}
    return FieldSample(window=window, values=values, gradients=grads, meta=meta)


def _atom_modes(rho):
    """Exact modes for an atomic measure: one cosine/sine pair per +/- atom pair."""
    pts = rho.points
    w = rho.weights
    total = rho.total_mass
    used = np.zeros(len(pts), dtype=bool)
    freqs, amps = [], []
    for i in range(len(pts)):
        if used[i]:
            continue
        used[i] = True
        if np.linalg.norm(pts[i]) < 1e-14:           # atom at the origin
            freqs.append(pts[i])
            amps.append(math.sqrt(w[i] / total))
            continue
        # locate the mirror atom
        j = None
        for jj in range(i + 1, len(pts)):
            if not used[jj] and np.allclose(pts[jj], -pts[i], atol=1e-12):
                j = jj
                break
        pair_w = w[i] + (w[j] if j is not None else 0.0)
        if j is not None:
            used[j] = True
        freqs.append(pts[i])
        amps.append(math.sqrt(pair_w / total))
    return np.array(freqs), np.array(amps)


# ---------------------------------------------------------------------------
# trigonometric ensemble


def _half_lattice(n, m):
    """Lexicographically positive representatives of the +/- mode pairs."""
    axes = [np.arange(-n, n + 1)] * m
    mesh = np.meshgrid(*axes, indexing="ij")
    nu = np.stack([g.ravel() for g in mesh], axis=1)
    keep = np.zeros(len(nu), dtype=bool)
    decided = np.zeros(len(nu), dtype=bool)
    for j in range(m):
        col = nu[:, j]
        keep |= (~decided) & (col > 0)
        decided |= col != 0
    return nu[keep]


def sample_trigonometric(n, m, grid_step=0.1, seed=0, sample_index=0,
                         scaled=True):
    """Full-torus sample of the degree-n real trigonometric ensemble.

    The exact covariance is the normalized product of Dirichlet kernels.
    With scaled=True the sample is reported in local coordinates u = n x,
    where the covariance approaches the sinc product; the torus then has
    side n and the grid step is `grid_step` in u units.
    """
    if n < 1:
        raise ValueError("degree must be >= 1")
    side = float(n) if scaled else 1.0
    G = max(2 * n + 2, int(round(side / grid_step)))
    rng = rng_stream(seed, sample_index, STREAM_COEF)
    half = _half_lattice(n, m)
    z0 = rng.normal()
    xi = rng.normal(size=(len(half), 2))
    norm = (2 * n + 1) ** (-m / 2.0)
    C = np.zeros((G,) * m, dtype=complex)
    C[(0,) * m] = z0
    z = (xi[:, 0] - 1j * xi[:, 1]) / math.sqrt(2.0)
    idx_pos = tuple((half[:, j]) % G for j in range(m))
    idx_neg = tuple((-half[:, j]) % G for j in range(m))
    C[idx_pos] = z
    C[idx_neg] = np.conj(z)
    values = np.fft.ifftn(C).real * (G ** m) * norm
    grads = np.empty((m,) + (G,) * m)
    dscale = 1.0 / n if scaled else 1.0
    for a in range(m):
        Ca = np.zeros_like(C)
        Ca[idx_pos] = z * (2j * np.pi * half[:, a])
        Ca[idx_neg] = np.conj(Ca[idx_pos])
        grads[a] = np.fft.ifftn(Ca).real * (G ** m) * norm * dscale
    window = GridWindow.make(np.zeros(m), np.full(m, side / G), (G,) * m)
    meta = {"kind": "trigonometric", "degree": int(n), "dim": int(m),
            "L": float(n), "scaled": bool(scaled), "seed": int(seed),
            "sample_index": int(sample_index)}
    return FieldSample(window=window, values=values, gradients=grads,
                       meta=meta, wrap=True)


def torus_subwindow(sample, center, half_extent):
    """Cut a planar sub-grid around `center` out of a full-torus sample.

    The torus is rolled so the center lands mid-grid; the slice is then an
    ordinary non-wrapping window suitable for the planar census machinery.
    """
    if not sample.wrap:
        raise ValueError("subwindow extraction expects a torus sample")
    window = sample.window
    m = window.dim
    center = np.atleast_1d(as_float_array(center, "center"))
    G = np.array(window.shape)
    h = window.spacing
    side = G * h
    if np.any(2 * half_extent >= side - 2 * h):
        raise ValueError("requested window does not fit inside the torus")
    cidx = np.round((center - window.origin) / h).astype(int) % G
    mid = G // 2
    shift = tuple(int(mid[a] - cidx[a]) for a in range(m))
    vals = np.roll(sample.values, shift, axis=tuple(range(m)))
    grads = np.roll(sample.gradients, shift, axis=tuple(range(1, m + 1)))
    k = np.ceil(np.atleast_1d(half_extent) / h).astype(int)
    k = np.broadcast_to(k, (m,))
    sl = tuple(slice(mid[a] - k[a], mid[a] + k[a] + 1) for a in range(m))
    # local coordinates: the requested center becomes the origin
    sub = GridWindow.make(-k * h, h, tuple(2 * k + 1))
    return FieldSample(window=sub, values=vals[sl].copy(),
                       gradients=grads[(slice(None),) + sl].copy(),
                       meta=dict(sample.meta), wrap=False)


# ---------------------------------------------------------------------------
# Kostlan ensemble


def kostlan_coefficients(n, seed=0, sample_index=0):
    """Coefficient rows c_k[j0] with c_J = sqrt(multinomial(n, J)) xi_J.

    Index convention: k is the power of the last ambient coordinate,
    j0 the power of the first; j1 = n - k - j0.
    """
    if n > KOSTLAN_MAX_DEGREE:
        raise ValueError(f"sampling degree exceeds the configured budget "
                         f"({KOSTLAN_MAX_DEGREE})")
    rng = rng_stream(seed, sample_index, STREAM_COEF)
    rows = []
    lg_n = gammaln(n + 1)
    for k in range(n + 1):
        d = n - k
        j0 = np.arange(d + 1)
        log_mult = lg_n - gammaln(j0 + 1) - gammaln(d - j0 + 1) - gammaln(k + 1)
        xi = rng.normal(size=d + 1)
        rows.append(np.exp(0.5 * log_mult) * xi)
    return rows


def _power_table(x, n):
    """pows[a, i] = x_i^a for a = 0..n."""
    out = np.empty((n + 1, len(x)))
    out[0] = 1.0
    for a in range(1, n + 1):
        np.multiply(out[a - 1], x, out=out[a])
    return out


def sample_kostlan_sphere(n, mesh=None, seed=0, sample_index=0,
                          mesh_factor=4.0, with_gradient=True):
    """Sample the degree-n Kostlan polynomial on a full-sphere face mesh.

    Evaluation is separated into a theta factor table and per-row
    trigonometric polynomials in phi, so the cost is O(n^2 n_phi) rather
    than O(n^2 n_theta n_phi).
    """
    if n > KOSTLAN_MAX_DEGREE:
        raise ValueError(f"degree exceeds the configured budget "
                         f"({KOSTLAN_MAX_DEGREE})")
    if mesh is None:
        mesh = SphereMesh.for_degree(n, factor=mesh_factor)
    rows = kostlan_coefficients(n, seed, sample_index)
    theta, phi = mesh.face_centers_angular()
    ct, st = np.cos(theta), np.sin(theta)
    cp, sp = np.cos(phi), np.sin(phi)
    ct_pow = _power_table(ct, n + 1)
    st_pow = _power_table(st, n + 1)
    cp_pow = _power_table(cp, n + 1)
    sp_pow = _power_table(sp, n + 1)
    T = np.empty((n + 1, mesh.n_phi))
    dT = np.empty_like(T) if with_gradient else None
    for k in range(n + 1):
        d = n - k
        c = rows[k][:, None]
        cc = cp_pow[:d + 1]
        ss = sp_pow[d::-1]
        T[k] = np.sum(c * cc * ss, axis=0)
        if with_gradient:
            j0 = np.arange(d + 1)[:, None]
            j1 = d - j0
            # d/dphi [cos^j0 sin^j1] = -j0 cos^{j0-1} sin^{j1+1}
            #                          + j1 cos^{j0+1} sin^{j1-1}
            t1 = -j0 * cp_pow[np.maximum(j0[:, 0] - 1, 0)] * sp_pow[d + 1 - j0[:, 0]]
            t2 = j1 * cp_pow[np.minimum(j0[:, 0] + 1, n + 1)] \
                * sp_pow[np.maximum(d - 1 - j0[:, 0], 0)]
            dT[k] = np.sum(c * (t1 + t2), axis=0)
    Theta = ct_pow[:n + 1] * st_pow[n::-1]                  # (n+1, n_theta)
    values = Theta.T @ T
    pole_n = rows[n][0]
    pole_s = rows[n][0] * ((-1) ** n)
    grad_norm = None
    if with_gradient:
        k_idx = np.arange(n + 1)[:, None]
        dTheta = -k_idx * ct_pow[np.maximum(k_idx[:, 0] - 1, 0)] \
            * st_pow[n + 1 - k_idx[:, 0]] \
            + (n - k_idx) * ct_pow[np.minimum(k_idx[:, 0] + 1, n + 1)] \
            * st_pow[np.maximum(n - 1 - k_idx[:, 0], 0)]
        f_theta = dTheta.T @ T
        f_phi = Theta.T @ dT
        grad_norm = np.sqrt(f_theta ** 2 + (f_phi / st[:, None]) ** 2)
    meta = {"kind": "kostlan", "degree": int(n), "L": math.sqrt(n),
            "seed": int(seed), "sample_index": int(sample_index),
            "mesh_certified": mesh.certified_for_degree(n, mesh_factor)}
    return SphereFieldSample(mesh=mesh, values=values,
                             pole_values=np.array([pole_n, pole_s]),
                             grad_norm=grad_norm, meta=meta)


def _flat_kostlan_coefficients(rows, n):
    ks, j0s, cs = [], [], []
    for k in range(n + 1):
        d = n - k
        ks.append(np.full(d + 1, k))
        j0s.append(np.arange(d + 1))
        cs.append(rows[k])
    return (np.concatenate(ks), np.concatenate(j0s), np.concatenate(cs))


def _eval_homogeneous(rows, n, pts, budget=KOSTLAN_BUDGET, derivative=None):
    """Direct monomial evaluation at ambient points (N, 3) with a cost guard."""
    ks, j0s, cs = _flat_kostlan_coefficients(rows, n)
    j1s = n - ks - j0s
    npts = len(pts)
    if len(cs) * npts > budget:
        raise ValueError(
            f"evaluation budget exceeded: {len(cs)} monomials x {npts} points "
            f"> {budget}; raise the budget or coarsen the grid")
    p0 = _power_table(pts[:, 0], n)
    p1 = _power_table(pts[:, 1], n)
    p2 = _power_table(pts[:, 2], n)
    if derivative is None:
        return cs @ (p0[j0s] * p1[j1s] * p2[ks])
    a = derivative
    exps = {0: j0s, 1: j1s, 2: ks}[a]
    lowered = {0: (np.maximum(j0s - 1, 0), j1s, ks),
               1: (j0s, np.maximum(j1s - 1, 0), ks),
               2: (j0s, j1s, np.maximum(ks - 1, 0))}[a]
    return (cs * exps) @ (p0[lowered[0]] * p1[lowered[1]] * p2[lowered[2]])


def sample_kostlan_chart(n, window, seed=0, sample_index=0,
                         budget=KOSTLAN_BUDGET):
    """Sample in the local chart pi(u) = (u, sqrt(1 - |u|^2)) around the pole.

    The window is in scaled coordinates w = sqrt(n) u, where the covariance
    approaches exp(-|w - w'|^2 / 2). Chart points must stay on the upper
    hemisphere: |w| < sqrt(n).
    """
    if window.dim != 2:
        raise ValueError("the Kostlan chart is two-dimensional")
    L = math.sqrt(n)
    mesh = np.meshgrid(*window.axes(), indexing="ij")
    w = np.stack([g.ravel() for g in mesh], axis=1)
    u = w / L
    r2 = np.sum(u * u, axis=1)
    if np.any(r2 >= 1.0):
        raise ValueError("chart window leaves the hemisphere: |u| >= 1")
    height = np.sqrt(1.0 - r2)
    pts = np.column_stack([u, height])
    rows = kostlan_coefficients(n, seed, sample_index)
    values = _eval_homogeneous(rows, n, pts, budget=budget)
    amb = np.stack([_eval_homogeneous(rows, n, pts, budget=budget, derivative=a)
                    for a in range(3)])
    # du pi = (e1, e2, -u_a / height); d/dw = (1/L) d/du
    grads = np.empty((2, len(w)))
    for a in range(2):
        grads[a] = (amb[a] - amb[2] * u[:, a] / height) / L
    shape = window.shape
    meta = {"kind": "kostlan", "degree": int(n), "L": L, "chart": True,
            "seed": int(seed), "sample_index": int(sample_index)}
    return FieldSample(window=window, values=values.reshape(shape),
                       gradients=grads.reshape((2,) + shape), meta=meta)


# ---------------------------------------------------------------------------
# exact kernels, scaled kernels, convergence and controllability


def _dirichlet(t, n):
    """sin(pi (2n+1) t) / ((2n+1) sin(pi t)), continuously extended."""
    t = np.asarray(t, dtype=float)
    s = np.sin(np.pi * t)
    small = np.abs(s) < 1e-12
    ts = np.where(small, 0.5, t)
    out = np.sin(np.pi * (2 * n + 1) * ts) / ((2 * n + 1) * np.sin(np.pi * ts))
    return np.where(small, 1.0, out)


def exact_kernel(spec, x, y):
    """Exact covariance K(x, y) of the ensemble in its native coordinates."""
    x = np.asarray(x, float)
    y = np.asarray(y, float)
    if isinstance(spec, Stationary):
        return spec.rho.kernel(x - y)
    if isinstance(spec, Trigonometric):
        return np.prod(_dirichlet(x - y, spec.degree), axis=-1)
    if isinstance(spec, Kostlan):
        return np.sum(x * y, axis=-1) ** spec.degree
    raise TypeError(f"not an ensemble spec: {spec!r}")


def _chart_points(u):
    u = np.asarray(u, float)
    r2 = np.sum(u * u, axis=-1)
    if np.any(r2 >= 1.0):
        raise ValueError("chart point leaves the hemisphere: |u| >= 1")
    return np.concatenate([u, np.sqrt(1.0 - r2)[..., None]], axis=-1)


def scaled_kernel(spec, x, u, v, L=None):
    """K_{x, L}(u, v) = K_L(x + u/L, x + v/L) in closed form."""
    if L is None:
        L = spec.L
    x = np.asarray(x, float)
    u = np.asarray(u, float)
    v = np.asarray(v, float)
    if isinstance(spec, Kostlan):
        return exact_kernel(spec, _chart_points(x + u / L),
                            _chart_points(x + v / L))
    return exact_kernel(spec, x + u / L, x + v / L)


@dataclass(frozen=True)
class ScaledKernelReport:
    L_sequence: tuple
    sup_errors: tuple

    def strictly_decreasing(self):
        e = self.sup_errors
        return all(e[i + 1] < e[i] for i in range(len(e) - 1))


def kernel_convergence_report(kind, m, degrees, probe_extent=3.0, step=1.0,
                              x=None):
    """Sup over a probe lattice of |K_{x,L}(u,v) - k_x(u - v)| per degree.

    `degrees` are ensemble degrees (n); the scaling L is n for the
    trigonometric family and sqrt(n) for Kostlan.
    """
    if x is None:
        x = np.zeros(m)
    axes = [np.arange(-probe_extent, probe_extent + 1e-9, step)] * m
    mesh = np.meshgrid(*axes, indexing="ij")
    pts = np.stack([g.ravel() for g in mesh], axis=1)
    U = pts[:, None, :]
    V = pts[None, :, :]
    Ls, errs = [], []
    for n in degrees:
        spec = (Trigonometric(n, m) if kind == "trigonometric"
                else Kostlan(n, m))
        limit = limit_measure(spec)
        K = scaled_kernel(spec, x, U, V)
        k_inf = limit.kernel(U - V)
        Ls.append(spec.L)
        errs.append(float(np.max(np.abs(K - k_inf))))
    return ScaledKernelReport(L_sequence=tuple(Ls), sup_errors=tuple(errs))


def _unique_multi_indices(m, max_order):
    """All multi-indices with |alpha| <= max_order (<= 2 in practice)."""
    out = [np.zeros(m, dtype=int)]
    for i in range(m):
        a = np.zeros(m, dtype=int)
        a[i] = 1
        out.append(a)
    if max_order >= 2:
        for i in range(m):
            for j in range(i, m):
                a = np.zeros(m, dtype=int)
                a[i] += 1
                a[j] += 1
                out.append(a)
    return out


def _trig_diag_entry(n, alpha):
    """|d^alpha_x d^alpha_y K| on the diagonal for the trig ensemble (L = 1)."""
    s2 = n * (n + 1) / 3.0
    s4 = n * (n + 1) * (3 * n * n + 3 * n - 1) / 15.0
    val = 1.0
    for a in alpha:
        if a == 0:
            continue
        elif a == 1:
            val *= (2 * np.pi) ** 2 * s2
        elif a == 2:
            val *= (2 * np.pi) ** 4 * s4
        else:
            raise ValueError("order > 2 unsupported")
    return val


def _kostlan_diag_entry(n, x, alpha):
    """|d^alpha_u d^alpha_v (pi(u).pi(v))^n| at u = v = x in the chart."""
    x = np.asarray(x, float)
    r2 = float(x @ x)
    if r2 >= 1.0:
        raise ValueError("chart point leaves the hemisphere")
    h = math.sqrt(1.0 - r2)
    P = np.array([x[0], x[1], h])
    Pd = np.array([[1.0, 0.0, -x[0] / h],
                   [0.0, 1.0, -x[1] / h]])
    g = Pd @ Pd.T
    # second chart derivatives dotted with pi(u): d_ij = P_ij . P
    Pdd = np.empty((2, 2))
    for i in range(2):
        for j in range(2):
            Pdd[i, j] = (-(1.0 if i == j else 0.0) / h
                         - x[i] * x[j] / h ** 3) * h   # last component times P_z
    d = Pdd
    order = int(np.sum(alpha))
    if order == 0:
        return 1.0
    if order == 1:
        i = int(np.flatnonzero(alpha)[0])
        return abs(n * g[i, i])
    idx = np.flatnonzero(alpha)
    i, j = (idx[0], idx[0]) if len(idx) == 1 else (idx[0], idx[1])
    # Pij . Pkl term: only the z components of second derivatives survive
    pij = -((1.0 if i == j else 0.0) / h + x[i] * x[j] / h ** 3)
    term = n * pij * pij + n * (n - 1) * (d[i, j] ** 2
                                          + g[i, i] * g[j, j] + g[i, j] ** 2)
    return abs(term)


def controllability_entry(spec, alpha, x=None, L=None):
    """One diagonal seminorm entry L^{-2|alpha|} |d^a_x d^a_y K(x,y)|_{y=x}|."""
    if L is None:
        L = spec.L
    a = np.asarray(alpha, dtype=int)
    scale = L ** (-2.0 * a.sum())
    if isinstance(spec, Trigonometric):
        return _trig_diag_entry(spec.degree, a) * scale
    if isinstance(spec, Kostlan):
        if x is None:
            x = np.zeros(spec.dim)
        return _kostlan_diag_entry(spec.degree, x, a) * scale
    if isinstance(spec, Stationary):
        return _stationary_diag_entry(spec.rho, a) * scale
    raise TypeError(f"not an ensemble spec: {spec!r}")


def _stationary_diag_entry(rho, a):
    m = rho.dim
    if a.sum() == 0:
        return 1.0
    if a.sum() == 1:
        i = int(np.flatnonzero(a)[0])
        return (2 * np.pi) ** 2 * rho.moment_matrix()[i, i]
    idx = np.flatnonzero(a)
    i, j = (idx[0], idx[0]) if len(idx) == 1 else (idx[0], idx[1])
    Ei = np.zeros((m, m))
    Ei[i, i] = 1.0
    Ej = np.zeros((m, m))
    Ej[j, j] = 1.0
    if i == j:
        mom = rho.quartic_moment(Ei)
    else:
        mom = 0.5 * (rho.quartic_moment(Ei + Ej) - rho.quartic_moment(Ei)
                     - rho.quartic_moment(Ej))
    return (2 * np.pi) ** 4 * mom


def controllability_probe(spec, half_extent=0.25, L=None, order=2,
                          n_probe=5):
    """Seminorm max_{|alpha|<=order} max_x L^{-2|alpha|} |d^a_x d^a_y K| on the diagonal."""
    if L is None:
        L = spec.L
    m = spec.dim
    alphas = _unique_multi_indices(m, order)
    if isinstance(spec, Trigonometric):
        best = 0.0
        for a in alphas:
            best = max(best, _trig_diag_entry(spec.degree, a)
                       * L ** (-2.0 * a.sum()))
        return best
    if isinstance(spec, Kostlan):
        axes = [np.linspace(-half_extent, half_extent, n_probe)] * m
        meshes = np.meshgrid(*axes, indexing="ij")
        pts = np.stack([g.ravel() for g in meshes], axis=1)
        best = 0.0
        for a in alphas:
            for x in pts:
                best = max(best, _kostlan_diag_entry(spec.degree, x, a)
                           * L ** (-2.0 * a.sum()))
        return best
    if isinstance(spec, Stationary):
        best = 0.0
        for a in alphas:
            best = max(best, _stationary_diag_entry(spec.rho, a)
                       * L ** (-2.0 * a.sum()))
        return best
    raise TypeError(f"not an ensemble spec: {spec!r}")


def gradient_covariance(spec, x=None, L=None):
    """C_{x,L}: covariance of the scaled gradient, the order-1 probe block."""
    if L is None:
        L = spec.L
    m = spec.dim
    if isinstance(spec, Trigonometric):
        n = spec.degree
        return np.eye(m) * ((2 * np.pi) ** 2 * n * (n + 1) / 3.0 / L ** 2)
    if isinstance(spec, Kostlan):
        if x is None:
            x = np.zeros(m)
        x = np.asarray(x, float)
        h = math.sqrt(1.0 - float(x @ x))
        Pd = np.array([[1.0, 0.0, -x[0] / h], [0.0, 1.0, -x[1] / h]])
        return spec.degree * (Pd @ Pd.T) / L ** 2
    if isinstance(spec, Stationary):
        return (2 * np.pi) ** 2 * spec.rho.moment_matrix() / L ** 2
    raise TypeError(f"not an ensemble spec: {spec!r}")
