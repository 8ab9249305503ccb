"""Monte Carlo estimation of the nodal-component intensity.

The fixed-window estimator draws independent field replicas, counts
components in balls B(R), and reports the mean with its standard error,
the per-r sandwich statistics (local density phi_r and ring density psi_r
whose expectations bracket the intensity), stability-certificate coverage,
and the R-convergence trace. Spatial (ergodic) averaging over one large
field, double-scaling recovery for parametric ensembles, full-sphere
Kostlan totals, and the linear-change-of-variables ratio test live here
too.
"""

import math
from dataclasses import dataclass, field
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from .ensembles import (Kostlan, Stationary, Trigonometric,
                        sample_kostlan_chart, sample_kostlan_sphere,
                        sample_stationary, sample_trigonometric,
                        torus_subwindow)
from .fields import GridWindow
from .spectral import LinearImage, check_rho1, check_rho2, check_rho3, \
    DegenerateMeasureError
from .sphere import SphereMesh
from .topology import (BallWindow, ball_count_fields, bulinskaya_statistic,
                       count_in_ball, ring_component_count, sign_grid,
                       sphere_zero_component_count, stability_certificate,
                       zero_components)
from .util import vol_ball


def _mean_se(xs):
    xs = np.asarray(xs, dtype=float)
    n = len(xs)
    mean = float(xs.mean()) if n else float("nan")
    se = float(xs.std(ddof=1) / math.sqrt(n)) if n > 1 else float("nan")
    return mean, se


@dataclass(frozen=True)
class CensusStatistics:
    r: float
    phi_r: float
    psi_r: float
    phi_se: float
    psi_se: float
    n_samples: int

    @property
    def bracket_low(self):
        return self.phi_r

    @property
    def bracket_high(self):
        return self.phi_r + self.psi_r


@dataclass
class NuEstimate:
    nu_hat: float
    stderr: float
    nu_hat_certified: float
    stderr_certified: float
    brackets: list                      # CensusStatistics per r
    R_trace: list                       # (R, estimate, se)
    n_samples: int
    seed: int
    certified_fraction: float
    warnings: list = field(default_factory=list)
    per_sample: dict = field(default_factory=dict)

    def to_json(self):
        return {
            "nu_hat": self.nu_hat, "stderr": self.stderr,
            "nu_hat_certified": self.nu_hat_certified,
            "stderr_certified": self.stderr_certified,
            "brackets": [{"r": b.r, "phi_r": b.phi_r, "psi_r": b.psi_r,
                          "phi_se": b.phi_se, "psi_se": b.psi_se,
                          "bracket_low": b.bracket_low,
                          "bracket_high": b.bracket_high}
                         for b in self.brackets],
            "R_trace": [{"R": R, "estimate": e, "se": s}
                        for (R, e, s) in self.R_trace],
            "n_samples": self.n_samples, "seed": self.seed,
            "certified_fraction": self.certified_fraction,
            "warnings": list(self.warnings),
        }


def _nu_one_sample(args):
    (rho, window, n_modes, seed, s, rotation, R_list, r_list) = args
    fieldsample = sample_stationary(rho, window, n_modes=n_modes, seed=seed,
                                    sample_index=s, rotation=rotation,
                                    check=False)
    grid = sign_grid(fieldsample)
    census = zero_components(grid)
    cert = stability_certificate(fieldsample)
    m = window.dim
    center = np.zeros(m)
    counts_R = []
    for R in R_list:
        n_in, _ = count_in_ball(census, center, R)
        counts_R.append(n_in / vol_ball(m, R))
    phis, psis = [], []
    for r in r_list:
        n_in, _ = count_in_ball(census, center, r)
        phis.append(n_in / vol_ball(m, r))
        psis.append(ring_component_count(fieldsample, center, r)
                    / vol_ball(m, r))
    tau = bulinskaya_statistic(fieldsample)
    return counts_R, phis, psis, bool(cert.certified), tau


def estimate_nu(rho, R_list, r_list, n_samples, seed, spacing=0.1,
                n_modes=None, pad=1.0, rotation=None, workers=1):
    """Monte Carlo estimate of the component intensity for a stationary field.

    Each sample is censused in balls B(R) for R in R_list; the estimate is
    the mean of N(R_max)/vol B(R_max). For each r in r_list the sandwich
    statistics phi_r (contained-count density) and psi_r (ring-count
    density) are aggregated; their means bracket the intensity. Samples
    failing the stability certificate are flagged, never dropped: the
    headline estimate uses all samples and a certified-only variant is
    reported alongside.
    """
    from .ensembles import DEFAULT_N_MODES
    if n_modes is None:
        n_modes = DEFAULT_N_MODES
    f4 = check_rho1(rho)
    if not np.isfinite(f4):
        raise DegenerateMeasureError("fourth spectral moment is not finite")
    if not check_rho3(rho).passed:
        raise DegenerateMeasureError(
            "spectral measure concentrates on a hyperplane; census refused")
    warnings = []
    if check_rho2(rho).has_atoms:
        warnings.append("measure has atoms: spatial averages may stay random "
                        "and the intensity need not be self-averaging")
    m = rho.dim
    R_list = sorted(float(R) for R in R_list)
    r_list = sorted(float(r) for r in r_list)
    half = max(R_list + r_list) + pad
    fb = np.maximum(rho.freq_bound(), 1e-9)
    per_axis = spacing / np.maximum(fb, 1.0)
    window = GridWindow.box(np.zeros(m), half, per_axis)
    argit = [(rho, window, n_modes, seed, s, rotation, R_list, r_list)
             for s in range(n_samples)]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_nu_one_sample, argit, chunksize=1))
    else:
        results = [_nu_one_sample(a) for a in argit]
    counts_R = np.array([res[0] for res in results])    # (S, len(R_list))
    phis = np.array([res[1] for res in results])
    psis = np.array([res[2] for res in results])
    certified = np.array([res[3] for res in results], dtype=bool)
    taus = np.array([res[4] for res in results])
    R_trace = []
    for j, R in enumerate(R_list):
        mean, se = _mean_se(counts_R[:, j])
        R_trace.append((R, mean, se))
    nu_hat, stderr = _mean_se(counts_R[:, -1])
    if certified.any():
        nu_c, se_c = _mean_se(counts_R[certified, -1])
    else:
        nu_c, se_c = float("nan"), float("nan")
    brackets = []
    for j, r in enumerate(r_list):
        phi, phi_se = _mean_se(phis[:, j])
        psi, psi_se = _mean_se(psis[:, j])
        brackets.append(CensusStatistics(r=r, phi_r=phi, psi_r=psi,
                                         phi_se=phi_se, psi_se=psi_se,
                                         n_samples=n_samples))
    return NuEstimate(nu_hat=nu_hat, stderr=stderr, nu_hat_certified=nu_c,
                      stderr_certified=se_c, brackets=brackets,
                      R_trace=R_trace, n_samples=n_samples, seed=seed,
                      certified_fraction=float(certified.mean()),
                      warnings=warnings,
                      per_sample={"taus": taus, "certified": certified,
                                  "counts_R": counts_R, "phis": phis,
                                  "psis": psis})


# ---------------------------------------------------------------------------
# ergodic averages over one large field


@dataclass(frozen=True)
class ErgodicAverages:
    phi: float
    psi: float
    phi_se: float
    psi_se: float
    R: float
    r: float


def ergodic_average(fieldsample, S, R, r, stride=1, with_psi=True,
                    psi_stride=None):
    """Spatial averages A_R Phi_r and A_R Psi_r over translations in S(R).

    Standard errors come from the spread over the 2^m coordinate-sign
    blocks of the window (a crude but honest correlation allowance).
    """
    window = fieldsample.window
    m = window.dim
    need = S.bounding_radius(R) + r
    if np.any(window.origin > -need + 1e-9) or np.any(window.upper
                                                      < need - 1e-9):
        raise ValueError("window too small for the requested average")
    census = zero_components(sign_grid(fieldsample))
    Nc, _, axes = ball_count_fields(census, r, stride=stride,
                                    intersecting=False)
    mesh = np.meshgrid(*axes, indexing="ij")
    pts = np.stack([g.ravel() for g in mesh], axis=1)
    mask = S.contains_points(pts, R)
    vb = vol_ball(m, r)
    vals_phi = Nc.ravel()[mask] / vb
    phi = float(vals_phi.mean())
    # block spread
    blocks = []
    signs = pts[mask] > 0
    for code in range(2 ** m):
        sel = np.ones(len(vals_phi), dtype=bool)
        for a in range(m):
            sel &= signs[:, a] == bool((code >> a) & 1)
        if sel.any():
            blocks.append(vals_phi[sel].mean())
    phi_se = float(np.std(blocks, ddof=1) / math.sqrt(len(blocks))) \
        if len(blocks) > 1 else float("nan")
    psi = psi_se = float("nan")
    if with_psi:
        if psi_stride is None:
            psi_stride = max(1, 4 * stride)
        axes_p = [ax[::psi_stride] for ax in window.axes()]
        mesh_p = np.meshgrid(*[ax for ax in axes_p], indexing="ij")
        pts_p = np.stack([g.ravel() for g in mesh_p], axis=1)
        mask_p = S.contains_points(pts_p, R)
        ring_vals = np.array([ring_component_count(fieldsample, c, r)
                              for c in pts_p[mask_p]]) / vb
        psi = float(ring_vals.mean())
        signs_p = pts_p[mask_p] > 0
        blocks_p = []
        for code in range(2 ** m):
            sel = np.ones(len(ring_vals), dtype=bool)
            for a in range(m):
                sel &= signs_p[:, a] == bool((code >> a) & 1)
            if sel.any():
                blocks_p.append(ring_vals[sel].mean())
        psi_se = float(np.std(blocks_p, ddof=1) / math.sqrt(len(blocks_p))) \
            if len(blocks_p) > 1 else float("nan")
    return ErgodicAverages(phi=phi, psi=psi, phi_se=phi_se, psi_se=psi_se,
                           R=R, r=r)


# ---------------------------------------------------------------------------
# double scaling


@dataclass
class DoubleScalingEstimate:
    x: np.ndarray
    R_list: list
    L_list: list
    table: np.ndarray              # (len(R_list), len(L_list)) means
    se_table: np.ndarray
    nu_bar: float

    def to_json(self):
        return {"x": np.asarray(self.x).tolist(),
                "R_list": list(self.R_list), "L_list": list(self.L_list),
                "table": self.table.tolist(),
                "se_table": self.se_table.tolist(), "nu_bar": self.nu_bar}


def double_scaling(spec, x, R_list, L_list, n_samples, seed, spacing=0.1,
                   pad=1.0, budget=None):
    """Mean of N(x, R/L; f_L) / vol B(R) on the (R, L) grid.

    The table is kept whole so the two-limit structure stays auditable;
    nu_bar is the largest-R, largest-L cell, not a fitted limit.
    """
    m = spec.dim
    x = np.asarray(x, dtype=float)
    R_list = [float(R) for R in R_list]
    L_list = sorted(int(L) for L in L_list)
    Rmax = max(R_list)
    table = np.zeros((len(R_list), len(L_list)))
    se_table = np.zeros_like(table)
    for jL, n_deg in enumerate(L_list):
        vals = np.zeros((n_samples, len(R_list)))
        for s in range(n_samples):
            if isinstance(spec, Trigonometric):
                full = sample_trigonometric(n_deg, m, grid_step=spacing,
                                            seed=seed, sample_index=s,
                                            scaled=True)
                u_center = float(n_deg) * x[0] if m == 1 else \
                    float(n_deg) * x
                sub = torus_subwindow(full, np.atleast_1d(u_center),
                                      Rmax + pad)
                window = sub.window
                center = window.origin + (np.array(window.shape) - 1) \
                    * window.spacing / 2.0
                census = zero_components(sign_grid(sub))
            elif isinstance(spec, Kostlan):
                kwargs = {} if budget is None else {"budget": budget}
                window = GridWindow.box(np.zeros(m), Rmax + pad, spacing)
                chart = sample_kostlan_chart(n_deg, window, seed=seed,
                                             sample_index=s, **kwargs)
                center = np.zeros(m)
                census = zero_components(sign_grid(chart))
            else:
                raise TypeError("double scaling applies to parametric "
                                "ensembles (trigonometric or Kostlan)")
            for jR, R in enumerate(R_list):
                if R <= 0:
                    vals[s, jR] = 0.0
                    continue
                n_in, _ = count_in_ball(census, center, R)
                vals[s, jR] = n_in / vol_ball(m, R)
        for jR in range(len(R_list)):
            mean, se = _mean_se(vals[:, jR])
            table[jR, jL] = mean
            se_table[jR, jL] = se
    nu_bar = float(table[int(np.argmax(R_list)), -1])
    return DoubleScalingEstimate(x=x, R_list=R_list, L_list=L_list,
                                 table=table, se_table=se_table,
                                 nu_bar=nu_bar)


# ---------------------------------------------------------------------------
# Kostlan full-sphere totals


@dataclass
class KostlanTotalResult:
    n_list: list
    means: list
    ses: list
    normalized: list               # mean / n^{m/2}
    cauchy_diffs: list
    mesh_certified: list
    totals: dict                   # n -> per-sample totals

    def to_json(self):
        return {"n_list": list(self.n_list), "means": list(self.means),
                "ses": list(self.ses), "normalized": list(self.normalized),
                "cauchy_diffs": list(self.cauchy_diffs),
                "mesh_certified": list(self.mesh_certified)}


def total_count_kostlan(n_list, n_samples, seed, mesh_factor=4.0):
    """Total zero-set components on the sphere per degree, normalized by n.

    Sphere components are counted through the face census (domains minus
    one); the mesh resolves the degree when its spacing is below
    1/(mesh_factor sqrt(n)).
    """
    n_list = sorted(int(n) for n in n_list)
    means, ses, normalized, certified, totals = [], [], [], [], {}
    for n in n_list:
        mesh = SphereMesh.for_degree(n, factor=mesh_factor)
        certified.append(mesh.certified_for_degree(n, mesh_factor))
        tot = np.zeros(n_samples)
        for s in range(n_samples):
            sample = sample_kostlan_sphere(n, mesh, seed=seed, sample_index=s,
                                           with_gradient=False)
            tot[s] = sphere_zero_component_count(sample)
        mean, se = _mean_se(tot)
        means.append(mean)
        ses.append(se)
        normalized.append(mean / n)          # m = 2: n^{m/2} = n
        totals[n] = tot
    diffs = [abs(normalized[i + 1] - normalized[i])
             for i in range(len(normalized) - 1)]
    return KostlanTotalResult(n_list=n_list, means=means, ses=ses,
                              normalized=normalized, cauchy_diffs=diffs,
                              mesh_certified=certified, totals=totals)


# ---------------------------------------------------------------------------
# determinant scaling


@dataclass
class DetScalingResult:
    ratio: float
    ratio_se: float
    nu_base: float
    nu_transformed: float
    det_T: float
    n_samples: int

    def ci95(self):
        return (self.ratio - 1.96 * self.ratio_se,
                self.ratio + 1.96 * self.ratio_se)

    def to_json(self):
        lo, hi = self.ci95()
        return {"ratio": self.ratio, "ratio_se": self.ratio_se,
                "ci95": [lo, hi], "nu_base": self.nu_base,
                "nu_transformed": self.nu_transformed, "det_T": self.det_T,
                "n_samples": self.n_samples}


def det_scaling_test(rho, T, R, n_samples, seed, spacing=0.1, n_modes=2048,
                     pad=1.0):
    """Ratio of intensities of F(Tx) and F(x) under common random numbers.

    The transformed field's spectral measure is the pushforward of rho
    under T^T; sharing the (seed, sample) streams makes the transformed
    frequency draws the exact images of the base draws, so the ratio
    variance collapses.
    """
    T = np.asarray(T, dtype=float)
    if abs(np.linalg.det(T)) < 1e-12:
        raise ValueError("T must be nonsingular")
    m = rho.dim
    rho_t = LinearImage(rho, T.T)
    for meas in (rho, rho_t):
        if not check_rho3(meas).passed:
            raise DegenerateMeasureError("measure fails the hyperplane check")
    half = R + pad
    base_f = np.maximum(rho.freq_bound(), 1e-9)
    win1 = GridWindow.box(np.zeros(m), half, spacing / np.maximum(base_f, 1.0))
    tf = np.maximum(rho_t.freq_bound(), 1e-9)
    win2 = GridWindow.box(np.zeros(m), half, spacing / np.maximum(tf, 1.0))
    center = np.zeros(m)
    vb = vol_ball(m, R)
    nu1 = np.zeros(n_samples)
    nu2 = np.zeros(n_samples)
    for s in range(n_samples):
        f1 = sample_stationary(rho, win1, n_modes=n_modes, seed=seed,
                               sample_index=s, check=False)
        f2 = sample_stationary(rho_t, win2, n_modes=n_modes, seed=seed,
                               sample_index=s, check=False)
        c1 = zero_components(sign_grid(f1))
        c2 = zero_components(sign_grid(f2))
        nu1[s], _ = count_in_ball(c1, center, R)
        nu2[s], _ = count_in_ball(c2, center, R)
    nu1 /= vb
    nu2 /= vb
    m1, m2 = nu1.mean(), nu2.mean()
    ratio = float(m2 / m1)
    cov = np.cov(np.stack([nu1, nu2]), ddof=1)
    var_ratio = (cov[1, 1] + ratio ** 2 * cov[0, 0]
                 - 2 * ratio * cov[0, 1]) / (m1 ** 2 * n_samples)
    return DetScalingResult(ratio=ratio,
                            ratio_se=float(math.sqrt(max(var_ratio, 0.0))),
                            nu_base=float(m1), nu_transformed=float(m2),
                            det_T=float(abs(np.linalg.det(T))),
                            n_samples=n_samples)
