//! Interferometer characterization: Hong–Ou–Mandel dip fitting of two-photon
//! delay scans, visibility prediction from a unitary, and least-squares
//! recovery of mesh parameters from a set of measured visibilities.
//!
//! The pipeline mirrors an in-situ chip characterization. Each input/output
//! pair of a two-photon scan is fitted with the dip model of [`dip_model`]
//! to extract a visibility `V = -amplitude/y0`. The full set of visibilities
//! then constrains the free parameters of a mesh template through the
//! weighted objective
//!
//! ```text
//! V_opt = Σ_i (V_i^exp - V_i^th)² / (σ_i² Γ)
//! ```
//!
//! minimized by bounded multi-start quasi-Newton descent. Visibilities are
//! invariant under per-mode input/output phases, so recovery is meaningful
//! only up to dephasing: compare predicted visibilities or `|U_ij|`, never
//! raw phases.

use crate::matfunc::ComplexMatrix;
use crate::mesh::{element_unitary, mesh_to_unitary, InterferometerMesh, MeshElement};
use crate::wavepacket::{pair_overlap, GaussianPhoton};
use crate::{Error, Result};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

/// Delay-line positioning error (±5 µm of single-pass path) expressed in fs.
pub const DELAY_POSITIONING_SIGMA_FS: f64 = 5000.0 / crate::wavepacket::C_NM_PER_FS;

// ---------------------------------------------------------------------------
// Visibility prediction
// ---------------------------------------------------------------------------

/// Two-photon interference visibility for photons entering modes `(i, j)`
/// and leaving modes `(k, l)` of `u` (all 1-based):
///
/// ```text
/// V = -(h₁h₂* + h₁*h₂) / (|h₁|² + |h₂|²),   h₁ = U_ki U_lj,  h₂ = U_kj U_li
/// ```
///
/// Defined as 0 when both path amplitudes vanish.
pub fn predict_visibility(u: &ComplexMatrix, i: usize, j: usize, k: usize, l: usize) -> Result<f64> {
    let m = u.n_rows();
    if !u.is_square() {
        return Err(Error::Shape("visibility needs a square network matrix".into()));
    }
    for &p in &[i, j, k, l] {
        if p < 1 || p > m {
            return Err(Error::InvalidValue(format!("mode {p} outside 1..={m}")));
        }
    }
    if i == j || k == l {
        return Err(Error::InvalidValue(format!(
            "degenerate mode pair ({i},{j}) -> ({k},{l})"
        )));
    }
    let h1 = u.get(k - 1, i - 1) * u.get(l - 1, j - 1);
    let h2 = u.get(k - 1, j - 1) * u.get(l - 1, i - 1);
    let denom = h1.norm_sqr() + h2.norm_sqr();
    if denom == 0.0 {
        return Ok(0.0);
    }
    Ok(-2.0 * (h1 * h2.conj()).re / denom)
}

// ---------------------------------------------------------------------------
// Dip model and scan fitting
// ---------------------------------------------------------------------------

/// One coincidence sample of a delay scan.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScanSample {
    pub delay_fs: f64,
    pub counts: f64,
    pub error: f64,
}

/// A two-photon delay scan with its background rates and photon spectra.
#[derive(Clone, Debug)]
pub struct VisibilityScan {
    pub input_pair: (usize, usize),
    pub output_pair: (usize, usize),
    pub samples: Vec<ScanSample>,
    /// Higher-order background with the other input blocked, first input.
    pub ho1: f64,
    /// Same with the first input blocked.
    pub ho2: f64,
    /// Dark-count rate, already contained in both `ho` terms.
    pub dark: f64,
    pub spectra: [GaussianPhoton; 2],
}

impl VisibilityScan {
    pub fn new(
        input_pair: (usize, usize),
        output_pair: (usize, usize),
        samples: Vec<ScanSample>,
        ho1: f64,
        ho2: f64,
        dark: f64,
        spectra: [GaussianPhoton; 2],
    ) -> Result<Self> {
        if input_pair.0 >= input_pair.1 || output_pair.0 >= output_pair.1 {
            return Err(Error::InvalidValue("mode pairs must be ordered i < j and k < l".into()));
        }
        for s in &samples {
            if s.counts < 0.0 || !(s.error > 0.0) || !s.delay_fs.is_finite() {
                return Err(Error::InvalidValue(format!(
                    "scan samples need counts >= 0 and error > 0, got {s:?}"
                )));
            }
        }
        Ok(Self { input_pair, output_pair, samples, ho1, ho2, dark, spectra })
    }

    /// Variance of the higher-order background correction `ho1 + ho2 - dark`,
    /// treating each rate as Poissonian.
    fn background_variance(&self) -> f64 {
        (self.ho1 + self.ho2 + self.dark).max(0.0)
    }
}

/// Gaussian interference envelope of a photon pair: `ζ e^{-ξ t²}`.
fn envelope(spectra: &[GaussianPhoton; 2], t: f64) -> f64 {
    let ov = pair_overlap(&spectra[0], &spectra[1]);
    ov.zeta * (-ov.xi * t * t).exp()
}

/// Expected coincidence counts at delay `t`:
///
/// ```text
/// N(t) = (1 + drift t) (y0 + amplitude ζ e^{-ξ (t - t_c)²} - (ho1 + ho2 - dark))
/// ```
#[allow(clippy::too_many_arguments)]
pub fn dip_model(
    t: f64,
    y0: f64,
    amplitude: f64,
    t_c: f64,
    drift_slope: f64,
    spectra: &[GaussianPhoton; 2],
    ho1: f64,
    ho2: f64,
    dark: f64,
) -> f64 {
    (1.0 + drift_slope * t) * (y0 + amplitude * envelope(spectra, t - t_c) - (ho1 + ho2 - dark))
}

/// Fitted dip parameters and the visibility they imply.
#[derive(Clone, Debug)]
pub struct DipFit {
    pub y0: f64,
    pub amplitude: f64,
    pub t_c: f64,
    pub drift_slope: f64,
    /// `-amplitude / y0`.
    pub visibility: f64,
    /// Standard errors of `(y0, amplitude, t_c, drift_slope)`.
    pub std_errors: [f64; 4],
    pub chi2_red: f64,
    pub iterations: usize,
}

/// Weighted least-squares fit of the dip model to a scan.
///
/// Weights combine the per-sample count error, the Poissonian error of the
/// background correction, and the delay-positioning error propagated to
/// first order through the model slope. Initialization is deterministic:
/// `y0` from the outer fifth of the samples, `t_c` and the amplitude from
/// the extremal sample, zero drift.
pub fn fit_dip(scan: &VisibilityScan) -> Result<DipFit> {
    let n = scan.samples.len();
    if n < 6 {
        return Err(Error::InsufficientData(format!(
            "dip fitting needs at least 6 samples, got {n}"
        )));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        scan.samples[a]
            .delay_fs
            .partial_cmp(&scan.samples[b].delay_fs)
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let edge = (n / 10).max(1);
    let background = scan.ho1 + scan.ho2 - scan.dark;
    let outer: Vec<f64> = order[..edge]
        .iter()
        .chain(order[n - edge..].iter())
        .map(|&i| scan.samples[i].counts)
        .collect();
    let y0_init = outer.iter().sum::<f64>() / outer.len() as f64 + background;
    let extremum = scan
        .samples
        .iter()
        .max_by(|a, b| {
            let da = (a.counts + background - y0_init).abs();
            let db = (b.counts + background - y0_init).abs();
            da.partial_cmp(&db).unwrap_or(std::cmp::Ordering::Equal)
        })
        .unwrap();
    let init = [
        y0_init,
        extremum.counts + background - y0_init,
        extremum.delay_fs,
        0.0,
    ];

    let bg_var = scan.background_variance();
    let sig_t = DELAY_POSITIONING_SIGMA_FS;
    let eval = |params: &[f64]| {
        let (y0, a, tc, drift) = (params[0], params[1], params[2], params[3]);
        let mut residuals = Vec::with_capacity(n);
        let mut jacobian = Vec::with_capacity(n);
        for s in &scan.samples {
            let t = s.delay_fs;
            let env = envelope(&scan.spectra, t - tc);
            let ov = pair_overlap(&scan.spectra[0], &scan.spectra[1]);
            let denv_dt = -2.0 * ov.xi * (t - tc) * env;
            let inner = y0 + a * env - background;
            let model = (1.0 + drift * t) * inner;
            let dmodel_dt = drift * inner + (1.0 + drift * t) * a * denv_dt;
            let var = s.error * s.error + bg_var + dmodel_dt * dmodel_dt * sig_t * sig_t;
            let w = var.recip().sqrt();
            residuals.push((model - s.counts) * w);
            jacobian.push(vec![
                (1.0 + drift * t) * w,
                (1.0 + drift * t) * env * w,
                -(1.0 + drift * t) * a * denv_dt * w,
                t * inner * w,
            ]);
        }
        (residuals, jacobian)
    };

    let fit = levenberg_marquardt(&init, eval, 200, 1e-14)?;
    let dof = (n as f64 - 4.0).max(1.0);
    let y0 = fit.params[0];
    let amplitude = fit.params[1];
    if y0 == 0.0 {
        return Err(Error::Numeric("fitted baseline is zero; visibility undefined".into()));
    }
    Ok(DipFit {
        y0,
        amplitude,
        t_c: fit.params[2],
        drift_slope: fit.params[3],
        visibility: -amplitude / y0,
        std_errors: [
            fit.cov_diag[0].sqrt(),
            fit.cov_diag[1].sqrt(),
            fit.cov_diag[2].sqrt(),
            fit.cov_diag[3].sqrt(),
        ],
        chi2_red: fit.chi2 / dof,
        iterations: fit.iterations,
    })
}

// ---------------------------------------------------------------------------
// Levenberg–Marquardt core
// ---------------------------------------------------------------------------

struct LmResult {
    params: Vec<f64>,
    chi2: f64,
    cov_diag: Vec<f64>,
    iterations: usize,
}

/// Standard damped least squares on pre-weighted residuals. `eval` returns
/// the weighted residual vector and its Jacobian with respect to the
/// parameters.
fn levenberg_marquardt(
    init: &[f64],
    eval: impl Fn(&[f64]) -> (Vec<f64>, Vec<Vec<f64>>),
    max_iter: usize,
    ftol: f64,
) -> Result<LmResult> {
    let p = init.len();
    let mut params = init.to_vec();
    let (mut residuals, mut jacobian) = eval(&params);
    let mut chi2: f64 = residuals.iter().map(|r| r * r).sum();
    let mut lambda: f64 = 1e-3;
    let mut iterations = 0;
    for _ in 0..max_iter {
        iterations += 1;
        // normal equations
        let mut jtj = nalgebra::DMatrix::<f64>::zeros(p, p);
        let mut jtr = nalgebra::DVector::<f64>::zeros(p);
        for (row, r) in jacobian.iter().zip(&residuals) {
            for a in 0..p {
                jtr[a] += row[a] * r;
                for b in 0..p {
                    jtj[(a, b)] += row[a] * row[b];
                }
            }
        }
        let mut damped = jtj.clone();
        for a in 0..p {
            damped[(a, a)] += lambda * jtj[(a, a)].max(1e-30);
        }
        let step = match damped.lu().solve(&(-&jtr)) {
            Some(s) => s,
            None => {
                lambda *= 10.0;
                continue;
            }
        };
        let trial: Vec<f64> = params.iter().zip(step.iter()).map(|(x, d)| x + d).collect();
        let (trial_res, trial_jac) = eval(&trial);
        let trial_chi2: f64 = trial_res.iter().map(|r| r * r).sum();
        if trial_chi2.is_finite() && trial_chi2 <= chi2 {
            let improvement = chi2 - trial_chi2;
            params = trial;
            residuals = trial_res;
            jacobian = trial_jac;
            chi2 = trial_chi2;
            lambda = (lambda * 0.3).max(1e-14);
            if improvement < ftol * chi2.max(1e-30) {
                break;
            }
        } else {
            lambda *= 5.0;
            if lambda > 1e12 {
                break;
            }
        }
    }
    if !chi2.is_finite() {
        return Err(Error::FitFailed(format!(
            "non-finite residual after {iterations} iterations"
        )));
    }
    // covariance from the undamped normal equations
    let mut jtj = nalgebra::DMatrix::<f64>::zeros(p, p);
    for row in &jacobian {
        for a in 0..p {
            for b in 0..p {
                jtj[(a, b)] += row[a] * row[b];
            }
        }
    }
    let cov_diag = match jtj.clone().try_inverse() {
        Some(inv) => (0..p).map(|a| inv[(a, a)].max(0.0)).collect(),
        None => vec![f64::NAN; p],
    };
    Ok(LmResult { params, chi2, cov_diag, iterations })
}

// ---------------------------------------------------------------------------
// Mesh reconstruction
// ---------------------------------------------------------------------------

/// One measured visibility with its standard deviation.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct VisibilityDatum {
    pub input_pair: (usize, usize),
    pub output_pair: (usize, usize),
    pub visibility: f64,
    pub sigma: f64,
}

/// A reconstruction task: a mesh template whose beam-splitter angles and
/// phases are free, the measured visibilities, and the fixed normalization
/// constant `Γ` of the objective (a historical bookkeeping constant; it
/// rescales `V_opt` but never moves the optimum).
#[derive(Clone, Debug)]
pub struct ReconstructionProblem {
    pub template: InterferometerMesh,
    pub visibilities: Vec<VisibilityDatum>,
    pub gamma: f64,
}

pub const DEFAULT_GAMMA: f64 = 2314.0;

impl ReconstructionProblem {
    pub fn new(template: InterferometerMesh, visibilities: Vec<VisibilityDatum>) -> Result<Self> {
        let free = template.elements.len();
        if visibilities.len() < free {
            return Err(Error::InsufficientData(format!(
                "{} visibilities cannot determine {} free parameters",
                visibilities.len(),
                free
            )));
        }
        for v in &visibilities {
            if !(v.sigma > 0.0) || !v.visibility.is_finite() {
                return Err(Error::InvalidValue(format!("bad visibility datum {v:?}")));
            }
        }
        Ok(Self { template, visibilities, gamma: DEFAULT_GAMMA })
    }

    pub fn with_gamma(mut self, gamma: f64) -> Self {
        self.gamma = gamma;
        self
    }
}

/// Optimizer knobs; the defaults match the documented contract.
#[derive(Clone, Copy, Debug)]
pub struct OptimizeOptions {
    pub starts: usize,
    pub seed: u64,
    pub max_iterations: usize,
}

impl Default for OptimizeOptions {
    fn default() -> Self {
        Self { starts: 32, seed: 0, max_iterations: 800 }
    }
}

/// Result of a mesh fit.
#[derive(Clone, Debug)]
pub struct MeshFit {
    pub mesh: InterferometerMesh,
    pub unitary: ComplexMatrix,
    pub v_opt: f64,
    /// `V_i^exp - V_i^th` per datum, in input order.
    pub residuals: Vec<f64>,
    /// Which start won (ties broken by index).
    pub start_index: usize,
}

fn mesh_params(mesh: &InterferometerMesh) -> Vec<f64> {
    mesh.elements
        .iter()
        .map(|e| match *e {
            MeshElement::BeamSplitter { beta, .. } => beta,
            MeshElement::PhaseShifter { alpha, .. } => alpha,
        })
        .collect()
}

fn with_params(template: &InterferometerMesh, params: &[f64]) -> InterferometerMesh {
    let elements = template
        .elements
        .iter()
        .zip(params)
        .map(|(e, &p)| match *e {
            MeshElement::BeamSplitter { a, b, .. } => MeshElement::BeamSplitter { a, b, beta: p },
            MeshElement::PhaseShifter { mode, .. } => MeshElement::PhaseShifter { mode, alpha: p },
        })
        .collect();
    InterferometerMesh { m: template.m, elements }
}

fn param_bounds(template: &InterferometerMesh) -> (Vec<f64>, Vec<f64>) {
    let mut lo = Vec::new();
    let mut hi = Vec::new();
    for e in &template.elements {
        match e {
            MeshElement::BeamSplitter { .. } => {
                lo.push(0.0);
                hi.push(std::f64::consts::PI);
            }
            // phases are periodic; let the optimizer roam and fold later
            MeshElement::PhaseShifter { .. } => {
                lo.push(f64::NEG_INFINITY);
                hi.push(f64::INFINITY);
            }
        }
    }
    (lo, hi)
}

/// Objective and analytic gradient of `V_opt` at `params`.
fn v_opt_and_grad(
    template: &InterferometerMesh,
    params: &[f64],
    data: &[VisibilityDatum],
    gamma: f64,
) -> (f64, Vec<f64>) {
    let m = template.m;
    let mesh = with_params(template, params);
    let n_el = mesh.elements.len();
    let elems: Vec<ComplexMatrix> = mesh
        .elements
        .iter()
        .map(|e| element_unitary(e, m).expect("template validated"))
        .collect();
    // prefix[k] = E_k .. E_1, suffix[k] = E_L .. E_{k+1}
    let mut prefix = Vec::with_capacity(n_el + 1);
    prefix.push(ComplexMatrix::identity(m));
    for e in &elems {
        let last = prefix.last().unwrap();
        prefix.push(e.mul(last));
    }
    let mut suffix = vec![ComplexMatrix::identity(m); n_el + 1];
    for k in (0..n_el).rev() {
        suffix[k] = suffix[k + 1].mul(&elems[k]);
    }
    let u = prefix[n_el].clone();
    // element derivatives embedded in m modes
    let du: Vec<ComplexMatrix> = mesh
        .elements
        .iter()
        .enumerate()
        .map(|(k, e)| {
            let mut d = ComplexMatrix::zeros(m, m);
            match *e {
                MeshElement::BeamSplitter { a, b, beta } => {
                    let (c, s) = ((beta / 2.0).cos() / 2.0, (beta / 2.0).sin() / 2.0);
                    let (a, b) = (a - 1, b - 1);
                    d.set(a, a, Complex64::new(-s, 0.0));
                    d.set(a, b, Complex64::new(0.0, c));
                    d.set(b, a, Complex64::new(0.0, c));
                    d.set(b, b, Complex64::new(-s, 0.0));
                }
                MeshElement::PhaseShifter { mode, alpha } => {
                    d.set(mode - 1, mode - 1, Complex64::from_polar(1.0, alpha) * Complex64::i());
                }
            }
            suffix[k + 1].mul(&d).mul(&prefix[k])
        })
        .collect();

    let mut f = 0.0;
    let mut grad = vec![0.0; n_el];
    for datum in data {
        let (i, j) = datum.input_pair;
        let (k, l) = datum.output_pair;
        let (i, j, k, l) = (i - 1, j - 1, k - 1, l - 1);
        let h1 = u.get(k, i) * u.get(l, j);
        let h2 = u.get(k, j) * u.get(l, i);
        let d = h1.norm_sqr() + h2.norm_sqr();
        let w = 1.0 / (datum.sigma * datum.sigma * gamma);
        if d < 1e-300 {
            let r = datum.visibility;
            f += r * r * w;
            continue;
        }
        let nnum = -2.0 * (h1 * h2.conj()).re;
        let v = nnum / d;
        let r = datum.visibility - v;
        f += r * r * w;
        for (p, dup) in du.iter().enumerate() {
            let dh1 = dup.get(k, i) * u.get(l, j) + u.get(k, i) * dup.get(l, j);
            let dh2 = dup.get(k, j) * u.get(l, i) + u.get(k, j) * dup.get(l, i);
            let dn = -2.0 * (dh1 * h2.conj() + h1 * dh2.conj()).re;
            let dd = 2.0 * (h1.conj() * dh1 + h2.conj() * dh2).re;
            let dv = (dn * d - nnum * dd) / (d * d);
            grad[p] += -2.0 * r * w * dv;
        }
    }
    (f, grad)
}

struct StartOutcome {
    params: Vec<f64>,
    value: f64,
    descended: bool,
}

/// Projected-BFGS descent from one start. Monotone: the value never
/// increases across accepted iterations.
fn bfgs_start(
    template: &InterferometerMesh,
    data: &[VisibilityDatum],
    gamma: f64,
    x0: Vec<f64>,
    lo: &[f64],
    hi: &[f64],
    max_iter: usize,
) -> StartOutcome {
    let p = x0.len();
    let clamp = |x: &mut [f64]| {
        for a in 0..p {
            x[a] = x[a].clamp(lo[a], hi[a]);
        }
    };
    let mut x = x0;
    clamp(&mut x);
    let (mut f, mut g) = v_opt_and_grad(template, &x, data, gamma);
    let mut h: Vec<Vec<f64>> = (0..p)
        .map(|a| (0..p).map(|b| if a == b { 1.0 } else { 0.0 }).collect())
        .collect();
    let mut descended = false;
    for _ in 0..max_iter {
        let gnorm = g.iter().fold(0.0f64, |m, &v| m.max(v.abs()));
        if gnorm < 1e-14 || f < 1e-18 {
            break;
        }
        // d = -H g
        let mut d: Vec<f64> = (0..p)
            .map(|a| -(0..p).map(|b| h[a][b] * g[b]).sum::<f64>())
            .collect();
        let slope: f64 = d.iter().zip(&g).map(|(a, b)| a * b).sum();
        if slope >= 0.0 {
            for a in 0..p {
                for b in 0..p {
                    h[a][b] = if a == b { 1.0 } else { 0.0 };
                }
                d[a] = -g[a];
            }
        }
        let slope: f64 = d.iter().zip(&g).map(|(a, b)| a * b).sum();
        // Armijo backtracking with projection
        let mut alpha = 1.0;
        let mut accepted = false;
        for _ in 0..60 {
            let mut trial: Vec<f64> = x.iter().zip(&d).map(|(xa, da)| xa + alpha * da).collect();
            clamp(&mut trial);
            let (ft, gt) = v_opt_and_grad(template, &trial, data, gamma);
            if ft.is_finite() && ft <= f + 1e-4 * alpha * slope {
                let s: Vec<f64> = trial.iter().zip(&x).map(|(a, b)| a - b).collect();
                let y: Vec<f64> = gt.iter().zip(&g).map(|(a, b)| a - b).collect();
                let sy: f64 = s.iter().zip(&y).map(|(a, b)| a * b).sum();
                if sy > 1e-14 {
                    bfgs_update(&mut h, &s, &y, sy);
                }
                x = trial;
                f = ft;
                g = gt;
                accepted = true;
                descended = true;
                break;
            }
            alpha *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    StartOutcome { params: x, value: f, descended }
}

fn bfgs_update(h: &mut [Vec<f64>], s: &[f64], y: &[f64], sy: f64) {
    let p = s.len();
    let hy: Vec<f64> = (0..p)
        .map(|a| (0..p).map(|b| h[a][b] * y[b]).sum::<f64>())
        .collect();
    let yhy: f64 = y.iter().zip(&hy).map(|(a, b)| a * b).sum();
    let c1 = (sy + yhy) / (sy * sy);
    for a in 0..p {
        for b in 0..p {
            h[a][b] += c1 * s[a] * s[b] - (hy[a] * s[b] + s[a] * hy[b]) / sy;
        }
    }
}

/// Fits the free mesh parameters to the measured visibilities by seeded
/// multi-start projected BFGS and returns the best fit.
///
/// Starts run in parallel; the reduction is deterministic (best `V_opt`,
/// ties broken by start index). Start 0 uses the template's own parameter
/// values, the remaining starts draw uniformly within bounds.
pub fn optimize_mesh(problem: &ReconstructionProblem, options: &OptimizeOptions) -> Result<MeshFit> {
    let template = &problem.template;
    let n_params = template.elements.len();
    if n_params == 0 {
        return Err(Error::InvalidValue("mesh template has no free parameters".into()));
    }
    let (lo, hi) = param_bounds(template);
    let mut rng = ChaCha8Rng::seed_from_u64(options.seed);
    let mut starts: Vec<Vec<f64>> = vec![mesh_params(template)];
    for _ in 1..options.starts.max(1) {
        let draw: Vec<f64> = template
            .elements
            .iter()
            .map(|e| match e {
                MeshElement::BeamSplitter { .. } => rng.gen_range(0.05..std::f64::consts::PI - 0.05),
                MeshElement::PhaseShifter { .. } => rng.gen_range(0.0..std::f64::consts::TAU),
            })
            .collect();
        starts.push(draw);
    }
    let outcomes: Vec<StartOutcome> = starts
        .into_par_iter()
        .map(|x0| bfgs_start(template, &problem.visibilities, problem.gamma, x0, &lo, &hi, options.max_iterations))
        .collect();
    if !outcomes.iter().any(|o| o.descended) {
        return Err(Error::OptimizationFailed(
            "no start produced a descent step".into(),
        ));
    }
    let (start_index, best) = outcomes
        .iter()
        .enumerate()
        .min_by(|(ia, a), (ib, b)| {
            a.value
                .partial_cmp(&b.value)
                .unwrap_or(std::cmp::Ordering::Equal)
                .then(ia.cmp(ib))
        })
        .unwrap();
    let mut params = best.params.clone();
    for (p, e) in params.iter_mut().zip(&template.elements) {
        if matches!(e, MeshElement::PhaseShifter { .. }) {
            *p = p.rem_euclid(std::f64::consts::TAU);
        }
    }
    let mesh = with_params(template, &params);
    let unitary = mesh_to_unitary(&mesh)?;
    let residuals = problem
        .visibilities
        .iter()
        .map(|d| {
            let v = predict_visibility(&unitary, d.input_pair.0, d.input_pair.1, d.output_pair.0, d.output_pair.1)?;
            Ok(d.visibility - v)
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(MeshFit { mesh, unitary, v_opt: best.value, residuals, start_index })
}

// ---------------------------------------------------------------------------
// Reduced chi-square of a reconstructed description
// ---------------------------------------------------------------------------

/// Per-scan nuisance parameters of the count model
/// `N(t) = N₀ (1 + drift t) P₁₁(t - t_c)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScanNuisance {
    pub n0: f64,
    pub t_c: f64,
    pub drift: f64,
}

/// Goodness-of-fit report between measured scans and the counts predicted
/// from a unitary.
#[derive(Clone, Debug)]
pub struct Chi2Report {
    pub chi2_red: f64,
    pub nu: usize,
    pub n_points: usize,
    pub nuisance: Vec<ScanNuisance>,
}

/// Two-photon coincidence probability versus delay predicted from `u`:
/// `P₁₁(t) = |h₁|² + |h₂|² + 2 Re(h₁ h₂*) ζ e^{-ξ t²}`.
fn predicted_p11(u: &ComplexMatrix, scan: &VisibilityScan, t: f64) -> f64 {
    let (i, j) = scan.input_pair;
    let (k, l) = scan.output_pair;
    let h1 = u.get(k - 1, i - 1) * u.get(l - 1, j - 1);
    let h2 = u.get(k - 1, j - 1) * u.get(l - 1, i - 1);
    h1.norm_sqr() + h2.norm_sqr() + 2.0 * (h1 * h2.conj()).re * envelope(&scan.spectra, t)
}

/// Evaluates the reduced chi-square at given nuisance parameters, with
/// `ν = N - (model_params + 1) - #scans - 1` degrees of freedom.
pub fn chi2_statistic(
    scans: &[VisibilityScan],
    u: &ComplexMatrix,
    nuisance: &[ScanNuisance],
    model_params: usize,
) -> Result<Chi2Report> {
    if scans.len() != nuisance.len() {
        return Err(Error::Dimension("one nuisance set per scan required".into()));
    }
    let n_points: usize = scans.iter().map(|s| s.samples.len()).sum();
    let subtract = model_params + 1 + scans.len() + 1;
    if n_points <= subtract {
        return Err(Error::InsufficientData(format!(
            "{n_points} points cannot support {subtract} fitted quantities"
        )));
    }
    let nu = n_points - subtract;
    let mut chi2 = 0.0;
    for (scan, nuis) in scans.iter().zip(nuisance) {
        for s in &scan.samples {
            if !(s.error > 0.0) {
                return Err(Error::InvalidValue("zero error bar in scan".into()));
            }
            let pred = nuis.n0 * (1.0 + nuis.drift * s.delay_fs)
                * predicted_p11(u, scan, s.delay_fs - nuis.t_c);
            let r = (s.counts - pred) / s.error;
            chi2 += r * r;
        }
    }
    Ok(Chi2Report { chi2_red: chi2 / nu as f64, nu, n_points, nuisance: nuisance.to_vec() })
}

/// Fits the per-scan nuisance parameters `(N₀, t_c, drift)` and evaluates
/// the reduced chi-square between the scans and the counts predicted from
/// `u`. `model_params` is the number of parameters behind `u` (19 for the
/// reference chip template).
pub fn chi2_reduced(scans: &[VisibilityScan], u: &ComplexMatrix, model_params: usize) -> Result<Chi2Report> {
    let mut nuisance = Vec::with_capacity(scans.len());
    for scan in scans {
        if scan.samples.len() < 4 {
            return Err(Error::InsufficientData("scans need at least 4 samples".into()));
        }
        let mean_counts =
            scan.samples.iter().map(|s| s.counts).sum::<f64>() / scan.samples.len() as f64;
        let mean_p = scan
            .samples
            .iter()
            .map(|s| predicted_p11(u, scan, s.delay_fs))
            .sum::<f64>()
            / scan.samples.len() as f64;
        if mean_p <= 0.0 {
            return Err(Error::Numeric("predicted coincidence rate vanishes on a scan".into()));
        }
        let init = [mean_counts / mean_p, 0.0, 0.0];
        let eval = |params: &[f64]| {
            let (n0, tc, drift) = (params[0], params[1], params[2]);
            let mut residuals = Vec::with_capacity(scan.samples.len());
            let mut jacobian = Vec::with_capacity(scan.samples.len());
            let ov = pair_overlap(&scan.spectra[0], &scan.spectra[1]);
            let (i, j) = scan.input_pair;
            let (k, l) = scan.output_pair;
            let h1 = u.get(k - 1, i - 1) * u.get(l - 1, j - 1);
            let h2 = u.get(k - 1, j - 1) * u.get(l - 1, i - 1);
            let flat = h1.norm_sqr() + h2.norm_sqr();
            let cross = 2.0 * (h1 * h2.conj()).re;
            for s in &scan.samples {
                let t = s.delay_fs;
                let x = t - tc;
                let env = ov.zeta * (-ov.xi * x * x).exp();
                let p11 = flat + cross * env;
                let dp11_dtc = cross * 2.0 * ov.xi * x * env;
                let model = n0 * (1.0 + drift * t) * p11;
                let w = s.error.recip();
                residuals.push((model - s.counts) * w);
                jacobian.push(vec![
                    (1.0 + drift * t) * p11 * w,
                    n0 * (1.0 + drift * t) * dp11_dtc * w,
                    n0 * t * p11 * w,
                ]);
            }
            (residuals, jacobian)
        };
        let fit = levenberg_marquardt(&init, eval, 200, 1e-14)?;
        nuisance.push(ScanNuisance { n0: fit.params[0], t_c: fit.params[1], drift: fit.params[2] });
    }
    chi2_statistic(scans, u, &nuisance, model_params)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::tests_support::random_unitary;
    use approx::assert_abs_diff_eq;
    use rand::rngs::StdRng;
    use rand_distr::{Distribution, Normal};

    fn spectra_pair() -> [GaussianPhoton; 2] {
        [
            GaussianPhoton::from_wavelength(789.05, 2.9, 0.0).unwrap(),
            GaussianPhoton::from_wavelength(788.60, 2.9, 0.0).unwrap(),
        ]
    }

    fn balanced_bs() -> ComplexMatrix {
        let h = (0.5f64).sqrt();
        ComplexMatrix::from_rows(&[
            vec![Complex64::new(h, 0.0), Complex64::new(0.0, h)],
            vec![Complex64::new(0.0, h), Complex64::new(h, 0.0)],
        ])
        .unwrap()
    }

    #[test]
    fn visibility_of_balanced_splitter_is_one() {
        let v = predict_visibility(&balanced_bs(), 1, 2, 1, 2).unwrap();
        assert_abs_diff_eq!(v, 1.0, epsilon = 1e-12);
        assert!(predict_visibility(&balanced_bs(), 1, 1, 1, 2).is_err());
        assert!(predict_visibility(&balanced_bs(), 1, 3, 1, 2).is_err());
    }

    #[test]
    fn visibility_bounded_and_dephasing_invariant() {
        let mut rng = StdRng::seed_from_u64(41);
        let u = random_unitary(5, &mut rng);
        let mut pairs = Vec::new();
        for i in 1..=5 {
            for j in i + 1..=5 {
                pairs.push((i, j));
            }
        }
        // dephased copy: rows and columns multiplied by unit phases
        use rand::Rng;
        let row_ph: Vec<Complex64> =
            (0..5).map(|_| Complex64::from_polar(1.0, rng.gen_range(0.0..6.28))).collect();
        let col_ph: Vec<Complex64> =
            (0..5).map(|_| Complex64::from_polar(1.0, rng.gen_range(0.0..6.28))).collect();
        let u2 = ComplexMatrix::from_fn(5, 5, |r, c| row_ph[r] * u.get(r, c) * col_ph[c]);
        for &(i, j) in &pairs {
            for &(k, l) in &pairs {
                let v = predict_visibility(&u, i, j, k, l).unwrap();
                assert!(v.abs() <= 1.0 + 1e-12);
                let vd = predict_visibility(&u2, i, j, k, l).unwrap();
                assert_abs_diff_eq!(v, vd, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn structural_zero_gives_zero_visibility() {
        // U[1,5] = 0 forces V = 0 for input pairs holding 5 and output pairs holding 1
        let mut rng = StdRng::seed_from_u64(42);
        let mut u = random_unitary(5, &mut rng);
        for r in 0..5 {
            u.set(0, r, if r == 4 { Complex64::default() } else { u.get(0, r) });
        }
        for j in 1..5 {
            let v = predict_visibility(&u, j, 5, 1, 3).unwrap();
            assert_eq!(v, 0.0);
        }
    }

    #[test]
    fn dip_model_flat_and_peak_values() {
        let spectra = spectra_pair();
        // amplitude 0: flat line times drift
        let flat = dip_model(120.0, 900.0, 0.0, 0.0, 1e-4, &spectra, 30.0, 20.0, 5.0);
        assert_abs_diff_eq!(flat, (1.0 + 1e-4 * 120.0) * (900.0 - 45.0), epsilon = 1e-9);
        // identical spectra peak at t = t_c has envelope exactly 1
        let same = [spectra[0], spectra[0]];
        let at_peak = dip_model(77.0, 1000.0, -400.0, 77.0, 0.0, &same, 0.0, 0.0, 0.0);
        assert_abs_diff_eq!(at_peak, 600.0, epsilon = 1e-9);
        // mismatched spectra: envelope peak below 1
        let peak = envelope(&spectra, 0.0);
        assert!(peak < 1.0 && peak > 0.9);
    }

    fn synthetic_scan(
        y0: f64,
        amplitude: f64,
        t_c: f64,
        drift: f64,
        noise: f64,
        seed: u64,
    ) -> VisibilityScan {
        let spectra = spectra_pair();
        let (ho1, ho2, dark) = (40.0, 30.0, 8.0);
        let mut rng = StdRng::seed_from_u64(seed);
        let normal = Normal::new(0.0, 1.0).unwrap();
        let samples: Vec<ScanSample> = (0..41)
            .map(|k| {
                let t = -1320.0 + 66.0 * k as f64;
                let clean = dip_model(t, y0, amplitude, t_c, drift, &spectra, ho1, ho2, dark);
                let sigma = if noise > 0.0 { noise * clean.abs().max(1.0) } else { 1.0 };
                let counts = if noise > 0.0 {
                    clean + sigma * normal.sample(&mut rng)
                } else {
                    clean
                };
                ScanSample { delay_fs: t, counts, error: sigma }
            })
            .collect();
        VisibilityScan::new((1, 2), (1, 2), samples, ho1, ho2, dark, spectra).unwrap()
    }

    #[test]
    fn noiseless_round_trip_recovers_parameters() {
        let scan = synthetic_scan(1000.0, -750.0, 35.0, 2e-5, 0.0, 1);
        let fit = fit_dip(&scan).unwrap();
        assert!((fit.y0 - 1000.0).abs() / 1000.0 < 1e-6, "y0 = {}", fit.y0);
        assert!((fit.amplitude + 750.0).abs() / 750.0 < 1e-6);
        assert!((fit.t_c - 35.0).abs() < 1e-3);
        assert!((fit.drift_slope - 2e-5).abs() < 1e-9);
        assert_abs_diff_eq!(fit.visibility, 0.75, epsilon = 1e-6);
        // determinism: bit-identical refit
        let again = fit_dip(&scan).unwrap();
        assert_eq!(fit.y0.to_bits(), again.y0.to_bits());
        assert_eq!(fit.visibility.to_bits(), again.visibility.to_bits());
    }

    #[test]
    fn noisy_fits_recover_visibility_within_errors() {
        let mut hits = 0;
        let trials = 200;
        for seed in 0..trials {
            let scan = synthetic_scan(1000.0, -700.0, -20.0, 0.0, 0.03, 1000 + seed);
            let fit = fit_dip(&scan).unwrap();
            let sigma_v = ((fit.std_errors[1] / fit.y0).powi(2)
                + (fit.amplitude * fit.std_errors[0] / (fit.y0 * fit.y0)).powi(2))
            .sqrt();
            if (fit.visibility - 0.7).abs() <= 3.0 * sigma_v.max(1e-12) {
                hits += 1;
            }
        }
        assert!(hits * 100 >= trials * 95, "only {hits}/{trials} within 3 sigma");
    }

    #[test]
    fn flat_scans_fit_to_zero_visibility() {
        let scan = synthetic_scan(1000.0, 0.0, 0.0, 0.0, 0.02, 7);
        let fit = fit_dip(&scan).unwrap();
        assert!(fit.visibility.abs() < 0.05, "visibility = {}", fit.visibility);
    }

    #[test]
    fn too_few_samples_is_an_error() {
        let spectra = spectra_pair();
        let samples: Vec<ScanSample> = (0..5)
            .map(|k| ScanSample { delay_fs: k as f64, counts: 10.0, error: 1.0 })
            .collect();
        let scan = VisibilityScan::new((1, 2), (1, 2), samples, 0.0, 0.0, 0.0, spectra).unwrap();
        assert!(matches!(fit_dip(&scan), Err(Error::InsufficientData(_))));
    }

    #[test]
    fn chi2_self_consistency_and_shift() {
        let mut rng = StdRng::seed_from_u64(55);
        let u = random_unitary(5, &mut rng);
        let normal = Normal::new(0.0, 1.0).unwrap();
        let spectra = spectra_pair();
        let mut scans = Vec::new();
        let mut truth = Vec::new();
        let mut pair_iter = Vec::new();
        for i in 1..=5 {
            for j in i + 1..=5 {
                pair_iter.push((i, j));
            }
        }
        let mut count = 0;
        'outer: for &(i, j) in &pair_iter {
            for &(k, l) in &pair_iter {
                if count >= 20 {
                    break 'outer;
                }
                let nuis = ScanNuisance { n0: 5000.0, t_c: 12.0, drift: 1e-5 };
                let mut samples = Vec::new();
                let mut keep = true;
                for q in 0..100 {
                    let t = -1000.0 + 20.2 * q as f64;
                    let scan_stub = VisibilityScan::new(
                        (i, j),
                        (k, l),
                        vec![],
                        0.0,
                        0.0,
                        0.0,
                        spectra,
                    )
                    .unwrap();
                    let clean = nuis.n0 * (1.0 + nuis.drift * t) * predicted_p11(&u, &scan_stub, t - nuis.t_c);
                    if !(clean > 1.0) {
                        keep = false;
                        break;
                    }
                    let sigma = clean.sqrt();
                    samples.push(ScanSample {
                        delay_fs: t,
                        counts: clean + sigma * normal.sample(&mut rng),
                        error: sigma,
                    });
                }
                if !keep {
                    continue;
                }
                scans.push(
                    VisibilityScan::new((i, j), (k, l), samples, 0.0, 0.0, 0.0, spectra).unwrap(),
                );
                truth.push(ScanNuisance { n0: 5000.0, t_c: 12.0, drift: 1e-5 });
                count += 1;
            }
        }
        assert!(scans.len() >= 15, "need enough usable scans, got {}", scans.len());
        let report = chi2_reduced(&scans, &u, 19).unwrap();
        assert!(
            (report.chi2_red - 1.0).abs() < 0.2,
            "chi2_red = {} for model-generated data",
            report.chi2_red
        );
        let m = report.n_points;
        assert_eq!(report.nu, m - 19 - 1 - scans.len() - 1);
        // uniform +5 sigma shift at fixed nuisance: chi2_red rises to ~26 m/nu
        let shifted: Vec<VisibilityScan> = scans
            .iter()
            .map(|s| {
                let samples = s
                    .samples
                    .iter()
                    .map(|x| ScanSample { counts: x.counts + 5.0 * x.error, ..*x })
                    .collect();
                VisibilityScan::new(s.input_pair, s.output_pair, samples, 0.0, 0.0, 0.0, spectra)
                    .unwrap()
            })
            .collect();
        let stat = chi2_statistic(&shifted, &u, &truth, 19).unwrap();
        let expect = 26.0 * stat.n_points as f64 / stat.nu as f64;
        assert!(
            (stat.chi2_red - expect).abs() < 2.5,
            "shifted chi2_red = {}, expected about {expect}",
            stat.chi2_red
        );
    }
}
