//! Rate matrices, matrix-function basis vectors, coincidence probabilities,
//! delay landscapes and output distributions.
//!
//! For `n` photons entering an interferometer the coincidence probability of
//! a collision-free output pattern factorizes as `P = v† R v`:
//!
//! * `v` — the [`BasisVector`] of the `n x n` scattering submatrix `T`:
//!   its permanent, a complete set of independent immanants of row-permuted
//!   copies of `T`, and its determinant. This captures the network and is
//!   computed once per input/output selection.
//! * `R` — the [`RateMatrix`], an `n! x n!` Hermitian positive-semidefinite
//!   block-diagonal form that captures the input state. It is assembled from
//!   the left regular representation of `S_n` weighted by the pairwise
//!   overlap amplitudes of the photons and is independent of the network.
//!
//! The basis is normalized so that `R[0,0]` is the fraction of the output
//! probability carried by the permanent and `R[n!-1, n!-1]` the fraction
//! carried by the determinant: at zero delay with identical photons the rate
//! matrix collapses to a single 1 in the permanent corner, and for fully
//! distinguishable photons both corners sit at `1/n!`.

use crate::matfunc::{self, ComplexMatrix};
use crate::symgroup::{
    canonical_blocks, character_of_class, enumerate_permutations, partitions_of, Partition,
    Permutation,
};
use crate::wavepacket::{overlap_amplitude, permutation_weight, GaussianPhoton};
use crate::{factorial, Error, Result};
use num_complex::Complex64;
use rayon::prelude::*;
use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

/// Rate matrices grow as `n!`; six photons is the practical ceiling.
pub const MAX_PHOTONS: usize = 6;
/// The double-permutation oracle costs `O((n!)^2)`.
pub const MAX_ORACLE_PHOTONS: usize = 4;

// ---------------------------------------------------------------------------
// Function basis (shared by rate matrices and basis vectors)
// ---------------------------------------------------------------------------

/// Location of one irreducible block inside the `n! x n!` layout.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BlockInfo {
    pub partition: Partition,
    pub offset: usize,
    pub size: usize,
}

/// The per-`n` immanant basis: which row permutations of `T` furnish the
/// independent matrix functions, where each partition block sits, and the
/// change of basis between monomials and matrix functions.
struct FunctionBasis {
    perms: Vec<Permutation>,
    blocks: Vec<BlockInfo>,
    /// Selected row permutations per block (singleton identity for the
    /// permanent and determinant blocks).
    selected: Vec<Vec<Permutation>>,
    /// Inverse of the coefficient matrix C with `v = C m`, where `m` is the
    /// vector of permutation monomials of `T`.
    c_inv: ComplexMatrix,
}

fn basis_cache() -> &'static Mutex<HashMap<usize, Arc<FunctionBasis>>> {
    static CACHE: OnceLock<Mutex<HashMap<usize, Arc<FunctionBasis>>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

fn function_basis(n: usize) -> Result<Arc<FunctionBasis>> {
    if !(2..=MAX_PHOTONS).contains(&n) {
        return Err(Error::SizeLimit(format!(
            "interference calculations support 2 <= n <= {MAX_PHOTONS}, got {n}"
        )));
    }
    if let Some(b) = basis_cache().lock().unwrap().get(&n) {
        return Ok(b.clone());
    }
    let built = Arc::new(build_function_basis(n)?);
    basis_cache().lock().unwrap().insert(n, built.clone());
    Ok(built)
}

fn build_function_basis(n: usize) -> Result<FunctionBasis> {
    let perms = enumerate_permutations(n)?;
    let size = perms.len();
    let block_partitions = canonical_blocks(n)?;

    // Candidate order: row permutations sorted by the one-line image of
    // their inverse. This reproduces the canonical three-photon choice
    // (identity, (1,3,2), (2,1,3), (3,1,2)) and stays deterministic for
    // every n.
    let mut candidates = perms.clone();
    candidates.sort_by_key(|p| p.inverse().image().to_vec());

    let mut blocks = Vec::new();
    let mut selected = Vec::new();
    let mut c_rows: Vec<Vec<f64>> = Vec::with_capacity(size);
    let mut offset = 0;
    for lambda in &block_partitions {
        let d = lambda.dimension();
        let block_size = d * d;
        blocks.push(BlockInfo { partition: lambda.clone(), offset, size: block_size });
        offset += block_size;
        if lambda.is_trivial() {
            selected.push(vec![Permutation::identity(n)]);
            c_rows.push(vec![1.0; size]);
            continue;
        }
        if lambda.is_sign() {
            selected.push(vec![Permutation::identity(n)]);
            c_rows.push(perms.iter().map(|p| p.sign() as f64).collect());
            continue;
        }
        // Greedy rank selection among the character rows
        // row(ρ)[π] = χ_λ(π ∘ ρ); the span has dimension d².
        let mut chosen = Vec::new();
        let mut basis_rows: Vec<Vec<f64>> = Vec::new();
        let mut ortho: Vec<Vec<f64>> = Vec::new();
        let classes = partitions_of(n)?;
        let chars: HashMap<&Partition, i64> =
            classes.iter().map(|c| (c, character_of_class(lambda, c))).collect();
        for rho in &candidates {
            if chosen.len() == block_size {
                break;
            }
            let row: Vec<f64> = perms
                .iter()
                .map(|pi| chars[&pi.compose(rho).cycle_type()] as f64)
                .collect();
            if add_if_independent(&mut ortho, &row) {
                chosen.push(rho.clone());
                basis_rows.push(row);
            }
        }
        if chosen.len() != block_size {
            return Err(Error::Numeric(format!(
                "could not find {block_size} independent immanant rows for {lambda}"
            )));
        }
        selected.push(chosen);
        c_rows.extend(basis_rows);
    }

    let c = ComplexMatrix::from_real_rows(&c_rows);
    let c_inv = matfunc::inverse(&c)?;
    Ok(FunctionBasis { perms, blocks, selected, c_inv })
}

/// Modified Gram–Schmidt rank test; keeps the orthogonalized rows.
fn add_if_independent(ortho: &mut Vec<Vec<f64>>, row: &[f64]) -> bool {
    let mut r = row.to_vec();
    let norm0: f64 = r.iter().map(|x| x * x).sum::<f64>().sqrt();
    for q in ortho.iter() {
        let dot: f64 = q.iter().zip(&r).map(|(a, b)| a * b).sum();
        for (x, qx) in r.iter_mut().zip(q) {
            *x -= dot * qx;
        }
    }
    let norm: f64 = r.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm > 1e-8 * norm0.max(1.0) {
        for x in r.iter_mut() {
            *x /= norm;
        }
        ortho.push(r);
        true
    } else {
        false
    }
}

// ---------------------------------------------------------------------------
// Rate matrix
// ---------------------------------------------------------------------------

/// Block-diagonal Hermitian form encoding the distinguishability of the
/// input photons. `P = v† R v` against the matching [`BasisVector`].
#[derive(Clone, Debug)]
pub struct RateMatrix {
    n: usize,
    matrix: ComplexMatrix,
    blocks: Vec<BlockInfo>,
}

impl RateMatrix {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    /// Partition blocks in canonical order; offsets index both the matrix
    /// and the matching basis vector.
    pub fn blocks(&self) -> &[BlockInfo] {
        &self.blocks
    }

    pub fn block(&self, lambda: &Partition) -> Option<&BlockInfo> {
        self.blocks.iter().find(|b| &b.partition == lambda)
    }

    /// `(F_per, F_det, F_imm)`: the fractions of the output probability
    /// carried by the permanent, the determinant, and everything between.
    pub fn fractions(&self) -> (f64, f64, f64) {
        let size = self.matrix.n_rows();
        let f_per = self.matrix.get(0, 0).re;
        let f_det = self.matrix.get(size - 1, size - 1).re;
        (f_per, f_det, 1.0 - f_per - f_det)
    }
}

/// Weight of every group element, indexed by lexicographic rank.
fn weight_table(photons: &[GaussianPhoton], perms: &[Permutation]) -> Result<Vec<Complex64>> {
    perms.iter().map(|p| permutation_weight(p, photons)).collect()
}

/// Builds the rate matrix for the given photons (arrival times included).
///
/// The matrix is `W` in the regular representation, `W[a][b] =
/// weight(p_a ∘ p_b⁻¹)`, conjugated into the immanant basis. Equivalently
/// it is `adapterᵀ (Σ_σ weight(σ) D(σ)) adapter` rotated from the
/// symmetry-adapted amplitude basis into matrix-function coordinates; the
/// two routes agree to machine precision.
pub fn rate_matrix(photons: &[GaussianPhoton]) -> Result<RateMatrix> {
    let n = photons.len();
    let basis = function_basis(n)?;
    let size = basis.perms.len();
    let weights = weight_table(photons, &basis.perms)?;
    let mut w = ComplexMatrix::zeros(size, size);
    for (b, pb) in basis.perms.iter().enumerate() {
        let inv = pb.inverse();
        for (a, pa) in basis.perms.iter().enumerate() {
            w.set(a, b, weights[pa.compose(&inv).lex_rank()]);
        }
    }
    let r = basis.c_inv.adjoint().mul(&w).mul(&basis.c_inv);
    Ok(RateMatrix { n, matrix: r, blocks: basis.blocks.clone() })
}

// ---------------------------------------------------------------------------
// Basis vector
// ---------------------------------------------------------------------------

/// The `n!` matrix functions of a scattering submatrix, ordered to match
/// the rate-matrix blocks: permanent first, then for each middle partition
/// the `d²` immanants of its selected row permutations, determinant last.
#[derive(Clone, Debug)]
pub struct BasisVector {
    n: usize,
    entries: Vec<Complex64>,
}

impl BasisVector {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn entries(&self) -> &[Complex64] {
        &self.entries
    }
}

/// Evaluates the matrix-function basis vector of `t`.
pub fn basis_vector(t: &ComplexMatrix) -> Result<BasisVector> {
    if !t.is_square() {
        return Err(Error::Shape(format!(
            "basis vector needs a square submatrix, got {}x{}",
            t.n_rows(),
            t.n_cols()
        )));
    }
    let n = t.n_rows();
    let basis = function_basis(n)?;
    let mut entries = Vec::with_capacity(factorial(n));
    for (block, rhos) in basis.blocks.iter().zip(&basis.selected) {
        if block.partition.is_trivial() {
            entries.push(matfunc::permanent(t)?);
        } else if block.partition.is_sign() {
            entries.push(matfunc::determinant(t)?);
        } else {
            for rho in rhos {
                let permuted = matfunc::row_permuted(t, rho)?;
                entries.push(matfunc::immanant(&block.partition, &permuted)?);
            }
        }
    }
    Ok(BasisVector { n, entries })
}

/// Row permutations whose immanants populate the block of `lambda`.
pub fn selected_row_permutations(n: usize, lambda: &Partition) -> Result<Vec<Permutation>> {
    let basis = function_basis(n)?;
    basis
        .blocks
        .iter()
        .position(|b| &b.partition == lambda)
        .map(|i| basis.selected[i].clone())
        .ok_or_else(|| Error::InvalidValue(format!("{lambda} is not a partition of {n}")))
}

// ---------------------------------------------------------------------------
// Coincidence probabilities
// ---------------------------------------------------------------------------

/// Shifts photon arrival times by relative delays: photon 1 by `deltas[0]`,
/// photon 2 untouched (the reference), photon `k >= 3` by `deltas[k-1]`.
///
/// For three photons this is the usual pair `(Δτ₁, Δτ₂)` with
/// `Δτ₁ = τ₁ - τ₂` and `Δτ₂ = τ₃ - τ₂`.
pub fn apply_deltas(photons: &[GaussianPhoton], deltas: &[f64]) -> Result<Vec<GaussianPhoton>> {
    let n = photons.len();
    if deltas.len() + 1 != n {
        return Err(Error::Dimension(format!(
            "{n} photons need {} relative delays, got {}",
            n - 1,
            deltas.len()
        )));
    }
    if deltas.iter().any(|d| !d.is_finite()) {
        return Err(Error::Numeric("delays must be finite".into()));
    }
    let mut out = photons.to_vec();
    out[0].tau += deltas[0];
    for k in 2..n {
        out[k].tau += deltas[k - 1];
    }
    Ok(out)
}

/// Coincidence probability `P = v† R v` for photons entering the columns of
/// `t` and leaving on its rows, with relative delays applied on top of the
/// photons' own arrival times.
pub fn coincidence_probability(
    t: &ComplexMatrix,
    photons: &[GaussianPhoton],
    deltas: &[f64],
) -> Result<f64> {
    let shifted = apply_deltas(photons, deltas)?;
    if t.n_rows() != photons.len() || !t.is_square() {
        return Err(Error::Shape(format!(
            "scattering submatrix must be {0}x{0} for {0} photons, got {1}x{2}",
            photons.len(),
            t.n_rows(),
            t.n_cols()
        )));
    }
    let r = rate_matrix(&shifted)?;
    let v = basis_vector(t)?;
    quadratic_form(&r, &v)
}

/// `v† R v`, checked to be real.
pub fn quadratic_form(r: &RateMatrix, v: &BasisVector) -> Result<f64> {
    if r.n() != v.n() {
        return Err(Error::Dimension(format!(
            "rate matrix for {} photons against basis vector for {}",
            r.n(),
            v.n()
        )));
    }
    let rv = r.matrix().mul_vec(v.entries());
    let p: Complex64 = v.entries().iter().zip(&rv).map(|(a, b)| a.conj() * b).sum();
    if !p.re.is_finite() || p.im.abs() > 1e-12 * p.re.abs().max(1.0) {
        return Err(Error::Numeric(format!(
            "coincidence probability is not real: {p}"
        )));
    }
    Ok(p.re)
}

/// Probability carried by a single partition block: `v_λ† R_λ v_λ`.
///
/// Blocks do not mix, so these sum to the total coincidence probability.
pub fn partition_probability(lambda: &Partition, r: &RateMatrix, v: &BasisVector) -> Result<f64> {
    let block = r
        .block(lambda)
        .ok_or_else(|| Error::InvalidValue(format!("{lambda} does not index a block of this rate matrix")))?
        .clone();
    let vb = &v.entries()[block.offset..block.offset + block.size];
    let mut p = Complex64::default();
    for (i, vi) in vb.iter().enumerate() {
        for (j, vj) in vb.iter().enumerate() {
            p += vi.conj() * r.matrix().get(block.offset + i, block.offset + j) * vj;
        }
    }
    Ok(p.re)
}

/// Independent coincidence evaluation as a double permutation sum,
///
/// ```text
/// P = Σ_{σ,π} Π_i T[i,σ(i)] conj(T[i,π(i)]) A_{σ(i),π(i)}
/// ```
///
/// obtained by expanding the squared output amplitude directly. Costs
/// `O((n!)² n)` and is the cross-check for [`coincidence_probability`].
pub fn coincidence_oracle(
    t: &ComplexMatrix,
    photons: &[GaussianPhoton],
    deltas: &[f64],
) -> Result<f64> {
    let n = photons.len();
    if n > MAX_ORACLE_PHOTONS {
        return Err(Error::SizeLimit(format!(
            "the double-permutation oracle supports n <= {MAX_ORACLE_PHOTONS}, got {n}"
        )));
    }
    if t.n_rows() != n || !t.is_square() {
        return Err(Error::Shape("submatrix does not match photon count".into()));
    }
    let shifted = apply_deltas(photons, deltas)?;
    if shifted.iter().any(|p| !p.tau.is_finite()) {
        return Err(Error::Numeric("non-finite arrival time".into()));
    }
    let perms = enumerate_permutations(n)?;
    // pairwise amplitudes A[a][b] = <phi_b|phi_a>
    let amp: Vec<Vec<Complex64>> = (0..n)
        .map(|a| {
            (0..n)
                .map(|b| {
                    if a == b {
                        Complex64::new(1.0, 0.0)
                    } else {
                        overlap_amplitude(&shifted[a], &shifted[b])
                    }
                })
                .collect()
        })
        .collect();
    let mut total = Complex64::default();
    for sigma in &perms {
        let mut amp_sigma = Complex64::new(1.0, 0.0);
        for i in 0..n {
            amp_sigma *= t.get(i, sigma.apply(i));
        }
        for pi in &perms {
            let mut term = amp_sigma;
            for i in 0..n {
                term *= t.get(i, pi.apply(i)).conj();
                term *= amp[sigma.apply(i)][pi.apply(i)];
            }
            total += term;
        }
    }
    if total.im.abs() > 1e-10 * total.re.abs().max(1.0) {
        return Err(Error::Numeric(format!("oracle probability is not real: {total}")));
    }
    Ok(total.re)
}

// ---------------------------------------------------------------------------
// Port selections and submatrices
// ---------------------------------------------------------------------------

/// Input and output mode choices selecting an `n x n` scattering submatrix
/// out of an `m x m` network. Modes are 1-based and strictly increasing.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PortSelection {
    m: usize,
    inputs: Vec<usize>,
    outputs: Vec<usize>,
}

impl PortSelection {
    pub fn new(m: usize, inputs: Vec<usize>, outputs: Vec<usize>) -> Result<Self> {
        if inputs.is_empty() || inputs.len() != outputs.len() {
            return Err(Error::InvalidValue(
                "selections need equally many, at least one, input and output modes".into(),
            ));
        }
        for list in [&inputs, &outputs] {
            if list.iter().any(|&p| p < 1 || p > m) {
                return Err(Error::InvalidValue(format!("modes must lie in 1..={m}, got {list:?}")));
            }
            if list.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::InvalidValue(format!(
                    "modes must be strictly increasing (collision-free), got {list:?}"
                )));
            }
        }
        Ok(Self { m, inputs, outputs })
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn inputs(&self) -> &[usize] {
        &self.inputs
    }

    pub fn outputs(&self) -> &[usize] {
        &self.outputs
    }

    pub fn n(&self) -> usize {
        self.inputs.len()
    }
}

/// Scattering submatrix `T[a][b] = U[outputs[a], inputs[b]]`.
pub fn submatrix(u: &ComplexMatrix, sel: &PortSelection) -> Result<ComplexMatrix> {
    if u.n_rows() != sel.m() || u.n_cols() != sel.m() {
        return Err(Error::Shape(format!(
            "selection is for {} modes but the matrix is {}x{}",
            sel.m(),
            u.n_rows(),
            u.n_cols()
        )));
    }
    Ok(ComplexMatrix::from_fn(sel.n(), sel.n(), |a, b| {
        u.get(sel.outputs()[a] - 1, sel.inputs()[b] - 1)
    }))
}

// ---------------------------------------------------------------------------
// Landscapes
// ---------------------------------------------------------------------------

/// How a landscape's `(Δτ₁, Δτ₂)` coordinates move the photons: photon `k`
/// is shifted by `coeffs[k][0] Δτ₁ + coeffs[k][1] Δτ₂` on top of its own
/// arrival time.
///
/// The default follows the two-relative-delay convention: photon 1 carries
/// `Δτ₁`, photon 2 is the reference, photon 3 carries `Δτ₂`.
#[derive(Clone, Debug, PartialEq)]
pub struct DelayMap {
    coeffs: Vec<[f64; 2]>,
}

impl DelayMap {
    pub fn standard(n: usize) -> Self {
        let mut coeffs = vec![[0.0, 0.0]; n];
        if n > 0 {
            coeffs[0] = [1.0, 0.0];
        }
        if n > 2 {
            coeffs[2] = [0.0, 1.0];
        }
        Self { coeffs }
    }

    pub fn new(coeffs: Vec<[f64; 2]>) -> Result<Self> {
        if coeffs.iter().flatten().any(|c| !c.is_finite()) {
            return Err(Error::Numeric("delay map coefficients must be finite".into()));
        }
        Ok(Self { coeffs })
    }

    pub fn coeffs(&self) -> &[[f64; 2]] {
        &self.coeffs
    }

    pub fn shift(&self, photons: &[GaussianPhoton], dt1: f64, dt2: f64) -> Result<Vec<GaussianPhoton>> {
        if self.coeffs.len() != photons.len() {
            return Err(Error::Dimension(format!(
                "delay map covers {} photons but {} were given",
                self.coeffs.len(),
                photons.len()
            )));
        }
        Ok(photons
            .iter()
            .zip(&self.coeffs)
            .map(|(p, c)| p.at_tau(p.tau + c[0] * dt1 + c[1] * dt2))
            .collect())
    }
}

/// Rectangular grid over the two relative delays, in fs.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GridSpec {
    pub width: usize,
    pub height: usize,
    pub dt1_min: f64,
    pub dt1_max: f64,
    pub dt2_min: f64,
    pub dt2_max: f64,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self { width: 81, height: 81, dt1_min: -1000.0, dt1_max: 1000.0, dt2_min: -1000.0, dt2_max: 1000.0 }
    }
}

impl GridSpec {
    fn axis(min: f64, max: f64, count: usize) -> Vec<f64> {
        if count == 1 {
            return vec![(min + max) / 2.0];
        }
        (0..count)
            .map(|i| min + (max - min) * i as f64 / (count - 1) as f64)
            .collect()
    }
}

/// One evaluated landscape point.
#[derive(Clone, Copy, Debug)]
pub struct LandscapePoint {
    pub dt1: f64,
    pub dt2: f64,
    pub probability: f64,
    pub f_per: f64,
    pub f_det: f64,
    pub f_imm: f64,
}

/// A coincidence landscape over `(Δτ₁, Δτ₂)`, stored row-major with `Δτ₂`
/// varying fastest.
#[derive(Clone, Debug)]
pub struct Landscape {
    pub selection: PortSelection,
    pub points: Vec<LandscapePoint>,
}

/// Evaluates the three-photon coincidence landscape of a selection.
///
/// The basis vector is computed once; the rate matrix is rebuilt per grid
/// point. Points are evaluated in parallel and the result order is
/// deterministic.
pub fn landscape(
    u: &ComplexMatrix,
    sel: &PortSelection,
    photons: &[GaussianPhoton],
    grid: &GridSpec,
    map: &DelayMap,
) -> Result<Landscape> {
    if sel.n() != 3 || photons.len() != 3 {
        return Err(Error::InvalidValue(
            "landscapes are defined over the two relative delays of three photons".into(),
        ));
    }
    if grid.width == 0 || grid.height == 0 {
        return Err(Error::InvalidValue("landscape grid must be non-empty".into()));
    }
    let t = submatrix(u, sel)?;
    let v = basis_vector(&t)?;
    let dt1s = GridSpec::axis(grid.dt1_min, grid.dt1_max, grid.width);
    let dt2s = GridSpec::axis(grid.dt2_min, grid.dt2_max, grid.height);
    let coords: Vec<(f64, f64)> = dt1s
        .iter()
        .flat_map(|&a| dt2s.iter().map(move |&b| (a, b)))
        .collect();
    let points = coords
        .par_iter()
        .map(|&(dt1, dt2)| {
            let shifted = map.shift(photons, dt1, dt2)?;
            let r = rate_matrix(&shifted)?;
            let probability = quadratic_form(&r, &v)?;
            let (f_per, f_det, f_imm) = r.fractions();
            Ok(LandscapePoint { dt1, dt2, probability, f_per, f_det, f_imm })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Landscape { selection: sel.clone(), points })
}

// ---------------------------------------------------------------------------
// Output distributions
// ---------------------------------------------------------------------------

/// One collision-free output pattern with its normalized probability and its
/// permanent/immanant/determinant split.
#[derive(Clone, Debug)]
pub struct DistributionElement {
    /// Output modes, 1-based, strictly increasing.
    pub outputs: Vec<usize>,
    pub p_total: f64,
    pub p_per: f64,
    pub p_imm: f64,
    pub p_det: f64,
}

/// A normalized output probability distribution over all `C(m, n)`
/// collision-free patterns.
#[derive(Clone, Debug)]
pub struct OutputDistribution {
    pub elements: Vec<DistributionElement>,
    /// Probability mass of the collision-free subspace before normalization.
    pub collision_free_mass: f64,
}

/// Computes the distribution of `n` photons over all collision-free output
/// patterns of an `m`-mode network, normalized to sum to one.
///
/// The per-element permanent/immanant/determinant split is computed from
/// the partition blocks before normalization, so the three columns add up
/// to `p_total` elementwise.
pub fn output_distribution(
    u: &ComplexMatrix,
    inputs: &[usize],
    photons: &[GaussianPhoton],
    deltas: &[f64],
) -> Result<OutputDistribution> {
    let n = photons.len();
    let m = u.n_rows();
    if n > 5 {
        return Err(Error::SizeLimit(format!(
            "output distributions are capped at 5 photons, got {n}"
        )));
    }
    if n > m {
        return Err(Error::InvalidValue(format!("{n} photons cannot leave {m} modes collision-free")));
    }
    let shifted = apply_deltas(photons, deltas)?;
    let r = rate_matrix(&shifted)?;
    let patterns = combinations(m, n);
    let evaluated: Vec<(Vec<usize>, f64, f64, f64, f64)> = patterns
        .par_iter()
        .map(|outs| {
            let sel = PortSelection::new(m, inputs.to_vec(), outs.clone())?;
            let t = submatrix(u, &sel)?;
            let v = basis_vector(&t)?;
            let total = quadratic_form(&r, &v)?;
            let mut per = 0.0;
            let mut det = 0.0;
            let mut imm = 0.0;
            for block in r.blocks() {
                let p = partition_probability(&block.partition, &r, &v)?;
                if block.partition.is_trivial() {
                    per += p;
                } else if block.partition.is_sign() {
                    det += p;
                } else {
                    imm += p;
                }
            }
            Ok((outs.clone(), total, per, imm, det))
        })
        .collect::<Result<Vec<_>>>()?;
    let mass: f64 = evaluated.iter().map(|e| e.1).sum();
    if !(mass > 0.0) {
        return Err(Error::Numeric("collision-free subspace has no probability mass".into()));
    }
    let elements = evaluated
        .into_iter()
        .map(|(outputs, tot, per, imm, det)| DistributionElement {
            outputs,
            p_total: tot / mass,
            p_per: per / mass,
            p_imm: imm / mass,
            p_det: det / mass,
        })
        .collect();
    Ok(OutputDistribution { elements, collision_free_mass: mass })
}

/// All `C(m, n)` strictly increasing 1-based mode lists.
fn combinations(m: usize, n: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = Vec::with_capacity(n);
    fn rec(start: usize, m: usize, n: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == n {
            out.push(cur.clone());
            return;
        }
        let remaining = n - cur.len();
        for v in start..=(m - remaining + 1) {
            cur.push(v);
            rec(v + 1, m, n, cur, out);
            cur.pop();
        }
    }
    rec(1, m, n, &mut cur, &mut out);
    out
}
