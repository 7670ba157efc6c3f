//! Matrix functions over complex square matrices: permanent, determinant,
//! immanants and row-permuted submatrices.

use crate::symgroup::{character_of_class, enumerate_permutations, partitions_of, Partition, Permutation};
use crate::{Error, Result};
use num_complex::Complex64;

/// Ryser stops paying off past this size and the run time becomes hours.
pub const MAX_PERMANENT_SIZE: usize = 20;
/// Immanants need exact characters; degree is capped with `symgroup`.
pub const MAX_IMMANANT_SIZE: usize = 8;

/// Dense complex matrix in row-major order.
#[derive(Clone, Debug, PartialEq)]
pub struct ComplexMatrix {
    n_rows: usize,
    n_cols: usize,
    data: Vec<Complex64>,
}

impl ComplexMatrix {
    pub fn zeros(n_rows: usize, n_cols: usize) -> Self {
        Self { n_rows, n_cols, data: vec![Complex64::default(); n_rows * n_cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.set(i, i, Complex64::new(1.0, 0.0));
        }
        m
    }

    pub fn from_rows(rows: &[Vec<Complex64>]) -> Result<Self> {
        let n_rows = rows.len();
        if n_rows == 0 {
            return Err(Error::Shape("matrix needs at least one row".into()));
        }
        let n_cols = rows[0].len();
        if n_cols == 0 || rows.iter().any(|r| r.len() != n_cols) {
            return Err(Error::Shape("rows must be non-empty and of equal length".into()));
        }
        Ok(Self { n_rows, n_cols, data: rows.concat() })
    }

    pub fn from_real_rows(rows: &[Vec<f64>]) -> Self {
        let n_rows = rows.len();
        let n_cols = rows[0].len();
        let data = rows.iter().flat_map(|r| r.iter().map(|&x| Complex64::new(x, 0.0))).collect();
        Self { n_rows, n_cols, data }
    }

    pub fn from_fn(n_rows: usize, n_cols: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        let mut m = Self::zeros(n_rows, n_cols);
        for i in 0..n_rows {
            for j in 0..n_cols {
                m.set(i, j, f(i, j));
            }
        }
        m
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn is_square(&self) -> bool {
        self.n_rows == self.n_cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.data[i * self.n_cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: Complex64) {
        self.data[i * self.n_cols + j] = v;
    }

    pub fn data(&self) -> &[Complex64] {
        &self.data
    }

    pub fn mul(&self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!(self.n_cols, rhs.n_rows, "inner dimensions must agree");
        let mut out = ComplexMatrix::zeros(self.n_rows, rhs.n_cols);
        for i in 0..self.n_rows {
            for k in 0..self.n_cols {
                let a = self.get(i, k);
                if a == Complex64::default() {
                    continue;
                }
                for j in 0..rhs.n_cols {
                    let v = out.get(i, j) + a * rhs.get(k, j);
                    out.set(i, j, v);
                }
            }
        }
        out
    }

    pub fn mul_vec(&self, v: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(self.n_cols, v.len());
        (0..self.n_rows)
            .map(|i| (0..self.n_cols).map(|j| self.get(i, j) * v[j]).sum())
            .collect()
    }

    pub fn adjoint(&self) -> ComplexMatrix {
        ComplexMatrix::from_fn(self.n_cols, self.n_rows, |i, j| self.get(j, i).conj())
    }

    pub fn transpose(&self) -> ComplexMatrix {
        ComplexMatrix::from_fn(self.n_cols, self.n_rows, |i, j| self.get(j, i))
    }

    /// Largest entry magnitude of `self - other`.
    pub fn max_abs_diff(&self, other: &ComplexMatrix) -> f64 {
        assert_eq!((self.n_rows, self.n_cols), (other.n_rows, other.n_cols));
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// Deviation from unitarity, `max |U†U - 1|`.
    pub fn unitarity_deviation(&self) -> f64 {
        self.adjoint().mul(self).max_abs_diff(&ComplexMatrix::identity(self.n_cols))
    }
}

fn require_square(m: &ComplexMatrix, what: &str) -> Result<usize> {
    if !m.is_square() {
        return Err(Error::Shape(format!(
            "{what} needs a square matrix, got {}x{}",
            m.n_rows(),
            m.n_cols()
        )));
    }
    Ok(m.n_rows())
}

/// Permanent `per(M) = Σ_σ Π_i M[i, σ(i)]`.
///
/// Uses the naive permutation sum for `n <= 4` and Ryser's inclusion-
/// exclusion formula with Gray-code column updates above that, for an
/// overall `O(2^n n)` cost.
pub fn permanent(m: &ComplexMatrix) -> Result<Complex64> {
    let n = require_square(m, "permanent")?;
    if n > MAX_PERMANENT_SIZE {
        return Err(Error::SizeLimit(format!(
            "permanent supports n <= {MAX_PERMANENT_SIZE}, got {n}"
        )));
    }
    if n <= 4 {
        return Ok(permutation_sum(m, |_| 1));
    }
    // Ryser: per(M) = (-1)^n Σ_{S ≠ ∅} (-1)^{|S|} Π_i Σ_{j∈S} M[i,j]
    let mut row_sums = vec![Complex64::default(); n];
    let mut total = Complex64::default();
    let mut prev_gray: usize = 0;
    for k in 1usize..(1 << n) {
        let gray = k ^ (k >> 1);
        let changed = gray ^ prev_gray;
        let j = changed.trailing_zeros() as usize;
        if gray & changed != 0 {
            for (i, rs) in row_sums.iter_mut().enumerate() {
                *rs += m.get(i, j);
            }
        } else {
            for (i, rs) in row_sums.iter_mut().enumerate() {
                *rs -= m.get(i, j);
            }
        }
        prev_gray = gray;
        let prod: Complex64 = row_sums.iter().product();
        if gray.count_ones() as usize % 2 == 0 {
            total += prod;
        } else {
            total -= prod;
        }
    }
    if n % 2 == 0 {
        Ok(total)
    } else {
        Ok(-total)
    }
}

/// Determinant by partially pivoted Gaussian elimination.
pub fn determinant(m: &ComplexMatrix) -> Result<Complex64> {
    let n = require_square(m, "determinant")?;
    let mut a = m.clone();
    let mut det = Complex64::new(1.0, 0.0);
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| {
                a.get(i, col)
                    .norm()
                    .partial_cmp(&a.get(j, col).norm())
                    .unwrap_or(std::cmp::Ordering::Equal)
            })
            .unwrap();
        if a.get(pivot, col).norm() == 0.0 {
            return Ok(Complex64::default());
        }
        if pivot != col {
            for j in 0..n {
                let tmp = a.get(col, j);
                a.set(col, j, a.get(pivot, j));
                a.set(pivot, j, tmp);
            }
            det = -det;
        }
        let p = a.get(col, col);
        det *= p;
        for i in col + 1..n {
            let factor = a.get(i, col) / p;
            if factor == Complex64::default() {
                continue;
            }
            for j in col..n {
                let v = a.get(i, j) - factor * a.get(col, j);
                a.set(i, j, v);
            }
        }
    }
    Ok(det)
}

/// Immanant `imm_λ(M) = Σ_σ χ_λ(σ) Π_i M[i, σ(i)]` with exact characters.
///
/// `λ = (n)` reproduces the permanent, `λ = (1^n)` the determinant.
pub fn immanant(lambda: &Partition, m: &ComplexMatrix) -> Result<Complex64> {
    let n = require_square(m, "immanant")?;
    if n > MAX_IMMANANT_SIZE {
        return Err(Error::SizeLimit(format!(
            "immanant supports n <= {MAX_IMMANANT_SIZE}, got {n}"
        )));
    }
    if lambda.n() != n {
        return Err(Error::Dimension(format!(
            "partition {lambda} does not match a {n}x{n} matrix"
        )));
    }
    // One character per conjugacy class, looked up by cycle type.
    let classes = partitions_of(n)?;
    let chars: std::collections::HashMap<&Partition, i64> =
        classes.iter().map(|c| (c, character_of_class(lambda, c))).collect();
    Ok(permutation_sum(m, |p| chars[&p.cycle_type()]))
}

fn permutation_sum(m: &ComplexMatrix, weight: impl Fn(&Permutation) -> i64) -> Complex64 {
    let n = m.n_rows();
    let mut total = Complex64::default();
    for p in enumerate_permutations(n).expect("guarded by caller") {
        let w = weight(&p);
        if w == 0 {
            continue;
        }
        let mut prod = Complex64::new(w as f64, 0.0);
        for i in 0..n {
            prod *= m.get(i, p.apply(i));
        }
        total += prod;
    }
    total
}

/// Row-permuted copy: row `i` of the result is row `σ(i)` of `M`.
///
/// With `σ` written one-line as `(i,j,k)`, the result carries the rows of
/// `M` in the order `i, j, k`.
pub fn row_permuted(m: &ComplexMatrix, sigma: &Permutation) -> Result<ComplexMatrix> {
    if sigma.n() != m.n_rows() {
        return Err(Error::Dimension(format!(
            "permutation of degree {} cannot permute {} rows",
            sigma.n(),
            m.n_rows()
        )));
    }
    Ok(ComplexMatrix::from_fn(m.n_rows(), m.n_cols(), |i, j| m.get(sigma.apply(i), j)))
}

/// Matrix inverse via LU decomposition (nalgebra).
pub(crate) fn inverse(m: &ComplexMatrix) -> Result<ComplexMatrix> {
    let n = require_square(m, "inverse")?;
    let dm = nalgebra::DMatrix::from_fn(n, n, |i, j| m.get(i, j));
    let inv = dm
        .try_inverse()
        .ok_or_else(|| Error::Numeric("matrix is singular".into()))?;
    Ok(ComplexMatrix::from_fn(n, n, |i, j| inv[(i, j)]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn random_matrix(n: usize, rng: &mut StdRng) -> ComplexMatrix {
        ComplexMatrix::from_fn(n, n, |_, _| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
    }

    /// Independent oracle: plain permutation sums with explicit weights.
    fn naive_weighted(m: &ComplexMatrix, weight: impl Fn(&Permutation) -> f64) -> Complex64 {
        let n = m.n_rows();
        let mut total = Complex64::default();
        for p in enumerate_permutations(n).unwrap() {
            let mut prod = c(weight(&p), 0.0);
            for i in 0..n {
                prod *= m.get(i, p.apply(i));
            }
            total += prod;
        }
        total
    }

    #[test]
    fn permanent_small_cases() {
        assert_abs_diff_eq!(
            permanent(&ComplexMatrix::identity(3)).unwrap().re,
            1.0,
            epsilon = 1e-15
        );
        let m = ComplexMatrix::from_rows(&[vec![c(1.0, 0.5), c(2.0, 0.0)], vec![c(0.0, 1.0), c(3.0, -1.0)]])
            .unwrap();
        // per = ad + bc
        let expect = c(1.0, 0.5) * c(3.0, -1.0) + c(2.0, 0.0) * c(0.0, 1.0);
        assert!((permanent(&m).unwrap() - expect).norm() < 1e-15);
    }

    #[test]
    fn ryser_matches_naive_sum() {
        let mut rng = StdRng::seed_from_u64(11);
        for n in [5usize, 6] {
            for _ in 0..5 {
                let m = random_matrix(n, &mut rng);
                let fast = permanent(&m).unwrap();
                let slow = naive_weighted(&m, |_| 1.0);
                assert!(
                    (fast - slow).norm() <= 1e-10 * slow.norm().max(1.0),
                    "n={n}: {fast} vs {slow}"
                );
            }
        }
    }

    #[test]
    fn determinant_matches_signed_sum() {
        let mut rng = StdRng::seed_from_u64(12);
        for _ in 0..5 {
            let m = random_matrix(5, &mut rng);
            let fast = determinant(&m).unwrap();
            let slow = naive_weighted(&m, |p| p.sign() as f64);
            assert!((fast - slow).norm() <= 1e-10 * slow.norm().max(1.0));
        }
        assert_abs_diff_eq!(determinant(&ComplexMatrix::identity(4)).unwrap().re, 1.0, epsilon = 1e-15);
        // balanced beam splitter has determinant 1
        let h = (0.5f64).sqrt();
        let bs = ComplexMatrix::from_rows(&[vec![c(h, 0.0), c(0.0, h)], vec![c(0.0, h), c(h, 0.0)]])
            .unwrap();
        assert!((determinant(&bs).unwrap() - c(1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn shape_guards() {
        let rect = ComplexMatrix::zeros(2, 3);
        assert!(permanent(&rect).is_err());
        assert!(determinant(&rect).is_err());
        let big = ComplexMatrix::zeros(21, 21);
        assert!(permanent(&big).is_err());
        let lam = Partition::new(vec![2, 1]).unwrap();
        assert!(immanant(&lam, &ComplexMatrix::identity(2)).is_err());
    }

    #[test]
    fn immanant_specializes_to_permanent_and_determinant() {
        let mut rng = StdRng::seed_from_u64(13);
        for n in 2..=5 {
            let m = random_matrix(n, &mut rng);
            let triv = Partition::new(vec![n]).unwrap();
            let sign = Partition::new(vec![1; n]).unwrap();
            assert!((immanant(&triv, &m).unwrap() - permanent(&m).unwrap()).norm() < 1e-12);
            assert!((immanant(&sign, &m).unwrap() - determinant(&m).unwrap()).norm() < 1e-10);
        }
        // χ(e) = d_λ means imm of the identity counts the identity term only
        let lam = Partition::new(vec![2, 1]).unwrap();
        assert!((immanant(&lam, &ComplexMatrix::identity(3)).unwrap() - c(2.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn regular_character_expansion_of_diagonal_product() {
        // Σ_λ d_λ imm_λ(M) = n! Π_i M[i,i]
        let mut rng = StdRng::seed_from_u64(14);
        let m = random_matrix(4, &mut rng);
        let mut sum = Complex64::default();
        for lam in partitions_of(4).unwrap() {
            sum += c(lam.dimension() as f64, 0.0) * immanant(&lam, &m).unwrap();
        }
        let diag: Complex64 = (0..4).map(|i| m.get(i, i)).product();
        assert!((sum - diag * c(24.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn row_permutation_symmetries() {
        let mut rng = StdRng::seed_from_u64(15);
        let m = random_matrix(3, &mut rng);
        let id = Permutation::identity(3);
        assert!(row_permuted(&m, &id).unwrap().max_abs_diff(&m) < 1e-15);
        // permanent invariant, determinant alternates
        for p in enumerate_permutations(3).unwrap() {
            let pm = row_permuted(&m, &p).unwrap();
            assert!((permanent(&pm).unwrap() - permanent(&m).unwrap()).norm() < 1e-12);
            let expect = determinant(&m).unwrap() * c(p.sign() as f64, 0.0);
            assert!((determinant(&pm).unwrap() - expect).norm() < 1e-12);
        }
        // T_{312} carries rows 3,1,2 (one-based) of T
        let sigma = Permutation::from_image(vec![2, 0, 1]).unwrap();
        let pm = row_permuted(&m, &sigma).unwrap();
        for j in 0..3 {
            assert_eq!(pm.get(0, j), m.get(2, j));
            assert_eq!(pm.get(1, j), m.get(0, j));
            assert_eq!(pm.get(2, j), m.get(1, j));
        }
        let bad = Permutation::identity(4);
        assert!(row_permuted(&m, &bad).is_err());
    }

    #[test]
    fn mixed_symmetry_immanant_distinguishes_row_orders() {
        let mut rng = StdRng::seed_from_u64(16);
        let m = random_matrix(3, &mut rng);
        let lam = Partition::new(vec![2, 1]).unwrap();
        let base = immanant(&lam, &m).unwrap();
        let odd = immanant(&lam, &row_permuted(&m, &Permutation::from_image(vec![0, 2, 1]).unwrap()).unwrap())
            .unwrap();
        let even = immanant(&lam, &row_permuted(&m, &Permutation::from_image(vec![1, 2, 0]).unwrap()).unwrap())
            .unwrap();
        assert!((base - odd).norm() > 1e-8);
        assert!((base - even).norm() > 1e-8);
        assert!((odd - even).norm() > 1e-8);
    }

    #[test]
    fn unitary_bounds() {
        // |per(U)| <= 1 and |det(U)| = 1 for unitary U
        let mut rng = StdRng::seed_from_u64(17);
        for n in 2..=5 {
            let u = crate::mesh::tests_support::random_unitary(n, &mut rng);
            assert!(permanent(&u).unwrap().norm() <= 1.0 + 1e-12);
            assert_abs_diff_eq!(determinant(&u).unwrap().norm(), 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn inverse_roundtrip() {
        let mut rng = StdRng::seed_from_u64(18);
        let m = random_matrix(6, &mut rng);
        let inv = inverse(&m).unwrap();
        assert!(m.mul(&inv).max_abs_diff(&ComplexMatrix::identity(6)) < 1e-10);
    }
}
