//! The symmetric group `S_n`: permutations, integer partitions, irreducible
//! characters and representations.
//!
//! Everything here is exact integer combinatorics except the orthogonal
//! representation matrices, which are real. Characters are computed by the
//! Murnaghan–Nakayama rule, dimensions by the hook-length formula, and the
//! [`symmetry_adapter`] assembles the orthogonal change of basis that brings
//! every regular-representation matrix to block-diagonal form at once.
//!
//! Permutations act on `{0, .., n-1}` in one-line notation. The lexicographic
//! order of [`enumerate_permutations`] is the canonical index used by every
//! `n! x n!` matrix in this crate.

use crate::matfunc::ComplexMatrix;
use crate::{factorial, Error, Result};
use num_complex::Complex64;

/// Largest degree supported by the exact combinatorics paths.
pub const MAX_DEGREE: usize = 8;
/// Largest degree for which `n! x n!` matrices are constructed.
pub const MAX_MATRIX_DEGREE: usize = 6;

// ---------------------------------------------------------------------------
// Permutations
// ---------------------------------------------------------------------------

/// A permutation of `{0, .., n-1}` in one-line notation: `image[i]` is the
/// image of `i`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Permutation {
    image: Vec<usize>,
}

impl Permutation {
    /// Builds a permutation from its one-line image, checking bijectivity.
    pub fn from_image(image: Vec<usize>) -> Result<Self> {
        let n = image.len();
        if n == 0 {
            return Err(Error::InvalidValue("empty permutation".into()));
        }
        let mut seen = vec![false; n];
        for &v in &image {
            if v >= n || seen[v] {
                return Err(Error::InvalidValue(format!(
                    "image {image:?} is not a bijection on 0..{n}"
                )));
            }
            seen[v] = true;
        }
        Ok(Self { image })
    }

    pub fn identity(n: usize) -> Self {
        Self { image: (0..n).collect() }
    }

    pub fn n(&self) -> usize {
        self.image.len()
    }

    pub fn image(&self) -> &[usize] {
        &self.image
    }

    /// Image of a single point.
    pub fn apply(&self, i: usize) -> usize {
        self.image[i]
    }

    pub fn is_identity(&self) -> bool {
        self.image.iter().enumerate().all(|(i, &v)| i == v)
    }

    /// Functional composition: `(self ∘ other)(i) = self(other(i))`.
    pub fn compose(&self, other: &Permutation) -> Permutation {
        debug_assert_eq!(self.n(), other.n());
        Permutation {
            image: other.image.iter().map(|&i| self.image[i]).collect(),
        }
    }

    pub fn inverse(&self) -> Permutation {
        let mut inv = vec![0; self.n()];
        for (i, &v) in self.image.iter().enumerate() {
            inv[v] = i;
        }
        Permutation { image: inv }
    }

    /// `+1` for even, `-1` for odd permutations.
    pub fn sign(&self) -> i64 {
        let ct = self.cycle_type();
        let transpositions: usize = ct.parts().iter().map(|&c| c - 1).sum();
        if transpositions % 2 == 0 {
            1
        } else {
            -1
        }
    }

    /// Cycle lengths, as a partition of `n`.
    pub fn cycle_type(&self) -> Partition {
        let n = self.n();
        let mut seen = vec![false; n];
        let mut cycles = Vec::new();
        for start in 0..n {
            if seen[start] {
                continue;
            }
            let mut len = 0;
            let mut j = start;
            while !seen[j] {
                seen[j] = true;
                j = self.image[j];
                len += 1;
            }
            cycles.push(len);
        }
        cycles.sort_unstable_by(|a, b| b.cmp(a));
        Partition { parts: cycles }
    }

    /// Position of this permutation in the lexicographic enumeration.
    pub fn lex_rank(&self) -> usize {
        let n = self.n();
        let mut rank = 0;
        let mut remaining: Vec<usize> = (0..n).collect();
        for i in 0..n {
            let pos = remaining.iter().position(|&v| v == self.image[i]).unwrap();
            rank += pos * factorial(n - 1 - i);
            remaining.remove(pos);
        }
        rank
    }
}

impl std::fmt::Display for Permutation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "(")?;
        for (k, v) in self.image.iter().enumerate() {
            if k > 0 {
                write!(f, ",")?;
            }
            write!(f, "{}", v + 1)?;
        }
        write!(f, ")")
    }
}

/// All `n!` permutations of degree `n` in lexicographic one-line order.
///
/// The first element is the identity and the last is the full reversal.
pub fn enumerate_permutations(n: usize) -> Result<Vec<Permutation>> {
    if n == 0 || n > MAX_DEGREE {
        return Err(Error::SizeLimit(format!(
            "permutation enumeration supports 1 <= n <= {MAX_DEGREE}, got {n}"
        )));
    }
    let mut image: Vec<usize> = (0..n).collect();
    let mut out = Vec::with_capacity(factorial(n));
    loop {
        out.push(Permutation { image: image.clone() });
        if !next_lex(&mut image) {
            break;
        }
    }
    Ok(out)
}

fn next_lex(a: &mut [usize]) -> bool {
    let n = a.len();
    if n < 2 {
        return false;
    }
    let mut i = n - 1;
    while i > 0 && a[i - 1] >= a[i] {
        i -= 1;
    }
    if i == 0 {
        return false;
    }
    let mut j = n - 1;
    while a[j] <= a[i - 1] {
        j -= 1;
    }
    a.swap(i - 1, j);
    a[i..].reverse();
    true
}

// ---------------------------------------------------------------------------
// Partitions
// ---------------------------------------------------------------------------

/// An integer partition: weakly decreasing positive parts.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Partition {
    parts: Vec<usize>,
}

impl Partition {
    pub fn new(parts: Vec<usize>) -> Result<Self> {
        if parts.is_empty() || parts.iter().any(|&p| p == 0) {
            return Err(Error::InvalidValue("partition parts must be positive".into()));
        }
        if parts.windows(2).any(|w| w[0] < w[1]) {
            return Err(Error::InvalidValue(format!(
                "partition parts must be weakly decreasing, got {parts:?}"
            )));
        }
        Ok(Self { parts })
    }

    pub fn parts(&self) -> &[usize] {
        &self.parts
    }

    /// The integer being partitioned.
    pub fn n(&self) -> usize {
        self.parts.iter().sum()
    }

    pub fn is_trivial(&self) -> bool {
        self.parts.len() == 1
    }

    pub fn is_sign(&self) -> bool {
        self.parts.iter().all(|&p| p == 1)
    }

    /// Transposed Young diagram.
    pub fn conjugate(&self) -> Partition {
        let cols = self.parts[0];
        let parts = (0..cols)
            .map(|j| self.parts.iter().filter(|&&p| p > j).count())
            .collect();
        Partition { parts }
    }

    /// Dimension of the irreducible representation labelled by this
    /// partition, by the hook-length formula.
    pub fn dimension(&self) -> usize {
        let n = self.n();
        let conj = self.conjugate();
        let mut hooks: u128 = 1;
        for (i, &row) in self.parts.iter().enumerate() {
            for j in 0..row {
                let hook = (row - j - 1) + (conj.parts[j] - i - 1) + 1;
                hooks *= hook as u128;
            }
        }
        ((1..=n as u128).product::<u128>() / hooks) as usize
    }
}

impl std::fmt::Display for Partition {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "(")?;
        for (k, p) in self.parts.iter().enumerate() {
            if k > 0 {
                write!(f, ",")?;
            }
            write!(f, "{p}")?;
        }
        write!(f, ")")
    }
}

/// All partitions of `n` in reverse-lexicographic order: `(n)` first,
/// `(1,..,1)` last.
pub fn partitions_of(n: usize) -> Result<Vec<Partition>> {
    if n == 0 || n > MAX_DEGREE {
        return Err(Error::SizeLimit(format!(
            "partition enumeration supports 1 <= n <= {MAX_DEGREE}, got {n}"
        )));
    }
    let mut out = Vec::new();
    let mut cur = Vec::new();
    fn rec(rem: usize, max: usize, cur: &mut Vec<usize>, out: &mut Vec<Partition>) {
        if rem == 0 {
            out.push(Partition { parts: cur.clone() });
            return;
        }
        for k in (1..=rem.min(max)).rev() {
            cur.push(k);
            rec(rem - k, k, cur, out);
            cur.pop();
        }
    }
    rec(n, n, &mut cur, &mut out);
    Ok(out)
}

/// Size of the conjugacy class with the given cycle type.
pub fn class_size(cycle_type: &Partition) -> u64 {
    let n = cycle_type.n();
    let mut mult: std::collections::HashMap<usize, u64> = std::collections::HashMap::new();
    for &c in cycle_type.parts() {
        *mult.entry(c).or_insert(0) += 1;
    }
    let mut denom: u64 = 1;
    for (&k, &m) in &mult {
        denom *= (k as u64).pow(m as u32);
        denom *= (1..=m).product::<u64>().max(1);
    }
    factorial(n) as u64 / denom
}

// ---------------------------------------------------------------------------
// Characters
// ---------------------------------------------------------------------------

/// Irreducible character `χ_λ(σ)`, exact, via the Murnaghan–Nakayama rule.
///
/// This is a class function: it depends on `σ` only through its cycle type.
pub fn character(lambda: &Partition, sigma: &Permutation) -> Result<i64> {
    if lambda.n() != sigma.n() {
        return Err(Error::Dimension(format!(
            "partition of {} applied to permutation of degree {}",
            lambda.n(),
            sigma.n()
        )));
    }
    Ok(character_of_class(lambda, &sigma.cycle_type()))
}

/// `χ_λ` evaluated on the conjugacy class with the given cycle type.
pub fn character_of_class(lambda: &Partition, cycle_type: &Partition) -> i64 {
    debug_assert_eq!(lambda.n(), cycle_type.n());
    mn(&lambda.parts, &cycle_type.parts)
}

fn mn(shape: &[usize], rho: &[usize]) -> i64 {
    if rho.is_empty() {
        return 1;
    }
    let k = rho[0];
    let rest = &rho[1..];
    let r = shape.len();
    let mut total = 0i64;
    // Remove every rim hook of length k that spans rows i..=j.
    for i in 0..r {
        for j in i..r {
            let mut new: Vec<usize> = shape.to_vec();
            let mut ok = true;
            for t in i..j {
                if shape[t + 1] == 0 {
                    ok = false;
                    break;
                }
                new[t] = shape[t + 1] - 1;
            }
            if !ok {
                continue;
            }
            let need = k + i;
            let newj = shape[i] + j;
            if newj < need {
                continue;
            }
            new[j] = newj - need;
            if j + 1 < r && new[j] < shape[j + 1] {
                continue;
            }
            if new[j] > shape[j] {
                continue;
            }
            if new.windows(2).any(|w| w[0] < w[1]) {
                continue;
            }
            let trimmed: Vec<usize> = new.into_iter().filter(|&p| p > 0).collect();
            let height = (j - i) as u32;
            let sign = if height % 2 == 0 { 1 } else { -1 };
            total += sign * mn(&trimmed, rest);
        }
    }
    total
}

/// The full character table of `S_n`.
///
/// Rows are indexed by partitions (irreps) and columns by conjugacy classes
/// (cycle types), both in the order of [`partitions_of`].
#[derive(Clone, Debug)]
pub struct CharacterTable {
    n: usize,
    partitions: Vec<Partition>,
    class_sizes: Vec<u64>,
    entries: Vec<i64>,
}

impl CharacterTable {
    pub fn new(n: usize) -> Result<Self> {
        let partitions = partitions_of(n)?;
        let k = partitions.len();
        let class_sizes = partitions.iter().map(class_size).collect();
        let mut entries = Vec::with_capacity(k * k);
        for lam in &partitions {
            for class in &partitions {
                entries.push(character_of_class(lam, class));
            }
        }
        Ok(Self { n, partitions, class_sizes, entries })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn partitions(&self) -> &[Partition] {
        &self.partitions
    }

    pub fn class_sizes(&self) -> &[u64] {
        &self.class_sizes
    }

    /// Character value by row (irrep) and column (class) index.
    pub fn value(&self, irrep: usize, class: usize) -> i64 {
        self.entries[irrep * self.partitions.len() + class]
    }
}

// ---------------------------------------------------------------------------
// Representations
// ---------------------------------------------------------------------------

/// Left regular representation of `σ`: the `n! x n!` 0/1 matrix with
/// `D[a][b] = 1` iff `σ ∘ p_b = p_a` under the canonical enumeration.
pub fn regular_representation(sigma: &Permutation) -> Result<ComplexMatrix> {
    let n = sigma.n();
    if n > MAX_MATRIX_DEGREE {
        return Err(Error::SizeLimit(format!(
            "regular representation supports n <= {MAX_MATRIX_DEGREE}, got {n}"
        )));
    }
    let perms = enumerate_permutations(n)?;
    let size = perms.len();
    let mut d = ComplexMatrix::zeros(size, size);
    for (b, p) in perms.iter().enumerate() {
        let a = sigma.compose(p).lex_rank();
        d.set(a, b, Complex64::new(1.0, 0.0));
    }
    Ok(d)
}

/// Canonical order of the irreducible blocks used by every block-diagonal
/// matrix in this crate.
///
/// The trivial partition `(n)` comes first and the sign partition `(1^n)`
/// last. In between, partitions that are reverse-lexicographically greater
/// than their conjugate come first (in reverse-lex order), then the
/// self-conjugate ones, then the conjugates of the first group in matching
/// order. For `n = 5` this yields block sizes `1,16,25,36,16,25,1`.
pub fn canonical_blocks(n: usize) -> Result<Vec<Partition>> {
    let all = partitions_of(n)?;
    if n == 1 {
        return Ok(all);
    }
    let trivial = all.first().unwrap().clone();
    let sign = all.last().unwrap().clone();
    let mids: Vec<&Partition> = all.iter().filter(|p| !p.is_trivial() && !p.is_sign()).collect();
    let mut first_group = Vec::new();
    let mut self_conj = Vec::new();
    for p in &mids {
        let c = p.conjugate();
        if **p == c {
            self_conj.push((*p).clone());
        } else if revlex_greater(p, &c) {
            first_group.push((*p).clone());
        }
    }
    let mut out = vec![trivial];
    out.extend(first_group.iter().cloned());
    out.extend(self_conj);
    out.extend(first_group.iter().map(|p| p.conjugate()));
    out.push(sign);
    Ok(out)
}

fn revlex_greater(a: &Partition, b: &Partition) -> bool {
    // Reverse-lexicographic: compare part sequences left to right.
    for (x, y) in a.parts().iter().zip(b.parts().iter()) {
        if x != y {
            return x > y;
        }
    }
    a.parts().len() < b.parts().len()
}

// ---------------------------------------------------------------------------
// Young's orthogonal form
// ---------------------------------------------------------------------------

/// Standard Young tableaux of a shape, each stored as `positions[letter] =
/// (row, col)`. Tableaux are ordered lexicographically by the row sequence of
/// the letters `0, 1, ..`, which puts the row-reading tableau first.
fn standard_tableaux(shape: &Partition) -> Vec<Vec<(usize, usize)>> {
    let n = shape.n();
    let rows = shape.parts().len();
    let mut fill = vec![0usize; rows];
    let mut positions = vec![(0usize, 0usize); n];
    let mut out = Vec::new();
    fn rec(
        letter: usize,
        n: usize,
        shape: &[usize],
        fill: &mut [usize],
        positions: &mut [(usize, usize)],
        out: &mut Vec<Vec<(usize, usize)>>,
    ) {
        if letter == n {
            out.push(positions.to_vec());
            return;
        }
        for r in 0..shape.len() {
            if fill[r] < shape[r] && (r == 0 || fill[r] < fill[r - 1]) {
                positions[letter] = (r, fill[r]);
                fill[r] += 1;
                rec(letter + 1, n, shape, fill, positions, out);
                fill[r] -= 1;
            }
        }
    }
    rec(0, n, shape.parts(), &mut fill, &mut positions, &mut out);
    out
}

/// Young's orthogonal representation matrix `Γ_λ(σ)`, a real orthogonal
/// `d_λ x d_λ` matrix. Returned as rows of `f64`.
pub fn young_orthogonal(lambda: &Partition, sigma: &Permutation) -> Result<Vec<Vec<f64>>> {
    if lambda.n() != sigma.n() {
        return Err(Error::Dimension(format!(
            "partition of {} applied to permutation of degree {}",
            lambda.n(),
            sigma.n()
        )));
    }
    let gens = yor_generators(lambda);
    Ok(yor_of(&gens, lambda.dimension(), sigma))
}

/// Generator matrices `Γ_λ(s_k)` for the adjacent transpositions
/// `s_k = (k, k+1)`, `k = 0..n-2` in 0-based values.
fn yor_generators(lambda: &Partition) -> Vec<Vec<Vec<f64>>> {
    let n = lambda.n();
    let tabs = standard_tableaux(lambda);
    let d = tabs.len();
    let index: std::collections::HashMap<Vec<(usize, usize)>, usize> =
        tabs.iter().cloned().zip(0..).collect();
    let mut gens = Vec::with_capacity(n.saturating_sub(1));
    for k in 0..n.saturating_sub(1) {
        let mut g = vec![vec![0.0; d]; d];
        for (t, tab) in tabs.iter().enumerate() {
            let (r1, c1) = tab[k];
            let (r2, c2) = tab[k + 1];
            // Axial distance from letter k to letter k+1.
            let dist = (c2 as i64 - r2 as i64) - (c1 as i64 - r1 as i64);
            if dist == 1 {
                g[t][t] = 1.0; // same row
            } else if dist == -1 {
                g[t][t] = -1.0; // same column
            } else {
                let inv = 1.0 / dist as f64;
                g[t][t] = inv;
                let mut swapped = tab.clone();
                swapped.swap(k, k + 1);
                let u = index[&swapped];
                g[t][u] = (1.0 - inv * inv).sqrt();
            }
        }
        gens.push(g);
    }
    gens
}

fn yor_of(gens: &[Vec<Vec<f64>>], d: usize, sigma: &Permutation) -> Vec<Vec<f64>> {
    // Bubble-sort decomposition: sorting the one-line image with adjacent
    // swaps t_{k1}, .., t_{km} gives σ = t_{km} ∘ .. ∘ t_{k1}.
    let mut a: Vec<usize> = sigma.image().to_vec();
    let mut swaps = Vec::new();
    let n = a.len();
    for _ in 0..n {
        for j in 0..n.saturating_sub(1) {
            if a[j] > a[j + 1] {
                a.swap(j, j + 1);
                swaps.push(j);
            }
        }
    }
    let mut mat = vec![vec![0.0; d]; d];
    for (i, row) in mat.iter_mut().enumerate() {
        row[i] = 1.0;
    }
    for &k in &swaps {
        mat = mat_mul_real(&gens[k], &mat);
    }
    mat
}

fn mat_mul_real(a: &[Vec<f64>], b: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = a.len();
    let m = b[0].len();
    let k = b.len();
    let mut out = vec![vec![0.0; m]; n];
    for i in 0..n {
        for l in 0..k {
            let ail = a[i][l];
            if ail == 0.0 {
                continue;
            }
            for j in 0..m {
                out[i][j] += ail * b[l][j];
            }
        }
    }
    out
}

/// The orthogonal `n! x n!` change of basis that block-diagonalizes every
/// [`regular_representation`] matrix simultaneously.
///
/// Conjugating `D(σ)` by the returned matrix yields, for each partition `λ`
/// in [`canonical_blocks`] order, `d_λ` consecutive copies of the orthogonal
/// irrep `Γ_λ(σ)`: the trivial irrep is the first 1x1 block and the sign
/// irrep the last. Columns are the Schur matrix coefficients
/// `sqrt(d_λ/n!) Γ_λ(p)_{ij}` with the copy index outermost.
pub fn symmetry_adapter(n: usize) -> Result<ComplexMatrix> {
    if n == 0 || n > MAX_MATRIX_DEGREE {
        return Err(Error::SizeLimit(format!(
            "symmetry adapter supports 1 <= n <= {MAX_MATRIX_DEGREE}, got {n}"
        )));
    }
    let perms = enumerate_permutations(n)?;
    let size = perms.len();
    let mut q = ComplexMatrix::zeros(size, size);
    let mut col = 0;
    for lambda in canonical_blocks(n)? {
        let d = lambda.dimension();
        let gens = yor_generators(&lambda);
        let scale = (d as f64 / size as f64).sqrt();
        // One Γ image per group element, reused across the d^2 columns.
        let images: Vec<Vec<Vec<f64>>> = perms.iter().map(|p| yor_of(&gens, d, p)).collect();
        for j in 0..d {
            for i in 0..d {
                for (a, img) in images.iter().enumerate() {
                    q.set(a, col, Complex64::new(scale * img[i][j], 0.0));
                }
                col += 1;
            }
        }
    }
    debug_assert_eq!(col, size);
    Ok(q)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn enumeration_is_lexicographic_and_complete() {
        let ps = enumerate_permutations(3).unwrap();
        assert_eq!(ps.len(), 6);
        assert!(ps[0].is_identity());
        assert_eq!(ps[5].image(), &[2, 1, 0]);
        for (i, p) in ps.iter().enumerate() {
            assert_eq!(p.lex_rank(), i);
        }
        let one = enumerate_permutations(1).unwrap();
        assert_eq!(one.len(), 1);
        assert!(one[0].is_identity());
        assert_eq!(enumerate_permutations(5).unwrap().len(), 120);
        assert!(enumerate_permutations(9).is_err());
        assert!(enumerate_permutations(0).is_err());
    }

    #[test]
    fn compose_inverse_identity() {
        for p in enumerate_permutations(4).unwrap() {
            assert!(p.compose(&p.inverse()).is_identity());
            assert!(p.inverse().compose(&p).is_identity());
        }
    }

    #[test]
    fn partitions_reverse_lex() {
        let ps = partitions_of(3).unwrap();
        let parts: Vec<&[usize]> = ps.iter().map(|p| p.parts()).collect();
        assert_eq!(parts, vec![&[3][..], &[2, 1][..], &[1, 1, 1][..]]);
        assert_eq!(partitions_of(5).unwrap().len(), 7);
        assert_eq!(partitions_of(1).unwrap().len(), 1);
    }

    #[test]
    fn hook_length_dimensions() {
        assert_eq!(Partition::new(vec![3]).unwrap().dimension(), 1);
        assert_eq!(Partition::new(vec![1, 1, 1]).unwrap().dimension(), 1);
        assert_eq!(Partition::new(vec![2, 1]).unwrap().dimension(), 2);
        assert_eq!(Partition::new(vec![2, 2, 1]).unwrap().dimension(), 5);
        // Burnside: sum of squared dimensions is n!.
        for n in 1..=8 {
            let total: usize = partitions_of(n)
                .unwrap()
                .iter()
                .map(|p| p.dimension() * p.dimension())
                .sum();
            assert_eq!(total, factorial(n), "n={n}");
        }
    }

    #[test]
    fn characters_trivial_sign_and_standard() {
        let ps = enumerate_permutations(3).unwrap();
        let triv = Partition::new(vec![3]).unwrap();
        let sign = Partition::new(vec![1, 1, 1]).unwrap();
        let std2 = Partition::new(vec![2, 1]).unwrap();
        for p in &ps {
            assert_eq!(character(&triv, p).unwrap(), 1);
            assert_eq!(character(&sign, p).unwrap(), p.sign());
        }
        // identity -> 2, transposition -> 0, 3-cycle -> -1
        assert_eq!(character(&std2, &ps[0]).unwrap(), 2);
        assert_eq!(character(&std2, &ps[1]).unwrap(), 0);
        assert_eq!(character(&std2, &ps[3]).unwrap(), -1);
        let bad = Permutation::identity(4);
        assert!(character(&std2, &bad).is_err());
    }

    #[test]
    fn character_table_row_and_column_orthogonality() {
        for n in 1..=6 {
            let t = CharacterTable::new(n).unwrap();
            let k = t.partitions().len();
            let order = factorial(n) as i64;
            for a in 0..k {
                for b in 0..k {
                    let dot: i64 = (0..k)
                        .map(|c| t.class_sizes()[c] as i64 * t.value(a, c) * t.value(b, c))
                        .sum();
                    assert_eq!(dot, if a == b { order } else { 0 }, "rows {a},{b} n={n}");
                }
            }
            for c in 0..k {
                for c2 in 0..k {
                    let dot: i64 = (0..k).map(|a| t.value(a, c) * t.value(a, c2)).sum();
                    let expect = if c == c2 { order / t.class_sizes()[c] as i64 } else { 0 };
                    assert_eq!(dot, expect, "cols {c},{c2} n={n}");
                }
            }
        }
    }

    #[test]
    fn character_of_identity_is_dimension() {
        for n in 1..=6 {
            let id = Permutation::identity(n);
            for lam in partitions_of(n).unwrap() {
                assert_eq!(character(&lam, &id).unwrap(), lam.dimension() as i64);
            }
        }
    }

    #[test]
    fn regular_character_identity() {
        // Σ_λ d_λ χ_λ(σ) = n! [σ = id]
        for n in 1..=5 {
            for p in enumerate_permutations(n).unwrap() {
                let s: i64 = partitions_of(n)
                    .unwrap()
                    .iter()
                    .map(|lam| lam.dimension() as i64 * character(lam, &p).unwrap())
                    .sum();
                let expect = if p.is_identity() { factorial(n) as i64 } else { 0 };
                assert_eq!(s, expect);
            }
        }
    }

    #[test]
    fn regular_representation_is_a_homomorphism() {
        let ps = enumerate_permutations(4).unwrap();
        let id = regular_representation(&Permutation::identity(4)).unwrap();
        assert!(id.max_abs_diff(&ComplexMatrix::identity(24)) < 1e-15);
        // spot-check products over a subset
        for a in [0usize, 5, 11, 17, 23] {
            for b in [1usize, 7, 13, 22] {
                let lhs = regular_representation(&ps[a])
                    .unwrap()
                    .mul(&regular_representation(&ps[b]).unwrap());
                let rhs = regular_representation(&ps[a].compose(&ps[b])).unwrap();
                assert!(lhs.max_abs_diff(&rhs) < 1e-15);
            }
        }
        // D(σ) D(σ⁻¹) = 1 for every σ at n = 4
        for p in &ps {
            let prod = regular_representation(p)
                .unwrap()
                .mul(&regular_representation(&p.inverse()).unwrap());
            assert!(prod.max_abs_diff(&ComplexMatrix::identity(24)) < 1e-15);
        }
        assert_eq!(regular_representation(&Permutation::identity(5)).unwrap().n_rows(), 120);
    }

    #[test]
    fn canonical_block_sizes() {
        let sizes = |n: usize| -> Vec<usize> {
            canonical_blocks(n)
                .unwrap()
                .iter()
                .map(|p| p.dimension() * p.dimension())
                .collect()
        };
        assert_eq!(sizes(2), vec![1, 1]);
        assert_eq!(sizes(3), vec![1, 4, 1]);
        assert_eq!(sizes(4), vec![1, 9, 4, 9, 1]);
        assert_eq!(sizes(5), vec![1, 16, 25, 36, 16, 25, 1]);
    }

    #[test]
    fn yor_matrices_are_orthogonal_homomorphisms() {
        for lam in partitions_of(4).unwrap() {
            let d = lam.dimension();
            let ps = enumerate_permutations(4).unwrap();
            for p in &ps {
                let g = young_orthogonal(&lam, p).unwrap();
                // orthogonality: G Gᵀ = 1
                for i in 0..d {
                    for j in 0..d {
                        let dot: f64 = (0..d).map(|k| g[i][k] * g[j][k]).sum();
                        let expect = if i == j { 1.0 } else { 0.0 };
                        assert!((dot - expect).abs() < 1e-12);
                    }
                }
            }
            // homomorphism on a sample of pairs
            for (a, b) in [(1, 2), (3, 17), (10, 20), (23, 5)] {
                let ga = young_orthogonal(&lam, &ps[a]).unwrap();
                let gb = young_orthogonal(&lam, &ps[b]).unwrap();
                let gab = young_orthogonal(&lam, &ps[a].compose(&ps[b])).unwrap();
                let prod = mat_mul_real(&ga, &gb);
                for i in 0..d {
                    for j in 0..d {
                        assert!((prod[i][j] - gab[i][j]).abs() < 1e-12);
                    }
                }
            }
        }
    }

    #[test]
    fn adapter_block_diagonalizes_small_groups() {
        for n in 2..=4 {
            let q = symmetry_adapter(n).unwrap();
            let size = factorial(n);
            // orthogonality of Q
            let qtq = q.adjoint().mul(&q);
            assert!(qtq.max_abs_diff(&ComplexMatrix::identity(size)) < 1e-12);
            let blocks = canonical_blocks(n).unwrap();
            for p in enumerate_permutations(n).unwrap() {
                let adapted = q.adjoint().mul(&regular_representation(&p).unwrap()).mul(&q);
                // off-block entries vanish
                let mut offset = 0;
                let mut boundaries = Vec::new();
                for lam in &blocks {
                    let s = lam.dimension() * lam.dimension();
                    boundaries.push((offset, s));
                    offset += s;
                }
                for r in 0..size {
                    for c in 0..size {
                        let inside = boundaries
                            .iter()
                            .any(|&(o, s)| r >= o && r < o + s && c >= o && c < o + s);
                        if !inside {
                            assert!(
                                adapted.get(r, c).norm() < 1e-12,
                                "n={n} off-block ({r},{c})"
                            );
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn adapter_n2_matches_two_photon_bracket() {
        let q = symmetry_adapter(2).unwrap();
        let swap = Permutation::from_image(vec![1, 0]).unwrap();
        let id = q.adjoint().mul(&regular_representation(&Permutation::identity(2)).unwrap()).mul(&q);
        let sw = q.adjoint().mul(&regular_representation(&swap).unwrap()).mul(&q);
        assert!(id.max_abs_diff(&ComplexMatrix::identity(2)) < 1e-12);
        let expect = ComplexMatrix::from_real_rows(&[vec![1.0, 0.0], vec![0.0, -1.0]]);
        assert!(sw.max_abs_diff(&expect) < 1e-12);
    }
}
