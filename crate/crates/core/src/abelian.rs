//! Finitely generated abelian groups as integer lattices: Smith normal
//! form over arbitrary-precision integers, cokernels, finiteness and rank
//! decisions. No floating point anywhere.

use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum AbelianError {
    #[error("matrix dimensions are inconsistent")]
    BadShape,
    #[error("order requested on an infinite group")]
    InfiniteOrder,
    #[error("{0}")]
    Other(String),
}

/// Dense integer matrix with arbitrary-precision entries.
#[derive(Clone, PartialEq, Eq)]
pub struct IntMatrix {
    pub rows: usize,
    pub cols: usize,
    entries: Vec<BigInt>,
}

impl fmt::Debug for IntMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "IntMatrix {}x{}", self.rows, self.cols)?;
        for i in 0..self.rows {
            let row: Vec<String> = (0..self.cols).map(|j| self.get(i, j).to_string()).collect();
            writeln!(f, "  [{}]", row.join(", "))?;
        }
        Ok(())
    }
}

impl IntMatrix {
    pub fn zero(rows: usize, cols: usize) -> Self {
        IntMatrix {
            rows,
            cols,
            entries: vec![BigInt::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zero(n, n);
        for i in 0..n {
            m.set(i, i, BigInt::one());
        }
        m
    }

    pub fn from_rows(rows: Vec<Vec<i64>>) -> Result<Self, AbelianError> {
        let r = rows.len();
        let c = rows.first().map_or(0, |x| x.len());
        if rows.iter().any(|x| x.len() != c) {
            return Err(AbelianError::BadShape);
        }
        Ok(IntMatrix {
            rows: r,
            cols: c,
            entries: rows.into_iter().flatten().map(BigInt::from).collect(),
        })
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> &BigInt {
        &self.entries[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: BigInt) {
        self.entries[i * self.cols + j] = v;
    }

    pub fn transpose(&self) -> IntMatrix {
        let mut t = IntMatrix::zero(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t.set(j, i, self.get(i, j).clone());
            }
        }
        t
    }

    pub fn mul(&self, other: &IntMatrix) -> IntMatrix {
        assert_eq!(self.cols, other.rows);
        let mut m = IntMatrix::zero(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a.is_zero() {
                    continue;
                }
                for j in 0..other.cols {
                    let v = m.get(i, j) + a * other.get(k, j);
                    m.set(i, j, v);
                }
            }
        }
        m
    }

    pub fn is_zero(&self) -> bool {
        self.entries.iter().all(|e| e.is_zero())
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for j in 0..self.cols {
            self.entries.swap(a * self.cols + j, b * self.cols + j);
        }
    }

    fn swap_cols(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for i in 0..self.rows {
            self.entries.swap(i * self.cols + a, i * self.cols + b);
        }
    }

    fn add_row_multiple(&mut self, dst: usize, src: usize, k: &BigInt) {
        if k.is_zero() {
            return;
        }
        for j in 0..self.cols {
            let v = self.get(dst, j) + k * self.get(src, j);
            self.set(dst, j, v);
        }
    }

    fn add_col_multiple(&mut self, dst: usize, src: usize, k: &BigInt) {
        if k.is_zero() {
            return;
        }
        for i in 0..self.rows {
            let v = self.get(i, dst) + k * self.get(i, src);
            self.set(i, dst, v);
        }
    }

    fn negate_row(&mut self, r: usize) {
        for j in 0..self.cols {
            let v = -self.get(r, j);
            self.set(r, j, v);
        }
    }

    /// Rank over the rationals, via the Smith form.
    pub fn rank(&self) -> usize {
        smith_normal_form(self).diagonal().len()
    }

    /// Determinant of a square matrix by fraction-free elimination on the
    /// Smith form (product of diagonal entries up to sign; we only need the
    /// absolute value for order computations, but track the sign anyway).
    pub fn det(&self) -> BigInt {
        assert_eq!(self.rows, self.cols);
        // Bareiss would be faster; SNF diagonal with sign from U, V works and
        // reuses audited code. |det| = product of invariant factors.
        let snf = smith_normal_form(self);
        if snf.diagonal().len() < self.rows {
            return BigInt::zero();
        }
        let mut d = BigInt::one();
        for v in snf.diagonal() {
            d *= v;
        }
        // Sign: det(U) det(M) det(V) = det(D) with det(U), det(V) = ±1.
        let su = unimodular_det_sign(&snf.u);
        let sv = unimodular_det_sign(&snf.v);
        d * su * sv
    }
}

fn unimodular_det_sign(m: &IntMatrix) -> BigInt {
    // Gaussian elimination over the rationals would need fractions; instead
    // run SNF-free integer elimination tracking row swaps is overkill. The
    // matrices here are unimodular, so det = ±1 and we can compute the sign
    // by LU-style elimination with exact integer pivoting on a copy.
    let n = m.rows;
    let mut a = m.clone();
    let mut sign = BigInt::one();
    for k in 0..n {
        // Find a pivot with minimal nonzero absolute value to keep entries small.
        let mut piv: Option<usize> = None;
        for i in k..n {
            if !a.get(i, k).is_zero()
                && piv.map_or(true, |p| a.get(i, k).abs() < a.get(p, k).abs())
            {
                piv = Some(i);
            }
        }
        let p = piv.expect("unimodular matrix is nonsingular");
        if p != k {
            a.swap_rows(p, k);
            sign = -sign;
        }
        // Clear below by repeated subtraction (Euclidean), keeping integrality.
        for i in (k + 1)..n {
            while !a.get(i, k).is_zero() {
                let q = a.get(i, k).div_euclid(a.get(k, k));
                if q.is_zero() {
                    a.swap_rows(i, k);
                    sign = -sign;
                } else {
                    let nq = -q;
                    a.add_row_multiple(i, k, &nq);
                }
            }
        }
    }
    let mut d = BigInt::one();
    for k in 0..n {
        d *= a.get(k, k);
    }
    d.signum()
}

trait DivEuclidBig {
    fn div_euclid(&self, other: &BigInt) -> BigInt;
}
impl DivEuclidBig for BigInt {
    fn div_euclid(&self, other: &BigInt) -> BigInt {
        let (q, r) = self.div_rem(other);
        if r.is_negative() {
            if other.is_positive() {
                q - 1
            } else {
                q + 1
            }
        } else {
            q
        }
    }
}

/// U * M * V = D with D diagonal satisfying the divisibility chain and
/// U, V unimodular.
pub struct SmithForm {
    pub d: IntMatrix,
    pub u: IntMatrix,
    pub v: IntMatrix,
}

impl SmithForm {
    /// Nonzero diagonal entries d1 | d2 | ..., all positive.
    pub fn diagonal(&self) -> Vec<BigInt> {
        let n = self.d.rows.min(self.d.cols);
        (0..n)
            .map(|i| self.d.get(i, i).clone())
            .filter(|x| !x.is_zero())
            .collect()
    }
}

/// Smith normal form by elementary row/column operations with minimal-entry
/// pivoting and a divisibility fix-up pass.
pub fn smith_normal_form(m: &IntMatrix) -> SmithForm {
    let mut d = m.clone();
    let mut u = IntMatrix::identity(m.rows);
    let mut v = IntMatrix::identity(m.cols);
    let n = m.rows.min(m.cols);

    for k in 0..n {
        loop {
            // Pivot: minimal nonzero |entry| in the trailing block.
            let mut piv: Option<(usize, usize)> = None;
            for i in k..d.rows {
                for j in k..d.cols {
                    if !d.get(i, j).is_zero()
                        && piv.map_or(true, |(pi, pj)| d.get(i, j).abs() < d.get(pi, pj).abs())
                    {
                        piv = Some((i, j));
                    }
                }
            }
            let (pi, pj) = match piv {
                None => return SmithForm { d, u, v },
                Some(p) => p,
            };
            d.swap_rows(k, pi);
            u.swap_rows(k, pi);
            d.swap_cols(k, pj);
            v.swap_cols(k, pj);

            let mut clean = true;
            // Reduce column k.
            for i in (k + 1)..d.rows {
                if !d.get(i, k).is_zero() {
                    let q = -d.get(i, k).div_euclid(d.get(k, k));
                    d.add_row_multiple(i, k, &q);
                    u.add_row_multiple(i, k, &q);
                    if !d.get(i, k).is_zero() {
                        clean = false;
                    }
                }
            }
            // Reduce row k.
            for j in (k + 1)..d.cols {
                if !d.get(k, j).is_zero() {
                    let q = -d.get(k, j).div_euclid(d.get(k, k));
                    d.add_col_multiple(j, k, &q);
                    v.add_col_multiple(j, k, &q);
                    if !d.get(k, j).is_zero() {
                        clean = false;
                    }
                }
            }
            if !clean {
                continue;
            }
            // Divisibility: pivot must divide every trailing entry.
            let mut bad: Option<usize> = None;
            'outer: for i in (k + 1)..d.rows {
                for j in (k + 1)..d.cols {
                    if !(d.get(i, j) % d.get(k, k)).is_zero() {
                        bad = Some(i);
                        break 'outer;
                    }
                }
            }
            match bad {
                Some(i) => {
                    // Fold the offending row into row k and restart this pivot.
                    let one = BigInt::one();
                    d.add_row_multiple(k, i, &one);
                    u.add_row_multiple(k, i, &one);
                }
                None => break,
            }
        }
        if d.get(k, k).is_negative() {
            d.negate_row(k);
            u.negate_row(k);
        }
    }
    SmithForm { d, u, v }
}

/// A finitely generated abelian group in canonical form: free rank plus
/// invariant factors d1 | d2 | ..., each at least 2.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct FgAbelianGroup {
    pub free_rank: usize,
    pub torsion: Vec<BigInt>,
}

impl fmt::Display for FgAbelianGroup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut parts: Vec<String> = Vec::new();
        if self.free_rank > 0 {
            parts.push(if self.free_rank == 1 {
                "Z".to_string()
            } else {
                format!("Z^{}", self.free_rank)
            });
        }
        for t in &self.torsion {
            parts.push(format!("Z/{}", t));
        }
        if parts.is_empty() {
            parts.push("1".to_string());
        }
        write!(f, "{}", parts.join(" x "))
    }
}

impl FgAbelianGroup {
    pub fn trivial() -> Self {
        FgAbelianGroup {
            free_rank: 0,
            torsion: vec![],
        }
    }

    pub fn free(rank: usize) -> Self {
        FgAbelianGroup {
            free_rank: rank,
            torsion: vec![],
        }
    }

    pub fn from_invariant_factors(free_rank: usize, factors: Vec<u64>) -> Result<Self, AbelianError> {
        let torsion: Vec<BigInt> = factors
            .into_iter()
            .filter(|&d| d != 1)
            .map(BigInt::from)
            .collect();
        for w in torsion.windows(2) {
            if !(&w[1] % &w[0]).is_zero() {
                return Err(AbelianError::Other(
                    "invariant factors must form a divisibility chain".into(),
                ));
            }
        }
        if torsion.iter().any(|d| d < &BigInt::from(2)) {
            return Err(AbelianError::Other("invariant factors must be >= 2".into()));
        }
        Ok(FgAbelianGroup { free_rank, torsion })
    }

    pub fn is_finite(&self) -> bool {
        self.free_rank == 0
    }

    pub fn is_trivial(&self) -> bool {
        self.free_rank == 0 && self.torsion.is_empty()
    }

    pub fn order(&self) -> Result<BigInt, AbelianError> {
        if !self.is_finite() {
            return Err(AbelianError::InfiniteOrder);
        }
        let mut o = BigInt::one();
        for t in &self.torsion {
            o *= t;
        }
        Ok(o)
    }

    pub fn rank(&self) -> usize {
        self.free_rank
    }
}

/// Cokernel Z^rows / column-span(M), in canonical form.
pub fn cokernel(m: &IntMatrix) -> FgAbelianGroup {
    let snf = smith_normal_form(m);
    let diag = snf.diagonal();
    let torsion: Vec<BigInt> = diag
        .iter()
        .filter(|d| **d > BigInt::one())
        .cloned()
        .collect();
    FgAbelianGroup {
        free_rank: m.rows - diag.len(),
        torsion,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn diag_of(m: &IntMatrix) -> Vec<i64> {
        smith_normal_form(m)
            .diagonal()
            .iter()
            .map(|x| i64::try_from(x).unwrap())
            .collect()
    }

    fn check_snf(m: &IntMatrix) {
        let snf = smith_normal_form(m);
        // U M V = D
        assert_eq!(snf.u.mul(m).mul(&snf.v), snf.d, "UMV != D");
        // Unimodularity.
        assert_eq!(unimodular_det_sign(&snf.u).abs(), BigInt::one());
        assert_eq!(unimodular_det_sign(&snf.v).abs(), BigInt::one());
        // Diagonal divisibility chain.
        let d = snf.diagonal();
        for w in d.windows(2) {
            assert!((&w[1] % &w[0]).is_zero(), "no divisibility: {:?}", d);
        }
    }

    #[test]
    fn snf_examples() {
        let id = IntMatrix::identity(3);
        let snf = smith_normal_form(&id);
        assert_eq!(snf.d, id);
        assert_eq!(snf.u, IntMatrix::identity(3));
        assert_eq!(snf.v, IntMatrix::identity(3));

        let m = IntMatrix::from_rows(vec![vec![2, 0], vec![0, 3]]).unwrap();
        assert_eq!(diag_of(&m), vec![1, 6]);
        check_snf(&m);

        let m = IntMatrix::from_rows(vec![vec![1, 1], vec![2, 4]]).unwrap();
        assert_eq!(diag_of(&m), vec![1, 2]);
        check_snf(&m);
    }

    #[test]
    fn cokernel_examples() {
        // Zero-column matrix on Z^2: free of rank 2.
        let m = IntMatrix::zero(2, 0);
        assert_eq!(cokernel(&m), FgAbelianGroup::free(2));
        // Identity: trivial cokernel.
        assert!(cokernel(&IntMatrix::identity(3)).is_trivial());
        // Columns (1,1), (2,4) in Z^2: Z/2.
        let m = IntMatrix::from_rows(vec![vec![1, 2], vec![1, 4]]).unwrap();
        let c = cokernel(&m);
        assert_eq!(c.free_rank, 0);
        assert_eq!(c.torsion, vec![BigInt::from(2)]);
    }

    #[test]
    fn verdict_examples() {
        let a = FgAbelianGroup::from_invariant_factors(0, vec![2]).unwrap();
        assert!(a.is_finite());
        assert_eq!(a.order().unwrap(), BigInt::from(2));
        let b = FgAbelianGroup::free(4);
        assert!(!b.is_finite());
        assert!(b.order().is_err());
        assert_eq!(b.rank(), 4);
        let c = FgAbelianGroup::from_invariant_factors(0, vec![2, 6]).unwrap();
        assert_eq!(c.order().unwrap(), BigInt::from(12));
        // Chain violation rejected.
        assert!(FgAbelianGroup::from_invariant_factors(0, vec![2, 3]).is_err());
        // Unit factors dropped.
        let d = FgAbelianGroup::from_invariant_factors(1, vec![1, 1, 4]).unwrap();
        assert_eq!(d.torsion, vec![BigInt::from(4)]);
    }

    #[test]
    fn det_equals_cokernel_order() {
        let m = IntMatrix::from_rows(vec![vec![4, 1, 0], vec![-2, 3, 1], vec![0, 5, 2]]).unwrap();
        let c = cokernel(&m);
        assert!(c.is_finite() || m.det().is_zero());
        if c.is_finite() {
            assert_eq!(c.order().unwrap(), m.det().abs());
        }
    }

    proptest! {
        #[test]
        fn snf_valid_on_random(rows in 1usize..5, cols in 1usize..5,
                               seed in proptest::collection::vec(-9i64..10, 25)) {
            let mut m = IntMatrix::zero(rows, cols);
            for i in 0..rows {
                for j in 0..cols {
                    m.set(i, j, BigInt::from(seed[i * cols + j]));
                }
            }
            check_snf(&m);
            // cokernel(M) = cokernel(SNF(M)).
            let snf = smith_normal_form(&m);
            prop_assert_eq!(cokernel(&m), cokernel(&snf.d));
        }

        #[test]
        fn snf_invariant_under_unimodular(seed in proptest::collection::vec(-5i64..6, 9),
                                          shears in proptest::collection::vec((0usize..3, 0usize..3, -2i64..3), 4)) {
            let mut m = IntMatrix::zero(3, 3);
            for i in 0..3 {
                for j in 0..3 {
                    m.set(i, j, BigInt::from(seed[i * 3 + j]));
                }
            }
            let before: Vec<BigInt> = smith_normal_form(&m).diagonal();
            let mut t = m.clone();
            for (a, b, k) in shears {
                if a != b {
                    t.add_row_multiple(a, b, &BigInt::from(k));
                    t.add_col_multiple(b, a, &BigInt::from(k + 1));
                }
            }
            let after: Vec<BigInt> = smith_normal_form(&t).diagonal();
            prop_assert_eq!(before, after);
        }

        #[test]
        fn order_is_det_for_nonsingular(seed in proptest::collection::vec(-6i64..7, 9)) {
            let mut m = IntMatrix::zero(3, 3);
            for i in 0..3 {
                for j in 0..3 {
                    m.set(i, j, BigInt::from(seed[i * 3 + j]));
                }
            }
            let d = m.det();
            prop_assume!(!d.is_zero());
            prop_assert_eq!(cokernel(&m).order().unwrap(), d.abs());
        }
    }
}
