//! Dense linear algebra over any [`Field`]: row reduction, rank, nullspace,
//! linear solves, and zero-forcing beam synthesis.
//!
//! Elimination is textbook Gauss-Jordan. Pivots are chosen by largest
//! magnitude in the column (partial pivoting), which for exact fields reduces
//! to "first nonzero". In floating mode an entry counts as zero when its
//! magnitude is below the field's relative tolerance times the largest
//! magnitude in the input.

use crate::error::{Error, Result};
use crate::field::Field;

/// Dense row-major matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix<E> {
    rows: usize,
    cols: usize,
    data: Vec<E>,
}

impl<E: Copy> Matrix<E> {
    pub fn filled(rows: usize, cols: usize, value: E) -> Self {
        assert!(rows > 0 && cols > 0, "matrix dimensions must be positive");
        Self {
            rows,
            cols,
            data: vec![value; rows * cols],
        }
    }

    pub fn zeros<F: Field<Elem = E>>(field: &F, rows: usize, cols: usize) -> Self {
        Self::filled(rows, cols, field.zero())
    }

    pub fn identity<F: Field<Elem = E>>(field: &F, n: usize) -> Self {
        let mut m = Self::zeros(field, n, n);
        for i in 0..n {
            m[(i, i)] = field.one();
        }
        m
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<E>) -> Result<Self> {
        if rows == 0 || cols == 0 || data.len() != rows * cols {
            return Err(Error::DimensionMismatch(format!(
                "{} entries for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_rows(rows: &[Vec<E>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::DimensionMismatch("ragged rows".into()));
        }
        Self::from_vec(rows.len(), cols, rows.concat())
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[E] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<E> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn as_slice(&self) -> &[E] {
        &self.data
    }

    pub fn to_rows(&self) -> Vec<Vec<E>> {
        (0..self.rows).map(|i| self.row(i).to_vec()).collect()
    }

    /// Submatrix made of the given rows, in the given order.
    pub fn select_rows(&self, idx: &[usize]) -> Self {
        assert!(!idx.is_empty());
        let data = idx
            .iter()
            .flat_map(|&i| self.row(i).iter().copied())
            .collect();
        Self {
            rows: idx.len(),
            cols: self.cols,
            data,
        }
    }

    pub fn select_cols(&self, idx: &[usize]) -> Self {
        assert!(!idx.is_empty());
        let data = (0..self.rows)
            .flat_map(|i| idx.iter().map(move |&j| (i, j)))
            .map(|(i, j)| self[(i, j)])
            .collect();
        Self {
            rows: self.rows,
            cols: idx.len(),
            data,
        }
    }

    pub fn transpose(&self) -> Self {
        let data = (0..self.cols)
            .flat_map(|j| (0..self.rows).map(move |i| (i, j)))
            .map(|(i, j)| self[(i, j)])
            .collect();
        Self {
            rows: self.cols,
            cols: self.rows,
            data,
        }
    }

    pub fn map<G: Copy>(&self, f: impl Fn(E) -> G) -> Matrix<G> {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&x| f(x)).collect(),
        }
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a != b {
            for j in 0..self.cols {
                self.data.swap(a * self.cols + j, b * self.cols + j);
            }
        }
    }
}

impl<E> std::ops::Index<(usize, usize)> for Matrix<E> {
    type Output = E;

    fn index(&self, (i, j): (usize, usize)) -> &E {
        assert!(i < self.rows && j < self.cols);
        &self.data[i * self.cols + j]
    }
}

impl<E> std::ops::IndexMut<(usize, usize)> for Matrix<E> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut E {
        assert!(i < self.rows && j < self.cols);
        &mut self.data[i * self.cols + j]
    }
}

pub fn mat_mul<F: Field>(
    field: &F,
    a: &Matrix<F::Elem>,
    b: &Matrix<F::Elem>,
) -> Result<Matrix<F::Elem>> {
    if a.cols != b.rows {
        return Err(Error::DimensionMismatch(format!(
            "{}x{} times {}x{}",
            a.rows, a.cols, b.rows, b.cols
        )));
    }
    let mut out = Matrix::zeros(field, a.rows, b.cols);
    for i in 0..a.rows {
        for k in 0..a.cols {
            let aik = a[(i, k)];
            if field.is_exact() && field.is_zero(aik) {
                continue;
            }
            for j in 0..b.cols {
                out[(i, j)] = field.add(out[(i, j)], field.mul(aik, b[(k, j)]));
            }
        }
    }
    Ok(out)
}

pub fn mat_vec<F: Field>(field: &F, a: &Matrix<F::Elem>, v: &[F::Elem]) -> Result<Vec<F::Elem>> {
    if a.cols != v.len() {
        return Err(Error::DimensionMismatch(format!(
            "{}x{} times vector of length {}",
            a.rows,
            a.cols,
            v.len()
        )));
    }
    Ok((0..a.rows).map(|i| field.dot(a.row(i), v)).collect())
}

fn max_magnitude<F: Field>(field: &F, a: &Matrix<F::Elem>) -> f64 {
    a.data
        .iter()
        .map(|&x| field.magnitude(x))
        .fold(0.0, f64::max)
}

/// Reduced row echelon form of `a`, considering only the first `pivot_cols`
/// columns as pivot candidates. Returns the reduced matrix and the pivot
/// column of each nonzero row.
fn rref<F: Field>(
    field: &F,
    a: &Matrix<F::Elem>,
    pivot_cols: usize,
    scale: f64,
) -> (Matrix<F::Elem>, Vec<usize>) {
    let mut m = a.clone();
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..pivot_cols {
        if r == m.rows {
            break;
        }
        let mut best = r;
        let mut best_mag = field.magnitude(m[(r, c)]);
        for i in r + 1..m.rows {
            let mag = field.magnitude(m[(i, c)]);
            if mag > best_mag {
                best = i;
                best_mag = mag;
            }
        }
        if field.is_negligible(m[(best, c)], scale) {
            // Column is numerically dependent; flush the residue.
            for i in r..m.rows {
                m[(i, c)] = field.zero();
            }
            continue;
        }
        m.swap_rows(r, best);
        let inv = field
            .inv(m[(r, c)])
            .expect("non-negligible pivot is invertible");
        for j in 0..m.cols {
            m[(r, j)] = field.mul(m[(r, j)], inv);
        }
        for i in 0..m.rows {
            if i == r {
                continue;
            }
            let factor = m[(i, c)];
            if field.is_exact() && field.is_zero(factor) {
                continue;
            }
            for j in 0..m.cols {
                let v = field.mul(factor, m[(r, j)]);
                m[(i, j)] = field.sub(m[(i, j)], v);
            }
            m[(i, c)] = field.zero();
        }
        pivots.push(c);
        r += 1;
    }
    (m, pivots)
}

pub fn rank<F: Field>(field: &F, a: &Matrix<F::Elem>) -> usize {
    let scale = max_magnitude(field, a);
    if scale == 0.0 {
        return 0;
    }
    rref(field, a, a.cols, scale).1.len()
}

/// Basis of the right nullspace `{v : A v = 0}`; empty when it is trivial.
pub fn nullspace_basis<F: Field>(field: &F, a: &Matrix<F::Elem>) -> Vec<Vec<F::Elem>> {
    let scale = max_magnitude(field, a);
    let (r, pivots) = if scale == 0.0 {
        (a.clone(), Vec::new())
    } else {
        rref(field, a, a.cols, scale)
    };
    let mut is_pivot = vec![false; a.cols];
    for &c in &pivots {
        is_pivot[c] = true;
    }
    (0..a.cols)
        .filter(|&c| !is_pivot[c])
        .map(|free| {
            let mut v = vec![field.zero(); a.cols];
            v[free] = field.one();
            for (row, &pc) in pivots.iter().enumerate() {
                v[pc] = field.neg(r[(row, free)]);
            }
            v
        })
        .collect()
}

/// One solution of `A x = b` (free variables set to zero), or `None` when
/// the system is inconsistent.
pub fn solve<F: Field>(
    field: &F,
    a: &Matrix<F::Elem>,
    b: &[F::Elem],
) -> Result<Option<Vec<F::Elem>>> {
    if b.len() != a.rows {
        return Err(Error::DimensionMismatch(format!(
            "right-hand side of length {} for {} equations",
            b.len(),
            a.rows
        )));
    }
    let mut data = Vec::with_capacity(a.rows * (a.cols + 1));
    for (i, &bi) in b.iter().enumerate() {
        data.extend_from_slice(a.row(i));
        data.push(bi);
    }
    let aug = Matrix::from_vec(a.rows, a.cols + 1, data)?;
    let scale = max_magnitude(field, &aug);
    if scale == 0.0 {
        return Ok(Some(vec![field.zero(); a.cols]));
    }
    let (r, pivots) = rref(field, &aug, a.cols, scale);
    for i in pivots.len()..a.rows {
        if !field.is_negligible(r[(i, a.cols)], scale) {
            return Ok(None);
        }
    }
    let mut x = vec![field.zero(); a.cols];
    for (row, &pc) in pivots.iter().enumerate() {
        x[pc] = r[(row, a.cols)];
    }
    Ok(Some(x))
}

/// Inverse of a square matrix, or `None` if it is singular.
pub fn inverse<F: Field>(field: &F, a: &Matrix<F::Elem>) -> Result<Option<Matrix<F::Elem>>> {
    if a.rows != a.cols {
        return Err(Error::DimensionMismatch(format!(
            "inverse of a {}x{} matrix",
            a.rows, a.cols
        )));
    }
    let n = a.rows;
    let mut data = Vec::with_capacity(n * 2 * n);
    for i in 0..n {
        data.extend_from_slice(a.row(i));
        data.extend((0..n).map(|j| if i == j { field.one() } else { field.zero() }));
    }
    let aug = Matrix::from_vec(n, 2 * n, data)?;
    let scale = max_magnitude(field, a);
    if scale == 0.0 {
        return Ok(None);
    }
    let (r, pivots) = rref(field, &aug, n, scale);
    if pivots.len() < n {
        return Ok(None);
    }
    let cols: Vec<usize> = (n..2 * n).collect();
    Ok(Some(r.select_cols(&cols)))
}

/// Beam `w` for user `k` that is nulled at every other member of `served`,
/// normalized so that `h_k^H w = 1`.
///
/// Row `j` of `channel` holds `h_j^H`, so the constraints are plain row-vector
/// products. Fails with `DegenerateChannel` when `h_k` is in the span of the
/// other served users' channels.
pub fn zero_forcing_vector<F: Field>(
    field: &F,
    channel: &Matrix<F::Elem>,
    k: usize,
    served: &[usize],
) -> Result<Vec<F::Elem>> {
    let l = channel.cols;
    if !served.contains(&k) {
        return Err(Error::InconsistentInputs(format!(
            "user {k} is not in the served set {served:?}"
        )));
    }
    if served.len() > l {
        return Err(Error::InconsistentInputs(format!(
            "{} served users exceed {l} antennas",
            served.len()
        )));
    }
    if let Some(&bad) = served.iter().find(|&&j| j >= channel.rows) {
        return Err(Error::DimensionMismatch(format!(
            "user {bad} outside channel with {} rows",
            channel.rows
        )));
    }
    let others: Vec<usize> = served.iter().copied().filter(|&j| j != k).collect();
    let candidates = if others.is_empty() {
        Matrix::identity(field, l).to_rows()
    } else {
        nullspace_basis(field, &channel.select_rows(&others))
    };
    let h_k = channel.row(k);
    let h_scale = h_k.iter().map(|&x| field.magnitude(x)).fold(0.0, f64::max);
    let best = candidates
        .into_iter()
        .map(|v| {
            let gain = field.dot(h_k, &v);
            let v_scale = v.iter().map(|&x| field.magnitude(x)).fold(0.0, f64::max);
            (v, gain, v_scale)
        })
        .filter(|(_, gain, v_scale)| !field.is_negligible(*gain, h_scale * v_scale))
        .max_by(|a, b| {
            let ra = field.magnitude(a.1) / a.2;
            let rb = field.magnitude(b.1) / b.2;
            ra.partial_cmp(&rb).unwrap_or(std::cmp::Ordering::Equal)
        });
    let (v, gain, _) = best.ok_or_else(|| {
        Error::DegenerateChannel(format!(
            "h_{k} lies in the span of the channels of users {others:?}"
        ))
    })?;
    let inv = field
        .inv(gain)
        .ok_or_else(|| Error::DegenerateChannel(format!("zero gain for user {k}")))?;
    Ok(v.into_iter().map(|x| field.mul(x, inv)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{ComplexField, PrimeField, RationalField};
    use num_complex::Complex64;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn gf() -> PrimeField {
        PrimeField::default()
    }

    fn random_matrix<F: Field>(f: &F, rows: usize, cols: usize, seed: u64) -> Matrix<F::Elem> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let data = (0..rows * cols).map(|_| f.random(&mut rng)).collect();
        Matrix::from_vec(rows, cols, data).unwrap()
    }

    #[test]
    fn rank_of_identity_and_zero() {
        let f = gf();
        assert_eq!(rank(&f, &Matrix::identity(&f, 3)), 3);
        assert_eq!(rank(&f, &Matrix::zeros(&f, 2, 4)), 0);
    }

    #[test]
    fn rank_of_dependent_rows() {
        let f = gf();
        let m = Matrix::from_rows(&[vec![1, 2, 3], vec![2, 4, 6], vec![0, 1, 1]]).unwrap();
        assert_eq!(rank(&f, &m), 2);
    }

    #[test]
    fn nullspace_of_identity_is_trivial() {
        let f = gf();
        assert!(nullspace_basis(&f, &Matrix::identity(&f, 2)).is_empty());
    }

    #[test]
    fn nullspace_of_all_ones_row_over_gf7() {
        let f = PrimeField::new(7).unwrap();
        let a = Matrix::from_rows(&[vec![1, 1]]).unwrap();
        let basis = nullspace_basis(&f, &a);
        assert_eq!(basis, vec![vec![6, 1]]);
    }

    #[test]
    fn nullspace_of_random_wide_matrix_is_annihilated() {
        let f = gf();
        let a = random_matrix(&f, 2, 3, 11);
        assert_eq!(rank(&f, &a), 2);
        let basis = nullspace_basis(&f, &a);
        assert_eq!(basis.len(), 1);
        assert!(mat_vec(&f, &a, &basis[0]).unwrap().iter().all(|&x| x == 0));
        assert!(basis[0].iter().any(|&x| x != 0));
    }

    #[test]
    fn solve_detects_inconsistency() {
        let f = RationalField;
        let a = Matrix::from_rows(&[vec![f.one(), f.one()], vec![f.one(), f.one()]]).unwrap();
        let b = [f.one(), f.from_i64(2)];
        assert_eq!(solve(&f, &a, &b).unwrap(), None);
    }

    #[test]
    fn inverse_round_trips() {
        let f = gf();
        let a = random_matrix(&f, 4, 4, 5);
        let inv = inverse(&f, &a).unwrap().unwrap();
        assert_eq!(mat_mul(&f, &a, &inv).unwrap(), Matrix::identity(&f, 4));
        let singular = Matrix::from_rows(&[vec![1, 2], vec![2, 4]]).unwrap();
        assert_eq!(inverse(&f, &singular).unwrap(), None);
    }

    #[test]
    fn zf_without_interferers_normalizes_gain() {
        let f = gf();
        let h = random_matrix(&f, 3, 3, 9);
        let w = zero_forcing_vector(&f, &h, 1, &[1]).unwrap();
        assert_eq!(f.dot(h.row(1), &w), 1);
    }

    #[test]
    fn zf_on_standard_basis_channel() {
        let f = gf();
        let h = Matrix::identity(&f, 2);
        // users are 0-based here: user 1 of the example is row 0
        let w = zero_forcing_vector(&f, &h, 0, &[0, 1]).unwrap();
        assert_eq!(w, vec![1, 0]);
    }

    #[test]
    fn zf_full_group_gf() {
        let f = gf();
        let h = random_matrix(&f, 3, 3, 21);
        assert_eq!(rank(&f, &h), 3);
        let w = zero_forcing_vector(&f, &h, 1, &[0, 1, 2]).unwrap();
        assert_eq!(f.dot(h.row(0), &w), 0);
        assert_eq!(f.dot(h.row(2), &w), 0);
        assert_eq!(f.dot(h.row(1), &w), 1);
    }

    #[test]
    fn zf_degenerate_channel() {
        let f = gf();
        let h = Matrix::from_rows(&[vec![1, 2], vec![2, 4]]).unwrap();
        assert!(matches!(
            zero_forcing_vector(&f, &h, 0, &[0, 1]),
            Err(Error::DegenerateChannel(_))
        ));
    }

    #[test]
    fn zf_complex_residuals() {
        let f = ComplexField::default();
        let h = random_matrix(&f, 4, 4, 17);
        let w = zero_forcing_vector(&f, &h, 2, &[0, 1, 2, 3]).unwrap();
        for j in [0, 1, 3] {
            assert!(f.dot(h.row(j), &w).norm() < 1e-9);
        }
        assert!((f.dot(h.row(2), &w) - Complex64::new(1.0, 0.0)).norm() < 1e-9);
    }

    #[test]
    fn complex_rank_uses_tolerance() {
        let f = ComplexField::default();
        let a = random_matrix(&f, 2, 3, 4);
        let mut rows = a.to_rows();
        let near: Vec<Complex64> = rows[0].iter().map(|&x| x * 2.0 + 1e-14).collect();
        rows.push(near);
        assert_eq!(rank(&f, &Matrix::from_rows(&rows).unwrap()), 2);
    }
}
