//! Structured matrices and dense primitives.
//!
//! Everything here works on real [`DenseMatrix`] values. Half-vectorization
//! uses column-wise lower-triangular ordering: for an `n x n` matrix the
//! entry `(i, j)` with `i >= j` lands at position
//! `j*n - j*(j+1)/2 + i` (zero-based). Every other module relies on that
//! ordering, so use [`vech_index`] rather than recomputing it.
//!
//! The Kronecker images `(A ⊗ A) vec(X)` are computed as `vec(A X Aᵀ)` or as
//! sums of outer products of columns; the `M² x N²` product itself is never
//! formed outside of tests.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};

pub type DenseMatrix = DMatrix<f64>;
pub type DenseVector = DVector<f64>;

/// Default relative eigenvalue floor for [`inv_sqrt_psd`].
pub const DEFAULT_REL_FLOOR: f64 = 1e-12;

/// Length of `vech` of an `n x n` matrix.
#[inline]
pub const fn vech_len(n: usize) -> usize {
    n * (n + 1) / 2
}

/// Position of entry `(i, j)`, `i >= j`, inside `vech` of an `n x n` matrix.
#[inline]
pub fn vech_index(n: usize, i: usize, j: usize) -> usize {
    debug_assert!(i >= j && i < n);
    j * n - j * (j + 1) / 2 + i
}

/// Inverse of [`vech_index`]: returns `(i, j)` with `i >= j`.
pub fn vech_position(n: usize, mut k: usize) -> (usize, usize) {
    for j in 0..n {
        let col_len = n - j;
        if k < col_len {
            return (j + k, j);
        }
        k -= col_len;
    }
    panic!("vech position out of range");
}

/// Positions of the diagonal entries inside `vech` of an `n x n` matrix
/// (`0, n, n + (n-1), ...`).
pub fn vech_diagonal_positions(n: usize) -> Vec<usize> {
    (0..n).map(|j| vech_index(n, j, j)).collect()
}

/// Column-major vectorization.
pub fn vec(a: &DenseMatrix) -> DenseVector {
    DenseVector::from_column_slice(a.as_slice())
}

/// Reshape a column-major vector of length `rows * cols` back into a matrix.
pub fn unvec(v: &DenseVector, rows: usize, cols: usize) -> Result<DenseMatrix> {
    if v.len() != rows * cols {
        return Err(Error::Dimension(format!(
            "cannot reshape length {} into {rows}x{cols}",
            v.len()
        )));
    }
    Ok(DenseMatrix::from_column_slice(rows, cols, v.as_slice()))
}

/// Half-vectorization: column-wise stacking of the entries on and below the
/// main diagonal. Only the lower triangle of `a` is read.
pub fn vech(a: &DenseMatrix) -> Result<DenseVector> {
    let n = a.nrows();
    if a.ncols() != n {
        return Err(Error::Dimension(format!(
            "vech needs a square matrix, got {}x{}",
            a.nrows(),
            a.ncols()
        )));
    }
    let mut out = DenseVector::zeros(vech_len(n));
    let mut k = 0;
    for j in 0..n {
        for i in j..n {
            out[k] = a[(i, j)];
            k += 1;
        }
    }
    Ok(out)
}

/// Rebuild the symmetric matrix whose `vech` is `v`.
pub fn unvech(v: &DenseVector) -> Result<DenseMatrix> {
    let len = v.len();
    // n(n+1)/2 = len
    let n = ((((8 * len + 1) as f64).sqrt() - 1.0) / 2.0).round() as usize;
    if vech_len(n) != len || n == 0 {
        return Err(Error::Dimension(format!(
            "length {len} is not a triangular number"
        )));
    }
    let mut a = DenseMatrix::zeros(n, n);
    let mut k = 0;
    for j in 0..n {
        for i in j..n {
            a[(i, j)] = v[k];
            a[(j, i)] = v[k];
            k += 1;
        }
    }
    Ok(a)
}

/// Elimination matrix `H_n`, mapping `vec(A)` to `vech(A)`.
#[derive(Debug, Clone, PartialEq)]
pub struct EliminationMatrix {
    n: usize,
    matrix: DenseMatrix,
}

impl EliminationMatrix {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn as_dense(&self) -> &DenseMatrix {
        &self.matrix
    }

    /// Equivalent to `H_n * v` without the dense multiply.
    pub fn apply(&self, v: &DenseVector) -> Result<DenseVector> {
        let a = unvec(v, self.n, self.n)?;
        vech(&a)
    }
}

/// Duplication matrix `G_n`, mapping `vech(A)` to `vec(A)` for symmetric `A`.
#[derive(Debug, Clone, PartialEq)]
pub struct DuplicationMatrix {
    n: usize,
    matrix: DenseMatrix,
}

impl DuplicationMatrix {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn as_dense(&self) -> &DenseMatrix {
        &self.matrix
    }

    /// Equivalent to `G_n * v` without the dense multiply.
    pub fn apply(&self, v: &DenseVector) -> Result<DenseVector> {
        Ok(vec(&unvech(v)?))
    }
}

pub fn elimination_matrix(n: usize) -> Result<EliminationMatrix> {
    if n == 0 {
        return Err(Error::Domain("elimination matrix needs n >= 1".into()));
    }
    let mut h = DenseMatrix::zeros(vech_len(n), n * n);
    for j in 0..n {
        for i in j..n {
            h[(vech_index(n, i, j), j * n + i)] = 1.0;
        }
    }
    Ok(EliminationMatrix { n, matrix: h })
}

pub fn duplication_matrix(n: usize) -> Result<DuplicationMatrix> {
    if n == 0 {
        return Err(Error::Domain("duplication matrix needs n >= 1".into()));
    }
    let mut g = DenseMatrix::zeros(n * n, vech_len(n));
    for j in 0..n {
        for i in j..n {
            let k = vech_index(n, i, j);
            g[(j * n + i, k)] = 1.0;
            g[(i * n + j, k)] = 1.0;
        }
    }
    Ok(DuplicationMatrix { n, matrix: g })
}

/// `(A ⊗ A) vec(X)`, evaluated as `vec(A X Aᵀ)`.
pub fn kron_apply(a: &DenseMatrix, x: &DenseMatrix) -> Result<DenseVector> {
    if x.nrows() != a.ncols() || x.ncols() != a.ncols() {
        return Err(Error::Dimension(format!(
            "kron_apply: A is {}x{}, X is {}x{}",
            a.nrows(),
            a.ncols(),
            x.nrows(),
            x.ncols()
        )));
    }
    Ok(vec(&(a * x * a.transpose())))
}

/// `Σᵢ aᵢ ⊗ aᵢ = (A ⊗ A) vec(I)`, i.e. `vec(A Aᵀ)`.
pub fn kron_image_identity(a: &DenseMatrix) -> DenseVector {
    vec(&(a * a.transpose()))
}

/// `Σ_{i>lag} (a_{i-lag} ⊗ aᵢ + aᵢ ⊗ a_{i-lag}) = (A ⊗ A) vec(Λ)` where `Λ`
/// has ones exactly at `|i - j| = lag`.
pub fn kron_image_lambda(a: &DenseMatrix, lag: usize) -> Result<DenseVector> {
    let n = a.ncols();
    if lag == 0 || lag >= n {
        return Err(Error::Domain(format!(
            "lag must satisfy 1 <= lag < {n}, got {lag}"
        )));
    }
    let tail = a.columns(lag, n - lag);
    let head = a.columns(0, n - lag);
    let p = tail * head.transpose();
    Ok(vec(&(&p + p.transpose())))
}

/// `Λ` of size `n`: ones at `|i - j| = lag`, zeros elsewhere.
pub fn lag_matrix(n: usize, lag: usize) -> DenseMatrix {
    DenseMatrix::from_fn(n, n, |i, j| if i.abs_diff(j) == lag { 1.0 } else { 0.0 })
}

/// Down-shift and up-shift matrices.
#[derive(Debug, Clone, PartialEq)]
pub struct ShiftMatrixPair {
    /// `[J_d]_{i,j} = 1` iff `i = j + 1`.
    pub down: DenseMatrix,
    /// `[J_u]_{i,j} = 1` iff `i + 1 = j`.
    pub up: DenseMatrix,
}

impl ShiftMatrixPair {
    pub fn n(&self) -> usize {
        self.down.nrows()
    }

    /// `J_d^k`; zero for `k >= n`.
    pub fn down_pow(&self, k: usize) -> DenseMatrix {
        shift_power(self.n(), k as isize)
    }

    /// `J_u^k`; zero for `k >= n`.
    pub fn up_pow(&self, k: usize) -> DenseMatrix {
        shift_power(self.n(), -(k as isize))
    }
}

pub fn shift_matrices(n: usize) -> ShiftMatrixPair {
    ShiftMatrixPair {
        down: shift_power(n, 1),
        up: shift_power(n, -1),
    }
}

/// Ones on the `k`-th subdiagonal (`k > 0`) or `|k|`-th superdiagonal.
fn shift_power(n: usize, k: isize) -> DenseMatrix {
    DenseMatrix::from_fn(n, n, |i, j| {
        if i as isize - j as isize == k {
            1.0
        } else {
            0.0
        }
    })
}

/// Pseudo-inverse square root of a symmetric PSD matrix.
///
/// Eigenvalues below `rel_floor * λ_max` are treated as zero, so `Γ S Γᵀ`
/// is the identity on the numerically nonzero eigenspace. The result is
/// symmetric.
pub fn inv_sqrt_psd(s: &DenseMatrix, rel_floor: f64) -> Result<DenseMatrix> {
    let k = s.nrows();
    if s.ncols() != k || k == 0 {
        return Err(Error::Dimension(format!(
            "inv_sqrt_psd needs a nonempty square matrix, got {}x{}",
            s.nrows(),
            s.ncols()
        )));
    }
    let sym = (s + s.transpose()) * 0.5;
    let eig = SymmetricEigen::new(sym);
    let max_eig = eig.eigenvalues.max();
    let min_eig = eig.eigenvalues.min();
    if max_eig <= 0.0 {
        return Err(Error::Degenerate(
            "no positive eigenvalues in whitening matrix".into(),
        ));
    }
    let floor = rel_floor * max_eig;
    if min_eig < -floor {
        return Err(Error::NotPsd { min_eig, max_eig });
    }
    let scaled: Vec<f64> = eig
        .eigenvalues
        .iter()
        .map(|&l| if l > floor { l.sqrt().recip() } else { 0.0 })
        .collect();
    let q = &eig.eigenvectors;
    let mut qs = q.clone();
    for (mut col, &w) in qs.column_iter_mut().zip(&scaled) {
        col *= w;
    }
    Ok(&qs * q.transpose())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use nalgebra::dmatrix;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_matrix(rows: usize, cols: usize, seed: u64) -> DenseMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        DenseMatrix::from_fn(rows, cols, |_, _| rng.random_range(-1.0..1.0))
    }

    fn random_symmetric(n: usize, seed: u64) -> DenseMatrix {
        let a = random_matrix(n, n, seed);
        &a + a.transpose()
    }

    #[test]
    fn vech_small_cases() {
        let a = dmatrix![1.0, 2.0; 2.0, 3.0];
        assert_eq!(vech(&a).unwrap().as_slice(), &[1.0, 2.0, 3.0]);
        let i3 = DenseMatrix::identity(3, 3);
        assert_eq!(
            vech(&i3).unwrap().as_slice(),
            &[1.0, 0.0, 0.0, 1.0, 0.0, 1.0]
        );
    }

    #[test]
    fn vech_rejects_non_square() {
        assert!(matches!(
            vech(&DenseMatrix::zeros(2, 3)),
            Err(Error::Dimension(_))
        ));
    }

    #[test]
    fn vech_round_trip_5x5() {
        let s = random_symmetric(5, 11);
        assert_eq!(unvech(&vech(&s).unwrap()).unwrap(), s);
    }

    #[test]
    fn vech_index_agrees_with_position() {
        for n in 1..9 {
            for k in 0..vech_len(n) {
                let (i, j) = vech_position(n, k);
                assert_eq!(vech_index(n, i, j), k);
            }
        }
        assert_eq!(vech_diagonal_positions(4), vec![0, 4, 7, 9]);
    }

    #[test]
    fn elimination_small() {
        let h2 = elimination_matrix(2).unwrap();
        let expected = dmatrix![
            1.0, 0.0, 0.0, 0.0;
            0.0, 1.0, 0.0, 0.0;
            0.0, 0.0, 0.0, 1.0
        ];
        assert_eq!(h2.as_dense(), &expected);
        assert_eq!(elimination_matrix(1).unwrap().as_dense(), &dmatrix![1.0]);
        assert!(elimination_matrix(0).is_err());
    }

    #[test]
    fn elimination_extracts_vech() {
        let a = random_symmetric(4, 3);
        let h = elimination_matrix(4).unwrap();
        let direct = vech(&a).unwrap();
        assert_eq!(h.as_dense() * vec(&a), direct);
        assert_eq!(h.apply(&vec(&a)).unwrap(), direct);
    }

    #[test]
    fn duplication_small() {
        let g2 = duplication_matrix(2).unwrap();
        let out = g2.as_dense() * DenseVector::from_vec(vec![5.0, 6.0, 7.0]);
        assert_eq!(out.as_slice(), &[5.0, 6.0, 6.0, 7.0]);
        assert_eq!(duplication_matrix(1).unwrap().as_dense(), &dmatrix![1.0]);
        assert!(duplication_matrix(0).is_err());
    }

    #[test]
    fn duplication_column_sums() {
        let n = 6;
        let g = duplication_matrix(n).unwrap();
        for (k, col) in g.as_dense().column_iter().enumerate() {
            let (i, j) = vech_position(n, k);
            let expected = if i == j { 1.0 } else { 2.0 };
            assert_eq!(col.sum(), expected);
        }
        for row in g.as_dense().row_iter() {
            assert_eq!(row.sum(), 1.0);
        }
    }

    #[test]
    fn elimination_times_duplication_is_identity() {
        for n in 1..=64 {
            let h = elimination_matrix(n).unwrap();
            let g = duplication_matrix(n).unwrap();
            let prod = h.as_dense() * g.as_dense();
            assert_eq!(
                prod,
                DenseMatrix::identity(vech_len(n), vech_len(n)),
                "n={n}"
            );
        }
    }

    #[test]
    fn kron_identity_small() {
        let i2 = DenseMatrix::identity(2, 2);
        assert_eq!(kron_image_identity(&i2).as_slice(), &[1.0, 0.0, 0.0, 1.0]);
        let row = dmatrix![1.0, 1.0];
        assert_eq!(kron_image_identity(&row).as_slice(), &[2.0]);
    }

    #[test]
    fn kron_identity_matches_dense() {
        let a = random_matrix(3, 6, 5);
        let dense = a.kronecker(&a) * vec(&DenseMatrix::identity(6, 6));
        assert_relative_eq!(kron_image_identity(&a), dense, max_relative = 1e-12);
    }

    #[test]
    fn kron_lambda_small() {
        let i3 = DenseMatrix::identity(3, 3);
        let lag1 = kron_image_lambda(&i3, 1).unwrap();
        let expected = dmatrix![0.0, 1.0, 0.0; 1.0, 0.0, 1.0; 0.0, 1.0, 0.0];
        assert_eq!(lag1, vec(&expected));
        let lag2 = kron_image_lambda(&i3, 2).unwrap();
        let expected = dmatrix![0.0, 0.0, 1.0; 0.0, 0.0, 0.0; 1.0, 0.0, 0.0];
        assert_eq!(lag2, vec(&expected));
        assert!(kron_image_lambda(&i3, 3).is_err());
        assert!(kron_image_lambda(&i3, 0).is_err());
    }

    #[test]
    fn kron_lambda_matches_dense() {
        let a = random_matrix(4, 8, 9);
        let dense = a.kronecker(&a) * vec(&lag_matrix(8, 5));
        assert_relative_eq!(
            kron_image_lambda(&a, 5).unwrap(),
            dense,
            max_relative = 1e-12
        );
    }

    #[test]
    fn kron_apply_matches_dense() {
        let a = random_matrix(5, 7, 2);
        let x = random_matrix(7, 7, 3);
        let dense = a.kronecker(&a) * vec(&x);
        assert_relative_eq!(kron_apply(&a, &x).unwrap(), dense, max_relative = 1e-12);
    }

    #[test]
    fn inv_sqrt_scalar_and_diagonal() {
        let s = DenseMatrix::identity(3, 3) * 4.0;
        let g = inv_sqrt_psd(&s, DEFAULT_REL_FLOOR).unwrap();
        assert_relative_eq!(g, DenseMatrix::identity(3, 3) * 0.5, epsilon = 1e-14);

        let s = DenseMatrix::from_diagonal(&DenseVector::from_vec(vec![1.0, 9.0]));
        let g = inv_sqrt_psd(&s, DEFAULT_REL_FLOOR).unwrap();
        let expected = DenseMatrix::from_diagonal(&DenseVector::from_vec(vec![1.0, 1.0 / 3.0]));
        assert_relative_eq!(g, expected, epsilon = 1e-14);
    }

    #[test]
    fn inv_sqrt_known_spectrum() {
        let n = 12;
        let q = random_matrix(n, n, 77).qr().q();
        let spectrum = DenseVector::from_fn(n, |i, _| 0.5 + i as f64);
        let s = &q * DenseMatrix::from_diagonal(&spectrum) * q.transpose();
        let g = inv_sqrt_psd(&s, DEFAULT_REL_FLOOR).unwrap();
        let recon = &g * &s * g.transpose();
        assert_relative_eq!(recon, DenseMatrix::identity(n, n), epsilon = 1e-10);
    }

    #[test]
    fn inv_sqrt_rejects_indefinite_and_zero() {
        let s = DenseMatrix::from_diagonal(&DenseVector::from_vec(vec![1.0, -1.0]));
        assert!(matches!(
            inv_sqrt_psd(&s, DEFAULT_REL_FLOOR),
            Err(Error::NotPsd { .. })
        ));
        assert!(matches!(
            inv_sqrt_psd(&DenseMatrix::zeros(3, 3), DEFAULT_REL_FLOOR),
            Err(Error::Degenerate(_))
        ));
    }

    #[test]
    fn inv_sqrt_rank_deficient_is_pseudo_inverse() {
        let v = DenseVector::from_vec(vec![1.0, 2.0, 2.0]);
        let s = &v * v.transpose();
        let g = inv_sqrt_psd(&s, DEFAULT_REL_FLOOR).unwrap();
        let recon = &g * &s * g.transpose();
        let u = &v / v.norm();
        assert_relative_eq!(recon, &u * u.transpose(), epsilon = 1e-10);
    }

    #[test]
    fn shift_matrices_definition() {
        let p2 = shift_matrices(2);
        assert_eq!(p2.down, dmatrix![0.0, 0.0; 1.0, 0.0]);

        let p3 = shift_matrices(3);
        let x = DenseVector::from_vec(vec![1.0, 2.0, 3.0]);
        assert_eq!((&p3.down * x).as_slice(), &[0.0, 1.0, 2.0]);

        let p5 = shift_matrices(5);
        assert_eq!(p5.down, p5.up.transpose());
        assert_eq!(p5.down_pow(5), DenseMatrix::zeros(5, 5));
        assert_eq!(p5.down_pow(2), &p5.down * &p5.down);
        assert_eq!(p5.up_pow(3), &p5.up * &p5.up * &p5.up);
        assert_eq!(p5.down_pow(0), DenseMatrix::identity(5, 5));
    }

    #[test]
    fn shifted_lag_matrix_matches_index_oracle() {
        let (n, lag, l) = (9, 4, 3);
        let shifts = shift_matrices(n);
        let base = lag_matrix(n, lag) + DenseMatrix::identity(n, n);
        for i in 0..=l {
            for j in 0..=l {
                let got = shifts.down_pow(i) * &base * shifts.up_pow(j);
                // (J_d^i X J_u^j)[p,q] = X[p-i, q-j] when both indices exist.
                let oracle = DenseMatrix::from_fn(n, n, |p, q| {
                    if p >= i && q >= j {
                        base[(p - i, q - j)]
                    } else {
                        0.0
                    }
                });
                assert_eq!(got, oracle, "i={i} j={j}");
            }
        }
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn symmetric_round_trips(n in 1usize..10, seed in any::<u64>()) {
                let s = random_symmetric(n, seed);
                let v = vech(&s).unwrap();
                prop_assert_eq!(unvech(&v).unwrap(), s.clone());
                let g = duplication_matrix(n).unwrap();
                prop_assert_eq!(g.as_dense() * &v, vec(&s));
            }

            #[test]
            fn kron_images_match_dense(m in 1usize..8, n in 2usize..40, seed in any::<u64>()) {
                let a = random_matrix(m, n, seed);
                let kron = a.kronecker(&a);
                let dense_i = &kron * vec(&DenseMatrix::identity(n, n));
                let got = kron_image_identity(&a);
                let scale = dense_i.amax().max(1.0);
                prop_assert!((got - dense_i).amax() <= 1e-12 * scale);

                let lag = 1 + (seed as usize) % (n - 1);
                let dense_l = &kron * vec(&lag_matrix(n, lag));
                let got = kron_image_lambda(&a, lag).unwrap();
                let scale = dense_l.amax().max(1.0);
                prop_assert!((got - dense_l).amax() <= 1e-12 * scale);
            }
        }
    }
}
