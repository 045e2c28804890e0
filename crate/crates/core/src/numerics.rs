//! Dense complex-matrix primitives used by the transmission chains: the
//! unitary IDFT basis, circulant construction and diagonalization,
//! linear-convolution (Toeplitz) matrices, and QR/SVD factorization wrappers.
//!
//! Block lengths stay at desk scale (a few hundred at most), so everything is
//! dense arithmetic; there is deliberately no FFT fast path.

use std::f64::consts::TAU;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Dense complex matrix in `f64` precision.
pub type CMat = DMatrix<Complex64>;
/// Dense complex column vector in `f64` precision.
pub type CVec = DVector<Complex64>;

pub(crate) fn ensure_finite<I>(entries: I, what: &str) -> Result<()>
where
    I: IntoIterator<Item = Complex64>,
{
    for (i, z) in entries.into_iter().enumerate() {
        if !z.re.is_finite() || !z.im.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "{what}: entry {i} is not finite ({z})"
            )));
        }
    }
    Ok(())
}

/// The `n`-point unitary IDFT basis.
///
/// Column `k` (columns are indexed 1-based everywhere in this crate) holds
/// the entries `ω_{k-1}^m / √n` for `m = 0..n-1`, where `ω_j = exp(-2πij/n)`.
/// The columns are the shared eigenvectors of every `n×n` circulant matrix,
/// are unit-norm, and are pairwise orthogonal.
#[derive(Debug, Clone)]
pub struct IdftMatrix {
    n: usize,
    mat: CMat,
}

impl IdftMatrix {
    pub fn size(&self) -> usize {
        self.n
    }

    pub fn matrix(&self) -> &CMat {
        &self.mat
    }

    /// Column `k`, 1-based (`k = 1` is the all-ones column).
    pub fn column(&self, k: usize) -> Result<CVec> {
        self.check_index(k)?;
        Ok(self.mat.column(k - 1).into_owned())
    }

    /// Horizontal stack of the 1-based columns listed in `carriers`.
    pub fn columns(&self, carriers: &[usize]) -> Result<CMat> {
        for &k in carriers {
            self.check_index(k)?;
        }
        let mut out = CMat::zeros(self.n, carriers.len());
        for (j, &k) in carriers.iter().enumerate() {
            out.set_column(j, &self.mat.column(k - 1));
        }
        Ok(out)
    }

    fn check_index(&self, k: usize) -> Result<()> {
        if k == 0 || k > self.n {
            return Err(Error::InvalidArgument(format!(
                "column index {k} outside 1..={}",
                self.n
            )));
        }
        Ok(())
    }
}

/// Builds the `n`-point unitary IDFT basis.
pub fn idft_matrix(n: usize) -> Result<IdftMatrix> {
    if n == 0 {
        return Err(Error::InvalidArgument("IDFT size must be at least 1".into()));
    }
    let roots: Vec<Complex64> = (0..n)
        .map(|m| Complex64::from_polar(1.0, -TAU * m as f64 / n as f64))
        .collect();
    let scale = (n as f64).sqrt().recip();
    let mat = CMat::from_fn(n, n, |m, k0| roots[(m * k0) % n] * scale);
    Ok(IdftMatrix { n, mat })
}

/// Builds the circulant matrix whose first column is `c`; column `j`
/// (0-based) is `c` cyclically shifted down by `j`.
pub fn circulant_from_first_column(c: &[Complex64]) -> Result<CMat> {
    let n = c.len();
    if n == 0 {
        return Err(Error::InvalidArgument(
            "circulant first column must be non-empty".into(),
        ));
    }
    ensure_finite(c.iter().copied(), "circulant first column")?;
    Ok(CMat::from_fn(n, n, |r, j| c[(r + n - j) % n]))
}

/// Eigenvalues `λ_1..λ_n` of the circulant built from first column `c`,
/// ordered so that `circulant_from_first_column(c) = F·diag(λ)·F^H` with
/// `F = idft_matrix(n)`; that reconstruction identity is the contract.
pub fn circulant_eigenvalues(c: &[Complex64]) -> Result<Vec<Complex64>> {
    let n = c.len();
    if n == 0 {
        return Err(Error::InvalidArgument(
            "circulant first column must be non-empty".into(),
        ));
    }
    ensure_finite(c.iter().copied(), "circulant first column")?;
    let conj_roots: Vec<Complex64> = (0..n)
        .map(|m| Complex64::from_polar(1.0, TAU * m as f64 / n as f64))
        .collect();
    Ok((0..n)
        .map(|k0| {
            c.iter()
                .enumerate()
                .map(|(t, &ct)| ct * conj_roots[(k0 * t) % n])
                .sum()
        })
        .collect())
}

/// Linear convolution `x * h`, output length `x.len() + h.len() - 1`.
pub fn convolve(x: &[Complex64], h: &[Complex64]) -> Vec<Complex64> {
    let mut out = vec![Complex64::ZERO; x.len() + h.len() - 1];
    for (s, &xs) in x.iter().enumerate() {
        for (l, &hl) in h.iter().enumerate() {
            out[s + l] += xs * hl;
        }
    }
    out
}

/// The `(n + L - 1) × n` linear-convolution matrix of an `L`-tap impulse
/// response `h`: entry `(r, c)` is `h[r - c]` (0-based) inside the band and
/// zero elsewhere, so that `toeplitz_conv_matrix(h, n) · x = convolve(x, h)`.
pub fn toeplitz_conv_matrix(h: &[Complex64], input_len: usize) -> Result<CMat> {
    let l = h.len();
    if l == 0 {
        return Err(Error::InvalidArgument("impulse response is empty".into()));
    }
    if input_len == 0 {
        return Err(Error::InvalidArgument("input length must be at least 1".into()));
    }
    ensure_finite(h.iter().copied(), "impulse response")?;
    Ok(CMat::from_fn(input_len + l - 1, input_len, |r, c| {
        if r >= c && r - c < l {
            h[r - c]
        } else {
            Complex64::ZERO
        }
    }))
}

/// QR factor pair with `a = q · r`, `q` unitary and `r` upper-triangular.
#[derive(Debug, Clone)]
pub struct QrFactors {
    pub q: CMat,
    pub r: CMat,
}

impl QrFactors {
    /// Magnitudes of the diagonal of `r`, one per stream.
    pub fn diagonal_magnitudes(&self) -> Vec<f64> {
        (0..self.r.nrows().min(self.r.ncols()))
            .map(|i| self.r[(i, i)].norm())
            .collect()
    }
}

/// QR factorization of a square complex matrix. Rank-deficient inputs are
/// not an error; they surface as (near-)zero diagonal entries of `r`, which
/// downstream rate formulas treat as zero-rate streams.
pub fn qr_decompose(a: &CMat) -> Result<QrFactors> {
    check_square(a)?;
    let (q, r) = a.clone().qr().unpack();
    Ok(QrFactors { q, r })
}

/// Singular value decomposition `a = u · diag(σ) · v^H` with `σ` sorted
/// non-increasing.
#[derive(Debug, Clone)]
pub struct SvdFactors {
    pub u: CMat,
    pub singular_values: Vec<f64>,
    pub v: CMat,
}

/// SVD of a square complex matrix.
pub fn svd(a: &CMat) -> Result<SvdFactors> {
    check_square(a)?;
    let n = a.nrows();
    if n == 0 {
        return Ok(SvdFactors {
            u: CMat::zeros(0, 0),
            singular_values: Vec::new(),
            v: CMat::zeros(0, 0),
        });
    }
    let f = a.clone().svd(true, true);
    let u0 = f.u.expect("svd requested u");
    let vt = f.v_t.expect("svd requested v_t");
    let sigma: Vec<f64> = f.singular_values.iter().copied().collect();

    // Emit in non-increasing order regardless of backend ordering.
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| sigma[j].partial_cmp(&sigma[i]).expect("finite singular values"));
    let mut u = CMat::zeros(n, n);
    let mut v = CMat::zeros(n, n);
    let v0 = vt.adjoint();
    let mut singular_values = Vec::with_capacity(n);
    for (dst, &src) in order.iter().enumerate() {
        u.set_column(dst, &u0.column(src));
        v.set_column(dst, &v0.column(src));
        singular_values.push(sigma[src]);
    }
    Ok(SvdFactors {
        u,
        singular_values,
        v,
    })
}

fn check_square(a: &CMat) -> Result<()> {
    if a.nrows() != a.ncols() {
        return Err(Error::InvalidArgument(format!(
            "matrix must be square, got {}x{}",
            a.nrows(),
            a.ncols()
        )));
    }
    ensure_finite(a.iter().copied(), "matrix")?;
    Ok(())
}
