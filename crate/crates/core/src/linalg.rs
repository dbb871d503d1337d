//! Dense vectors and row-major matrices in 64-bit floats.
//!
//! Batched network passes go through [`gemm`], which hands the inner kernel to
//! `matrixmultiply`. Everything else is plain loops over small matrices.

use std::ops::{Deref, DerefMut, Index, IndexMut};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{ensure_dim, Error, Result};

/// A dense column vector.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct RealVector(Vec<f64>);

impl RealVector {
    pub fn new(data: Vec<f64>) -> Self {
        Self(data)
    }

    pub fn zeros(dim: usize) -> Self {
        Self(vec![0.0; dim])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|v| v.is_finite())
    }

    pub fn dot(&self, other: &[f64]) -> f64 {
        dot(&self.0, other)
    }

    pub fn norm(&self) -> f64 {
        self.dot(&self.0).sqrt()
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self(self.0.iter().map(|v| c * v).collect())
    }

    /// `self += c * other`
    pub fn axpy(&mut self, c: f64, other: &[f64]) {
        axpy(&mut self.0, c, other);
    }
}

impl Deref for RealVector {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl DerefMut for RealVector {
    fn deref_mut(&mut self) -> &mut [f64] {
        &mut self.0
    }
}

impl From<Vec<f64>> for RealVector {
    fn from(v: Vec<f64>) -> Self {
        Self(v)
    }
}

impl From<&[f64]> for RealVector {
    fn from(v: &[f64]) -> Self {
        Self(v.to_vec())
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn axpy(y: &mut [f64], c: f64, x: &[f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += c * xi;
    }
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// A dense matrix stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct RealMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl RealMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        ensure_dim("matrix data", rows * cols, data.len())?;
        Ok(Self { rows, cols, data })
    }

    /// Panics when rows are ragged; intended for literals.
    pub fn from_rows(rows: &[&[f64]]) -> Self {
        let cols = rows.first().map_or(0, |r| r.len());
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            assert_eq!(r.len(), cols, "ragged matrix literal");
            data.extend_from_slice(r);
        }
        Self {
            rows: rows.len(),
            cols,
            data,
        }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    pub fn diagonal(diag: &[f64]) -> Self {
        let mut m = Self::zeros(diag.len(), diag.len());
        for (i, d) in diag.iter().enumerate() {
            m[(i, i)] = *d;
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// Largest absolute entry.
    pub fn max_norm(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|v| c * v).collect(),
        }
    }

    /// `self * x`
    pub fn matvec(&self, x: &[f64]) -> Result<RealVector> {
        ensure_dim("matvec", self.cols, x.len())?;
        Ok(RealVector(
            (0..self.rows).map(|i| dot(self.row(i), x)).collect(),
        ))
    }

    /// `selfᵀ * x`
    pub fn matvec_transposed(&self, x: &[f64]) -> Result<RealVector> {
        ensure_dim("matvec_transposed", self.rows, x.len())?;
        let mut out = vec![0.0; self.cols];
        for (i, xi) in x.iter().enumerate() {
            axpy(&mut out, *xi, self.row(i));
        }
        Ok(RealVector(out))
    }

    pub fn matmul(&self, other: &RealMatrix) -> Result<RealMatrix> {
        ensure_dim("matmul", self.cols, other.rows)?;
        let mut out = RealMatrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a != 0.0 {
                    axpy(out.row_mut(i), a, other.row(k));
                }
            }
        }
        Ok(out)
    }

    pub fn add(&self, other: &RealMatrix) -> Result<RealMatrix> {
        ensure_dim("matrix add rows", self.rows, other.rows)?;
        ensure_dim("matrix add cols", self.cols, other.cols)?;
        Ok(Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect(),
        })
    }
}

impl Index<(usize, usize)> for RealMatrix {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for RealMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.cols + j]
    }
}

/// Whether an operand of [`gemm`] is used as stored or transposed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Op {
    N,
    T,
}

/// `c = alpha * op(a) * op(b) + beta * c`.
pub fn gemm(alpha: f64, a: &RealMatrix, op_a: Op, b: &RealMatrix, op_b: Op, beta: f64, c: &mut RealMatrix) -> Result<()> {
    let (m, k, rsa, csa) = match op_a {
        Op::N => (a.rows, a.cols, a.cols as isize, 1),
        Op::T => (a.cols, a.rows, 1, a.cols as isize),
    };
    let (kb, n, rsb, csb) = match op_b {
        Op::N => (b.rows, b.cols, b.cols as isize, 1),
        Op::T => (b.cols, b.rows, 1, b.cols as isize),
    };
    ensure_dim("gemm inner", k, kb)?;
    ensure_dim("gemm rows", m, c.rows)?;
    ensure_dim("gemm cols", n, c.cols)?;
    if m == 0 || n == 0 {
        return Ok(());
    }
    // SAFETY: dimensions and strides above describe the three buffers exactly.
    unsafe {
        matrixmultiply::dgemm(
            m,
            k,
            n,
            alpha,
            a.data.as_ptr(),
            rsa,
            csa,
            b.data.as_ptr(),
            rsb,
            csb,
            beta,
            c.data.as_mut_ptr(),
            c.cols as isize,
            1,
        );
    }
    Ok(())
}

/// Result of a power-iteration estimate of the spectral radius.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralEstimate {
    pub radius: f64,
    /// False when the iteration budget ran out before the estimate settled.
    pub converged: bool,
}

const SPECTRAL_RESTARTS: usize = 3;
const SPECTRAL_SEED: u64 = 0x5eed_0f_5bec;

/// Dominant eigenvalue magnitude by power iteration with three random restarts.
///
/// Each restart iterates a two-column block (orthonormalized every step) and
/// reads the eigenvalues of the 2×2 Rayleigh–Ritz projection, so a dominant
/// real eigenvalue, a `±λ` pair and a complex-conjugate pair all settle.
/// Start vectors come from a fixed seed, which makes the estimate a pure
/// function of the matrix.
pub fn spectral_radius(m: &RealMatrix, iters: usize, tol: f64) -> Result<SpectralEstimate> {
    if !m.is_square() {
        return Err(Error::NotSquare {
            rows: m.rows,
            cols: m.cols,
        });
    }
    let n = m.rows;
    if n <= 1 {
        return Ok(SpectralEstimate {
            radius: m.data.first().map_or(0.0, |v| v.abs()),
            converged: true,
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(SPECTRAL_SEED);
    let mut best = SpectralEstimate {
        radius: 0.0,
        converged: true,
    };
    for _ in 0..SPECTRAL_RESTARTS {
        let mut q1: Vec<f64> = (0..n).map(|_| StandardNormal.sample(&mut rng)).collect();
        let mut q2: Vec<f64> = (0..n).map(|_| StandardNormal.sample(&mut rng)).collect();
        orthonormalize_pair(&mut q1, &mut q2, &mut rng);
        let mut estimate = f64::NAN;
        let mut converged = false;
        for _ in 0..iters.max(1) {
            let mut y1 = m.matvec(&q1)?.into_inner();
            let mut y2 = m.matvec(&q2)?.into_inner();
            let h = [[dot(&q1, &y1), dot(&q1, &y2)], [dot(&q2, &y1), dot(&q2, &y2)]];
            let next = ritz_radius(h);
            if !next.is_finite() {
                estimate = f64::INFINITY;
                break;
            }
            let settled = (next - estimate).abs() <= tol * next.max(f64::MIN_POSITIVE);
            estimate = next;
            if settled || (norm(&y1) == 0.0 && norm(&y2) == 0.0) {
                converged = true;
                break;
            }
            orthonormalize_pair(&mut y1, &mut y2, &mut rng);
            q1 = y1;
            q2 = y2;
        }
        best.radius = best.radius.max(estimate);
        best.converged &= converged;
    }
    Ok(best)
}

/// Largest eigenvalue modulus of a real 2×2 matrix.
fn ritz_radius(h: [[f64; 2]; 2]) -> f64 {
    let half_trace = 0.5 * (h[0][0] + h[1][1]);
    let det = h[0][0] * h[1][1] - h[0][1] * h[1][0];
    let disc = half_trace * half_trace - det;
    if disc >= 0.0 {
        half_trace.abs() + disc.sqrt()
    } else {
        det.sqrt()
    }
}

/// Gram–Schmidt on two columns; a column that collapses is replaced by a
/// fresh random direction so the block always spans two dimensions.
fn orthonormalize_pair(a: &mut Vec<f64>, b: &mut Vec<f64>, rng: &mut ChaCha8Rng) {
    // Collapse is judged against the block's scale; a fresh random column is
    // O(1), so after a replacement the floor drops to match it.
    let scale = norm(a).max(norm(b));
    let mut floor = 1e-14 * scale;
    if norm(a) <= floor {
        std::mem::swap(a, b);
    }
    loop {
        let na = norm(a);
        if na > floor && na > 0.0 {
            a.iter_mut().for_each(|v| *v /= na);
            break;
        }
        a.iter_mut().for_each(|v| *v = StandardNormal.sample(rng));
        floor = 1e-14;
    }
    let mut floor = 1e-12 * scale;
    loop {
        let c = dot(a, b);
        axpy(b, -c, a);
        let nb = norm(b);
        if nb > floor && nb > 0.0 {
            b.iter_mut().for_each(|v| *v /= nb);
            // A second pass keeps the pair orthogonal to working precision.
            let c = dot(a, b);
            axpy(b, -c, a);
            let nb = norm(b);
            b.iter_mut().for_each(|v| *v /= nb);
            return;
        }
        b.iter_mut().for_each(|v| *v = StandardNormal.sample(rng));
        floor = 1e-12;
    }
}
