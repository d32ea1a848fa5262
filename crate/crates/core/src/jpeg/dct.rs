//! Orthonormal type-II DCT.
//!
//! `f(u,v) = α(u)α(v) Σ x(m,n) C_u(m) C_v(n)` with
//! `C_s(k) = cos((2k+1)sπ / 2N)`, `α(0) = √(1/N)` and `α(s) = √(2/N)`.
//! Index `u` pairs with the row index `m`.

use std::f64::consts::PI;
use std::sync::LazyLock;

pub const BLOCK: usize = 8;
pub const BLOCK_AREA: usize = BLOCK * BLOCK;

/// 8×8 samples in natural row-major order; spatial or frequency domain
/// depending on context.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Block8(pub [f64; BLOCK_AREA]);

impl Default for Block8 {
    fn default() -> Self {
        Block8([0.0; BLOCK_AREA])
    }
}

impl Block8 {
    pub fn constant(v: f64) -> Self {
        Block8([v; BLOCK_AREA])
    }

    #[inline]
    pub fn at(&self, row: usize, col: usize) -> f64 {
        self.0[row * BLOCK + col]
    }

    pub fn energy(&self) -> f64 {
        self.0.iter().map(|v| v * v).sum()
    }

    /// Sum of squared AC coefficients (everything but index 0).
    pub fn ac_energy(&self) -> f64 {
        self.0[1..].iter().map(|v| v * v).sum()
    }
}

/// Basis matrix `B[u][m] = α(u) C_u(m)` for an N-point transform.
#[derive(Debug, Clone)]
pub struct DctKernel {
    n: usize,
    basis: Vec<f64>,
}

impl DctKernel {
    pub fn new(n: usize) -> Self {
        assert!(n > 0, "DCT size must be positive");
        let mut basis = vec![0.0; n * n];
        for u in 0..n {
            let alpha = if u == 0 {
                (1.0 / n as f64).sqrt()
            } else {
                (2.0 / n as f64).sqrt()
            };
            for m in 0..n {
                basis[u * n + m] = alpha * (((2 * m + 1) * u) as f64 * PI / (2 * n) as f64).cos();
            }
        }
        Self { n, basis }
    }

    pub fn size(&self) -> usize {
        self.n
    }

    /// Separable 2-D transform of an n×n row-major block.
    pub fn forward(&self, x: &[f64]) -> Vec<f64> {
        self.apply(x, false)
    }

    pub fn inverse(&self, f: &[f64]) -> Vec<f64> {
        self.apply(f, true)
    }

    fn apply(&self, src: &[f64], transpose: bool) -> Vec<f64> {
        let n = self.n;
        assert_eq!(src.len(), n * n);
        let b = |i: usize, j: usize| {
            if transpose {
                self.basis[j * n + i]
            } else {
                self.basis[i * n + j]
            }
        };
        // rows: tmp = src · Bᵀ, then columns: out = B · tmp
        let mut tmp = vec![0.0; n * n];
        for r in 0..n {
            for v in 0..n {
                tmp[r * n + v] = (0..n).map(|c| src[r * n + c] * b(v, c)).sum();
            }
        }
        let mut out = vec![0.0; n * n];
        for u in 0..n {
            for v in 0..n {
                out[u * n + v] = (0..n).map(|r| b(u, r) * tmp[r * n + v]).sum();
            }
        }
        out
    }
}

static KERNEL8: LazyLock<DctKernel> = LazyLock::new(|| DctKernel::new(BLOCK));

pub fn dct2d_n(x: &[f64], n: usize) -> Vec<f64> {
    DctKernel::new(n).forward(x)
}

pub fn idct2d_n(f: &[f64], n: usize) -> Vec<f64> {
    DctKernel::new(n).inverse(f)
}

pub fn dct2d(b: &Block8) -> Block8 {
    Block8(KERNEL8.forward(&b.0).try_into().unwrap())
}

pub fn idct2d(b: &Block8) -> Block8 {
    Block8(KERNEL8.inverse(&b.0).try_into().unwrap())
}
