//! Dense least squares via Householder QR, with in-order detection of
//! aliased columns and the pieces of classical OLS inference that depend on
//! the factorization.
//!
//! The factorization processes columns strictly left to right: when a column
//! is linearly dependent on the columns already accepted, it is dropped and
//! the earlier columns keep their positions. That rule makes dummy-encoded
//! designs behave predictably (the first occurrence of a duplicated variable
//! wins) and keeps results independent of row order up to rounding.

use nalgebra::{DMatrix, DVector};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{Error, Result};

/// Relative tolerance for declaring a column aliased: the tail norm must
/// exceed this fraction of the largest accepted diagonal. Loose enough to
/// catch exact duplicates, tight enough to keep nearly-collinear but valid
/// controls.
pub const RANK_REL_TOL: f64 = 1e-10;

struct Reflector {
    offset: usize,
    v: Vec<f64>,
    beta: f64,
}

/// Householder factorization of a column subset of X.
pub struct Householder {
    n_rows: usize,
    reflectors: Vec<Reflector>,
    retained: Vec<usize>,
    dropped: Vec<usize>,
    /// Column p holds R[0..=p, p] for the p-th retained column.
    r_cols: Vec<Vec<f64>>,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn apply_reflector(v: &[f64], beta: f64, target: &mut [f64]) {
    let s = beta * dot(v, target);
    for (t, &vi) in target.iter_mut().zip(v) {
        *t -= s * vi;
    }
}

impl Householder {
    /// Factor the columns of `x` in order.
    pub fn factor(x: &DMatrix<f64>) -> Householder {
        let n = x.nrows();
        let k = x.ncols();
        let mut fact = Householder {
            n_rows: n,
            reflectors: Vec::with_capacity(k),
            retained: Vec::with_capacity(k),
            dropped: Vec::new(),
            r_cols: Vec::with_capacity(k),
        };
        let mut max_diag = 0.0f64;
        let mut col = vec![0.0; n];
        let x_data = x.as_slice(); // column-major backing

        for j in 0..k {
            col.copy_from_slice(&x_data[j * n..(j + 1) * n]);
            fact.apply_qt(&mut col);

            let rank = fact.reflectors.len();
            let tail = &mut col[rank..];
            let norm = dot(tail, tail).sqrt();
            if norm <= RANK_REL_TOL * max_diag || norm == 0.0 {
                fact.dropped.push(j);
                continue;
            }

            // alpha takes the opposite sign of the leading entry so v has no
            // cancellation.
            let alpha = if tail[0] >= 0.0 { -norm } else { norm };
            let mut v = tail.to_vec();
            v[0] -= alpha;
            let beta = 2.0 / dot(&v, &v);

            let mut r_col = col[..rank + 1].to_vec();
            r_col[rank] = alpha;
            fact.r_cols.push(r_col);
            fact.reflectors.push(Reflector {
                offset: rank,
                v,
                beta,
            });
            fact.retained.push(j);
            max_diag = max_diag.max(alpha.abs());
        }
        fact
    }

    pub fn rank(&self) -> usize {
        self.retained.len()
    }

    pub fn retained(&self) -> &[usize] {
        &self.retained
    }

    pub fn dropped(&self) -> &[usize] {
        &self.dropped
    }

    /// w ← Qᵀw.
    pub fn apply_qt(&self, w: &mut [f64]) {
        debug_assert_eq!(w.len(), self.n_rows);
        for r in &self.reflectors {
            apply_reflector(&r.v, r.beta, &mut w[r.offset..]);
        }
    }

    /// w ← Qw.
    pub fn apply_q(&self, w: &mut [f64]) {
        debug_assert_eq!(w.len(), self.n_rows);
        for r in self.reflectors.iter().rev() {
            apply_reflector(&r.v, r.beta, &mut w[r.offset..]);
        }
    }

    /// Replace w with its residual after projecting onto the column span of
    /// the factored matrix: w ← (I − QQᵀ restricted to the range) w.
    pub fn residualize(&self, w: &mut [f64]) {
        self.apply_qt(w);
        for wi in w.iter_mut().take(self.rank()) {
            *wi = 0.0;
        }
        self.apply_q(w);
    }

    /// Solve R b = c by back-substitution; c has length rank().
    #[allow(clippy::needless_range_loop)]
    fn solve_r(&self, c: &[f64]) -> Vec<f64> {
        let r = self.rank();
        let mut b = vec![0.0; r];
        for p in (0..r).rev() {
            let mut acc = c[p];
            for q in (p + 1)..r {
                acc -= self.r_cols[q][p] * b[q];
            }
            b[p] = acc / self.r_cols[p][p];
        }
        b
    }

    /// Diagonal of (XᵀX)⁻¹ for the retained columns, through rows of R⁻¹.
    #[allow(clippy::needless_range_loop)]
    fn xtx_inv_diag(&self) -> Vec<f64> {
        let r = self.rank();
        let mut diag = vec![0.0; r];
        let mut w = vec![0.0; r];
        for i in 0..r {
            // Forward-solve Rᵀ w = e_i; entries before i stay zero.
            for wj in w.iter_mut() {
                *wj = 0.0;
            }
            for j in i..r {
                let mut acc = if j == i { 1.0 } else { 0.0 };
                for m in i..j {
                    acc -= self.r_cols[j][m] * w[m];
                }
                w[j] = acc / self.r_cols[j][j];
            }
            diag[i] = dot(&w[i..], &w[i..]);
        }
        diag
    }
}

/// Least-squares solution with the inference inputs that fall out of the
/// factorization.
pub struct LeastSquares {
    /// Coefficients for the retained columns, in retained order.
    pub coef: Vec<f64>,
    /// Classical standard errors, aligned with `coef`.
    pub std_err: Vec<f64>,
    /// Original indices of retained columns.
    pub retained: Vec<usize>,
    /// Original indices of dropped (aliased) columns.
    pub dropped: Vec<usize>,
    pub fitted: DVector<f64>,
    pub residuals: DVector<f64>,
    pub rss: f64,
    /// Residual degrees of freedom: n minus retained column count.
    pub df: usize,
    /// Diagonal of (XᵀX)⁻¹ over retained columns (for alternative variance
    /// estimators).
    pub xtx_inv_diag: Vec<f64>,
}

/// Solve min ‖y − Xb‖² and return coefficients with classical inference.
pub fn solve_least_squares(y: &DVector<f64>, x: &DMatrix<f64>) -> Result<LeastSquares> {
    let n = x.nrows();
    assert_eq!(y.len(), n, "y and X row counts differ");

    let fact = Householder::factor(x);
    let rank = fact.rank();
    if rank == 0 {
        return Err(Error::AllColumnsAliased);
    }
    if n <= rank {
        return Err(Error::InsufficientObservations { n, k: rank });
    }

    let mut qty = y.as_slice().to_vec();
    fact.apply_qt(&mut qty);
    let coef = fact.solve_r(&qty[..rank]);

    // Fitted values from the pristine design, so y = fitted + residuals holds
    // exactly by construction.
    let mut fitted = DVector::zeros(n);
    let x_data = x.as_slice();
    for (b, &j) in coef.iter().zip(&fact.retained) {
        let col = &x_data[j * n..(j + 1) * n];
        let out = fitted.as_mut_slice();
        for i in 0..n {
            out[i] += b * col[i];
        }
    }
    let residuals = y - &fitted;
    let rss = residuals.dot(&residuals);

    let df = n - rank;
    let sigma2 = rss / df as f64;
    let xtx_inv_diag = fact.xtx_inv_diag();
    let std_err = xtx_inv_diag
        .iter()
        .map(|d| (sigma2 * d).max(0.0).sqrt())
        .collect();

    Ok(LeastSquares {
        coef,
        std_err,
        retained: fact.retained.clone(),
        dropped: fact.dropped.clone(),
        fitted,
        residuals,
        rss,
        df,
        xtx_inv_diag,
    })
}

/// Two-sided p-value of a t statistic with `df` degrees of freedom, from the
/// exact regularized-incomplete-beta CDF. Infinite t (a zero standard error
/// on a nonzero coefficient) maps to p = 0.
pub fn two_sided_t_p(t: f64, df: f64) -> f64 {
    if t == 0.0 {
        return 1.0;
    }
    if !t.is_finite() {
        return 0.0;
    }
    let dist = StudentsT::new(0.0, 1.0, df).expect("positive degrees of freedom");
    (2.0 * dist.sf(t.abs())).clamp(0.0, 1.0)
}
