use crate::error::{Error, Result};

/// Accumulates `X'X` and `X'U` row by row.
#[derive(Debug, Clone)]
pub struct NormalEquations {
    dim: usize,
    gram: Vec<f64>,
    rhs: Vec<f64>,
    rows: usize,
}

impl NormalEquations {
    pub fn new(dim: usize) -> Self {
        NormalEquations {
            dim,
            gram: vec![0.0; dim * dim],
            rhs: vec![0.0; dim],
            rows: 0,
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn add_row(&mut self, x: &[f64], u: f64) {
        self.add_group(x, 1, u);
    }

    /// Adds `count` rows sharing the feature vector `x` whose responses sum to `u_sum`.
    pub fn add_group(&mut self, x: &[f64], count: usize, u_sum: f64) {
        debug_assert_eq!(x.len(), self.dim);
        let w = count as f64;
        for (i, xi) in x.iter().enumerate() {
            if *xi == 0.0 {
                continue;
            }
            self.rhs[i] += xi * u_sum;
            let row = &mut self.gram[i * self.dim..(i + 1) * self.dim];
            for (j, xj) in x.iter().enumerate() {
                row[j] += w * xi * xj;
            }
        }
        self.rows += count;
    }

    /// Solves `(X'X + lambda I) beta = X'U`.
    pub fn solve(&self, lambda: f64) -> Result<Vec<f64>> {
        let mut a = self.gram.clone();
        for i in 0..self.dim {
            a[i * self.dim + i] += lambda;
        }
        cholesky_solve(&mut a, &self.rhs, self.dim)
    }
}

/// Solves `A x = b` for symmetric positive-definite `A` (row-major, `n x n`),
/// overwriting `a` with its Cholesky factor. A pivot that is not clearly
/// positive relative to the diagonal scale is reported as ill-posed.
pub fn cholesky_solve(a: &mut [f64], b: &[f64], n: usize) -> Result<Vec<f64>> {
    let scale = (0..n)
        .map(|i| a[i * n + i].abs())
        .fold(0.0, f64::max)
        .max(f64::MIN_POSITIVE);
    let tol = scale * 1e-12 * n as f64;
    for j in 0..n {
        let mut d = a[j * n + j];
        for k in 0..j {
            d -= a[j * n + k] * a[j * n + k];
        }
        if !(d > tol) {
            return Err(Error::IllPosed);
        }
        let d = d.sqrt();
        a[j * n + j] = d;
        for i in j + 1..n {
            let mut s = a[i * n + j];
            for k in 0..j {
                s -= a[i * n + k] * a[j * n + k];
            }
            a[i * n + j] = s / d;
        }
    }
    // L y = b
    let mut y = b.to_vec();
    for i in 0..n {
        let mut s = y[i];
        for k in 0..i {
            s -= a[i * n + k] * y[k];
        }
        y[i] = s / a[i * n + i];
    }
    // L' x = y
    for i in (0..n).rev() {
        let mut s = y[i];
        for k in i + 1..n {
            s -= a[k * n + i] * y[k];
        }
        y[i] = s / a[i * n + i];
    }
    Ok(y)
}
