//! Compressed sparse rows, ILU(0) and BiCGSTAB.

use crate::error::{Error, Result};

#[derive(Clone, Debug)]
pub struct Csr {
    pub n_rows: usize,
    pub n_cols: usize,
    pub indptr: Vec<usize>,
    pub indices: Vec<usize>,
    pub data: Vec<f64>,
}

impl Csr {
    /// Builds from per-row `(col, value)` lists; duplicates are summed and
    /// columns sorted.
    pub fn from_rows(n_cols: usize, rows: Vec<Vec<(usize, f64)>>) -> Csr {
        let mut indptr = Vec::with_capacity(rows.len() + 1);
        let mut indices = Vec::new();
        let mut data = Vec::new();
        indptr.push(0);
        for mut row in rows.iter().cloned() {
            row.sort_by_key(|e| e.0);
            let mut last: Option<usize> = None;
            for (c, v) in row {
                if last == Some(c) {
                    *data.last_mut().unwrap() += v;
                } else {
                    indices.push(c);
                    data.push(v);
                    last = Some(c);
                }
            }
            indptr.push(indices.len());
        }
        Csr { n_rows: rows.len(), n_cols, indptr, indices, data }
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        (self.indptr[i]..self.indptr[i + 1]).map(move |k| (self.indices[k], self.data[k]))
    }

    pub fn matvec(&self, x: &[f64], y: &mut [f64]) {
        for (i, yi) in y.iter_mut().enumerate().take(self.n_rows) {
            let mut s = 0.0;
            for k in self.indptr[i]..self.indptr[i + 1] {
                s += self.data[k] * x[self.indices[k]];
            }
            *yi = s;
        }
    }

    pub fn transpose(&self) -> Csr {
        let mut counts = vec![0usize; self.n_cols + 1];
        for &c in &self.indices {
            counts[c + 1] += 1;
        }
        for i in 0..self.n_cols {
            counts[i + 1] += counts[i];
        }
        let mut next = counts.clone();
        let mut indices = vec![0; self.indices.len()];
        let mut data = vec![0.0; self.data.len()];
        for i in 0..self.n_rows {
            for k in self.indptr[i]..self.indptr[i + 1] {
                let c = self.indices[k];
                indices[next[c]] = i;
                data[next[c]] = self.data[k];
                next[c] += 1;
            }
        }
        Csr { n_rows: self.n_cols, n_cols: self.n_rows, indptr: counts, indices, data }
    }

    /// `yᵀ A` as a dense vector of length `n_cols`.
    pub fn left_mul(&self, y: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n_cols];
        for (i, yi) in y.iter().enumerate().take(self.n_rows) {
            for k in self.indptr[i]..self.indptr[i + 1] {
                out[self.indices[k]] += yi * self.data[k];
            }
        }
        out
    }
}

/// Incomplete LU factorization with the sparsity pattern of the matrix.
#[derive(Clone, Debug)]
pub struct Ilu0 {
    lu: Csr,
    diag: Vec<usize>,
}

impl Ilu0 {
    pub fn new(a: &Csr) -> Result<Ilu0> {
        let mut lu = a.clone();
        let n = a.n_rows;
        let mut diag = vec![usize::MAX; n];
        for (i, d) in diag.iter_mut().enumerate() {
            for k in lu.indptr[i]..lu.indptr[i + 1] {
                if lu.indices[k] == i {
                    *d = k;
                }
            }
            if *d == usize::MAX {
                return Err(Error::invalid(format!("row {i} has no diagonal entry")));
            }
        }
        let mut pos = vec![usize::MAX; n];
        for i in 0..n {
            let (start, end) = (lu.indptr[i], lu.indptr[i + 1]);
            for k in start..end {
                pos[lu.indices[k]] = k;
            }
            for k in start..end {
                let j = lu.indices[k];
                if j >= i {
                    break;
                }
                let pivot = lu.data[diag[j]];
                if pivot == 0.0 {
                    return Err(Error::invalid("zero pivot in ILU(0)"));
                }
                let factor = lu.data[k] / pivot;
                lu.data[k] = factor;
                for kk in (diag[j] + 1)..lu.indptr[j + 1] {
                    let c = lu.indices[kk];
                    if pos[c] != usize::MAX && pos[c] >= start && pos[c] < end {
                        lu.data[pos[c]] -= factor * lu.data[kk];
                    }
                }
            }
            for k in start..end {
                pos[lu.indices[k]] = usize::MAX;
            }
            if lu.data[diag[i]] == 0.0 {
                return Err(Error::invalid("zero pivot in ILU(0)"));
            }
        }
        Ok(Ilu0 { lu, diag })
    }

    /// Solves `LU z = r` in place.
    pub fn apply(&self, r: &[f64], z: &mut [f64]) {
        let n = self.lu.n_rows;
        for i in 0..n {
            let mut s = r[i];
            for k in self.lu.indptr[i]..self.diag[i] {
                s -= self.lu.data[k] * z[self.lu.indices[k]];
            }
            z[i] = s;
        }
        for i in (0..n).rev() {
            let mut s = z[i];
            for k in (self.diag[i] + 1)..self.lu.indptr[i + 1] {
                s -= self.lu.data[k] * z[self.lu.indices[k]];
            }
            z[i] = s / self.lu.data[self.diag[i]];
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct SolveStats {
    pub iterations: usize,
    pub relative_residual: f64,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Right-preconditioned BiCGSTAB. Fails with `NonConvergence` when the
/// relative residual does not reach `tol` within `max_iter` iterations.
pub fn bicgstab(a: &Csr, pre: &Ilu0, b: &[f64], tol: f64, max_iter: usize) -> Result<(Vec<f64>, SolveStats)> {
    let n = a.n_rows;
    let bnorm = norm(b);
    let mut x = vec![0.0; n];
    if bnorm == 0.0 {
        return Ok((x, SolveStats { iterations: 0, relative_residual: 0.0 }));
    }
    let mut r = b.to_vec();
    let mut best = (x.clone(), 1.0);
    for restart in 0..4 {
        let r0 = r.clone();
        let (mut rho, mut alpha, mut omega) = (1.0, 1.0, 1.0);
        let mut v = vec![0.0; n];
        let mut p = vec![0.0; n];
        let mut phat = vec![0.0; n];
        let mut shat = vec![0.0; n];
        let mut s = vec![0.0; n];
        let mut t = vec![0.0; n];
        for it in 0..max_iter {
            let rho_new = dot(&r0, &r);
            if rho_new == 0.0 || omega == 0.0 {
                break;
            }
            let beta = (rho_new / rho) * (alpha / omega);
            rho = rho_new;
            for i in 0..n {
                p[i] = r[i] + beta * (p[i] - omega * v[i]);
            }
            pre.apply(&p, &mut phat);
            a.matvec(&phat, &mut v);
            let denom = dot(&r0, &v);
            if denom == 0.0 {
                break;
            }
            alpha = rho / denom;
            for i in 0..n {
                s[i] = r[i] - alpha * v[i];
            }
            if norm(&s) <= tol * bnorm {
                for i in 0..n {
                    x[i] += alpha * phat[i];
                }
                let rel = true_residual(a, &x, b) / bnorm;
                if rel <= tol * 10.0 {
                    return Ok((x, SolveStats { iterations: it + 1, relative_residual: rel }));
                }
                r = residual(a, &x, b);
                break;
            }
            pre.apply(&s, &mut shat);
            a.matvec(&shat, &mut t);
            let tt = dot(&t, &t);
            omega = if tt == 0.0 { 0.0 } else { dot(&t, &s) / tt };
            for i in 0..n {
                x[i] += alpha * phat[i] + omega * shat[i];
                r[i] = s[i] - omega * t[i];
            }
            if norm(&r) <= tol * bnorm {
                let rel = true_residual(a, &x, b) / bnorm;
                if rel <= tol * 10.0 {
                    return Ok((x, SolveStats { iterations: it + 1 + restart * max_iter, relative_residual: rel }));
                }
                r = residual(a, &x, b);
                break;
            }
        }
        let rel = norm(&r) / bnorm;
        if rel < best.1 {
            best = (x.clone(), rel);
        }
        r = residual(a, &x, b);
    }
    Err(Error::NonConvergence(format!(
        "BiCGSTAB stalled at relative residual {:.3e} (target {tol:.1e})",
        best.1
    )))
}

fn residual(a: &Csr, x: &[f64], b: &[f64]) -> Vec<f64> {
    let mut ax = vec![0.0; a.n_rows];
    a.matvec(x, &mut ax);
    b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect()
}

fn true_residual(a: &Csr, x: &[f64], b: &[f64]) -> f64 {
    norm(&residual(a, x, b))
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::{DMatrix, DVector};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_m_matrix(n: usize, seed: u64) -> (Csr, DMatrix<f64>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut dense = DMatrix::zeros(n, n);
        let mut rows = Vec::new();
        for i in 0..n {
            let mut row = Vec::new();
            let mut sum = 0.0;
            for j in [i.wrapping_sub(1), i + 1, (i + 7) % n] {
                if j < n && j != i {
                    let w = rng.random_range(0.1..2.0);
                    row.push((j, -w));
                    dense[(i, j)] -= w;
                    sum += w;
                }
            }
            let d = sum + rng.random_range(0.01..0.5);
            row.push((i, d));
            dense[(i, i)] += d;
            rows.push(row);
        }
        (Csr::from_rows(n, rows), dense)
    }

    #[test]
    fn bicgstab_matches_dense_lu() {
        let (a, dense) = random_m_matrix(200, 1);
        let b: Vec<f64> = (0..200).map(|i| (i as f64).sin()).collect();
        let pre = Ilu0::new(&a).unwrap();
        let (x, stats) = bicgstab(&a, &pre, &b, 1e-13, 1000).unwrap();
        let exact = dense.lu().solve(&DVector::from_vec(b)).unwrap();
        assert!(stats.relative_residual < 1e-12);
        assert!(x.iter().zip(exact.iter()).all(|(p, q)| (p - q).abs() < 1e-10));
    }

    #[test]
    fn transpose_and_left_mul() {
        let (a, dense) = random_m_matrix(50, 2);
        let at = a.transpose();
        let y: Vec<f64> = (0..50).map(|i| i as f64 * 0.1).collect();
        let mut z = vec![0.0; 50];
        at.matvec(&y, &mut z);
        let w = a.left_mul(&y);
        let d = dense.transpose() * DVector::from_vec(y);
        for i in 0..50 {
            assert!((z[i] - d[i]).abs() < 1e-12 && (w[i] - d[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn duplicate_entries_are_summed() {
        let a = Csr::from_rows(2, vec![vec![(1, 1.0), (0, 2.0), (1, 3.0)], vec![(1, 1.0)]]);
        assert_eq!(a.indices, vec![0, 1, 1]);
        assert_eq!(a.data, vec![2.0, 4.0, 1.0]);
    }
}
