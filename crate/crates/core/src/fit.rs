//! Box-constrained Levenberg–Marquardt for small least-squares problems.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy)]
pub struct FitOptions {
    pub max_iterations: usize,
    /// Stop when the relative drop in the residual sum of squares falls below this.
    pub tolerance: f64,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self { max_iterations: 500, tolerance: 1e-12 }
    }
}

#[derive(Debug, Clone)]
pub struct FitOutcome {
    pub params: Vec<f64>,
    /// `s² (JᵀJ)⁻¹` with `s²` the residual variance per degree of freedom.
    pub covariance: Vec<Vec<f64>>,
    pub rss: f64,
    pub iterations: usize,
    pub converged: bool,
}

fn rss(r: &[f64]) -> f64 {
    r.iter().map(|x| x * x).sum()
}

fn jacobian<F: Fn(&[f64]) -> Vec<f64>>(f: &F, p: &[f64], lower: &[f64], upper: &[f64]) -> Vec<Vec<f64>> {
    let mut cols = Vec::with_capacity(p.len());
    for i in 0..p.len() {
        let h = 1e-6 * p[i].abs().max(1e-8);
        let (mut hi, mut lo) = (p.to_vec(), p.to_vec());
        hi[i] = (p[i] + h).min(upper[i]);
        lo[i] = (p[i] - h).max(lower[i]);
        let (a, b) = (f(&hi), f(&lo));
        let d = hi[i] - lo[i];
        cols.push(a.iter().zip(&b).map(|(x, y)| (x - y) / d).collect::<Vec<f64>>());
    }
    // row-major m × p
    let m = cols.first().map_or(0, |c| c.len());
    (0..m).map(|r| cols.iter().map(|c| c[r]).collect()).collect()
}

/// Solves `A x = b` for a small dense system by Gaussian elimination with
/// partial pivoting.
pub fn solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[piv][col].abs() < 1e-300 {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for row in col + 1..n {
            let f = a[row][col] / a[col][col];
            for k in col..n {
                a[row][k] -= f * a[col][k];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let s: f64 = (row + 1..n).map(|k| a[row][k] * x[k]).sum();
        x[row] = (b[row] - s) / a[row][row];
    }
    Some(x)
}

fn invert(a: &[Vec<f64>]) -> Option<Vec<Vec<f64>>> {
    let n = a.len();
    let mut cols = Vec::with_capacity(n);
    for i in 0..n {
        let mut e = vec![0.0; n];
        e[i] = 1.0;
        cols.push(solve(a.to_vec(), e)?);
    }
    Some((0..n).map(|r| cols.iter().map(|c| c[r]).collect()).collect())
}

fn normal_equations(jac: &[Vec<f64>], r: &[f64]) -> (Vec<Vec<f64>>, Vec<f64>) {
    let p = jac.first().map_or(0, |row| row.len());
    let mut jtj = vec![vec![0.0; p]; p];
    let mut jtr = vec![0.0; p];
    for (row, ri) in jac.iter().zip(r) {
        for a in 0..p {
            jtr[a] += row[a] * ri;
            for b in 0..p {
                jtj[a][b] += row[a] * row[b];
            }
        }
    }
    (jtj, jtr)
}

/// Minimizes `Σ f(p)²` subject to `lower ≤ p ≤ upper`; trial steps are
/// projected onto the box.
pub fn levenberg_marquardt<F>(f: F, start: &[f64], lower: &[f64], upper: &[f64], opts: FitOptions) -> Result<FitOutcome>
where
    F: Fn(&[f64]) -> Vec<f64>,
{
    let np = start.len();
    let mut p: Vec<f64> = start.iter().enumerate().map(|(i, &v)| v.clamp(lower[i], upper[i])).collect();
    let mut r = f(&p);
    if r.iter().any(|v| !v.is_finite()) {
        return Err(Error::FitFailed("non-finite residual at start".into()));
    }
    let mut cost = rss(&r);
    let mut lambda = 1e-3;
    let mut converged = false;
    let mut iterations = 0;
    while iterations < opts.max_iterations {
        iterations += 1;
        let jac = jacobian(&f, &p, lower, upper);
        let (jtj, jtr) = normal_equations(&jac, &r);
        let mut improved = false;
        for _ in 0..30 {
            let mut a = jtj.clone();
            for i in 0..np {
                a[i][i] += lambda * jtj[i][i].max(1e-300);
            }
            let Some(step) = solve(a, jtr.iter().map(|v| -v).collect()) else {
                lambda *= 10.0;
                continue;
            };
            let trial: Vec<f64> = (0..np).map(|i| (p[i] + step[i]).clamp(lower[i], upper[i])).collect();
            let rt = f(&trial);
            let ct = rss(&rt);
            if ct.is_finite() && ct < cost {
                let drop = (cost - ct) / cost.max(1e-300);
                p = trial;
                r = rt;
                cost = ct;
                lambda = (lambda / 3.0).max(1e-12);
                improved = true;
                if drop < opts.tolerance {
                    converged = true;
                }
                break;
            }
            lambda *= 4.0;
        }
        if !improved {
            // no downhill step at any damping: a (constrained) minimum
            converged = true;
        }
        if converged {
            break;
        }
    }
    let jac = jacobian(&f, &p, lower, upper);
    let (jtj, _) = normal_equations(&jac, &r);
    let dof = r.len().saturating_sub(np).max(1) as f64;
    let s2 = cost / dof;
    let covariance = invert(&jtj)
        .map(|inv| inv.into_iter().map(|row| row.into_iter().map(|v| v * s2).collect()).collect())
        .unwrap_or_else(|| vec![vec![f64::NAN; np]; np]);
    Ok(FitOutcome { params: p, covariance, rss: cost, iterations, converged })
}
