//! Independent numerical oracles and generators shared by the integration
//! tests. Every oracle reimplements its target with a different algorithm
//! and data layout than the library, so agreement is evidence rather than
//! tautology.

// Elimination needs two rows of one matrix at once, which forces index
// loops.
#![allow(dead_code, clippy::needless_range_loop)]

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Box-Muller standard normal.
pub fn standard_normal(rng: &mut ChaCha8Rng) -> f64 {
    let u1: f64 = rng.gen_range(f64::MIN_POSITIVE..1.0);
    let u2: f64 = rng.gen_range(0.0..1.0);
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

/// Uniform direction on the unit sphere.
pub fn unit_vector(n: usize, rng: &mut ChaCha8Rng) -> DVector<f64> {
    loop {
        let v = DVector::from_fn(n, |_, _| standard_normal(rng));
        let norm = v.norm();
        if norm > 1e-12 {
            return v / norm;
        }
    }
}

/// Uniform sample from the open ball of radius `d` around `center`.
pub fn ball_point(center: &DVector<f64>, d: f64, rng: &mut ChaCha8Rng) -> DVector<f64> {
    let n = center.len();
    let dir = unit_vector(n, rng);
    let r = d * rng.gen_range(0.0f64..1.0).powf(1.0 / n as f64);
    center + dir * r
}

pub fn random_matrix(
    rows: usize,
    cols: usize,
    lo: f64,
    hi: f64,
    rng: &mut ChaCha8Rng,
) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| rng.gen_range(lo..hi))
}

pub fn random_symmetric(n: usize, lo: f64, hi: f64, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let v = rng.gen_range(lo..hi);
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
    m
}

/// Symmetric positive definite matrix with eigenvalues drawn from [lo, hi],
/// built as Q diag(e) Q^T from a random orthogonal Q.
pub fn random_spd(n: usize, lo: f64, hi: f64, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    let g = DMatrix::from_fn(n, n, |_, _| standard_normal(rng));
    let q = g.qr().q();
    let evals = DVector::from_fn(n, |_, _| rng.gen_range(lo..hi));
    let m = &q * DMatrix::from_diagonal(&evals) * q.transpose();
    0.5 * (&m + m.transpose())
}

/// Random Hurwitz matrix: a uniform random matrix shifted until its row
/// measure max_i (a_ii + sum_{j!=i} |a_ij|) is at least `margin` negative,
/// which pushes every eigenvalue's real part below -margin.
pub fn random_hurwitz(n: usize, margin: f64, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    let r = random_matrix(n, n, -1.0, 1.0, rng);
    let measure = (0..n)
        .map(|i| {
            let off: f64 = (0..n).filter(|&j| j != i).map(|j| r[(i, j)].abs()).sum();
            r[(i, i)] + off
        })
        .fold(f64::NEG_INFINITY, f64::max);
    &r - DMatrix::identity(n, n) * (measure + margin)
}

/// Strictly row-dominant matrix: nonnegative off-diagonal entries, diagonal
/// negative enough that every row sum lands at least 0.1 below zero.
pub fn random_dominant(n: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(n, n);
    for i in 0..n {
        let mut off_sum = 0.0;
        for j in 0..n {
            if j != i {
                let v = rng.gen_range(0.0f64..2.0);
                m[(i, j)] = v;
                off_sum += v;
            }
        }
        m[(i, i)] = -(off_sum + rng.gen_range(0.1f64..5.0));
    }
    m
}

/// Coefficients [c_1, ..., c_n] of the characteristic polynomial
/// z^n + c_1 z^{n-1} + ... + c_n, by the Faddeev-LeVerrier trace recurrence.
pub fn char_poly(a: &DMatrix<f64>) -> Vec<f64> {
    let n = a.nrows();
    assert_eq!(
        n,
        a.ncols(),
        "characteristic polynomial needs a square matrix"
    );
    let eye = DMatrix::<f64>::identity(n, n);
    let mut m = DMatrix::<f64>::zeros(n, n);
    let mut c_prev = 1.0;
    let mut coeffs = Vec::with_capacity(n);
    for k in 1..=n {
        m = a * (&m + &eye * c_prev);
        let c_k = -m.trace() / k as f64;
        coeffs.push(c_k);
        c_prev = c_k;
    }
    coeffs
}

/// All roots of the monic polynomial z^n + c[0] z^{n-1} + ... + c[n-1], by
/// Durand-Kerner simultaneous iteration. Initial iterates sit on a circle
/// sized by the Fujiwara root bound, rotated off the real axis so complex
/// pairs are reachable.
pub fn poly_roots(coeffs: &[f64]) -> Vec<Complex64> {
    let n = coeffs.len();
    if n == 0 {
        return Vec::new();
    }
    let eval = |z: Complex64| -> Complex64 {
        let mut v = Complex64::new(1.0, 0.0);
        for &c in coeffs {
            v = v * z + c;
        }
        v
    };
    let radius = coeffs
        .iter()
        .enumerate()
        .map(|(i, c)| c.abs().powf(1.0 / (i + 1) as f64))
        .fold(0.25f64, f64::max)
        * 2.0;
    let mut z: Vec<Complex64> = (0..n)
        .map(|k| {
            let angle = std::f64::consts::TAU * k as f64 / n as f64 + 0.4;
            Complex64::from_polar(radius, angle)
        })
        .collect();
    for _ in 0..1000 {
        let mut max_step = 0.0f64;
        let mut max_abs = 0.0f64;
        for i in 0..n {
            let mut denom = Complex64::new(1.0, 0.0);
            for j in 0..n {
                if j != i {
                    denom *= z[i] - z[j];
                }
            }
            if denom.norm() == 0.0 {
                // Collided iterates: nudge apart instead of dividing by zero.
                z[i] += Complex64::new(1e-8 * (1.0 + radius), 1e-8);
                max_step = f64::INFINITY;
                continue;
            }
            let step = eval(z[i]) / denom;
            z[i] -= step;
            max_step = max_step.max(step.norm());
            max_abs = max_abs.max(z[i].norm());
        }
        if max_step < 1e-14 * (1.0 + max_abs) {
            break;
        }
    }
    z
}

/// Eigenvalues as characteristic-polynomial roots.
pub fn eigenvalues_oracle(a: &DMatrix<f64>) -> Vec<Complex64> {
    poly_roots(&char_poly(a))
}

pub fn max_real_eigenvalue(a: &DMatrix<f64>) -> f64 {
    eigenvalues_oracle(a)
        .iter()
        .map(|z| z.re)
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Ascending real eigenvalues of a symmetric matrix via the root oracle;
/// panics if any root strays visibly off the real axis.
pub fn symmetric_eigenvalues_oracle(s: &DMatrix<f64>) -> Vec<f64> {
    let scale = 1.0 + s.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let mut out: Vec<f64> = eigenvalues_oracle(s)
        .iter()
        .map(|z| {
            assert!(
                z.im.abs() < 1e-6 * scale,
                "symmetric matrix produced a visibly complex root {z}"
            );
            z.re
        })
        .collect();
    out.sort_by(f64::total_cmp);
    out
}

/// Largest singular value by random probing followed by power iteration on
/// A^T A, independent of any eigensolver.
pub fn spectral_norm_oracle(a: &DMatrix<f64>, seed: u64) -> f64 {
    let cols = a.ncols();
    if a.nrows() == 0 || cols == 0 {
        return 0.0;
    }
    let mut rng = rng(seed);
    let mut best = unit_vector(cols, &mut rng);
    let mut best_gain = (a * &best).norm();
    for _ in 0..10_000 {
        let v = unit_vector(cols, &mut rng);
        let gain = (a * &v).norm();
        if gain > best_gain {
            best_gain = gain;
            best = v;
        }
    }
    let mut v = best;
    for _ in 0..500 {
        let w = a.transpose() * (a * &v);
        let norm = w.norm();
        if norm == 0.0 {
            return 0.0;
        }
        v = w / norm;
    }
    (a * v).norm()
}

/// Solves A^T P + P A = -Q by assembling the n^2 x n^2 linear system with
/// index arithmetic and running plain Gaussian elimination on it.
pub fn lyapunov_oracle(a: &DMatrix<f64>, q: &DMatrix<f64>) -> DMatrix<f64> {
    let n = a.nrows();
    let nn = n * n;
    // Unknown P[k, l] sits at column k + n*l (column-major flattening).
    let mut sys = vec![vec![0.0f64; nn + 1]; nn];
    for i in 0..n {
        for j in 0..n {
            let row = i + n * j;
            for k in 0..n {
                sys[row][k + n * j] += a[(k, i)];
                sys[row][i + n * k] += a[(k, j)];
            }
            sys[row][nn] = -q[(i, j)];
        }
    }
    let sol = gauss_solve(sys).expect("oracle system is nonsingular for Hurwitz inputs");
    DMatrix::from_fn(n, n, |i, j| sol[i + n * j])
}

/// Gaussian elimination with partial pivoting on an augmented system;
/// `None` when a pivot collapses.
fn gauss_solve(mut m: Vec<Vec<f64>>) -> Option<Vec<f64>> {
    let n = m.len();
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&r1, &r2| m[r1][col].abs().total_cmp(&m[r2][col].abs()))
            .unwrap();
        if m[pivot][col].abs() < 1e-11 {
            return None;
        }
        m.swap(col, pivot);
        for row in col + 1..n {
            let factor = m[row][col] / m[col][col];
            if factor != 0.0 {
                for k in col..=n {
                    let sub = factor * m[col][k];
                    m[row][k] -= sub;
                }
            }
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let mut acc = m[row][n];
        for k in row + 1..n {
            acc -= m[row][k] * x[k];
        }
        x[row] = acc / m[row][row];
    }
    Some(x)
}

/// Visits every k-combination of 0..m in lexicographic order.
pub fn for_each_combination(m: usize, k: usize, f: &mut dyn FnMut(&[usize])) {
    if k > m {
        return;
    }
    if k == 0 {
        f(&[]);
        return;
    }
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        f(&idx);
        let mut i = k - 1;
        while idx[i] == m - k + i {
            if i == 0 {
                return;
            }
            i -= 1;
        }
        idx[i] += 1;
        for j in i + 1..k {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

/// Brute-force linear program over {rows: a.x <= b} with implicit floors
/// x_i >= 1: enumerates every choice of n active constraints, solves it as
/// an equality system, keeps feasible candidates, and returns the point and
/// value minimizing the objective. Exact on nonempty bounded regions, which
/// always expose the optimum at such a vertex; `None` means infeasible.
pub fn lp_vertex_oracle(
    rows: &[(Vec<f64>, f64)],
    n: usize,
    objective: &[f64],
) -> Option<(Vec<f64>, f64)> {
    let mut cons: Vec<(Vec<f64>, f64)> = rows.to_vec();
    for i in 0..n {
        let mut a = vec![0.0; n];
        a[i] = -1.0;
        cons.push((a, -1.0));
    }
    let mut best: Option<(Vec<f64>, f64)> = None;
    for_each_combination(cons.len(), n, &mut |set| {
        let aug: Vec<Vec<f64>> = set
            .iter()
            .map(|&ci| {
                let mut row = cons[ci].0.clone();
                row.push(cons[ci].1);
                row
            })
            .collect();
        let Some(x) = gauss_solve(aug) else {
            return;
        };
        let feasible = cons.iter().all(|(a, b)| dot(a, &x) <= b + 1e-7);
        if !feasible {
            return;
        }
        let value = dot(objective, &x);
        if best.as_ref().is_none_or(|(_, bv)| value < *bv) {
            best = Some((x, value));
        }
    });
    best
}

/// Smallest boundary value of the weighted block quadratic forms, by dense
/// direction sampling: min over blocks k and unit directions u of
/// c_k d_k^2 u^T P_k u.
pub fn boundary_min_oracle(
    c: &[f64],
    ps: &[DMatrix<f64>],
    ds: &[f64],
    samples_per_dim: &dyn Fn(usize) -> usize,
    seed: u64,
) -> f64 {
    let mut rng = rng(seed);
    let mut min = f64::INFINITY;
    for ((ck, p), d) in c.iter().zip(ps).zip(ds) {
        let n = p.nrows();
        for _ in 0..samples_per_dim(n) {
            let u = unit_vector(n, &mut rng);
            let form = (p * &u).dot(&u);
            min = min.min(ck * d * d * form);
        }
    }
    min
}
