//! Dense small-matrix kernels the rest of the crate builds on.
//!
//! Everything here is sized for subsystem blocks and structure matrices of a
//! few dozen rows, so the implementations favour robustness and auditability
//! over asymptotic speed: a cyclic Jacobi eigensolver, a vectorized Lyapunov
//! solve, and a two-phase simplex with Bland's rule.

use nalgebra::{DMatrix, DVector};

use crate::error::NumericsError;

/// Absolute slack allowed when checking linear feasibility of a solution.
pub const FEASIBILITY_SLACK: f64 = 1e-9;

/// Relative residual allowed for eigendecomposition reconstruction.
pub const EIG_RESIDUAL_RTOL: f64 = 1e-8;

const JACOBI_MAX_SWEEPS: usize = 64;
const LP_PIVOT_EPS: f64 = 1e-9;

/// Eigenvalues of a symmetric matrix, sorted ascending.
#[derive(Debug, Clone, PartialEq)]
pub struct SymEig {
    pub eigenvalues: Vec<f64>,
    pub min: f64,
    pub max: f64,
}

/// Full symmetric eigendecomposition; `vectors` has eigenvectors as columns,
/// ordered to match `eigenvalues` (ascending).
#[derive(Debug, Clone)]
pub struct SymEigFull {
    pub eigenvalues: Vec<f64>,
    pub vectors: DMatrix<f64>,
}

/// Eigendecomposition of a symmetric matrix via cyclic Jacobi rotations.
///
/// The input is symmetrized by averaging before solving; the only shape
/// requirement is squareness. Rotations repeat in sweeps until the sum of
/// off-diagonal magnitudes falls below machine-level noise relative to the
/// matrix scale.
pub fn sym_eig(s: &DMatrix<f64>) -> Result<SymEig, NumericsError> {
    let full = sym_eig_full(s)?;
    let min = full.eigenvalues[0];
    let max = *full.eigenvalues.last().expect("nonempty spectrum");
    Ok(SymEig {
        eigenvalues: full.eigenvalues,
        min,
        max,
    })
}

/// Like [`sym_eig`], but also returns the accumulated rotation matrix so
/// callers can check the reconstruction residual `S - Q diag(w) Q^T`.
pub fn sym_eig_full(s: &DMatrix<f64>) -> Result<SymEigFull, NumericsError> {
    let n = s.nrows();
    if n != s.ncols() {
        return Err(NumericsError::NotSquare {
            rows: s.nrows(),
            cols: s.ncols(),
        });
    }
    if n == 0 {
        return Err(NumericsError::DimensionMismatch {
            context: "eigendecomposition of an empty matrix".into(),
        });
    }

    // Work on the symmetric average; asymmetry within tolerance is expected
    // from accumulated round-off in callers.
    let mut a = DMatrix::from_fn(n, n, |i, j| 0.5 * (s[(i, j)] + s[(j, i)]));
    let mut q = DMatrix::identity(n, n);
    let scale: f64 = a.iter().map(|v| v * v).sum::<f64>().sqrt().max(1.0);

    for _sweep in 0..JACOBI_MAX_SWEEPS {
        let off: f64 = (0..n)
            .flat_map(|p| (p + 1..n).map(move |r| (p, r)))
            .map(|(p, r)| a[(p, r)].abs())
            .sum();
        if off <= 1e-15 * scale {
            let mut pairs: Vec<(f64, usize)> = (0..n).map(|i| (a[(i, i)], i)).collect();
            pairs.sort_by(|x, y| x.0.total_cmp(&y.0));
            let eigenvalues: Vec<f64> = pairs.iter().map(|p| p.0).collect();
            let mut vectors = DMatrix::zeros(n, n);
            for (dst, &(_, src)) in pairs.iter().enumerate() {
                vectors.set_column(dst, &q.column(src));
            }
            return Ok(SymEigFull {
                eigenvalues,
                vectors,
            });
        }
        for p in 0..n - 1 {
            for r in p + 1..n {
                let apr = a[(p, r)];
                if apr.abs() <= 1e-18 * scale {
                    a[(p, r)] = 0.0;
                    a[(r, p)] = 0.0;
                    continue;
                }
                // Classic rotation choice: the smaller root of t^2 + 2t*theta - 1
                // keeps the rotation angle below pi/4 for stability.
                let theta = (a[(r, r)] - a[(p, p)]) / (2.0 * apr);
                let t = if theta >= 0.0 {
                    1.0 / (theta + (1.0 + theta * theta).sqrt())
                } else {
                    -1.0 / (-theta + (1.0 + theta * theta).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let sn = t * c;
                let tau = sn / (1.0 + c);
                let h = t * apr;

                a[(p, p)] -= h;
                a[(r, r)] += h;
                a[(p, r)] = 0.0;
                a[(r, p)] = 0.0;
                for j in 0..n {
                    if j != p && j != r {
                        let ajp = a[(j, p)];
                        let ajr = a[(j, r)];
                        a[(j, p)] = ajp - sn * (ajr + tau * ajp);
                        a[(j, r)] = ajr + sn * (ajp - tau * ajr);
                        a[(p, j)] = a[(j, p)];
                        a[(r, j)] = a[(j, r)];
                    }
                }
                for j in 0..n {
                    let qjp = q[(j, p)];
                    let qjr = q[(j, r)];
                    q[(j, p)] = qjp - sn * (qjr + tau * qjp);
                    q[(j, r)] = qjr + sn * (qjp - tau * qjr);
                }
            }
        }
    }
    Err(NumericsError::NoConvergence {
        sweeps: JACOBI_MAX_SWEEPS,
    })
}

/// Induced 2-norm (largest singular value) of a rectangular matrix, computed
/// as the square root of the top eigenvalue of the smaller Gram matrix.
pub fn spectral_norm(x: &DMatrix<f64>) -> f64 {
    if x.nrows() == 0 || x.ncols() == 0 {
        return 0.0;
    }
    let gram = if x.ncols() <= x.nrows() {
        x.transpose() * x
    } else {
        x * x.transpose()
    };
    let eig = sym_eig(&gram).expect("gram matrix is square and nonempty");
    eig.max.max(0.0).sqrt()
}

/// Solves the continuous Lyapunov equation `A^T P + P A = -Q` for symmetric
/// `Q` by vectorizing to the n^2 x n^2 system
/// `(I (x) A^T + A^T (x) I) vec(P) = -vec(Q)` and factoring it with dense LU.
///
/// Returns the symmetrized solution. Fails with [`NumericsError::NoSolution`]
/// when the linear system is singular (eigenvalue pairing `l_i + l_j = 0`,
/// which includes every non-Hurwitz `A` with `Q` positive definite) or when
/// the recovered `P` is not positive definite or leaves a large residual.
pub fn solve_lyapunov(a: &DMatrix<f64>, q: &DMatrix<f64>) -> Result<DMatrix<f64>, NumericsError> {
    let n = a.nrows();
    if n != a.ncols() {
        return Err(NumericsError::NotSquare {
            rows: a.nrows(),
            cols: a.ncols(),
        });
    }
    if q.nrows() != n || q.ncols() != n {
        return Err(NumericsError::DimensionMismatch {
            context: format!(
                "right-hand side is {}x{}, expected {}x{}",
                q.nrows(),
                q.ncols(),
                n,
                n
            ),
        });
    }
    if n == 0 {
        return Err(NumericsError::DimensionMismatch {
            context: "empty Lyapunov system".into(),
        });
    }

    let at = a.transpose();
    let eye = DMatrix::<f64>::identity(n, n);
    let k = eye.kronecker(&at) + at.kronecker(&eye);
    let rhs = DVector::from_fn(n * n, |idx, _| {
        let (i, j) = (idx % n, idx / n);
        -q[(i, j)]
    });

    let lu = k.lu();
    let vec_p = lu
        .solve(&rhs)
        .ok_or_else(|| NumericsError::NoSolution("vectorized system is singular".into()))?;

    let mut p = DMatrix::from_fn(n, n, |i, j| vec_p[j * n + i]);
    p = 0.5 * (&p + p.transpose());

    let residual = &at * &p + &p * a + q;
    let q_norm = spectral_norm(q).max(f64::MIN_POSITIVE);
    if spectral_norm(&residual) > FEASIBILITY_SLACK * q_norm {
        return Err(NumericsError::NoSolution(
            "residual too large; system is near-singular".into(),
        ));
    }
    let p_eig = sym_eig(&p)?;
    if p_eig.min <= 0.0 {
        return Err(NumericsError::NoSolution(format!(
            "solution is not positive definite (min eigenvalue {})",
            p_eig.min
        )));
    }
    Ok(p)
}

/// Matrix measure induced by the max-row-sum norm:
/// `max_i (a_ii + sum_{j != i} |a_ij|)`. Upper-bounds the spectral abscissa.
pub fn matrix_measure_inf(a: &DMatrix<f64>) -> f64 {
    assert_eq!(a.nrows(), a.ncols(), "matrix measure needs a square matrix");
    (0..a.nrows())
        .map(|i| {
            let off: f64 = (0..a.ncols())
                .filter(|&j| j != i)
                .map(|j| a[(i, j)].abs())
                .sum();
            a[(i, i)] + off
        })
        .fold(f64::NEG_INFINITY, f64::max)
}

/// One linear inequality `coeffs . c <= rhs` over the decision variables.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearConstraint {
    pub coeffs: Vec<f64>,
    pub rhs: f64,
}

/// Outcome of a linear feasibility/minimization problem.
#[derive(Debug, Clone, PartialEq)]
pub enum LpStatus {
    Feasible,
    Infeasible,
}

/// Result of [`lp_feasible`]. When feasible, `solution` holds a vertex with
/// every variable at least 1.
#[derive(Debug, Clone, PartialEq)]
pub struct FeasibilityResult {
    pub status: LpStatus,
    pub solution: Option<Vec<f64>>,
}

/// Minimizes `objective . c` subject to the given inequality rows and the
/// built-in floor `c_k >= 1` for every variable.
///
/// Two-phase tableau simplex with Bland's anti-cycling rule. An unbounded
/// phase-2 objective is reported as `Feasible` with the vertex reached when
/// unboundedness was detected; callers that rely on optimality must arrange
/// bounded objectives.
pub fn lp_feasible(
    rows: &[LinearConstraint],
    n_vars: usize,
    objective: &[f64],
) -> FeasibilityResult {
    assert_eq!(
        objective.len(),
        n_vars,
        "objective length must match n_vars"
    );
    for (i, row) in rows.iter().enumerate() {
        assert_eq!(row.coeffs.len(), n_vars, "constraint {i} has wrong arity");
    }
    if n_vars == 0 {
        let ok = rows.iter().all(|r| r.rhs >= -FEASIBILITY_SLACK);
        return FeasibilityResult {
            status: if ok {
                LpStatus::Feasible
            } else {
                LpStatus::Infeasible
            },
            solution: ok.then(Vec::new),
        };
    }

    // Substitute x = c - 1 so the floors become x >= 0.
    let shifted: Vec<(Vec<f64>, f64)> = rows
        .iter()
        .map(|r| {
            let shift: f64 = r.coeffs.iter().sum();
            (r.coeffs.clone(), r.rhs - shift)
        })
        .collect();

    match simplex_min(&shifted, n_vars, objective) {
        Some(x) => FeasibilityResult {
            status: LpStatus::Feasible,
            solution: Some(x.iter().map(|v| v + 1.0).collect()),
        },
        None => FeasibilityResult {
            status: LpStatus::Infeasible,
            solution: None,
        },
    }
}

/// Minimizes `obj . x` over `{rows: a.x <= b, x >= 0}`; `None` = infeasible.
fn simplex_min(rows: &[(Vec<f64>, f64)], n: usize, obj: &[f64]) -> Option<Vec<f64>> {
    let m = rows.len();
    let n_slack = m;
    // Artificial variables are needed for rows whose slack basis would start
    // negative (rhs < 0 after normalizing to equality form).
    let need_artificial: Vec<bool> = rows.iter().map(|(_, b)| *b < 0.0).collect();
    let n_art: usize = need_artificial.iter().filter(|&&x| x).count();
    let n_total = n + n_slack + n_art;

    // Tableau: m rows of [structural | slack | artificial | rhs].
    let mut t = vec![vec![0.0; n_total + 1]; m];
    let mut basis = vec![0usize; m];
    let mut art_idx = n + n_slack;
    for (i, (coeffs, b)) in rows.iter().enumerate() {
        let sign = if need_artificial[i] { -1.0 } else { 1.0 };
        for j in 0..n {
            t[i][j] = sign * coeffs[j];
        }
        t[i][n + i] = sign;
        t[i][n_total] = sign * b;
        if need_artificial[i] {
            t[i][art_idx] = 1.0;
            basis[i] = art_idx;
            art_idx += 1;
        } else {
            basis[i] = n + i;
        }
    }

    if n_art > 0 {
        // Phase 1: minimize the sum of artificials.
        let mut phase1 = vec![0.0; n_total];
        phase1[n + n_slack..].fill(1.0);
        let value = run_phase(&mut t, &mut basis, &phase1, n_total, n_total);
        if value > FEASIBILITY_SLACK {
            return None;
        }
        // Pivot any artificial still basic (at zero level) out of the basis.
        for i in 0..m {
            if basis[i] >= n + n_slack {
                if let Some(j) = (0..n + n_slack).find(|&j| t[i][j].abs() > LP_PIVOT_EPS) {
                    pivot(&mut t, &mut basis, i, j, n_total);
                }
            }
        }
    }

    // Phase 2 over structural + slack columns only; artificial columns must
    // never re-enter the basis.
    let mut phase2 = vec![0.0; n_total];
    phase2[..n].copy_from_slice(obj);
    run_phase(&mut t, &mut basis, &phase2, n + n_slack, n_total);

    let mut x = vec![0.0; n];
    for (i, &b) in basis.iter().enumerate() {
        if b < n {
            x[b] = t[i][n_total];
        }
    }
    Some(x)
}

/// Runs simplex iterations for one phase and returns the final objective
/// value. Columns holding basic artificials stay eligible so phase 1 can
/// drive them out.
fn run_phase(
    t: &mut [Vec<f64>],
    basis: &mut [usize],
    cost: &[f64],
    max_entering: usize,
    n_total: usize,
) -> f64 {
    let m = t.len();
    // Reduced-cost row, kept in sync through pivots.
    let mut z = vec![0.0; n_total + 1];
    for j in 0..=n_total {
        let mut v = if j < n_total { -cost[j] } else { 0.0 };
        for i in 0..m {
            v += cost[basis[i]] * t[i][j];
        }
        z[j] = v;
    }

    loop {
        // Bland: entering column = lowest index with positive z_j (that is,
        // reduced cost c_j - z_j < 0 for a minimization).
        let entering = (0..max_entering).find(|&j| z[j] > LP_PIVOT_EPS);
        let Some(col) = entering else {
            return z[n_total];
        };
        // Leaving row: minimum ratio, ties broken by lowest basic index.
        let mut leave: Option<(usize, f64)> = None;
        for i in 0..m {
            if t[i][col] > LP_PIVOT_EPS {
                let ratio = t[i][n_total] / t[i][col];
                leave = match leave {
                    None => Some((i, ratio)),
                    Some((bi, br)) => {
                        if ratio < br - LP_PIVOT_EPS
                            || ((ratio - br).abs() <= LP_PIVOT_EPS && basis[i] < basis[bi])
                        {
                            Some((i, ratio))
                        } else {
                            Some((bi, br))
                        }
                    }
                };
            }
        }
        let Some((row, _)) = leave else {
            // Unbounded direction: stop at the current vertex.
            return z[n_total];
        };
        pivot_with_z(t, basis, &mut z, row, col, n_total);
    }
}

// Index loops: row `row` is both scaled in place and read against every
// other row, which iterators cannot borrow simultaneously.
#[allow(clippy::needless_range_loop)]
fn pivot(t: &mut [Vec<f64>], basis: &mut [usize], row: usize, col: usize, n_total: usize) {
    let m = t.len();
    let p = t[row][col];
    for j in 0..=n_total {
        t[row][j] /= p;
    }
    for i in 0..m {
        if i != row && t[i][col].abs() > 0.0 {
            let f = t[i][col];
            for j in 0..=n_total {
                t[i][j] -= f * t[row][j];
            }
        }
    }
    basis[row] = col;
}

fn pivot_with_z(
    t: &mut [Vec<f64>],
    basis: &mut [usize],
    z: &mut [f64],
    row: usize,
    col: usize,
    n_total: usize,
) {
    pivot(t, basis, row, col, n_total);
    let f = z[col];
    if f != 0.0 {
        for j in 0..=n_total {
            z[j] -= f * t[row][j];
        }
    }
}
