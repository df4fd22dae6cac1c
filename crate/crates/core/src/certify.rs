//! Network-level stability certification.
//!
//! The per-subsystem gains are condensed into an n-by-n structure matrix
//! whose sign pattern decides everything: if a positive diagonal scaling C
//! makes `M^T C + C M` negative definite, the weighted sum of subsystem
//! storage functions decays along trajectories, and its sublevel set below
//! `v_min` (the smallest value the sum attains on the boundary of the
//! validity balls) is trapping. Certification of an initial state is then a
//! membership test, with an adaptation loop that reshapes the weights
//! toward a given state when the first certificate excludes it.

use nalgebra::{DMatrix, DVector};

use crate::error::CertifyError;
use crate::gains::{build_gain_set, GainSet};
use crate::model::Network;
use crate::numerics::{lp_feasible, sym_eig, LinearConstraint, LpStatus};

/// Strictness margin of the scaling inequalities: row sums of the scaled
/// symmetrized matrix must be at most `-SCALING_MARGIN`, so "negative"
/// survives floating point.
pub const SCALING_MARGIN: f64 = 1e-6;

/// Which coupling-gain matrix a structure matrix was built from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MatrixKind {
    /// Exact gains of constant couplings (state-dependent ones fall back
    /// to their declared bounds).
    Nominal,
    /// Declared worst-case bounds for every coupling.
    Robust,
}

/// The n-by-n stability bookkeeping matrix: diagonal entries are each
/// subsystem's net decay `-lambda_k + 2 mu_k`, off-diagonal entries the
/// nonnegative coupling gains.
#[derive(Debug, Clone, PartialEq)]
pub struct StructureMatrix {
    kind: MatrixKind,
    entries: DMatrix<f64>,
}

impl StructureMatrix {
    pub fn new(entries: DMatrix<f64>, kind: MatrixKind) -> Result<Self, CertifyError> {
        if entries.nrows() != entries.ncols() {
            return Err(CertifyError::BadInput {
                context: format!(
                    "structure matrix must be square, got {}x{}",
                    entries.nrows(),
                    entries.ncols()
                ),
            });
        }
        for i in 0..entries.nrows() {
            for j in 0..entries.ncols() {
                let v = entries[(i, j)];
                if !v.is_finite() {
                    return Err(CertifyError::BadInput {
                        context: format!("entry ({i}, {j}) is not finite"),
                    });
                }
                if i != j && v < 0.0 {
                    return Err(CertifyError::BadInput {
                        context: format!("off-diagonal entry ({i}, {j}) is negative ({v})"),
                    });
                }
            }
        }
        Ok(Self { kind, entries })
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn entries(&self) -> &DMatrix<f64> {
        &self.entries
    }

    pub fn kind(&self) -> MatrixKind {
        self.kind
    }
}

/// One record of the adaptation loop: the tolerance in force, whether the
/// scaling system admitted a solution, and the certificate values current
/// after the step.
#[derive(Debug, Clone, PartialEq)]
pub struct AdaptStep {
    pub step: usize,
    pub epsilon: f64,
    pub feasible: bool,
    pub v_x0: f64,
    pub v_min: f64,
}

/// A verified diagonal-scaling certificate.
#[derive(Debug, Clone, PartialEq)]
pub struct Certificate {
    pub kind: MatrixKind,
    /// Diagonal scaling, every entry >= 1.
    pub c: Vec<f64>,
    /// Smallest storage-sum value on the boundary of the validity balls;
    /// the certified trapping region is the sublevel set strictly below it.
    pub v_min: f64,
    /// Largest eigenvalue of the scaled symmetrized structure matrix;
    /// negative by construction.
    pub verify_eig: f64,
    /// Adaptation history; empty when the first certificate already decided.
    pub trace: Vec<AdaptStep>,
}

/// Why an assessment reached its verdict.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VerdictReason {
    /// The default-weight certificate already contains the initial state.
    InDominantRegion,
    /// A reweighted certificate found by the adaptation loop contains it.
    AdaptationSucceeded,
    /// The initial state leaves at least one validity ball; no claim can
    /// be made for it.
    NotInBallSet,
    /// Adaptation ran out of tolerance or iterations without admitting the
    /// state; the network itself is still certified stable.
    AdaptationExhausted,
    /// No diagonal scaling satisfies the row inequalities; the method is
    /// inconclusive for this network.
    NoScalingFound,
}

/// Assessment outcome for one network and initial state.
#[derive(Debug, Clone, PartialEq)]
pub struct Verdict {
    pub certified: bool,
    pub reason: VerdictReason,
    pub certificate: Option<Certificate>,
}

/// Scaling vector plus its eigenvalue check, before a certificate is
/// assembled around it.
#[derive(Debug, Clone, PartialEq)]
pub struct Scaling {
    pub c: Vec<f64>,
    pub verify_eig: f64,
}

/// Adaptation loop controls. Unset fields default to fractions of the
/// first certificate's `v_min`: starting tolerance one tenth of it, minimum
/// tolerance 1e-6 of it.
#[derive(Debug, Clone, PartialEq)]
pub struct AdaptOptions {
    pub epsilon0: Option<f64>,
    pub min_epsilon: Option<f64>,
    pub max_outer: usize,
}

impl Default for AdaptOptions {
    fn default() -> Self {
        Self {
            epsilon0: None,
            min_epsilon: None,
            max_outer: 50,
        }
    }
}

/// Options for a full assessment run.
#[derive(Debug, Clone, PartialEq)]
pub struct AssessOptions {
    pub kind: MatrixKind,
    /// Seed for the sampled perturbation bounds.
    pub seed: u64,
    pub adapt: AdaptOptions,
}

impl Default for AssessOptions {
    fn default() -> Self {
        Self {
            kind: MatrixKind::Nominal,
            seed: 42,
            adapt: AdaptOptions::default(),
        }
    }
}

/// Assembles the structure matrix from a gain set.
pub fn build_structure_matrix(gains: &GainSet, kind: MatrixKind) -> StructureMatrix {
    let n = gains.subsystem_count();
    let source = match kind {
        MatrixKind::Nominal => &gains.alpha,
        MatrixKind::Robust => &gains.alpha_bar,
    };
    let mut entries = source.clone();
    for (k, g) in gains.per_subsystem.iter().enumerate() {
        entries[(k, k)] = -g.lambda + 2.0 * g.mu;
    }
    debug_assert_eq!(entries.nrows(), n);
    StructureMatrix::new(entries, kind).expect("gain-derived entries are finite and nonnegative")
}

/// Row test: every diagonal entry plus the absolute off-diagonal row sum
/// must be negative. Returns the per-row margins for reporting.
pub fn is_diagonally_dominant(m: &StructureMatrix) -> (bool, Vec<f64>) {
    let e = m.entries();
    let margins: Vec<f64> = (0..e.nrows())
        .map(|k| {
            let off: f64 = (0..e.ncols())
                .filter(|&j| j != k)
                .map(|j| e[(k, j)].abs())
                .sum();
            e[(k, k)] + off
        })
        .collect();
    (margins.iter().all(|&v| v < 0.0), margins)
}

/// Row inequalities demanding that `M^T C + C M` has strictly negative row
/// sums: for each k, `2 c_k M_kk + sum_{j != k} (c_k M_kj + c_j M_jk)` at
/// most `-SCALING_MARGIN`. Coefficient vectors are padded to `n_vars`.
fn dominance_rows(entries: &DMatrix<f64>, n_vars: usize) -> Vec<LinearConstraint> {
    let n = entries.nrows();
    (0..n)
        .map(|k| {
            let mut coeffs = vec![0.0; n_vars];
            let mut own = 2.0 * entries[(k, k)];
            for j in 0..n {
                if j != k {
                    own += entries[(k, j)];
                    coeffs[j] = entries[(j, k)];
                }
            }
            coeffs[k] = own;
            LinearConstraint {
                coeffs,
                rhs: -SCALING_MARGIN,
            }
        })
        .collect()
}

fn verify_scaling(entries: &DMatrix<f64>, c: &[f64]) -> Result<f64, CertifyError> {
    let diag = DMatrix::from_diagonal(&DVector::from_column_slice(c));
    let s = entries.transpose() * &diag + &diag * entries;
    let eig = sym_eig(&s).map_err(|e| CertifyError::BadInput {
        context: format!("eigenvalue verification failed: {e}"),
    })?;
    if eig.max >= 0.0 {
        return Err(CertifyError::VerificationFailed { max_eig: eig.max });
    }
    Ok(eig.max)
}

/// Searches for a diagonal scaling making the symmetrized scaled matrix
/// negative definite, by linear feasibility over the row inequalities with
/// floors `c_k >= 1`, minimizing the weighted sum of the `c_k` (weights
/// default to ones). The returned scaling is always re-verified by an
/// eigenvalue check; row negativity of a symmetric matrix with nonnegative
/// off-diagonals already forces negative definiteness, so the check is a
/// guard, not a second chance.
pub fn find_scaling(m: &StructureMatrix, weights: Option<&[f64]>) -> Result<Scaling, CertifyError> {
    let n = m.dim();
    let w = match weights {
        Some(w) => {
            if w.len() != n {
                return Err(CertifyError::DimensionMismatch {
                    context: format!("{} weights for a {n}-subsystem matrix", w.len()),
                });
            }
            if w.iter().any(|v| !v.is_finite() || *v < 0.0) {
                return Err(CertifyError::BadInput {
                    context: "objective weights must be finite and nonnegative".into(),
                });
            }
            w.to_vec()
        }
        None => vec![1.0; n],
    };
    let rows = dominance_rows(m.entries(), n);
    let result = lp_feasible(&rows, n, &w);
    match result.status {
        LpStatus::Infeasible => Err(CertifyError::NoScalingFound),
        LpStatus::Feasible => {
            let c = result.solution.expect("feasible result carries a solution");
            let verify_eig = verify_scaling(m.entries(), &c)?;
            Ok(Scaling { c, verify_eig })
        }
    }
}

fn storage_min_eigs(gains: &GainSet) -> Vec<f64> {
    gains
        .per_subsystem
        .iter()
        .map(|g| {
            sym_eig(&g.p)
                .expect("validated storage matrices eigensolve")
                .min
        })
        .collect()
}

/// Smallest value the weighted storage sum attains on the boundary of the
/// validity balls: `min_k c_k d_k^2 lambda_min(P_k)`. The per-subsystem
/// decomposition makes the boundary minimization separable, and on one
/// sphere of radius d the quadratic form bottoms out at `d^2 lambda_min`.
pub fn v_min(c: &[f64], gains: &GainSet) -> f64 {
    debug_assert_eq!(c.len(), gains.subsystem_count());
    c.iter()
        .zip(storage_min_eigs(gains))
        .zip(&gains.per_subsystem)
        .map(|((ck, min_eig), g)| ck * g.d * g.d * min_eig)
        .fold(f64::INFINITY, f64::min)
}

/// Weighted storage sum `sum_k c_k (x_k - x*_k)^T P_k (x_k - x*_k)`.
pub fn lyapunov_value(x: &DVector<f64>, c: &[f64], gains: &GainSet, x_star: &DVector<f64>) -> f64 {
    let mut offset = 0;
    let mut total = 0.0;
    for (ck, g) in c.iter().zip(&gains.per_subsystem) {
        let nk = g.x_star.len();
        let dx = x.rows(offset, nk) - x_star.rows(offset, nk);
        total += ck * (&g.p * &dx).dot(&dx);
        offset += nk;
    }
    total
}

/// Concatenated equilibrium of all subsystems, in gain-set order.
pub fn equilibrium_of(gains: &GainSet) -> DVector<f64> {
    let total: usize = gains.per_subsystem.iter().map(|g| g.x_star.len()).sum();
    let mut x = DVector::zeros(total);
    let mut offset = 0;
    for g in &gains.per_subsystem {
        x.rows_mut(offset, g.x_star.len()).copy_from(&g.x_star);
        offset += g.x_star.len();
    }
    x
}

/// True when every subsystem block of `x` lies within its validity ball
/// (boundary included).
pub fn in_ball_set(x: &DVector<f64>, gains: &GainSet) -> bool {
    let mut offset = 0;
    for g in &gains.per_subsystem {
        let nk = g.x_star.len();
        if (x.rows(offset, nk) - &g.x_star).norm() > g.d {
            return false;
        }
        offset += nk;
    }
    true
}

/// Membership in the certified trapping region: inside every validity ball
/// and storage sum strictly below `v_min` (boundary values excluded).
pub fn in_invariant_set(x: &DVector<f64>, cert: &Certificate, gains: &GainSet) -> bool {
    in_ball_set(x, gains) && lyapunov_value(x, &cert.c, gains, &equilibrium_of(gains)) < cert.v_min
}

/// Reshapes the scaling toward a given initial state.
///
/// Step 1 re-solves the scaling system weighted by the state's
/// per-subsystem storage contributions, which minimizes the state's storage
/// sum outright. If the state is still excluded, each further step solves
/// the scaling system jointly with a floor variable `s` under
/// `sum_k w_k c_k <= theta * q_min * s` and `q_min * s <= q_k c_k` for all
/// k, where `q_k = d_k^2 lambda_min(P_k)` and `theta = 1 - epsilon /
/// v_min_previous`. Any solution satisfies `V(x0) <= theta * v_min(c) <
/// v_min(c)`, so a feasible step admits the state immediately, with a
/// certified gap of at least epsilon (the floors keep `v_min` from
/// shrinking below its step-1 value). Infeasibility halves epsilon; the
/// loop stops below the minimum tolerance or at the iteration cap.
pub fn adapt(
    m: &StructureMatrix,
    gains: &GainSet,
    x0: &DVector<f64>,
    opts: &AdaptOptions,
) -> Result<Verdict, CertifyError> {
    let n = gains.subsystem_count();
    if m.dim() != n {
        return Err(CertifyError::DimensionMismatch {
            context: format!("{}-row matrix against {n} subsystems", m.dim()),
        });
    }
    if !in_ball_set(x0, gains) {
        return Ok(Verdict {
            certified: false,
            reason: VerdictReason::NotInBallSet,
            certificate: None,
        });
    }

    let x_star = equilibrium_of(gains);
    let weights: Vec<f64> = {
        let mut w = Vec::with_capacity(n);
        let mut offset = 0;
        for g in &gains.per_subsystem {
            let nk = g.x_star.len();
            let dx = x0.rows(offset, nk) - &g.x_star;
            w.push((&g.p * &dx).dot(&dx));
            offset += nk;
        }
        w
    };

    let scaling = find_scaling(m, Some(&weights))?;
    let v_min_1 = v_min(&scaling.c, gains);
    let v_x0_1 = lyapunov_value(x0, &scaling.c, gains, &x_star);
    let mut trace = vec![AdaptStep {
        step: 1,
        epsilon: 0.0,
        feasible: true,
        v_x0: v_x0_1,
        v_min: v_min_1,
    }];
    if v_x0_1 < v_min_1 {
        return Ok(Verdict {
            certified: true,
            reason: VerdictReason::AdaptationSucceeded,
            certificate: Some(Certificate {
                kind: m.kind(),
                c: scaling.c,
                v_min: v_min_1,
                verify_eig: scaling.verify_eig,
                trace,
            }),
        });
    }

    let q = {
        let mins = storage_min_eigs(gains);
        gains
            .per_subsystem
            .iter()
            .zip(mins)
            .map(|(g, min_eig)| g.d * g.d * min_eig)
            .collect::<Vec<f64>>()
    };
    let q_min = q.iter().fold(f64::INFINITY, |m, &v| m.min(v));
    let mut epsilon = opts.epsilon0.unwrap_or(0.1 * v_min_1);
    let min_epsilon = opts.min_epsilon.unwrap_or(1e-6 * v_min_1);
    let v_min_prev = v_min_1;

    for step in 2..=opts.max_outer {
        if epsilon < min_epsilon {
            break;
        }
        let theta = 1.0 - epsilon / v_min_prev;

        // Variables c_1..c_n, s; all floored at 1.
        let mut rows = dominance_rows(m.entries(), n + 1);
        for k in 0..n {
            let mut coeffs = vec![0.0; n + 1];
            coeffs[k] = -q[k];
            coeffs[n] = q_min;
            rows.push(LinearConstraint { coeffs, rhs: 0.0 });
        }
        let mut ceiling = weights.clone();
        ceiling.push(-theta * q_min);
        rows.push(LinearConstraint {
            coeffs: ceiling,
            rhs: 0.0,
        });
        let mut objective = weights.clone();
        objective.push(-q_min);

        let result = lp_feasible(&rows, n + 1, &objective);
        match result.status {
            LpStatus::Feasible => {
                let solution = result.solution.expect("feasible result carries a solution");
                let c = solution[..n].to_vec();
                let verify_eig = verify_scaling(m.entries(), &c)?;
                let v_min_new = v_min(&c, gains);
                let v_x0_new = lyapunov_value(x0, &c, gains, &x_star);
                trace.push(AdaptStep {
                    step,
                    epsilon,
                    feasible: true,
                    v_x0: v_x0_new,
                    v_min: v_min_new,
                });
                if v_x0_new < v_min_new {
                    return Ok(Verdict {
                        certified: true,
                        reason: VerdictReason::AdaptationSucceeded,
                        certificate: Some(Certificate {
                            kind: m.kind(),
                            c,
                            v_min: v_min_new,
                            verify_eig,
                            trace,
                        }),
                    });
                }
                // Unreachable by construction; fall through to halving so a
                // pathological float outcome degrades instead of looping.
                epsilon *= 0.5;
            }
            LpStatus::Infeasible => {
                trace.push(AdaptStep {
                    step,
                    epsilon,
                    feasible: false,
                    v_x0: v_x0_1,
                    v_min: v_min_prev,
                });
                epsilon *= 0.5;
            }
        }
    }

    Ok(Verdict {
        certified: false,
        reason: VerdictReason::AdaptationExhausted,
        certificate: Some(Certificate {
            kind: m.kind(),
            c: scaling.c,
            v_min: v_min_1,
            verify_eig: scaling.verify_eig,
            trace,
        }),
    })
}

/// Full pipeline for one network and initial state: derive gains, build the
/// structure matrix, search for a scaling, test membership, adapt if the
/// default certificate excludes the state. The reason reports the first
/// decisive stage.
pub fn assess(
    net: &Network,
    x0: &DVector<f64>,
    opts: &AssessOptions,
) -> Result<Verdict, CertifyError> {
    if x0.len() != net.total_dim() {
        return Err(CertifyError::DimensionMismatch {
            context: format!(
                "initial state has {} entries, network has {}",
                x0.len(),
                net.total_dim()
            ),
        });
    }
    let gains = build_gain_set(net, opts.seed)?;
    let m = build_structure_matrix(&gains, opts.kind);
    let scaling = match find_scaling(&m, None) {
        Ok(s) => s,
        Err(CertifyError::NoScalingFound) => {
            return Ok(Verdict {
                certified: false,
                reason: VerdictReason::NoScalingFound,
                certificate: None,
            })
        }
        Err(e) => return Err(e),
    };
    let cert = Certificate {
        kind: opts.kind,
        v_min: v_min(&scaling.c, &gains),
        verify_eig: scaling.verify_eig,
        c: scaling.c,
        trace: Vec::new(),
    };
    if !in_ball_set(x0, &gains) {
        return Ok(Verdict {
            certified: false,
            reason: VerdictReason::NotInBallSet,
            certificate: Some(cert),
        });
    }
    if in_invariant_set(x0, &cert, &gains) {
        return Ok(Verdict {
            certified: true,
            reason: VerdictReason::InDominantRegion,
            certificate: Some(cert),
        });
    }
    adapt(&m, &gains, x0, &opts.adapt)
}

/// Re-assesses the network with each listed set of couplings removed.
/// Without an initial state the verdict reports whether a scaling exists at
/// all. Removing couplings can only zero gains, so certificates are
/// expected to survive; the sweep checks that instead of assuming it.
pub fn resilience_sweep(
    net: &Network,
    link_subsets: &[Vec<usize>],
    x0: Option<&DVector<f64>>,
    opts: &AssessOptions,
) -> Result<Vec<Verdict>, CertifyError> {
    link_subsets
        .iter()
        .map(|subset| {
            let reduced = net.without_couplings(subset)?;
            match x0 {
                Some(x0) => assess(&reduced, x0, opts),
                None => assess_network_only(&reduced, opts),
            }
        })
        .collect()
}

fn assess_network_only(net: &Network, opts: &AssessOptions) -> Result<Verdict, CertifyError> {
    let gains = build_gain_set(net, opts.seed)?;
    let m = build_structure_matrix(&gains, opts.kind);
    match find_scaling(&m, None) {
        Ok(scaling) => Ok(Verdict {
            certified: true,
            reason: VerdictReason::InDominantRegion,
            certificate: Some(Certificate {
                kind: opts.kind,
                v_min: v_min(&scaling.c, &gains),
                verify_eig: scaling.verify_eig,
                c: scaling.c,
                trace: Vec::new(),
            }),
        }),
        Err(CertifyError::NoScalingFound) => Ok(Verdict {
            certified: false,
            reason: VerdictReason::NoScalingFound,
            certificate: None,
        }),
        Err(e) => Err(e),
    }
}
