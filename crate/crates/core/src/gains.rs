//! Per-subsystem gains that condense each block's dynamics into three
//! numbers, plus the pairwise coupling gains between blocks.
//!
//! For subsystem k with storage matrix `P_k`:
//! - `lambda_k`: certified linear decay, `-lambda_max(A^T P + P A)`;
//! - `mu_k`: bound on `|(x - x*)^T P (f(x) - f(x*))| / |x - x*|^2` over the
//!   ball of radius `d_k`;
//! - `alpha_kj`: worst-case amplification `2 |P_k B_k L_kj C_j|` of neighbor
//!   j's output through k's input channel.
//!
//! The row test `-lambda_k + 2 mu_k + sum_j alpha_kj < 0` downstream is what
//! makes these three numbers sufficient.

use nalgebra::{DMatrix, DVector};
use rand::distributions::{Distribution, Uniform};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::GainError;
use crate::model::{Coupling, CouplingForm, Network, Polynomial, Subsystem};
use crate::numerics::{solve_lyapunov, spectral_norm, sym_eig};

/// Number of random ball samples used by the sampled perturbation bound.
pub const MU_RANDOM_SAMPLES: usize = 100_000;

/// Multiplicative safety factor applied to the sampled maximum.
pub const MU_SAFETY: f64 = 1.1;

/// Points closer to the center than this fraction of the radius are skipped
/// when sampling ratios (the quotient degenerates there).
pub const MU_CORE_EXCLUSION: f64 = 1e-6;

/// How a perturbation bound was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MuMethod {
    /// Closed form; exact for a scalar monomial around the origin.
    Analytic,
    /// Grid plus random sampling with a safety factor; an estimate.
    Sampled,
}

/// Condensed description of one subsystem.
#[derive(Debug, Clone, PartialEq)]
pub struct SubsystemGains {
    pub p: DMatrix<f64>,
    pub lambda: f64,
    pub mu: f64,
    pub d: f64,
    pub x_star: DVector<f64>,
    pub mu_method: MuMethod,
}

/// Gains for a whole network. `alpha` holds weight magnitudes evaluated
/// exactly where possible; `alpha_bar` uses the declared bounds. Entries of
/// state-dependent couplings fall back to the bound in `alpha` too and are
/// listed in `conservative_nominal`.
#[derive(Debug, Clone, PartialEq)]
pub struct GainSet {
    pub per_subsystem: Vec<SubsystemGains>,
    pub alpha: DMatrix<f64>,
    pub alpha_bar: DMatrix<f64>,
    pub conservative_nominal: Vec<(usize, usize)>,
}

impl GainSet {
    pub fn subsystem_count(&self) -> usize {
        self.per_subsystem.len()
    }
}

/// Storage matrix for one subsystem: the supplied one (validated symmetric
/// positive definite) or the solution of `A^T P + P A = -I`.
pub fn compute_p(sub: &Subsystem, index: usize) -> Result<DMatrix<f64>, GainError> {
    if let Some(p) = &sub.p {
        let scale = p.iter().fold(1.0f64, |m, v| m.max(v.abs()));
        let asym = (0..p.nrows())
            .flat_map(|i| (0..p.ncols()).map(move |j| (i, j)))
            .map(|(i, j)| (p[(i, j)] - p[(j, i)]).abs())
            .fold(0.0f64, f64::max);
        if asym > 1e-9 * scale {
            return Err(GainError::BadStorage {
                subsystem: index,
                context: format!("not symmetric (max asymmetry {asym:.3e})"),
            });
        }
        let eig = sym_eig(p).map_err(GainError::Numerics)?;
        if eig.min <= 0.0 {
            return Err(GainError::BadStorage {
                subsystem: index,
                context: format!("not positive definite (min eigenvalue {})", eig.min),
            });
        }
        return Ok(0.5 * (p + p.transpose()));
    }
    let n = sub.dim();
    solve_lyapunov(&sub.a, &DMatrix::identity(n, n)).map_err(|_| GainError::AssumptionViolation {
        subsystem: index,
        context: "no positive definite storage matrix exists; A is not Hurwitz".into(),
    })
}

/// Certified decay rate `-lambda_max(A^T P + P A)`; must be positive.
pub fn compute_lambda(a: &DMatrix<f64>, p: &DMatrix<f64>, index: usize) -> Result<f64, GainError> {
    let s = a.transpose() * p + p * a;
    let eig = sym_eig(&s).map_err(GainError::Numerics)?;
    if eig.max >= 0.0 {
        return Err(GainError::AssumptionViolation {
            subsystem: index,
            context: format!(
                "largest eigenvalue of A^T P + P A is {} (needs to be negative)",
                eig.max
            ),
        });
    }
    Ok(-eig.max)
}

/// Bound on the perturbation's quadratic-form ratio over the ball of radius
/// `d` around `x_star`.
///
/// A scalar monomial around the origin has the exact closed form
/// `|a| * P * d^(m-1)`; every other shape is estimated by taking the maximum
/// ratio over a deterministic grid and `MU_RANDOM_SAMPLES` random ball points
/// (seeded, reproducible), inflated by `MU_SAFETY`.
pub fn estimate_mu(
    f: &Polynomial,
    p: &DMatrix<f64>,
    x_star: &DVector<f64>,
    d: f64,
    seed: u64,
) -> (f64, MuMethod) {
    if f.terms.is_empty() {
        return (0.0, MuMethod::Analytic);
    }
    if f.arity == 1 && f.terms.len() == 1 && x_star[0] == 0.0 {
        let term = &f.terms[0];
        let m = term.exponents[0];
        let mu = term.coeff.abs() * p[(0, 0)] * d.powi(m as i32 - 1);
        return (mu, MuMethod::Analytic);
    }

    let n = f.arity;
    let f_star = f.eval(x_star);
    let ratio = |x: &DVector<f64>| -> f64 {
        let dx = x - x_star;
        let r2 = dx.norm_squared();
        if r2.sqrt() < MU_CORE_EXCLUSION * d {
            return 0.0;
        }
        let df = f.eval(x) - &f_star;
        (dx.transpose() * p * df)[(0, 0)].abs() / r2
    };

    let mut max_ratio: f64 = 0.0;

    // Deterministic grid over the bounding cube, filtered to the ball.
    let per_dim = ((MU_RANDOM_SAMPLES as f64).powf(1.0 / n as f64) as usize).clamp(5, 2001);
    let mut idx = vec![0usize; n];
    let mut x = DVector::zeros(n);
    loop {
        for i in 0..n {
            let frac = idx[i] as f64 / (per_dim - 1) as f64;
            x[i] = x_star[i] - d + 2.0 * d * frac;
        }
        if (&x - x_star).norm() <= d {
            max_ratio = max_ratio.max(ratio(&x));
        }
        let mut dim = 0;
        loop {
            idx[dim] += 1;
            if idx[dim] < per_dim {
                break;
            }
            idx[dim] = 0;
            dim += 1;
            if dim == n {
                break;
            }
        }
        if dim == n {
            break;
        }
    }

    // Random points uniform in the ball.
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let unit = Uniform::new(0.0f64, 1.0);
    for _ in 0..MU_RANDOM_SAMPLES {
        let mut dir = DVector::from_fn(n, |_, _| standard_normal(&mut rng));
        let norm = dir.norm();
        if norm == 0.0 {
            continue;
        }
        dir /= norm;
        let r = d * unit.sample(&mut rng).powf(1.0 / n as f64);
        let x = x_star + dir * r;
        max_ratio = max_ratio.max(ratio(&x));
    }

    (MU_SAFETY * max_ratio, MuMethod::Sampled)
}

fn standard_normal<R: Rng>(rng: &mut R) -> f64 {
    // Box-Muller; the log argument is kept away from zero.
    let u1: f64 = rng.gen_range(f64::MIN_POSITIVE..1.0);
    let u2: f64 = rng.gen_range(0.0..1.0);
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

/// Amplification gain of one coupling through the receiver's input channel.
///
/// With `robust` the declared bound stands in for the weight:
/// `2 * bound * |P b| * |c|`. Without it the weight must be constant and the
/// gain is the exact induced norm `2 * |P b L c^T|`.
pub fn coupling_gain(
    coupling: &Coupling,
    p_to: &DMatrix<f64>,
    b_to: &DVector<f64>,
    c_from: &DVector<f64>,
    robust: bool,
) -> Result<f64, GainError> {
    let pb = p_to * b_to;
    if robust {
        return Ok(2.0 * coupling.bound * pb.norm() * c_from.norm());
    }
    match &coupling.form {
        CouplingForm::Constant { value } => {
            let outer = (&pb * *value) * c_from.transpose();
            Ok(2.0 * spectral_norm(&outer))
        }
        _ => Err(GainError::StateDependentGain {
            to: coupling.to,
            from: coupling.from,
        }),
    }
}

/// Derives the full gain set for a network. `seed` feeds the sampled
/// perturbation bounds (subsystem k uses `seed + k`), so results are
/// reproducible.
pub fn build_gain_set(net: &Network, seed: u64) -> Result<GainSet, GainError> {
    let count = net.subsystem_count();
    let mut per_subsystem = Vec::with_capacity(count);
    for (k, sub) in net.subsystems().iter().enumerate() {
        let p = compute_p(sub, k)?;
        let lambda = compute_lambda(&sub.a, &p, k)?;
        let (mu, mu_method) =
            estimate_mu(&sub.f, &p, &sub.x_star, sub.d, seed.wrapping_add(k as u64));
        per_subsystem.push(SubsystemGains {
            p,
            lambda,
            mu,
            d: sub.d,
            x_star: sub.x_star.clone(),
            mu_method,
        });
    }

    let mut alpha = DMatrix::zeros(count, count);
    let mut alpha_bar = DMatrix::zeros(count, count);
    let mut conservative_nominal = Vec::new();
    for coupling in net.couplings() {
        let (k, j) = (coupling.to, coupling.from);
        let gains_k = &per_subsystem[k];
        let b_k = &net.subsystems()[k].b;
        let c_j = &net.subsystems()[j].c_row;
        let bar = coupling_gain(coupling, &gains_k.p, b_k, c_j, true)?;
        alpha_bar[(k, j)] = bar;
        alpha[(k, j)] = if coupling.form.is_state_dependent() {
            conservative_nominal.push((k, j));
            bar
        } else {
            coupling_gain(coupling, &gains_k.p, b_k, c_j, false)?
        };
    }
    Ok(GainSet {
        per_subsystem,
        alpha,
        alpha_bar,
        conservative_nominal,
    })
}
