//! Fixed-step numerical integration of the coupled dynamics, used to check
//! certificates against actual trajectories rather than trusting the
//! algebra alone.

use nalgebra::DVector;

use crate::certify::{in_ball_set, in_invariant_set, lyapunov_value, Certificate};
use crate::error::SimError;
use crate::gains::GainSet;
use crate::model::{eval_dynamics, Network};

/// Per-step drift allowed before the storage sum counts as increasing,
/// as a fraction of its initial value.
pub const MONOTONE_RTOL: f64 = 1e-6;

/// Integration settings. `record_every` thins the stored samples; the final
/// state is always kept.
#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub dt: f64,
    pub t_end: f64,
    pub record_every: usize,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            dt: 1e-3,
            t_end: 5.0,
            record_every: 10,
        }
    }
}

impl SimConfig {
    fn validate(&self) -> Result<(), SimError> {
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(SimError::BadConfig {
                context: format!("dt must be a positive real, got {}", self.dt),
            });
        }
        if !(self.t_end.is_finite() && self.t_end >= self.dt) {
            return Err(SimError::BadConfig {
                context: format!("t_end must be at least dt, got {}", self.t_end),
            });
        }
        if self.record_every == 0 {
            return Err(SimError::BadConfig {
                context: "record_every must be at least 1".into(),
            });
        }
        Ok(())
    }
}

/// Sampled solution: strictly increasing times, one state per time, and the
/// storage sum at each sample when a certificate was attached.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<DVector<f64>>,
    pub v_values: Option<Vec<f64>>,
}

/// Outcome of checking a trajectory against a certificate: the storage sum
/// must never rise beyond per-step tolerance, and every sample must stay in
/// the validity balls and the certified sublevel set.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ValidationReport {
    pub v_monotone: bool,
    pub states_in_balls: bool,
    pub states_in_invariant_set: bool,
    /// Index of the first sample at which any of the three checks fails.
    pub first_violation: Option<usize>,
}

impl ValidationReport {
    pub fn all_hold(&self) -> bool {
        self.v_monotone && self.states_in_balls && self.states_in_invariant_set
    }
}

/// Classical fourth-order Runge-Kutta with a fixed step. Steps are laid out
/// as `round(t_end / dt)` equal intervals. A non-finite state aborts with
/// the last finite time.
pub fn integrate(
    net: &Network,
    x0: &DVector<f64>,
    cfg: &SimConfig,
    cert: Option<(&Certificate, &GainSet)>,
) -> Result<Trajectory, SimError> {
    cfg.validate()?;
    let steps = (cfg.t_end / cfg.dt).round().max(1.0) as usize;
    let dt = cfg.dt;

    let mut x = x0.clone();
    // Surfaces a wrong-length x0 before the loop; later calls cannot fail.
    eval_dynamics(net, &x, 0.0)?;

    let mut times = Vec::new();
    let mut states = Vec::new();
    let mut record = |t: f64, x: &DVector<f64>| {
        times.push(t);
        states.push(x.clone());
    };
    record(0.0, &x);

    for i in 0..steps {
        let t = i as f64 * dt;
        let k1 = eval_dynamics(net, &x, t)?;
        let k2 = eval_dynamics(net, &(&x + &k1 * (dt / 2.0)), t + dt / 2.0)?;
        let k3 = eval_dynamics(net, &(&x + &k2 * (dt / 2.0)), t + dt / 2.0)?;
        let k4 = eval_dynamics(net, &(&x + &k3 * dt), t + dt)?;
        x += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (dt / 6.0);
        if x.iter().any(|v| !v.is_finite()) {
            return Err(SimError::Divergence { last_finite_t: t });
        }
        let step_index = i + 1;
        if step_index % cfg.record_every == 0 || step_index == steps {
            record(step_index as f64 * dt, &x);
        }
    }

    let v_values = cert.map(|(c, gains)| {
        let x_star = crate::certify::equilibrium_of(gains);
        states
            .iter()
            .map(|s| lyapunov_value(s, &c.c, gains, &x_star))
            .collect()
    });

    Ok(Trajectory {
        times,
        states,
        v_values,
    })
}

/// Checks the recorded samples of a trajectory against a certificate.
/// Requires the trajectory to carry storage values.
pub fn validate_certificate(
    traj: &Trajectory,
    cert: &Certificate,
    gains: &GainSet,
) -> Result<ValidationReport, SimError> {
    let v = traj.v_values.as_ref().ok_or_else(|| SimError::BadConfig {
        context: "trajectory carries no storage values; integrate with a certificate".into(),
    })?;
    let tol = MONOTONE_RTOL * v.first().copied().unwrap_or(0.0);

    let mut v_monotone = true;
    let mut states_in_balls = true;
    let mut states_in_invariant_set = true;
    let mut first_violation = None;
    for (i, state) in traj.states.iter().enumerate() {
        let mut ok = true;
        if i > 0 && v[i] > v[i - 1] + tol {
            v_monotone = false;
            ok = false;
        }
        if !in_ball_set(state, gains) {
            states_in_balls = false;
            ok = false;
        }
        if !in_invariant_set(state, cert, gains) {
            states_in_invariant_set = false;
            ok = false;
        }
        if !ok && first_violation.is_none() {
            first_violation = Some(i);
        }
    }
    Ok(ValidationReport {
        v_monotone,
        states_in_balls,
        states_in_invariant_set,
        first_violation,
    })
}

/// Observed convergence order of the integrator on a scalar linear decay
/// with a known exact solution: errors at dt and dt/2 should shrink by
/// about two to the fourth.
pub fn convergence_order_check() -> f64 {
    use crate::model::{build_network, Polynomial, Subsystem};
    use nalgebra::DMatrix;

    let net = build_network(
        vec![Subsystem {
            a: DMatrix::from_element(1, 1, -1.0),
            b: DVector::from_element(1, 1.0),
            c_row: DVector::from_element(1, 1.0),
            f: Polynomial::zero(1),
            x_star: DVector::zeros(1),
            d: 10.0,
            p: None,
        }],
        vec![],
    )
    .expect("benchmark network is valid");
    let x0 = DVector::from_element(1, 1.0);
    let exact = (-1.0f64).exp();
    let error_at = |dt: f64| -> f64 {
        let cfg = SimConfig {
            dt,
            t_end: 1.0,
            record_every: usize::MAX,
        };
        let traj = integrate(&net, &x0, &cfg, None).expect("benchmark integrates");
        (traj.states.last().unwrap()[0] - exact).abs()
    };
    let coarse = error_at(0.1);
    let fine = error_at(0.05);
    (coarse / fine).log2()
}

/// Richardson-style self check without an exact solution: ratio of final
/// state changes when dt is halved twice. Returns nothing when the change
/// is identically zero (constant dynamics have no error to measure).
pub fn self_convergence_ratio(
    net: &Network,
    x0: &DVector<f64>,
    cfg: &SimConfig,
) -> Result<Option<f64>, SimError> {
    let run = |dt: f64| -> Result<DVector<f64>, SimError> {
        let cfg = SimConfig {
            dt,
            t_end: cfg.t_end,
            record_every: usize::MAX,
        };
        Ok(integrate(net, x0, &cfg, None)?
            .states
            .last()
            .unwrap()
            .clone())
    };
    let a = run(cfg.dt)?;
    let b = run(cfg.dt / 2.0)?;
    let c = run(cfg.dt / 4.0)?;
    let coarse = (&a - &b).norm();
    let fine = (&b - &c).norm();
    if coarse == 0.0 || fine == 0.0 {
        return Ok(None);
    }
    Ok(Some(coarse / fine))
}
