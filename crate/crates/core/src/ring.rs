//! Built-in demonstration network: twenty scalar subsystems coupled in a
//! directed ring with state-dependent trigonometric weights. Used by the
//! command line front end and the test suite as a nontrivial end-to-end
//! fixture whose stability numbers are known in closed form.
//!
//! Subsystem k (zero-based) follows `x' = -10 x + a_k x^2 + u` with output
//! `y = x`, quadratic coefficients 0.9 for the first ten subsystems and
//! `(k + 1) / 20` for the rest. Each subsystem receives `1.9 sin(x_k)` times
//! its clockwise neighbor's output and `-1.8 cos(x_j)` times its
//! counter-clockwise neighbor j's output, cyclically closed.

use nalgebra::{DMatrix, DVector};

use crate::model::{build_network, Coupling, CouplingForm, Network, Polynomial, Subsystem};

/// Number of subsystems in the demonstration ring.
pub const RING_SIZE: usize = 20;

/// Validity-ball radius shared by all ring subsystems.
pub const RING_RADIUS: f64 = 6.0;

/// Quadratic coefficient of subsystem `k` (zero-based).
pub fn ring_quadratic_coeff(k: usize) -> f64 {
    assert!(k < RING_SIZE, "ring subsystem index out of range");
    if k < 10 {
        0.9
    } else {
        (k + 1) as f64 / 20.0
    }
}

/// Assembles the demonstration ring.
pub fn ring_network() -> Network {
    let subsystems = (0..RING_SIZE)
        .map(|k| Subsystem {
            a: DMatrix::from_element(1, 1, -10.0),
            b: DVector::from_element(1, 1.0),
            c_row: DVector::from_element(1, 1.0),
            f: Polynomial::scalar_monomial(ring_quadratic_coeff(k), 2),
            x_star: DVector::zeros(1),
            d: RING_RADIUS,
            p: Some(DMatrix::from_element(1, 1, 0.5)),
        })
        .collect();

    let mut couplings = Vec::with_capacity(2 * RING_SIZE);
    for k in 0..RING_SIZE {
        let next = (k + 1) % RING_SIZE;
        // Weight on the clockwise neighbor's output, gated by the
        // receiver's own state.
        couplings.push(Coupling {
            to: k,
            from: next,
            form: CouplingForm::SinOfState {
                amplitude: 1.9,
                subsystem: k,
                component: 0,
                phase: 0.0,
            },
            bound: 1.9,
        });
        // Weight on the counter-clockwise neighbor's output, gated by that
        // neighbor's state.
        couplings.push(Coupling {
            to: next,
            from: k,
            form: CouplingForm::CosOfState {
                amplitude: -1.8,
                subsystem: k,
                component: 0,
                phase: 0.0,
            },
            bound: 1.8,
        });
    }

    build_network(subsystems, couplings).expect("the built-in ring is a valid network")
}

/// The spread-out initial state `x_k(0) = 0.2 (k - 9)` (zero-based), running
/// from -1.8 on subsystem 0 to 2.0 on subsystem 19.
pub fn ring_initial_state() -> DVector<f64> {
    DVector::from_fn(RING_SIZE, |k, _| 0.2 * (k as f64 - 9.0))
}
