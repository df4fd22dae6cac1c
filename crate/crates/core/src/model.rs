//! Network model: linear subsystem blocks with polynomial perturbations,
//! scalar input/output channels, and bounded (possibly state-dependent)
//! coupling weights between them.
//!
//! Subsystem k evolves as `x_k' = A_k x_k + f_k(x_k) + B_k u_k` with output
//! `y_k = C_k x_k`; the network closes the loop through `u_k = sum_j L_kj y_j`
//! over k's neighbor set. All indices are zero-based.

use nalgebra::{DMatrix, DVector};

use crate::error::ModelError;

/// One monomial of a vector-valued polynomial: `coeff * prod_i x_i^e_i`
/// added to the `component`-th output coordinate.
#[derive(Debug, Clone, PartialEq)]
pub struct PolyTerm {
    pub coeff: f64,
    pub exponents: Vec<u32>,
    pub component: usize,
}

/// Polynomial perturbation of one subsystem, `R^arity -> R^arity`.
///
/// Every term must have total degree >= 2 so the perturbation vanishes to
/// first order at the origin and the linear part stays entirely in `A`.
#[derive(Debug, Clone, PartialEq)]
pub struct Polynomial {
    pub arity: usize,
    pub terms: Vec<PolyTerm>,
}

impl Polynomial {
    /// The zero perturbation on a state of dimension `arity`.
    pub fn zero(arity: usize) -> Self {
        Polynomial {
            arity,
            terms: Vec::new(),
        }
    }

    /// Convenience constructor for a scalar monomial `coeff * x^degree`.
    pub fn scalar_monomial(coeff: f64, degree: u32) -> Self {
        Polynomial {
            arity: 1,
            terms: vec![PolyTerm {
                coeff,
                exponents: vec![degree],
                component: 0,
            }],
        }
    }

    /// Evaluates the polynomial at `x` (length `arity`).
    pub fn eval(&self, x: &DVector<f64>) -> DVector<f64> {
        debug_assert_eq!(x.len(), self.arity);
        let mut out = DVector::zeros(self.arity);
        for term in &self.terms {
            let mut v = term.coeff;
            for (i, &e) in term.exponents.iter().enumerate() {
                if e > 0 {
                    v *= x[i].powi(e as i32);
                }
            }
            out[term.component] += v;
        }
        out
    }

    fn validate(&self, subsystem: usize) -> Result<(), ModelError> {
        for (i, term) in self.terms.iter().enumerate() {
            let fail = |context: String| ModelError::BadSubsystem { subsystem, context };
            if term.exponents.len() != self.arity {
                return Err(fail(format!(
                    "perturbation term {i} has {} exponents, state dimension is {}",
                    term.exponents.len(),
                    self.arity
                )));
            }
            if term.component >= self.arity.max(1) {
                return Err(fail(format!(
                    "perturbation term {i} targets component {} of a {}-dimensional state",
                    term.component, self.arity
                )));
            }
            if !term.coeff.is_finite() {
                return Err(fail(format!(
                    "perturbation term {i} has non-finite coefficient"
                )));
            }
            let degree: u32 = term.exponents.iter().sum();
            if degree < 2 {
                return Err(fail(format!(
                    "perturbation term {i} has total degree {degree}; the linear part belongs in A"
                )));
            }
        }
        Ok(())
    }
}

/// One subsystem block prior to network assembly.
#[derive(Debug, Clone, PartialEq)]
pub struct Subsystem {
    /// State matrix, n_k x n_k.
    pub a: DMatrix<f64>,
    /// Input column (scalar input channel).
    pub b: DVector<f64>,
    /// Output row coefficients (scalar output channel).
    pub c_row: DVector<f64>,
    /// Polynomial perturbation, vanishing to first order at the origin.
    pub f: Polynomial,
    /// Equilibrium component of this subsystem.
    pub x_star: DVector<f64>,
    /// Radius of the ball around `x_star` on which the perturbation bound
    /// is certified.
    pub d: f64,
    /// Optional storage matrix; when absent one is derived downstream.
    pub p: Option<DMatrix<f64>>,
}

impl Subsystem {
    pub fn dim(&self) -> usize {
        self.a.nrows()
    }

    fn validate(&self, index: usize) -> Result<(), ModelError> {
        let fail = |context: String| ModelError::BadSubsystem {
            subsystem: index,
            context,
        };
        let n = self.a.nrows();
        if n == 0 {
            return Err(fail("state dimension is zero".into()));
        }
        if self.a.ncols() != n {
            return Err(fail(format!("A is {}x{}", self.a.nrows(), self.a.ncols())));
        }
        if self.b.len() != n {
            return Err(fail(format!("B has length {}, expected {n}", self.b.len())));
        }
        if self.c_row.len() != n {
            return Err(fail(format!(
                "C has length {}, expected {n}",
                self.c_row.len()
            )));
        }
        if self.x_star.len() != n {
            return Err(fail(format!(
                "equilibrium has length {}, expected {n}",
                self.x_star.len()
            )));
        }
        if self.d <= 0.0 || !self.d.is_finite() {
            return Err(fail(format!(
                "ball radius must be positive, got {}",
                self.d
            )));
        }
        if let Some(p) = &self.p {
            if p.nrows() != n || p.ncols() != n {
                return Err(fail(format!(
                    "storage matrix is {}x{}, expected {n}x{n}",
                    p.nrows(),
                    p.ncols()
                )));
            }
        }
        if self.f.arity != n {
            return Err(fail(format!(
                "perturbation arity {} does not match state dimension {n}",
                self.f.arity
            )));
        }
        self.f.validate(index)?;
        if self.a.iter().any(|v| !v.is_finite())
            || self.b.iter().any(|v| !v.is_finite())
            || self.c_row.iter().any(|v| !v.is_finite())
            || self.x_star.iter().any(|v| !v.is_finite())
        {
            return Err(fail("non-finite entry in system data".into()));
        }
        Ok(())
    }
}

/// Functional form of one coupling weight `L_{to,from}`.
#[derive(Debug, Clone, PartialEq)]
pub enum CouplingForm {
    /// Fixed weight.
    Constant { value: f64 },
    /// `amplitude * sin(x[subsystem][component] + phase)`.
    SinOfState {
        amplitude: f64,
        subsystem: usize,
        component: usize,
        phase: f64,
    },
    /// `amplitude * cos(x[subsystem][component] + phase)`.
    CosOfState {
        amplitude: f64,
        subsystem: usize,
        component: usize,
        phase: f64,
    },
}

impl CouplingForm {
    /// True for forms whose weight changes with the network state.
    pub fn is_state_dependent(&self) -> bool {
        !matches!(self, CouplingForm::Constant { .. })
    }
}

/// Weighted edge feeding subsystem `from`'s output into subsystem `to`'s
/// input. `bound` is a certified magnitude bound on the weight.
#[derive(Debug, Clone, PartialEq)]
pub struct Coupling {
    pub to: usize,
    pub from: usize,
    pub form: CouplingForm,
    pub bound: f64,
}

/// Validated interconnection of subsystems.
#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    subsystems: Vec<Subsystem>,
    couplings: Vec<Coupling>,
    neighbor_sets: Vec<Vec<usize>>,
    offsets: Vec<usize>,
    total_dim: usize,
}

/// Per-subsystem norms of the closed-loop vector field at the declared
/// equilibrium, with weights evaluated at that state.
#[derive(Debug, Clone, PartialEq)]
pub struct EquilibriumCheck {
    pub residuals: Vec<f64>,
    /// True when state-dependent couplings make this a spot check at the
    /// equilibrium state rather than a check for all admissible weights.
    pub state_dependent_couplings: bool,
}

/// Assembles and validates a network: shape checks on every block, index and
/// duplicate checks on every coupling, and magnitude-versus-bound checks on
/// every weight form.
pub fn build_network(
    subsystems: Vec<Subsystem>,
    couplings: Vec<Coupling>,
) -> Result<Network, ModelError> {
    if subsystems.is_empty() {
        return Err(ModelError::BadSubsystem {
            subsystem: 0,
            context: "network has no subsystems".into(),
        });
    }
    for (k, sub) in subsystems.iter().enumerate() {
        sub.validate(k)?;
    }
    let count = subsystems.len();
    let mut seen = std::collections::HashSet::new();
    for (i, c) in couplings.iter().enumerate() {
        for idx in [c.to, c.from] {
            if idx >= count {
                return Err(ModelError::IndexOutOfRange {
                    index: i,
                    got: idx,
                    count,
                });
            }
        }
        if !seen.insert((c.to, c.from)) {
            return Err(ModelError::DuplicateCoupling {
                to: c.to,
                from: c.from,
            });
        }
        if c.bound < 0.0 || !c.bound.is_finite() {
            return Err(ModelError::BadCoupling {
                index: i,
                context: format!("bound must be finite and nonnegative, got {}", c.bound),
            });
        }
        let magnitude = match &c.form {
            CouplingForm::Constant { value } => value.abs(),
            CouplingForm::SinOfState {
                amplitude,
                subsystem,
                component,
                phase,
            }
            | CouplingForm::CosOfState {
                amplitude,
                subsystem,
                component,
                phase,
            } => {
                if *subsystem >= count {
                    return Err(ModelError::IndexOutOfRange {
                        index: i,
                        got: *subsystem,
                        count,
                    });
                }
                if *component >= subsystems[*subsystem].dim() {
                    return Err(ModelError::BadCoupling {
                        index: i,
                        context: format!(
                            "component {component} out of range for subsystem {subsystem}"
                        ),
                    });
                }
                if !phase.is_finite() {
                    return Err(ModelError::BadCoupling {
                        index: i,
                        context: "non-finite phase".into(),
                    });
                }
                amplitude.abs()
            }
        };
        if !magnitude.is_finite() {
            return Err(ModelError::BadCoupling {
                index: i,
                context: "non-finite weight magnitude".into(),
            });
        }
        if magnitude > c.bound {
            return Err(ModelError::BoundExceeded {
                index: i,
                value: magnitude,
                bound: c.bound,
            });
        }
    }

    let mut neighbor_sets = vec![Vec::new(); count];
    for c in &couplings {
        neighbor_sets[c.to].push(c.from);
    }
    for set in &mut neighbor_sets {
        set.sort_unstable();
    }
    let mut offsets = Vec::with_capacity(count);
    let mut total_dim = 0;
    for sub in &subsystems {
        offsets.push(total_dim);
        total_dim += sub.dim();
    }
    Ok(Network {
        subsystems,
        couplings,
        neighbor_sets,
        offsets,
        total_dim,
    })
}

impl Network {
    pub fn subsystem_count(&self) -> usize {
        self.subsystems.len()
    }

    pub fn subsystems(&self) -> &[Subsystem] {
        &self.subsystems
    }

    pub fn couplings(&self) -> &[Coupling] {
        &self.couplings
    }

    /// Source indices feeding subsystem `k`, sorted ascending.
    pub fn neighbors(&self, k: usize) -> &[usize] {
        &self.neighbor_sets[k]
    }

    /// Offset of subsystem `k`'s block in the flat state vector.
    pub fn offset(&self, k: usize) -> usize {
        self.offsets[k]
    }

    pub fn total_dim(&self) -> usize {
        self.total_dim
    }

    /// Block of `x` belonging to subsystem `k`.
    pub fn block(&self, x: &DVector<f64>, k: usize) -> DVector<f64> {
        x.rows(self.offsets[k], self.subsystems[k].dim()).into()
    }

    /// The declared equilibrium as one flat vector.
    pub fn equilibrium_flat(&self) -> DVector<f64> {
        let mut x = DVector::zeros(self.total_dim);
        for (k, sub) in self.subsystems.iter().enumerate() {
            x.rows_mut(self.offsets[k], sub.dim())
                .copy_from(&sub.x_star);
        }
        x
    }

    /// Copy of this network with the couplings at the given indices removed.
    /// Out-of-range indices are rejected.
    pub fn without_couplings(&self, removed: &[usize]) -> Result<Network, ModelError> {
        for &i in removed {
            if i >= self.couplings.len() {
                return Err(ModelError::IndexOutOfRange {
                    index: i,
                    got: i,
                    count: self.couplings.len(),
                });
            }
        }
        let kept: Vec<Coupling> = self
            .couplings
            .iter()
            .enumerate()
            .filter(|(i, _)| !removed.contains(i))
            .map(|(_, c)| c.clone())
            .collect();
        build_network(self.subsystems.clone(), kept)
    }
}

/// Evaluates one coupling weight at network state `x` and time `t`.
pub fn eval_coupling(net: &Network, coupling: &Coupling, x: &DVector<f64>, _t: f64) -> f64 {
    match &coupling.form {
        CouplingForm::Constant { value } => *value,
        CouplingForm::SinOfState {
            amplitude,
            subsystem,
            component,
            phase,
        } => amplitude * (x[net.offsets[*subsystem] + component] + phase).sin(),
        CouplingForm::CosOfState {
            amplitude,
            subsystem,
            component,
            phase,
        } => amplitude * (x[net.offsets[*subsystem] + component] + phase).cos(),
    }
}

/// Closed-loop vector field of the whole network at state `x`, time `t`.
pub fn eval_dynamics(net: &Network, x: &DVector<f64>, t: f64) -> Result<DVector<f64>, ModelError> {
    if x.len() != net.total_dim {
        return Err(ModelError::StateLength {
            got: x.len(),
            expected: net.total_dim,
        });
    }
    let mut dx = DVector::zeros(net.total_dim);
    for (k, sub) in net.subsystems.iter().enumerate() {
        let xk = net.block(x, k);
        let mut rhs = &sub.a * &xk + sub.f.eval(&xk);
        let mut u = 0.0;
        for c in net.couplings.iter().filter(|c| c.to == k) {
            let src = &net.subsystems[c.from];
            let yj = src.c_row.dot(&net.block(x, c.from));
            u += eval_coupling(net, c, x, t) * yj;
        }
        rhs += &sub.b * u;
        dx.rows_mut(net.offsets[k], sub.dim()).copy_from(&rhs);
    }
    Ok(dx)
}

/// Per-subsystem residual norms of the vector field at a candidate
/// equilibrium state (weights evaluated at that state, `t = 0`). With
/// state-dependent couplings present this is a spot check only, and the
/// result says so.
pub fn equilibrium_residual(
    net: &Network,
    x_star: &DVector<f64>,
) -> Result<EquilibriumCheck, ModelError> {
    let dx = eval_dynamics(net, x_star, 0.0)?;
    let residuals = (0..net.subsystem_count())
        .map(|k| net.block(&dx, k).norm())
        .collect();
    Ok(EquilibriumCheck {
        residuals,
        state_dependent_couplings: net.couplings.iter().any(|c| c.form.is_state_dependent()),
    })
}
