use crate::error::{Error, Result};
use crate::sampler::LogDensity;

/// Position and momentum.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseState {
    pub z: Vec<f64>,
    pub p: Vec<f64>,
}

impl PhaseState {
    pub fn new(z: Vec<f64>, p: Vec<f64>) -> Result<Self> {
        if z.len() != p.len() {
            return Err(Error::DimensionMismatch {
                expected: z.len(),
                actual: p.len(),
            });
        }
        Ok(Self { z, p })
    }
}

pub(crate) fn kinetic(p: &[f64], mass_diag: &[f64]) -> f64 {
    0.5 * p.iter().zip(mass_diag).map(|(p, m)| p * p / m).sum::<f64>()
}

/// `H(z, p) = -ln π(z) + ½ Σ p_i² / m_i`.
pub fn hamiltonian(state: &PhaseState, mass_diag: &[f64], log_density: f64) -> Result<f64> {
    if mass_diag.len() != state.p.len() {
        return Err(Error::DimensionMismatch {
            expected: state.p.len(),
            actual: mass_diag.len(),
        });
    }
    if let Some(m) = mass_diag.iter().find(|m| !(**m > 0.0)) {
        return Err(Error::InvalidParameter(format!(
            "mass entry {m} is not positive"
        )));
    }
    Ok(-log_density + kinetic(&state.p, mass_diag))
}

/// A phase-space point with its cached log-density and gradient.
#[derive(Debug, Clone)]
pub(crate) struct Point {
    pub z: Vec<f64>,
    pub p: Vec<f64>,
    pub grad: Vec<f64>,
    pub logp: f64,
}

impl Point {
    pub fn at<T: LogDensity + ?Sized>(target: &T, z: Vec<f64>) -> Self {
        let mut grad = vec![0.0; z.len()];
        let logp = target.log_density_and_grad(&z, &mut grad);
        let p = vec![0.0; z.len()];
        Self { z, p, grad, logp }
    }

    pub fn energy(&self, mass_diag: &[f64]) -> f64 {
        let h = -self.logp + kinetic(&self.p, mass_diag);
        if h.is_nan() {
            f64::INFINITY
        } else {
            h
        }
    }

    /// One half-kick / drift / half-kick step. A negative `eps` integrates
    /// backwards in time.
    pub fn leapfrog<T: LogDensity + ?Sized>(&mut self, target: &T, eps: f64, mass_diag: &[f64]) {
        let half = 0.5 * eps;
        for (p, g) in self.p.iter_mut().zip(&self.grad) {
            *p += half * g;
        }
        for ((z, p), m) in self.z.iter_mut().zip(&self.p).zip(mass_diag) {
            *z += eps * p / m;
        }
        self.logp = target.log_density_and_grad(&self.z, &mut self.grad);
        for (p, g) in self.p.iter_mut().zip(&self.grad) {
            *p += half * g;
        }
    }

    pub fn is_finite(&self) -> bool {
        self.logp.is_finite() && self.grad.iter().all(|g| g.is_finite())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LeapfrogResult {
    pub state: PhaseState,
    pub log_density: f64,
    /// Set when the log-density or gradient became non-finite; integration
    /// stops at that step.
    pub divergent: bool,
}

/// Integrates `n_steps` leapfrog steps of size `step_size`.
pub fn leapfrog<T: LogDensity + ?Sized>(
    state: &PhaseState,
    step_size: f64,
    n_steps: usize,
    mass_diag: &[f64],
    target: &T,
) -> Result<LeapfrogResult> {
    if !(step_size > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "step size {step_size} must be positive"
        )));
    }
    if n_steps == 0 {
        return Err(Error::InvalidParameter(
            "at least one leapfrog step is required".into(),
        ));
    }
    if state.z.len() != state.p.len() || mass_diag.len() != state.z.len() {
        return Err(Error::DimensionMismatch {
            expected: state.z.len(),
            actual: mass_diag.len().min(state.p.len()),
        });
    }
    let mut point = Point::at(target, state.z.clone());
    point.p.copy_from_slice(&state.p);
    let mut divergent = !point.is_finite();
    if !divergent {
        for _ in 0..n_steps {
            point.leapfrog(target, step_size, mass_diag);
            if !point.is_finite() {
                divergent = true;
                break;
            }
        }
    }
    Ok(LeapfrogResult {
        log_density: point.logp,
        state: PhaseState {
            z: point.z,
            p: point.p,
        },
        divergent,
    })
}
