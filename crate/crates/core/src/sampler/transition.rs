use rand::Rng;
use rand_distr::StandardNormal;

use crate::math::{dot, log_add_exp};
use crate::sampler::integrator::Point;
use crate::sampler::{LogDensity, TrajectoryPolicy};

/// Energy error beyond which a trajectory is declared divergent.
pub const DIVERGENCE_THRESHOLD: f64 = 1000.0;

/// Outcome of one HMC transition.
#[derive(Debug, Clone, PartialEq)]
pub struct Transition {
    pub z: Vec<f64>,
    pub log_density: f64,
    /// Mean Metropolis acceptance probability over the trajectory (NUTS) or
    /// the acceptance probability of the proposal (static).
    pub accept_stat: f64,
    pub divergent: bool,
    /// Number of completed doublings; 0 for the static policy.
    pub tree_depth: usize,
    pub n_steps: usize,
    /// Hamiltonian at the returned state.
    pub energy: f64,
}

/// One HMC transition from `z`.
pub fn hmc_step<T: LogDensity + ?Sized, R: Rng + ?Sized>(
    target: &T,
    z: &[f64],
    step_size: f64,
    mass_diag: &[f64],
    rng: &mut R,
    policy: TrajectoryPolicy,
) -> Transition {
    let start = Point::at(target, z.to_vec());
    let (point, t) = transition(target, &start, step_size, mass_diag, rng, policy);
    Transition { z: point.z, ..t }
}

pub(crate) fn sample_momentum<R: Rng + ?Sized>(p: &mut [f64], mass_diag: &[f64], rng: &mut R) {
    for (p, m) in p.iter_mut().zip(mass_diag) {
        let n: f64 = rng.sample(StandardNormal);
        *p = n * m.sqrt();
    }
}

/// Runs one transition from a cached point. The returned `Transition` has an
/// empty `z`; the position lives in the returned point.
pub(crate) fn transition<T: LogDensity + ?Sized, R: Rng + ?Sized>(
    target: &T,
    current: &Point,
    eps: f64,
    mass_diag: &[f64],
    rng: &mut R,
    policy: TrajectoryPolicy,
) -> (Point, Transition) {
    let mut start = current.clone();
    sample_momentum(&mut start.p, mass_diag, rng);
    match policy {
        TrajectoryPolicy::Nuts { max_tree_depth } => {
            nuts(target, start, eps, mass_diag, rng, max_tree_depth)
        }
        TrajectoryPolicy::Static { n_steps } => {
            static_hmc(target, start, eps, mass_diag, rng, n_steps)
        }
    }
}

fn static_hmc<T: LogDensity + ?Sized, R: Rng + ?Sized>(
    target: &T,
    start: Point,
    eps: f64,
    mass_diag: &[f64],
    rng: &mut R,
    nominal_steps: usize,
) -> (Point, Transition) {
    let jitter: f64 = rng.random_range(0.8..1.2);
    let n_steps = ((nominal_steps as f64 * jitter).round() as usize).max(1);
    let h0 = start.energy(mass_diag);

    let mut q = start.clone();
    let mut divergent = false;
    let mut taken = 0;
    for _ in 0..n_steps {
        q.leapfrog(target, eps, mass_diag);
        taken += 1;
        let h = q.energy(mass_diag);
        if !q.is_finite() || h - h0 > DIVERGENCE_THRESHOLD {
            divergent = true;
            break;
        }
    }
    let accept_prob = if divergent {
        0.0
    } else {
        (h0 - q.energy(mass_diag)).exp().min(1.0)
    };
    let u: f64 = rng.random();
    let chosen = if u < accept_prob { q } else { start };
    let energy = chosen.energy(mass_diag);
    let t = Transition {
        z: Vec::new(),
        log_density: chosen.logp,
        accept_stat: accept_prob,
        divergent,
        tree_depth: 0,
        n_steps: taken,
        energy,
    };
    (chosen, t)
}

struct Subtree {
    p_beg: Vec<f64>,
    p_end: Vec<f64>,
    sharp_beg: Vec<f64>,
    sharp_end: Vec<f64>,
    rho: Vec<f64>,
    log_weight: f64,
    sample: Point,
}

fn no_u_turn(sharp_minus: &[f64], sharp_plus: &[f64], rho: &[f64]) -> bool {
    dot(sharp_plus, rho) > 0.0 && dot(sharp_minus, rho) > 0.0
}

fn add(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

struct TreeBuilder<'a, T: ?Sized, R: ?Sized> {
    target: &'a T,
    mass_diag: &'a [f64],
    eps: f64,
    h0: f64,
    rng: &'a mut R,
    n_leapfrog: usize,
    sum_metro_prob: f64,
    divergent: bool,
}

impl<T: LogDensity + ?Sized, R: Rng + ?Sized> TreeBuilder<'_, T, R> {
    fn sharp(&self, p: &[f64]) -> Vec<f64> {
        p.iter().zip(self.mass_diag).map(|(p, m)| p / m).collect()
    }

    /// Extends `edge` by `2^depth` leapfrog steps in `direction`. Returns
    /// `None` when the extension diverged or made a U-turn internally.
    fn build(&mut self, depth: usize, edge: &mut Point, direction: f64) -> Option<Subtree> {
        if depth == 0 {
            edge.leapfrog(self.target, direction * self.eps, self.mass_diag);
            self.n_leapfrog += 1;
            let h = edge.energy(self.mass_diag);
            if h - self.h0 > DIVERGENCE_THRESHOLD {
                self.divergent = true;
            }
            let log_weight = self.h0 - h;
            self.sum_metro_prob += if log_weight > 0.0 {
                1.0
            } else {
                log_weight.exp()
            };
            if self.divergent {
                return None;
            }
            let sharp = self.sharp(&edge.p);
            return Some(Subtree {
                p_beg: edge.p.clone(),
                p_end: edge.p.clone(),
                sharp_beg: sharp.clone(),
                sharp_end: sharp,
                rho: edge.p.clone(),
                log_weight,
                sample: edge.clone(),
            });
        }

        let init = self.build(depth - 1, edge, direction)?;
        let fin = self.build(depth - 1, edge, direction)?;

        let log_weight = log_add_exp(init.log_weight, fin.log_weight);
        let take_final = if fin.log_weight > log_weight {
            true
        } else {
            let u: f64 = self.rng.random();
            u < (fin.log_weight - log_weight).exp()
        };

        let rho = add(&init.rho, &fin.rho);
        let persist = no_u_turn(&init.sharp_beg, &fin.sharp_end, &rho)
            && no_u_turn(&init.sharp_beg, &fin.sharp_beg, &add(&init.rho, &fin.p_beg))
            && no_u_turn(&init.sharp_end, &fin.sharp_end, &add(&fin.rho, &init.p_end));
        if !persist {
            return None;
        }
        Some(Subtree {
            p_beg: init.p_beg,
            sharp_beg: init.sharp_beg,
            p_end: fin.p_end,
            sharp_end: fin.sharp_end,
            rho,
            log_weight,
            sample: if take_final { fin.sample } else { init.sample },
        })
    }
}

fn nuts<T: LogDensity + ?Sized, R: Rng + ?Sized>(
    target: &T,
    start: Point,
    eps: f64,
    mass_diag: &[f64],
    rng: &mut R,
    max_tree_depth: usize,
) -> (Point, Transition) {
    let h0 = start.energy(mass_diag);
    let sharp0: Vec<f64> = start.p.iter().zip(mass_diag).map(|(p, m)| p / m).collect();

    let mut fwd_edge = start.clone();
    let mut bck_edge = start.clone();

    // outer edges of the whole tree
    let (mut p_fwd_fwd, mut p_bck_bck) = (start.p.clone(), start.p.clone());
    let (mut sharp_fwd_fwd, mut sharp_bck_bck) = (sharp0.clone(), sharp0);
    let mut rho = start.p.clone();
    let mut log_weight = 0.0;
    let mut sample = start;

    let mut builder = TreeBuilder {
        target,
        mass_diag,
        eps,
        h0,
        rng,
        n_leapfrog: 0,
        sum_metro_prob: 0.0,
        divergent: false,
    };

    let mut depth = 0;
    while depth < max_tree_depth {
        let forward = builder.rng.random::<f64>() > 0.5;
        // inner edges where the old tree meets the new subtree
        let (p_fwd_bck, p_bck_fwd, sharp_fwd_bck, sharp_bck_fwd);
        let (rho_fwd, rho_bck, sub);
        if forward {
            rho_bck = rho.clone();
            p_bck_fwd = p_fwd_fwd.clone();
            sharp_bck_fwd = sharp_fwd_fwd.clone();
            match builder.build(depth, &mut fwd_edge, 1.0) {
                Some(s) => sub = s,
                None => break,
            }
            p_fwd_bck = sub.p_beg.clone();
            sharp_fwd_bck = sub.sharp_beg.clone();
            p_fwd_fwd = sub.p_end.clone();
            sharp_fwd_fwd = sub.sharp_end.clone();
            rho_fwd = sub.rho.clone();
        } else {
            rho_fwd = rho.clone();
            p_fwd_bck = p_bck_bck.clone();
            sharp_fwd_bck = sharp_bck_bck.clone();
            match builder.build(depth, &mut bck_edge, -1.0) {
                Some(s) => sub = s,
                None => break,
            }
            p_bck_fwd = sub.p_beg.clone();
            sharp_bck_fwd = sub.sharp_beg.clone();
            p_bck_bck = sub.p_end.clone();
            sharp_bck_bck = sub.sharp_end.clone();
            rho_bck = sub.rho.clone();
        }
        depth += 1;

        // biased progressive sampling between the old tree and the new half
        if sub.log_weight > log_weight {
            sample = sub.sample;
        } else {
            let u: f64 = builder.rng.random();
            if u < (sub.log_weight - log_weight).exp() {
                sample = sub.sample;
            }
        }
        log_weight = log_add_exp(log_weight, sub.log_weight);

        rho = add(&rho_bck, &rho_fwd);
        let persist = no_u_turn(&sharp_bck_bck, &sharp_fwd_fwd, &rho)
            && no_u_turn(&sharp_bck_bck, &sharp_fwd_bck, &add(&rho_bck, &p_fwd_bck))
            && no_u_turn(&sharp_bck_fwd, &sharp_fwd_fwd, &add(&rho_fwd, &p_bck_fwd));
        if !persist {
            break;
        }
    }

    let energy = sample.energy(mass_diag);
    let t = Transition {
        z: Vec::new(),
        log_density: sample.logp,
        accept_stat: builder.sum_metro_prob / builder.n_leapfrog as f64,
        divergent: builder.divergent,
        tree_depth: depth,
        n_steps: builder.n_leapfrog,
        energy,
    };
    (sample, t)
}
