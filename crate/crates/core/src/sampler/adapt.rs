use std::ops::Range;

use rand::Rng;

use crate::sampler::integrator::Point;
use crate::sampler::transition::sample_momentum;
use crate::sampler::LogDensity;

/// Nesterov dual averaging of `ln ε` toward a target acceptance statistic.
#[derive(Debug, Clone, PartialEq)]
pub struct DualAveraging {
    pub target: f64,
    pub gamma: f64,
    pub t0: f64,
    pub kappa: f64,
    mu: f64,
    counter: f64,
    h_bar: f64,
    log_eps_bar: f64,
    log_eps: f64,
}

impl DualAveraging {
    pub fn new(step_size: f64, target: f64) -> Self {
        let mut da = Self {
            target,
            gamma: 0.05,
            t0: 10.0,
            kappa: 0.75,
            mu: 0.0,
            counter: 0.0,
            h_bar: 0.0,
            log_eps_bar: 0.0,
            log_eps: 0.0,
        };
        da.restart(step_size);
        da
    }

    /// Clears the running averages and re-centres on `10·step_size`.
    pub fn restart(&mut self, step_size: f64) {
        self.mu = (10.0 * step_size).ln();
        self.counter = 0.0;
        self.h_bar = 0.0;
        self.log_eps_bar = 0.0;
        self.log_eps = step_size.ln();
    }

    /// Feeds one acceptance statistic and returns the next step size.
    pub fn update(&mut self, accept_stat: f64) -> f64 {
        let accept = if accept_stat.is_nan() {
            0.0
        } else {
            accept_stat.min(1.0)
        };
        self.counter += 1.0;
        let t = self.counter;
        let eta = 1.0 / (t + self.t0);
        self.h_bar = (1.0 - eta) * self.h_bar + eta * (self.target - accept);
        self.log_eps = self.mu - t.sqrt() / self.gamma * self.h_bar;
        let w = t.powf(-self.kappa);
        self.log_eps_bar = w * self.log_eps + (1.0 - w) * self.log_eps_bar;
        self.log_eps.exp()
    }

    pub fn step_size(&self) -> f64 {
        self.log_eps.exp()
    }

    /// The averaged iterate, used once warmup ends.
    pub fn final_step_size(&self) -> f64 {
        self.log_eps_bar.exp()
    }
}

/// Running per-coordinate mean and variance.
#[derive(Debug, Clone)]
pub(crate) struct Welford {
    n: usize,
    mean: Vec<f64>,
    m2: Vec<f64>,
}

impl Welford {
    pub fn new(dim: usize) -> Self {
        Self {
            n: 0,
            mean: vec![0.0; dim],
            m2: vec![0.0; dim],
        }
    }

    pub fn add(&mut self, x: &[f64]) {
        self.n += 1;
        let n = self.n as f64;
        for ((m, s), x) in self.mean.iter_mut().zip(&mut self.m2).zip(x) {
            let d = x - *m;
            *m += d / n;
            *s += d * (x - *m);
        }
    }

    /// Inverse of the regularised variance:
    /// `var ← n/(n+5)·var + 1e-3·5/(n+5)`.
    pub fn mass_diag(&self) -> Vec<f64> {
        let n = self.n as f64;
        self.m2
            .iter()
            .map(|s| {
                let var = s / (n - 1.0);
                let var = n / (n + 5.0) * var + 1e-3 * (5.0 / (n + 5.0));
                1.0 / var
            })
            .collect()
    }

    pub fn count(&self) -> usize {
        self.n
    }
}

/// Warmup layout: a fast initial buffer, doubling slow windows in which the
/// mass matrix is estimated, and a fast terminal buffer.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WarmupSchedule {
    pub n_warmup: usize,
    pub init_buffer: usize,
    pub term_buffer: usize,
    pub base_window: usize,
    windows: Vec<Range<usize>>,
}

impl WarmupSchedule {
    pub fn new(n_warmup: usize) -> Self {
        let (mut init, mut term, mut base) = (75, 50, 25);
        if n_warmup < 20 {
            return Self {
                n_warmup,
                init_buffer: n_warmup,
                term_buffer: 0,
                base_window: 0,
                windows: Vec::new(),
            };
        }
        if init + base + term > n_warmup {
            init = (0.15 * n_warmup as f64) as usize;
            term = (0.1 * n_warmup as f64) as usize;
            base = n_warmup - init - term;
        }
        let slow_end = n_warmup - term;
        let mut windows = Vec::new();
        let (mut start, mut size) = (init, base);
        while start < slow_end {
            let mut end = start + size;
            if end + 2 * size > slow_end {
                end = slow_end;
            }
            windows.push(start..end);
            start = end;
            size *= 2;
        }
        Self {
            n_warmup,
            init_buffer: init,
            term_buffer: term,
            base_window: base,
            windows,
        }
    }

    pub fn windows(&self) -> &[Range<usize>] {
        &self.windows
    }

    pub fn in_slow_window(&self, iteration: usize) -> bool {
        self.windows.iter().any(|w| w.contains(&iteration))
    }

    /// True at the last iteration of a slow window.
    pub fn is_window_end(&self, iteration: usize) -> bool {
        self.windows.iter().any(|w| w.end == iteration + 1)
    }
}

/// Doubles or halves `step_size` until the acceptance probability of a
/// single leapfrog step from `z` crosses 0.5.
pub fn find_reasonable_step_size<T: LogDensity + ?Sized, R: Rng + ?Sized>(
    target: &T,
    z: &[f64],
    step_size: f64,
    mass_diag: &[f64],
    rng: &mut R,
) -> f64 {
    let start = Point::at(target, z.to_vec());
    find_from_point(target, &start, step_size, mass_diag, rng)
}

pub(crate) fn find_from_point<T: LogDensity + ?Sized, R: Rng + ?Sized>(
    target: &T,
    start: &Point,
    step_size: f64,
    mass_diag: &[f64],
    rng: &mut R,
) -> f64 {
    let threshold = 0.5f64.ln();
    let mut eps = step_size;
    let mut direction = 0.0;
    for _ in 0..100 {
        let mut q = start.clone();
        sample_momentum(&mut q.p, mass_diag, rng);
        let h0 = q.energy(mass_diag);
        q.leapfrog(target, eps, mass_diag);
        let log_accept = h0 - q.energy(mass_diag);
        let log_accept = if log_accept.is_nan() {
            f64::NEG_INFINITY
        } else {
            log_accept
        };
        let d = if log_accept > threshold { 1.0 } else { -1.0 };
        if direction == 0.0 {
            direction = d;
        } else if d != direction {
            break;
        }
        let next = if direction > 0.0 {
            2.0 * eps
        } else {
            0.5 * eps
        };
        if !(1e-12..=1e7).contains(&next) {
            break;
        }
        eps = next;
    }
    eps
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampler::targets::DiagonalGaussian;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    #[test]
    fn dual_averaging_drives_toward_target() {
        // acceptance falls with log step size as a logistic curve
        let accept = |eps: f64| 1.0 / (1.0 + (2.0 * (eps.ln() - 0.3)).exp());
        let mut da = DualAveraging::new(1.0, 0.8);
        let mut eps = 1.0;
        for _ in 0..3000 {
            eps = da.update(accept(eps));
        }
        let solved = 0.3 + (1.0f64 / 0.8 - 1.0).ln() / 2.0;
        assert!((da.final_step_size().ln() - solved).abs() < 0.05);
    }

    #[test]
    fn welford_matches_two_pass() {
        let xs = [[1.0, 10.0], [2.0, 12.0], [4.0, 9.0], [7.0, 11.0]];
        let mut w = Welford::new(2);
        for x in &xs {
            w.add(x);
        }
        let col: Vec<f64> = xs.iter().map(|x| x[0]).collect();
        let var = crate::math::variance(&col);
        let n = 4.0;
        let expected = 1.0 / (n / (n + 5.0) * var + 1e-3 * 5.0 / (n + 5.0));
        assert!((w.mass_diag()[0] - expected).abs() < 1e-12);
        assert_eq!(w.count(), 4);
    }

    #[test]
    fn schedule_for_default_warmup() {
        let s = WarmupSchedule::new(1500);
        let ends: Vec<usize> = s.windows().iter().map(|w| w.end).collect();
        assert_eq!(s.windows()[0].start, 75);
        assert_eq!(ends, vec![100, 150, 250, 450, 1450]);
        assert!(s.is_window_end(1449));
        assert!(!s.in_slow_window(1460));
        assert!(!s.in_slow_window(10));
    }

    #[test]
    fn schedule_for_short_warmup() {
        let s = WarmupSchedule::new(100);
        assert_eq!((s.init_buffer, s.term_buffer), (15, 10));
        assert_eq!(s.windows(), std::slice::from_ref(&(15..90)));
        assert!(WarmupSchedule::new(10).windows().is_empty());
    }

    #[test]
    fn heuristic_scales_with_target_width() {
        let mut rng = ChaCha20Rng::seed_from_u64(5);
        let narrow = DiagonalGaussian {
            mean: vec![0.0; 4],
            sd: vec![0.01; 4],
        };
        let wide = DiagonalGaussian::standard(4);
        let e1 = find_reasonable_step_size(&narrow, &[0.0; 4], 1.0, &[1.0; 4], &mut rng);
        let e2 = find_reasonable_step_size(&wide, &[0.0; 4], 1.0, &[1.0; 4], &mut rng);
        assert!(e1 < 0.1 && e2 > 0.2, "{e1} {e2}");
    }
}
