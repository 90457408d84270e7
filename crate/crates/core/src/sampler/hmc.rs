//! One Hamiltonian Monte Carlo chain: leapfrog integration with a diagonal
//! mass matrix, dual-averaging step-size adaptation toward a target
//! acceptance rate, and Stan-style expanding estimation windows for the mass
//! matrix during warmup.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::model::Model;

use super::SamplerConfig;

/// Energy error beyond which a trajectory is declared divergent.
const MAX_ENERGY_ERROR: f64 = 1000.0;
/// Nominal trajectory length; the number of leapfrog steps per iteration is
/// drawn uniformly from 1..=ceil(TRAJECTORY/eps) to break resonances.
const TRAJECTORY: f64 = 8.0;

pub(crate) struct ChainOutput {
    /// Retained draws on the constrained scale, draw-major.
    pub draws: Vec<f64>,
    pub divergent: Vec<bool>,
}

struct DualAveraging {
    mu: f64,
    log_eps: f64,
    log_eps_avg: f64,
    h_avg: f64,
    t: f64,
    target: f64,
}

impl DualAveraging {
    const GAMMA: f64 = 0.05;
    const T0: f64 = 10.0;
    const KAPPA: f64 = 0.75;

    fn new(eps: f64, target: f64) -> Self {
        DualAveraging {
            mu: (10.0 * eps).ln(),
            log_eps: eps.ln(),
            log_eps_avg: eps.ln(),
            h_avg: 0.0,
            t: 0.0,
            target,
        }
    }

    fn update(&mut self, accept_prob: f64) {
        self.t += 1.0;
        let w = 1.0 / (self.t + Self::T0);
        self.h_avg = (1.0 - w) * self.h_avg + w * (self.target - accept_prob);
        self.log_eps = self.mu - self.t.sqrt() / Self::GAMMA * self.h_avg;
        let eta = self.t.powf(-Self::KAPPA);
        self.log_eps_avg = eta * self.log_eps + (1.0 - eta) * self.log_eps_avg;
    }

    fn eps(&self) -> f64 {
        self.log_eps.exp()
    }

    fn averaged_eps(&self) -> f64 {
        self.log_eps_avg.exp()
    }
}

/// Welford accumulator for the diagonal posterior variance.
struct RunningVariance {
    n: usize,
    mean: Vec<f64>,
    m2: Vec<f64>,
}

impl RunningVariance {
    fn new(dim: usize) -> Self {
        RunningVariance {
            n: 0,
            mean: vec![0.0; dim],
            m2: vec![0.0; dim],
        }
    }

    fn push(&mut self, x: &[f64]) {
        self.n += 1;
        let n = self.n as f64;
        for (i, &xi) in x.iter().enumerate() {
            let d = xi - self.mean[i];
            self.mean[i] += d / n;
            self.m2[i] += d * (xi - self.mean[i]);
        }
    }

    /// Regularized variance estimate (shrunk toward 1e-3 as in Stan).
    fn regularized(&self) -> Vec<f64> {
        let n = self.n as f64;
        self.m2
            .iter()
            .map(|m2| {
                let var = m2 / (n - 1.0).max(1.0);
                (n / (n + 5.0)) * var + 1e-3 * (5.0 / (n + 5.0))
            })
            .collect()
    }
}

/// Warmup schedule: step-size-only buffers around expanding mass-matrix
/// estimation windows.
struct Schedule {
    window_ends: Vec<usize>,
    slow_start: usize,
    slow_end: usize,
}

impl Schedule {
    fn new(warmup: usize) -> Self {
        if warmup < 40 {
            return Schedule {
                window_ends: Vec::new(),
                slow_start: warmup,
                slow_end: warmup,
            };
        }
        let (mut init, mut term, mut base) = (75usize, 50usize, 25usize);
        if init + term + base > warmup {
            init = (0.15 * warmup as f64) as usize;
            term = (0.10 * warmup as f64) as usize;
            base = warmup - init - term;
        }
        let slow_end = warmup - term;
        let mut window_ends = Vec::new();
        let mut start = init;
        let mut size = base;
        loop {
            let mut end = start + size;
            // The last window absorbs the remainder.
            if end + 2 * size > slow_end {
                end = slow_end;
            }
            window_ends.push(end.min(slow_end));
            if end >= slow_end {
                break;
            }
            start = end;
            size *= 2;
        }
        Schedule {
            window_ends,
            slow_start: init,
            slow_end,
        }
    }
}

struct Hamiltonian<'m> {
    model: &'m Model,
    inv_mass: Vec<f64>,
}

impl<'m> Hamiltonian<'m> {
    fn kinetic(&self, p: &[f64]) -> f64 {
        0.5 * p
            .iter()
            .zip(&self.inv_mass)
            .map(|(pi, im)| pi * pi * im)
            .sum::<f64>()
    }

    fn sample_momentum(&self, rng: &mut ChaCha8Rng, out: &mut [f64]) {
        for (i, o) in out.iter_mut().enumerate() {
            let z: f64 = StandardNormal.sample(rng);
            *o = z / self.inv_mass[i].sqrt();
        }
    }

    /// One leapfrog step in place; returns the new log density.
    fn leapfrog(&self, q: &mut [f64], p: &mut [f64], grad: &mut [f64], eps: f64) -> f64 {
        for i in 0..q.len() {
            p[i] += 0.5 * eps * grad[i];
        }
        for i in 0..q.len() {
            q[i] += eps * self.inv_mass[i] * p[i];
        }
        let lp = self.model.eval(q, Some(grad));
        for i in 0..q.len() {
            p[i] += 0.5 * eps * grad[i];
        }
        lp
    }
}

/// Heuristic initial step size: double or halve until the one-step
/// acceptance probability crosses 1/2.
fn find_reasonable_eps(ham: &Hamiltonian, q: &[f64], logp: f64, rng: &mut ChaCha8Rng) -> f64 {
    let dim = q.len();
    let mut p0 = vec![0.0; dim];
    ham.sample_momentum(rng, &mut p0);
    let h0 = -logp + ham.kinetic(&p0);

    let accept_at = |eps: f64| -> f64 {
        let mut q1 = q.to_vec();
        let mut p1 = p0.clone();
        let mut grad = vec![0.0; dim];
        ham.model.eval(&q1, Some(&mut grad));
        let lp = ham.leapfrog(&mut q1, &mut p1, &mut grad, eps);
        if !lp.is_finite() {
            return 0.0;
        }
        let h1 = -lp + ham.kinetic(&p1);
        (-(h1 - h0)).exp().min(1.0)
    };

    let mut eps = 1.0;
    let dir = if accept_at(eps) > 0.5 { 1.0 } else { -1.0 };
    for _ in 0..60 {
        eps *= 2f64.powf(dir);
        let a = accept_at(eps);
        if (dir > 0.0 && a <= 0.5) || (dir < 0.0 && a >= 0.5) {
            break;
        }
        if !(1e-10..=1e7).contains(&eps) {
            break;
        }
    }
    eps.clamp(1e-10, 1e7)
}

pub(crate) fn run_chain(
    model: &Model,
    cfg: &SamplerConfig,
    chain_idx: usize,
) -> Result<ChainOutput> {
    let dim = model.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(1 + chain_idx as u64);

    // Initialization: small-scale raw latents, uniform(-1, 1) unconstrained
    // hyperparameters; retry until the density is finite.
    let mut q = vec![0.0; dim];
    let mut grad = vec![0.0; dim];
    let mut logp = f64::NEG_INFINITY;
    let mut initialized = false;
    for _ in 0..100 {
        for (i, qi) in q.iter_mut().enumerate() {
            *qi = if i < model.latent_dim() {
                let z: f64 = StandardNormal.sample(&mut rng);
                0.1 * z
            } else {
                rng.random_range(-1.0..1.0)
            };
        }
        logp = model.eval(&q, Some(&mut grad));
        if logp.is_finite() {
            initialized = true;
            break;
        }
    }
    if !initialized {
        return Err(Error::Sampler(
            "failed to find a finite initial density in 100 attempts".into(),
        ));
    }

    let mut ham = Hamiltonian {
        model,
        inv_mass: vec![1.0; dim],
    };
    let mut da = DualAveraging::new(
        find_reasonable_eps(&ham, &q, logp, &mut rng),
        cfg.target_accept,
    );
    let schedule = Schedule::new(cfg.warmup);
    let mut variance = RunningVariance::new(dim);
    let mut next_window = 0usize;

    let n_keep = cfg.draws;
    let mut draws = Vec::with_capacity(n_keep * model.n_constrained());
    let mut divergent_flags = Vec::with_capacity(n_keep);
    let mut constrained = vec![0.0; model.n_constrained()];

    let total = cfg.warmup + cfg.draws;
    let mut p = vec![0.0; dim];
    for iter in 0..total {
        let warming = iter < cfg.warmup;
        let eps = if warming { da.eps() } else { da.averaged_eps() };

        ham.sample_momentum(&mut rng, &mut p);
        let h0 = -logp + ham.kinetic(&p);

        let max_steps = (TRAJECTORY / eps).ceil().max(1.0) as usize;
        let steps = rng.random_range(1..=max_steps.min(cfg.max_leapfrog));

        let mut q_new = q.clone();
        let mut grad_new = grad.clone();
        let mut lp_new = logp;
        let mut divergent = false;
        for _ in 0..steps {
            lp_new = ham.leapfrog(&mut q_new, &mut p, &mut grad_new, eps);
            if !lp_new.is_finite() {
                divergent = true;
                break;
            }
            let h = -lp_new + ham.kinetic(&p);
            if h - h0 > MAX_ENERGY_ERROR {
                divergent = true;
                break;
            }
        }

        let accept_prob = if divergent {
            0.0
        } else {
            let h1 = -lp_new + ham.kinetic(&p);
            (-(h1 - h0)).exp().min(1.0)
        };
        if !divergent && rng.random::<f64>() < accept_prob {
            q = q_new;
            grad = grad_new;
            logp = lp_new;
        }

        if warming {
            da.update(accept_prob);
            if iter >= schedule.slow_start && iter < schedule.slow_end {
                variance.push(&q);
            }
            if next_window < schedule.window_ends.len()
                && iter + 1 == schedule.window_ends[next_window]
            {
                if variance.n >= 10 {
                    ham.inv_mass = variance.regularized();
                }
                variance = RunningVariance::new(dim);
                next_window += 1;
                da = DualAveraging::new(
                    find_reasonable_eps(&ham, &q, logp, &mut rng),
                    cfg.target_accept,
                );
            }
        } else {
            model.constrain(&q, &mut constrained);
            draws.extend_from_slice(&constrained);
            divergent_flags.push(divergent);
        }
    }

    Ok(ChainOutput {
        draws,
        divergent: divergent_flags,
    })
}
