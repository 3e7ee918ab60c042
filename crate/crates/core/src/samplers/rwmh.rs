use rand::Rng;
use rand_distr::StandardNormal;

/// Acceptance rate the burn-in adaptation aims for.
pub const TARGET_ACCEPTANCE: f64 = 0.35;

/// Scalar random-walk Metropolis-Hastings state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RwmhState {
    pub current: f64,
    pub step: f64,
    pub accepted: u64,
    pub total: u64,
    /// Acceptance probability of the most recent proposal.
    pub last_accept_prob: f64,
}

impl RwmhState {
    pub fn new(current: f64, step: f64) -> Self {
        assert!(step > 0.0, "step must be positive");
        Self {
            current,
            step,
            accepted: 0,
            total: 0,
            last_accept_prob: 0.0,
        }
    }

    pub fn acceptance_rate(&self) -> f64 {
        if self.total == 0 {
            0.0
        } else {
            self.accepted as f64 / self.total as f64
        }
    }

    /// Robbins-Monro update of `log step` toward [`TARGET_ACCEPTANCE`].
    /// Only call during burn-in.
    pub fn adapt(&mut self, iteration: usize) {
        let gain = (iteration as f64 + 1.0).powf(-0.6);
        self.step *= (gain * (self.last_accept_prob - TARGET_ACCEPTANCE)).exp();
        self.step = self.step.clamp(1e-4, 1e4);
    }
}

/// One step; evaluates the target at both the current value and the proposal.
pub fn rwmh_step<R: Rng + ?Sized>(state: &RwmhState, mut log_target: impl FnMut(f64) -> f64, rng: &mut R) -> RwmhState {
    let current = log_target(state.current);
    rwmh_step_from(state, current, log_target, rng).0
}

/// One step given the target value at `state.current`. Also returns the
/// target value at the new current point.
pub fn rwmh_step_from<R: Rng + ?Sized>(
    state: &RwmhState,
    current_log_target: f64,
    mut log_target: impl FnMut(f64) -> f64,
    rng: &mut R,
) -> (RwmhState, f64) {
    let noise: f64 = rng.sample(StandardNormal);
    let proposal = state.current + state.step * noise;
    let proposed = log_target(proposal);
    let log_ratio = proposed - current_log_target;
    let accept_prob = if log_ratio.is_nan() || proposed == f64::NEG_INFINITY {
        0.0
    } else {
        log_ratio.exp().min(1.0)
    };
    let u: f64 = rng.random();
    let mut next = *state;
    next.total += 1;
    next.last_accept_prob = accept_prob;
    if u < accept_prob {
        next.current = proposal;
        next.accepted += 1;
        (next, proposed)
    } else {
        (next, current_log_target)
    }
}
