//! Adam optimizer with bias correction.

use alloc::vec;
use alloc::vec::Vec;

use super::Scalar;

struct Moments<T> {
    m: Vec<T>,
    v: Vec<T>,
}

/// Optimizer state: one first/second moment pair per registered parameter
/// slot plus the shared step counter.
pub struct Adam<T> {
    pub lr: T,
    pub beta1: T,
    pub beta2: T,
    pub epsilon: T,
    step: u64,
    beta1_t: T,
    beta2_t: T,
    slots: Vec<Moments<T>>,
}

impl<T: Scalar> Adam<T> {
    /// β1 = 0.9, β2 = 0.999, ε = 1e-8.
    pub fn new(lr: T, slot_sizes: &[usize]) -> Self {
        Adam {
            lr,
            beta1: T::lit(0.9),
            beta2: T::lit(0.999),
            epsilon: T::lit(1e-8),
            step: 0,
            beta1_t: T::one(),
            beta2_t: T::one(),
            slots: slot_sizes
                .iter()
                .map(|&n| Moments { m: vec![T::zero(); n], v: vec![T::zero(); n] })
                .collect(),
        }
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }

    /// Advances the shared step counter; call once per batch, before the
    /// per-slot updates.
    pub fn begin_step(&mut self) {
        self.step += 1;
        self.beta1_t *= self.beta1;
        self.beta2_t *= self.beta2;
    }

    /// Standard bias-corrected update of one parameter slot, in place.
    pub fn update(&mut self, slot: usize, params: &mut [T], grads: &[T]) {
        let mom = &mut self.slots[slot];
        assert_eq!(params.len(), mom.m.len(), "slot {slot} size mismatch");
        assert_eq!(params.len(), grads.len());
        let one = T::one();
        let m_corr = one / (one - self.beta1_t);
        let v_corr = one / (one - self.beta2_t);
        for i in 0..params.len() {
            let g = grads[i];
            mom.m[i] = self.beta1 * mom.m[i] + (one - self.beta1) * g;
            mom.v[i] = self.beta2 * mom.v[i] + (one - self.beta2) * g * g;
            let m_hat = mom.m[i] * m_corr;
            let v_hat = mom.v[i] * v_corr;
            params[i] -= self.lr * m_hat / (v_hat.sqrt() + self.epsilon);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn first_step_moves_by_learning_rate() {
        // With g = 1 the bias-corrected first step is -lr / (1 + eps).
        let lr = 1e-4f64;
        let mut adam = Adam::new(lr, &[1]);
        let mut p = [0.0f64];
        adam.begin_step();
        adam.update(0, &mut p, &[1.0]);
        assert!((p[0] + lr).abs() < 1e-7, "step {}", p[0]);
    }

    #[test]
    fn zero_gradient_keeps_params() {
        let mut adam = Adam::new(1e-3f64, &[3]);
        let mut p = [1.0f64, -2.0, 0.5];
        adam.begin_step();
        adam.update(0, &mut p, &[0.0; 3]);
        assert_eq!(p, [1.0, -2.0, 0.5]);
    }

    #[test]
    fn identical_states_step_identically() {
        let grads = [0.3f64, -0.7];
        let mut a = Adam::new(1e-3f64, &[2]);
        let mut b = Adam::new(1e-3f64, &[2]);
        let mut pa = [0.1f64, 0.2];
        let mut pb = pa;
        for _ in 0..5 {
            a.begin_step();
            a.update(0, &mut pa, &grads);
            b.begin_step();
            b.update(0, &mut pb, &grads);
        }
        assert_eq!(pa, pb);
    }

    #[test]
    fn step_counter_increments() {
        let mut adam = Adam::new(1e-3f32, &[1]);
        assert_eq!(adam.step_count(), 0);
        adam.begin_step();
        adam.begin_step();
        assert_eq!(adam.step_count(), 2);
    }
}
