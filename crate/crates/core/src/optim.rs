//! Parameter updates shared by the deep and multi-view trainers.

use crate::config::Optimizer;

const BETA1: f64 = 0.9;
const BETA2: f64 = 0.999;
const ADAM_EPS: f64 = 1e-8;

/// Applies one update rule to any number of parameter blocks ("slots").
/// Adam keeps per-slot moment estimates, allocated on first use.
#[derive(Debug, Clone)]
pub(crate) struct Stepper {
    rule: Optimizer,
    lr: f64,
    t: i32,
    m: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
}

impl Stepper {
    pub(crate) fn new(rule: Optimizer, lr: f64) -> Self {
        Self {
            rule,
            lr,
            t: 0,
            m: Vec::new(),
            v: Vec::new(),
        }
    }

    /// Marks the start of an optimisation step (advances Adam's bias correction).
    pub(crate) fn begin(&mut self) {
        self.t += 1;
    }

    pub(crate) fn apply(&mut self, slot: usize, p: &mut [f64], g: &[f64]) {
        debug_assert_eq!(p.len(), g.len());
        match self.rule {
            Optimizer::Gd => p.iter_mut().zip(g).for_each(|(p, g)| *p -= self.lr * g),
            Optimizer::Adam => {
                if self.m.len() <= slot {
                    self.m.resize(slot + 1, Vec::new());
                    self.v.resize(slot + 1, Vec::new());
                }
                if self.m[slot].len() != p.len() {
                    self.m[slot] = vec![0.0; p.len()];
                    self.v[slot] = vec![0.0; p.len()];
                }
                let t = self.t.max(1);
                let c1 = 1.0 - BETA1.powi(t);
                let c2 = 1.0 - BETA2.powi(t);
                let (m, v) = (&mut self.m[slot], &mut self.v[slot]);
                for i in 0..p.len() {
                    m[i] = BETA1 * m[i] + (1.0 - BETA1) * g[i];
                    v[i] = BETA2 * v[i] + (1.0 - BETA2) * g[i] * g[i];
                    p[i] -= self.lr * (m[i] / c1) / ((v[i] / c2).sqrt() + ADAM_EPS);
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gd_step() {
        let mut s = Stepper::new(Optimizer::Gd, 0.1);
        let mut p = vec![1.0, 2.0];
        s.begin();
        s.apply(0, &mut p, &[1.0, -2.0]);
        assert_eq!(p, vec![0.9, 2.2]);
    }

    #[test]
    fn adam_first_step_has_magnitude_lr() {
        let mut s = Stepper::new(Optimizer::Adam, 0.01);
        let mut p = vec![0.0, 0.0];
        s.begin();
        s.apply(3, &mut p, &[5.0, -1e-3]);
        assert!((p[0] + 0.01).abs() < 1e-9);
        assert!((p[1] - 0.01).abs() < 1e-6);
    }

    #[test]
    fn adam_minimises_quadratic() {
        let mut s = Stepper::new(Optimizer::Adam, 0.05);
        let mut p = vec![3.0, -2.0];
        for _ in 0..2000 {
            s.begin();
            let g: Vec<f64> = p.iter().map(|v| 2.0 * v).collect();
            s.apply(0, &mut p, &g);
        }
        assert!(p.iter().all(|v| v.abs() < 1e-2));
    }
}
