/// Linear warmup to `base_lr`, constant afterwards.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LrSchedule {
    pub base_lr: f64,
    pub warmup_steps: usize,
}

impl LrSchedule {
    pub fn new(base_lr: f64, warmup_steps: usize) -> Self {
        LrSchedule {
            base_lr,
            warmup_steps,
        }
    }

    pub fn lr_at(&self, step: usize) -> f64 {
        lr_at(step, self)
    }
}

pub fn lr_at(step: usize, sched: &LrSchedule) -> f64 {
    if sched.warmup_steps == 0 || step >= sched.warmup_steps {
        sched.base_lr
    } else {
        sched.base_lr * step as f64 / sched.warmup_steps as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn warmup_ramp_then_constant() {
        let s = LrSchedule::new(1e-6, 1000);
        assert_eq!(s.lr_at(0), 0.0);
        assert!((s.lr_at(500) - 5e-7).abs() < 1e-20);
        assert_eq!(LrSchedule::new(2e-6, 1000).lr_at(32_000), 2e-6);
        assert_eq!(LrSchedule::new(3e-4, 0).lr_at(0), 3e-4);
    }

    #[test]
    fn non_decreasing_during_warmup() {
        let s = LrSchedule::new(3e-4, 200);
        let lrs: Vec<f64> = (0..=400).map(|t| s.lr_at(t)).collect();
        assert!(lrs.windows(2).all(|w| w[0] <= w[1]));
        assert!(lrs[200..].iter().all(|&v| v == 3e-4));
    }
}
