//! Adam optimization and the epoch loop shared by every training pipeline.
//! Training is full batch: one gradient evaluation per epoch.

use crate::error::{Error, Result};
use crate::pinn::LossBreakdown;

/// Adam moments plus hyperparameters. Defaults: beta1 0.9, beta2 0.999,
/// eps 1e-8.
#[derive(Clone, Debug)]
pub struct AdamState {
    step: u64,
    m: Vec<f64>,
    v: Vec<f64>,
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl AdamState {
    pub fn new(param_count: usize, lr: f64) -> Result<Self> {
        Self::with_hyperparams(param_count, lr, 0.9, 0.999, 1e-8)
    }

    pub fn with_hyperparams(
        param_count: usize,
        lr: f64,
        beta1: f64,
        beta2: f64,
        eps: f64,
    ) -> Result<Self> {
        if !(lr > 0.0 && lr.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "learning rate must be positive and finite, got {lr}"
            )));
        }
        for (name, b) in [("beta1", beta1), ("beta2", beta2)] {
            if !(0.0..1.0).contains(&b) {
                return Err(Error::InvalidArgument(format!(
                    "{name} must lie in [0, 1), got {b}"
                )));
            }
        }
        if eps <= 0.0 || eps.is_nan() {
            return Err(Error::InvalidArgument(format!(
                "eps must be positive, got {eps}"
            )));
        }
        Ok(AdamState {
            step: 0,
            m: vec![0.0; param_count],
            v: vec![0.0; param_count],
            lr,
            beta1,
            beta2,
            eps,
        })
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }

    pub fn moments(&self) -> (&[f64], &[f64]) {
        (&self.m, &self.v)
    }

    /// One bias-corrected update in place. A non-finite gradient entry aborts
    /// the step before anything is touched.
    pub fn step(&mut self, params: &mut [f64], grads: &[f64]) -> Result<()> {
        if params.len() != self.m.len() {
            return Err(Error::LengthMismatch {
                what: "adam parameters",
                left: self.m.len(),
                right: params.len(),
            });
        }
        if grads.len() != params.len() {
            return Err(Error::LengthMismatch {
                what: "adam gradients",
                left: params.len(),
                right: grads.len(),
            });
        }
        if let Some(index) = grads.iter().position(|g| !g.is_finite()) {
            return Err(Error::NonFiniteGradient { index });
        }
        self.step += 1;
        let t = self.step as i32;
        let corr1 = 1.0 - self.beta1.powi(t);
        let corr2 = 1.0 - self.beta2.powi(t);
        for i in 0..params.len() {
            let g = grads[i];
            self.m[i] = self.beta1 * self.m[i] + (1.0 - self.beta1) * g;
            self.v[i] = self.beta2 * self.v[i] + (1.0 - self.beta2) * g * g;
            let m_hat = self.m[i] / corr1;
            let v_hat = self.v[i] / corr2;
            params[i] -= self.lr * m_hat / (v_hat.sqrt() + self.eps);
        }
        Ok(())
    }
}

/// One epoch's loss terms plus the gradient of the total.
pub struct StepEval {
    pub breakdown: LossBreakdown,
    pub grad: Vec<f64>,
}

/// Runs `epochs` full-batch steps. `step` sees the current parameters and the
/// zero-based epoch index and returns the loss terms with their gradient; the
/// returned history has exactly one entry per epoch, recorded before each
/// update. A non-finite total halts with the one-based epoch index.
pub fn train_loop<F>(
    params: &mut [f64],
    state: &mut AdamState,
    epochs: usize,
    mut step: F,
) -> Result<Vec<LossBreakdown>>
where
    F: FnMut(&[f64], usize) -> Result<StepEval>,
{
    if epochs == 0 {
        return Err(Error::InvalidArgument("epochs must be at least 1".into()));
    }
    let mut history = Vec::with_capacity(epochs);
    for e in 0..epochs {
        let eval = step(params, e)?;
        if !eval.breakdown.total.is_finite() {
            return Err(Error::NonFiniteLoss { epoch: e + 1 });
        }
        state.step(params, &eval.grad)?;
        history.push(eval.breakdown);
    }
    Ok(history)
}

/// Loss-history CSV: epoch (one-based), each term, then the weighted total.
/// Terms a run does not use are written as 0.
pub fn history_csv(history: &[LossBreakdown]) -> String {
    let mut out = String::from("epoch,data_loss,physics_loss,init_loss,boundary_loss,total_loss\n");
    for (i, b) in history.iter().enumerate() {
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            i + 1,
            b.data,
            b.physics,
            b.initial,
            b.boundary,
            b.total
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::autodiff::gradient;
    use crate::net::{DenseNetwork, NetworkSpec};

    #[test]
    fn zero_gradient_leaves_fresh_state_unchanged() {
        let mut state = AdamState::new(3, 0.001).unwrap();
        let mut params = vec![1.0, -2.0, 0.5];
        state.step(&mut params, &[0.0, 0.0, 0.0]).unwrap();
        assert_eq!(params, vec![1.0, -2.0, 0.5]);
        let (m, v) = state.moments();
        assert!(m.iter().chain(v).all(|&x| x == 0.0));
        assert_eq!(state.step_count(), 1);
    }

    #[test]
    fn first_step_matches_the_hand_evaluated_update() {
        // f(p) = p^2 at p = 1: g = 2, m_hat = 2, v_hat = 4, so the step is
        // lr * 2 / (2 + eps), within eps of lr.
        let mut state = AdamState::new(1, 0.001).unwrap();
        let mut params = vec![1.0];
        state.step(&mut params, &[2.0]).unwrap();
        assert!((params[0] - 0.999).abs() < 1e-6, "got {}", params[0]);
    }

    #[test]
    fn five_thousand_steps_reach_a_quadratic_minimum() {
        // lr 0.01: the per-step displacement is capped near lr, so 0.001
        // could not even traverse the distance of 3 in this step budget.
        let mut state = AdamState::new(1, 0.01).unwrap();
        let mut p = vec![0.0];
        // Oracle: the update recurrence scripted from scratch next to it.
        let (mut q, mut m, mut v) = (0.0f64, 0.0f64, 0.0f64);
        let (b1, b2, eps) = (0.9f64, 0.999f64, 1e-8f64);
        for t in 1..=5000u32 {
            let g = 2.0 * (p[0] - 3.0);
            state.step(&mut p, &[g]).unwrap();
            let gq = 2.0 * (q - 3.0);
            m = b1 * m + (1.0 - b1) * gq;
            v = b2 * v + (1.0 - b2) * gq * gq;
            let mh = m / (1.0 - b1.powi(t as i32));
            let vh = v / (1.0 - b2.powi(t as i32));
            q -= 0.01 * mh / (vh.sqrt() + eps);
        }
        assert!((p[0] - 3.0).abs() < 1e-2, "ended at {}", p[0]);
        assert!(
            (p[0] - q).abs() < 1e-9,
            "implementation {} vs scripted {}",
            p[0],
            q
        );
    }

    #[test]
    fn invalid_hyperparameters_are_rejected() {
        assert!(AdamState::new(1, 0.0).is_err());
        assert!(AdamState::with_hyperparams(1, 0.001, 1.0, 0.999, 1e-8).is_err());
        assert!(AdamState::with_hyperparams(1, 0.001, 0.9, -0.1, 1e-8).is_err());
        assert!(AdamState::with_hyperparams(1, 0.001, 0.9, 0.999, 0.0).is_err());
    }

    #[test]
    fn non_finite_gradient_aborts_before_mutating() {
        let mut state = AdamState::new(2, 0.001).unwrap();
        let mut params = vec![1.0, 2.0];
        let err = state.step(&mut params, &[1.0, f64::NAN]).unwrap_err();
        match err {
            Error::NonFiniteGradient { index } => assert_eq!(index, 1),
            other => panic!("unexpected error {other:?}"),
        }
        assert_eq!(params, vec![1.0, 2.0]);
        assert_eq!(state.step_count(), 0);
    }

    #[test]
    fn zero_epochs_is_rejected_and_history_length_tracks_epochs() {
        let mut p = vec![0.0];
        let mut s = AdamState::new(1, 0.01).unwrap();
        let err = train_loop(&mut p, &mut s, 0, |_, _| unreachable!());
        assert!(err.is_err());
        let mut s = AdamState::new(1, 0.01).unwrap();
        let hist = train_loop(&mut p, &mut s, 17, |q, _| {
            Ok(StepEval {
                breakdown: LossBreakdown::data_only(q[0] * q[0]),
                grad: vec![2.0 * q[0]],
            })
        })
        .unwrap();
        assert_eq!(hist.len(), 17);
    }

    #[test]
    fn non_finite_loss_reports_the_epoch() {
        let mut p = vec![1.0];
        let mut s = AdamState::new(1, 0.01).unwrap();
        let err = train_loop(&mut p, &mut s, 10, |q, e| {
            let loss = if e == 2 { f64::NAN } else { q[0] * q[0] };
            Ok(StepEval {
                breakdown: LossBreakdown::data_only(loss),
                grad: vec![2.0 * q[0]],
            })
        })
        .unwrap_err();
        match err {
            Error::NonFiniteLoss { epoch } => assert_eq!(epoch, 3),
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn linear_net_fits_a_line() {
        // y = 2x + 1 on 20 points; the optimum is exactly representable by a
        // single affine layer.
        let xs: Vec<f64> = (0..20).map(|i| -1.0 + f64::from(i) / 9.5).collect();
        let ys: Vec<f64> = xs.iter().map(|x| 2.0 * x + 1.0).collect();
        let net = DenseNetwork::build(&NetworkSpec::new(1, vec![], 7)).unwrap();
        let mut params = net.get_params();
        let mut state = AdamState::new(params.len(), 0.05).unwrap();
        let hist = train_loop(&mut params, &mut state, 2000, |p, _| {
            let (loss, grad) = gradient(p, |t, pv| {
                let mut acc = t.constant(0.0);
                for (&x, &y) in xs.iter().zip(&ys) {
                    let e = net.tape_forward(t, pv, &[x]).offset(-y);
                    acc = acc + e * e;
                }
                acc.scale(1.0 / xs.len() as f64)
            });
            Ok(StepEval {
                breakdown: LossBreakdown::data_only(loss),
                grad,
            })
        })
        .unwrap();
        let final_mse = hist.last().unwrap().total;
        assert!(final_mse < 1e-4, "final mse {final_mse}");
    }

    #[test]
    fn quadratic_loss_is_monotone_after_warmup() {
        let mut p = vec![2.0, -1.0];
        let mut s = AdamState::new(2, 0.01).unwrap();
        let hist = train_loop(&mut p, &mut s, 2000, |q, _| {
            let loss = 0.5 * (q[0] * q[0] + 4.0 * q[1] * q[1]);
            Ok(StepEval {
                breakdown: LossBreakdown::data_only(loss),
                grad: vec![q[0], 4.0 * q[1]],
            })
        })
        .unwrap();
        let tail = &hist[hist.len() / 2..];
        for w in tail.windows(2) {
            assert!(
                w[1].total <= w[0].total + 1e-12,
                "loss rose late in training: {} -> {}",
                w[0].total,
                w[1].total
            );
        }
    }

    #[test]
    fn identical_runs_produce_identical_histories() {
        let run = || {
            let mut p = vec![0.3, 0.7];
            let mut s = AdamState::new(2, 0.004).unwrap();
            train_loop(&mut p, &mut s, 50, |q, _| {
                let loss = (q[0] - 1.0).powi(2) + (q[1] + 2.0).powi(2);
                Ok(StepEval {
                    breakdown: LossBreakdown::data_only(loss),
                    grad: vec![2.0 * (q[0] - 1.0), 2.0 * (q[1] + 2.0)],
                })
            })
            .map(|h| (h.iter().map(|b| b.total).collect::<Vec<_>>(), p))
            .unwrap()
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn history_csv_has_header_and_one_row_per_epoch() {
        let hist = vec![
            LossBreakdown::data_only(0.5),
            LossBreakdown::new(0.25, 0.1, 0.0, 0.0, 0.1),
        ];
        let csv = history_csv(&hist);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines.len(), 3);
        assert_eq!(
            lines[0],
            "epoch,data_loss,physics_loss,init_loss,boundary_loss,total_loss"
        );
        assert!(lines[1].starts_with("1,0.5,0,0,0,"));
        assert!(lines[2].starts_with("2,0.25,0.1,0,0,"));
    }
}
