use nalgebra::DMatrix;

use crate::error::AutodiffError;

/// Adam with decoupled weight decay.
#[derive(Debug, Clone)]
pub struct AdamW {
    pub lr: f64,
    pub weight_decay: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    step: u64,
    m: Vec<DMatrix<f64>>,
    v: Vec<DMatrix<f64>>,
}

impl AdamW {
    pub fn new(lr: f64, weight_decay: f64) -> Self {
        Self {
            lr,
            weight_decay,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            step: 0,
            m: Vec::new(),
            v: Vec::new(),
        }
    }

    pub fn steps_taken(&self) -> u64 {
        self.step
    }

    /// One update. A missing gradient counts as zero. Moment buffers are
    /// created on the first call and tied to the parameter order.
    pub fn step(
        &mut self,
        params: &mut [&mut DMatrix<f64>],
        grads: &[Option<&DMatrix<f64>>],
    ) -> Result<(), AutodiffError> {
        if params.len() != grads.len() {
            return Err(AutodiffError::ShapeMismatch {
                op: "adam_step",
                left: (params.len(), 1),
                right: (grads.len(), 1),
            });
        }
        if self.m.is_empty() {
            self.m = params
                .iter()
                .map(|p| DMatrix::zeros(p.nrows(), p.ncols()))
                .collect();
            self.v = self.m.clone();
        }
        if self.m.len() != params.len() {
            return Err(AutodiffError::ShapeMismatch {
                op: "adam_step",
                left: (self.m.len(), 1),
                right: (params.len(), 1),
            });
        }
        for ((p, g), m) in params.iter().zip(grads).zip(&self.m) {
            if let Some(g) = g {
                if g.shape() != p.shape() {
                    return Err(AutodiffError::ShapeMismatch {
                        op: "adam_step",
                        left: p.shape(),
                        right: g.shape(),
                    });
                }
            }
            if m.shape() != p.shape() {
                return Err(AutodiffError::ShapeMismatch {
                    op: "adam_step",
                    left: m.shape(),
                    right: p.shape(),
                });
            }
        }
        self.step += 1;
        let t = self.step as i32;
        let bc1 = 1.0 - self.beta1.powi(t);
        let bc2 = 1.0 - self.beta2.powi(t);
        let (b1, b2) = (self.beta1, self.beta2);
        for (i, p) in params.iter_mut().enumerate() {
            let (m, v) = (&mut self.m[i], &mut self.v[i]);
            if let Some(g) = grads[i] {
                m.zip_apply(g, |m, g| *m = b1 * *m + (1.0 - b1) * g);
                v.zip_apply(g, |v, g| *v = b2 * *v + (1.0 - b2) * g * g);
            } else {
                *m *= b1;
                *v *= b2;
            }
            if self.weight_decay != 0.0 {
                **p *= 1.0 - self.lr * self.weight_decay;
            }
            for ((w, &m), &v) in p.iter_mut().zip(m.iter()).zip(v.iter()) {
                *w -= self.lr * (m / bc1) / ((v / bc2).sqrt() + self.eps);
            }
        }
        Ok(())
    }
}
