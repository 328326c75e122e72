use crate::block::BlockPartition;
use crate::error::{invalid, Error, Result};

/// Block-separable closed convex regularizer `r(x) = Σ_j rʲ(xʲ)`.
///
/// All variants act coordinate-wise with the same parameters on every
/// block, so the block index only selects the slice.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Regularizer {
    Zero,
    /// `λ‖x‖₁`.
    L1(f64),
    /// Indicator of `[lo, hi]^d` (`+∞` outside).
    Box {
        lo: f64,
        hi: f64,
    },
}

impl Regularizer {
    pub fn validate(&self) -> Result<()> {
        match *self {
            Regularizer::Zero => Ok(()),
            Regularizer::L1(w) if w >= 0.0 && w.is_finite() => Ok(()),
            Regularizer::L1(w) => Err(invalid(format!("l1 weight {w} must be finite and >= 0"))),
            Regularizer::Box { lo, hi } if lo <= hi => Ok(()),
            Regularizer::Box { lo, hi } => Err(invalid(format!("box bounds [{lo}, {hi}] are empty"))),
        }
    }

    /// `rʲ(xʲ)`; `+∞` outside the domain.
    pub fn block_value(&self, _j: usize, xj: &[f64]) -> f64 {
        match *self {
            Regularizer::Zero => 0.0,
            Regularizer::L1(w) => w * xj.iter().map(|v| v.abs()).sum::<f64>(),
            Regularizer::Box { lo, hi } => {
                if xj.iter().all(|v| (lo..=hi).contains(v)) {
                    0.0
                } else {
                    f64::INFINITY
                }
            }
        }
    }

    pub fn value(&self, x: &[f64], partition: &BlockPartition) -> f64 {
        partition.ranges().enumerate().map(|(j, r)| self.block_value(j, &x[r])).sum()
    }

    /// Exact minimizer of `⟨linear, z⟩ + rʲ(z) + (1/(2η))‖z − center‖²_{Λ_j}`.
    pub fn metric_prox(
        &self,
        j: usize,
        center: &[f64],
        linear: &[f64],
        eta: f64,
        lambda_j: &[f64],
    ) -> Result<Vec<f64>> {
        if !(eta > 0.0 && eta.is_finite()) {
            return Err(invalid(format!("step size {eta} must be finite and > 0")));
        }
        if center.len() != linear.len() || center.len() != lambda_j.len() {
            return Err(Error::DimensionMismatch { expected: center.len(), got: linear.len().min(lambda_j.len()) });
        }
        if lambda_j.iter().any(|l| !(*l > 0.0)) {
            return Err(Error::InvalidMetric("metric entries must be > 0".into()));
        }
        self.validate()?;
        let mut out = vec![0.0; center.len()];
        self.prox_into(j, center, linear, eta, lambda_j, &mut out);
        Ok(out)
    }

    /// Unchecked [`metric_prox`](Self::metric_prox) writing into `out`.
    pub fn prox_into(&self, _j: usize, center: &[f64], linear: &[f64], eta: f64, lambda_j: &[f64], out: &mut [f64]) {
        for t in 0..out.len() {
            let step = center[t] - eta * linear[t] / lambda_j[t];
            out[t] = match *self {
                Regularizer::Zero => step,
                Regularizer::L1(w) => {
                    let thr = eta * w / lambda_j[t];
                    if step > thr {
                        step - thr
                    } else if step < -thr {
                        step + thr
                    } else {
                        0.0
                    }
                }
                Regularizer::Box { lo, hi } => step.clamp(lo, hi),
            };
        }
    }

    /// `inf_{r' ∈ ∂r(x)} Σ_i (grad_i + r'_i)² / weights_i`, i.e. the squared
    /// distance of `∂F(x)` to zero in the weighted dual norm (`+∞` if `x` is
    /// outside the domain).
    pub fn min_residual_sq(&self, x: &[f64], grad: &[f64], weights: &[f64]) -> f64 {
        let mut total = 0.0;
        for t in 0..x.len() {
            let g = grad[t];
            let r = match *self {
                Regularizer::Zero => g,
                Regularizer::L1(w) => {
                    if x[t] > 0.0 {
                        g + w
                    } else if x[t] < 0.0 {
                        g - w
                    } else {
                        (g.abs() - w).max(0.0)
                    }
                }
                Regularizer::Box { lo, hi } => {
                    if x[t] < lo || x[t] > hi {
                        return f64::INFINITY;
                    }
                    let at_lo = x[t] == lo;
                    let at_hi = x[t] == hi;
                    match (at_lo, at_hi) {
                        (true, true) => 0.0,
                        (true, false) => g.min(0.0),
                        (false, true) => g.max(0.0),
                        (false, false) => g,
                    }
                }
            };
            total += r * r / weights[t];
        }
        total
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// argmin over a uniform grid of the scalar prox objective.
    fn grid_argmin(reg: Regularizer, center: f64, linear: f64, eta: f64, lam: f64) -> f64 {
        let obj = |z: f64| linear * z + reg.block_value(0, &[z]) + lam / (2.0 * eta) * (z - center).powi(2);
        let (lo, hi, step) = (-10.0, 10.0, 1e-4);
        let mut best = (f64::INFINITY, 0.0);
        let count = ((hi - lo) / step) as usize;
        for k in 0..=count {
            let z = lo + k as f64 * step;
            let v = obj(z);
            if v < best.0 {
                best = (v, z);
            }
        }
        // refine locally
        let (c, s2) = (best.1, 1e-7);
        for k in 0..=2000 {
            let z = c - 1e-4 + k as f64 * s2;
            let v = obj(z);
            if v < best.0 {
                best = (v, z);
            }
        }
        best.1
    }

    #[test]
    fn zero_reg_is_gradient_step() {
        let out = Regularizer::Zero.metric_prox(0, &[0.0, 0.0], &[1.5, -2.0], 1.0, &[1.0, 1.0]).unwrap();
        assert_eq!(out, vec![-1.5, 2.0]);
    }

    #[test]
    fn l1_dead_zone() {
        let out = Regularizer::L1(1.0).metric_prox(0, &[0.0], &[-0.5], 1.0, &[1.0]).unwrap();
        assert_eq!(out, vec![0.0]);
    }

    #[test]
    fn l1_scaled_metric_example() {
        // minimize -4x + |x| + x² : stationarity -4 + 1 + 2x = 0
        let out = Regularizer::L1(1.0).metric_prox(0, &[0.0], &[-4.0], 1.0, &[2.0]).unwrap();
        assert_eq!(out, vec![1.5]);
        let brute = grid_argmin(Regularizer::L1(1.0), 0.0, -4.0, 1.0, 2.0);
        assert!((brute - 1.5).abs() < 1e-6);
    }

    #[test]
    fn prox_errors() {
        let r = Regularizer::L1(1.0);
        assert!(r.metric_prox(0, &[0.0], &[1.0], 0.0, &[1.0]).is_err());
        assert!(r.metric_prox(0, &[0.0], &[1.0], 1.0, &[0.0]).is_err());
        assert!(Regularizer::Box { lo: 1.0, hi: 0.0 }.validate().is_err());
    }

    #[test]
    fn box_value_is_infinite_outside() {
        let r = Regularizer::Box { lo: -1.0, hi: 1.0 };
        assert_eq!(r.block_value(0, &[0.5, -1.0]), 0.0);
        assert_eq!(r.block_value(0, &[1.5]), f64::INFINITY);
    }

    #[test]
    fn min_residual_cases() {
        let l1 = Regularizer::L1(1.0);
        assert_eq!(l1.min_residual_sq(&[0.0], &[0.5], &[1.0]), 0.0);
        assert_eq!(l1.min_residual_sq(&[0.0], &[3.0], &[1.0]), 4.0);
        assert_eq!(l1.min_residual_sq(&[2.0], &[-1.0], &[1.0]), 0.0);
        let bx = Regularizer::Box { lo: 0.0, hi: 1.0 };
        assert_eq!(bx.min_residual_sq(&[0.0], &[2.0], &[1.0]), 0.0);
        assert_eq!(bx.min_residual_sq(&[0.0], &[-2.0], &[2.0]), 2.0);
        assert_eq!(bx.min_residual_sq(&[2.0], &[0.0], &[1.0]), f64::INFINITY);
    }

    fn reg_strategy() -> impl Strategy<Value = Regularizer> {
        prop_oneof![
            Just(Regularizer::Zero),
            (0.0f64..3.0).prop_map(Regularizer::L1),
            (-3.0f64..0.0, 0.0f64..3.0).prop_map(|(lo, hi)| Regularizer::Box { lo, hi }),
        ]
    }

    proptest! {
        #[test]
        fn prox_satisfies_optimality_inclusion(
            reg in reg_strategy(),
            center in -3.0f64..3.0,
            linear in -5.0f64..5.0,
            eta in 0.1f64..3.0,
            lam in 0.2f64..5.0,
        ) {
            let z = reg.metric_prox(0, &[center], &[linear], eta, &[lam]).unwrap()[0];
            // 0 ∈ linear + ∂r(z) + (lam/eta)(z − center)
            let g = linear + lam / eta * (z - center);
            let res = reg.min_residual_sq(&[z], &[g], &[1.0]);
            prop_assert!(res <= 1e-20 * (1.0 + g * g), "residual {res}");
        }
    }
}
