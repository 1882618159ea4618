//! Batch gradient descent with Armijo backtracking line search.
//!
//! The first trial step of each line search is the Barzilai-Borwein step
//! from the previous iteration; backtracking keeps every accepted step
//! monotone in the objective.

/// A differentiable objective to be minimised.
pub trait Objective {
    fn dim(&self) -> usize;

    /// Returns the objective at `x` and writes its gradient into `grad`.
    fn evaluate(&self, x: &[f64], grad: &mut [f64]) -> f64;
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptimConfig {
    pub max_epochs: usize,
    pub grad_tol: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct OptimTrace {
    /// Objective value at the start and after every accepted step.
    pub objective: Vec<f64>,
    pub epochs: usize,
    pub converged: bool,
    pub grad_norm: f64,
}

const ARMIJO_C: f64 = 1e-4;
const MAX_BACKTRACKS: usize = 60;

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn minimize<O: Objective>(obj: &O, x0: Vec<f64>, cfg: OptimConfig) -> (Vec<f64>, OptimTrace) {
    let n = obj.dim();
    assert_eq!(x0.len(), n, "initial point has wrong dimension");
    let mut x = x0;
    let mut grad = vec![0.0; n];
    let mut f = obj.evaluate(&x, &mut grad);
    let mut trace = OptimTrace { objective: vec![f], ..Default::default() };

    let mut next_x = vec![0.0; n];
    let mut next_grad = vec![0.0; n];
    let mut step = {
        let g = dot(&grad, &grad).sqrt();
        if g > 0.0 { 1.0f64.min(1.0 / g) } else { 1.0 }
    };

    while trace.epochs < cfg.max_epochs {
        let gg = dot(&grad, &grad);
        trace.grad_norm = gg.sqrt();
        if trace.grad_norm < cfg.grad_tol {
            trace.converged = true;
            break;
        }
        let mut t = step;
        let mut accepted = None;
        for _ in 0..MAX_BACKTRACKS {
            for i in 0..n {
                next_x[i] = x[i] - t * grad[i];
            }
            let candidate = obj.evaluate(&next_x, &mut next_grad);
            if candidate.is_finite() && candidate <= f - ARMIJO_C * t * gg {
                accepted = Some(candidate);
                break;
            }
            t *= 0.5;
        }
        let Some(new_f) = accepted else {
            // No descent possible at machine precision.
            break;
        };
        trace.epochs += 1;

        let mut sy = 0.0;
        let mut ss = 0.0;
        for i in 0..n {
            let s = next_x[i] - x[i];
            sy += s * (next_grad[i] - grad[i]);
            ss += s * s;
        }
        step = if sy > 0.0 { ss / sy } else { t * 2.0 };

        std::mem::swap(&mut x, &mut next_x);
        std::mem::swap(&mut grad, &mut next_grad);
        f = new_f;
        trace.objective.push(f);
    }
    trace.grad_norm = dot(&grad, &grad).sqrt();
    if trace.grad_norm < cfg.grad_tol {
        trace.converged = true;
    }
    (x, trace)
}

/// Central finite-difference estimate of one partial derivative.
pub fn finite_difference<O: Objective>(obj: &O, x: &[f64], coord: usize, h: f64) -> f64 {
    let mut scratch = vec![0.0; obj.dim()];
    let mut xp = x.to_vec();
    xp[coord] += h;
    let fp = obj.evaluate(&xp, &mut scratch);
    xp[coord] = x[coord] - h;
    let fm = obj.evaluate(&xp, &mut scratch);
    (fp - fm) / (2.0 * h)
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Quadratic {
        center: Vec<f64>,
        scale: Vec<f64>,
    }

    impl Objective for Quadratic {
        fn dim(&self) -> usize {
            self.center.len()
        }

        fn evaluate(&self, x: &[f64], grad: &mut [f64]) -> f64 {
            let mut f = 0.0;
            for i in 0..x.len() {
                let d = x[i] - self.center[i];
                f += 0.5 * self.scale[i] * d * d;
                grad[i] = self.scale[i] * d;
            }
            f
        }
    }

    #[test]
    fn converges_on_ill_conditioned_quadratic() {
        let q = Quadratic { center: vec![1.0, -2.0, 3.0], scale: vec![1.0, 10.0, 100.0] };
        let (x, trace) = minimize(&q, vec![0.0; 3], OptimConfig { max_epochs: 500, grad_tol: 1e-8 });
        assert!(trace.converged, "{trace:?}");
        for (a, b) in x.iter().zip(&q.center) {
            assert!((a - b).abs() < 1e-6);
        }
        assert!(trace.objective.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn zero_gradient_start_is_converged() {
        let q = Quadratic { center: vec![0.0], scale: vec![1.0] };
        let (_, trace) = minimize(&q, vec![0.0], OptimConfig { max_epochs: 10, grad_tol: 1e-6 });
        assert!(trace.converged);
        assert_eq!(trace.epochs, 0);
    }
}
