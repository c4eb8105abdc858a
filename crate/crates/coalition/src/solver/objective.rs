//! Smooth objectives fed to the projected-gradient local solver. All are
//! phrased as maximizations.

use ndarray::{Array1, Array2};

use crate::gauss::log_probs_and_grad_rows;
use crate::model::{aggregate_means, aggregate_variances, ProblemInstance};
use crate::solver::softmin::{softmin, softmin_weights};
use crate::solver::LOG_PROB_FLOOR;

/// A differentiable objective over relaxed allocations, possibly annealed
/// over a schedule of smoothing stages.
pub trait Objective {
    /// Number of annealing stages; non-annealed objectives report 1.
    fn num_stages(&self) -> usize;
    /// Smoothed value at `stage` (to be maximized).
    fn value(&self, x: &Array2<f64>, stage: usize) -> f64;
    /// Gradient of `value` at `stage`.
    fn gradient(&self, x: &Array2<f64>, stage: usize) -> Array2<f64>;
    /// Unsmoothed score used to rank candidate points (higher is better).
    fn true_score(&self, x: &Array2<f64>) -> f64;
}

/// Max-min objective: softmin over tasks of the clamped log success
/// probabilities, annealed through the beta schedule.
pub struct AdaptiveObjective<'a> {
    problem: &'a ProblemInstance,
    betas: Vec<f64>,
}

impl<'a> AdaptiveObjective<'a> {
    pub fn new(problem: &'a ProblemInstance, betas: &[f64]) -> Self {
        Self { problem, betas: betas.to_vec() }
    }

    fn clamped_log_probs(&self, x: &Array2<f64>) -> Array1<f64> {
        crate::gauss::success_log_probs(x, self.problem)
            .expect("allocation validated before objective evaluation")
            .mapv(|v| v.max(LOG_PROB_FLOOR))
    }
}

impl Objective for AdaptiveObjective<'_> {
    fn num_stages(&self) -> usize {
        self.betas.len()
    }

    fn value(&self, x: &Array2<f64>, stage: usize) -> f64 {
        softmin(self.clamped_log_probs(x).view(), self.betas[stage])
    }

    fn gradient(&self, x: &Array2<f64>, stage: usize) -> Array2<f64> {
        let (log_probs, grad_rows) = log_probs_and_grad_rows(x, self.problem)
            .expect("allocation validated before objective evaluation");
        let clamped = log_probs.mapv(|v| v.max(LOG_PROB_FLOOR));
        let weights = softmin_weights(clamped.view(), self.betas[stage]);
        let mut grad = Array2::zeros(x.dim());
        for m in 0..x.nrows() {
            // A clamped task contributes a constant to the objective.
            if log_probs[m] > LOG_PROB_FLOOR {
                let scaled = grad_rows.row(m).mapv(|g| g * weights[m]);
                grad.row_mut(m).assign(&scaled);
            }
        }
        grad
    }

    fn true_score(&self, x: &Array2<f64>) -> f64 {
        self.clamped_log_probs(x).iter().fold(f64::INFINITY, |a, &v| a.min(v))
    }
}

/// Deficiency objective of the risk-neutral baseline, optionally with the
/// risk-averse variance penalty: maximize
/// -( ||max(Y* - X mu_Q, 0)||_F^2 + lambda ||(X (.) X) Var_Q||_F^2 ).
pub struct DeficiencyObjective<'a> {
    problem: &'a ProblemInstance,
    lambda: f64,
}

impl<'a> DeficiencyObjective<'a> {
    pub fn new(problem: &'a ProblemInstance, lambda: f64) -> Self {
        Self { problem, lambda }
    }

    fn residual(&self, x: &Array2<f64>) -> Array2<f64> {
        let means = aggregate_means(x, self.problem.species()).expect("dims checked");
        let req = self.problem.tasks().matrix();
        let mut r = req - &means;
        r.mapv_inplace(|v| v.max(0.0));
        r
    }
}

impl Objective for DeficiencyObjective<'_> {
    fn num_stages(&self) -> usize {
        1
    }

    fn value(&self, x: &Array2<f64>, _stage: usize) -> f64 {
        let r = self.residual(x);
        let mut obj = r.iter().map(|v| v * v).sum::<f64>();
        if self.lambda > 0.0 {
            let vars = aggregate_variances(x, self.problem.species()).expect("dims checked");
            obj += self.lambda * vars.iter().map(|v| v * v).sum::<f64>();
        }
        -obj
    }

    fn gradient(&self, x: &Array2<f64>, _stage: usize) -> Array2<f64> {
        let r = self.residual(x);
        // d(-D)/dX = 2 R mu_Q^T.
        let mut grad = 2.0 * r.dot(&self.problem.species().means().t());
        if self.lambda > 0.0 {
            // d(lambda ||Var_Y||^2)/dX = 4 lambda (Var_Y Var_Q^T) (.) X.
            let vars = aggregate_variances(x, self.problem.species()).expect("dims checked");
            let vq = self.problem.species().variances();
            grad = grad - 4.0 * self.lambda * &(vars.dot(&vq.t()) * x);
        }
        grad
    }

    fn true_score(&self, x: &Array2<f64>) -> f64 {
        self.value(x, 0)
    }
}
