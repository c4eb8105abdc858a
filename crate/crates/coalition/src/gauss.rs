//! Standard-normal CDF and log-CDF with tail-stable evaluation, plus task
//! success probabilities and their analytic gradients.
//!
//! A task succeeds when every required aggregated trait meets its threshold;
//! with independent Gaussian traits the probability factorizes into a product
//! of univariate terms, so everything here reduces to Phi evaluated at the
//! standardized margins z = (mu - y*) / sigma.

use ndarray::{Array1, Array2, ArrayView1};
use std::f64::consts::{FRAC_1_SQRT_2, FRAC_2_SQRT_PI};

use crate::error::{Error, Result};
use crate::model::{aggregate_means, aggregate_variances, ProblemInstance, VARIANCE_FLOOR};

/// 1 / sqrt(2*pi), the standard normal density at 0.
const INV_SQRT_2PI: f64 = 0.5 * FRAC_1_SQRT_2 * FRAC_2_SQRT_PI;

/// sqrt(2/pi).
const SQRT_2_OVER_PI: f64 = FRAC_1_SQRT_2 * FRAC_2_SQRT_PI;

/// Below this z the log-CDF switches from ln(Phi) to the scaled-erfc tail
/// form that never underflows.
const TAIL_Z: f64 = -8.0;

/// Crossover in u = |z|/sqrt(2) between the erf series and the erfcx
/// continued fraction.
const ERF_SERIES_CUTOFF: f64 = 2.0;

/// erf(u) for 0 <= u < 2 via the all-positive-terms series
/// erf(u) = (2/sqrt(pi)) u e^{-u^2} sum_k (2u^2)^k / (2k+1)!!.
/// `w + w_lo` is u^2 split exactly so the exponential loses no precision.
fn erf_series(u: f64, w: f64, w_lo: f64) -> f64 {
    let two_w = 2.0 * w;
    let mut term = 1.0f64;
    let mut sum = 1.0f64;
    let mut carry = 0.0f64;
    let mut k = 0u32;
    while term > 1e-18 * sum && k < 200 {
        k += 1;
        term *= two_w / f64::from(2 * k + 1);
        let y = term - carry;
        let t = sum + y;
        carry = (t - sum) - y;
        sum = t;
    }
    FRAC_2_SQRT_PI * u * (-w).exp() * (1.0 - w_lo) * sum
}

/// erfcx(u) = e^{u^2} erfc(u) for u >= 2, by the Laplace continued fraction
/// sqrt(pi) e^{u^2} erfc(u) = 1/(u + (1/2)/(u + (2/2)/(u + (3/2)/(u + ...))))
/// evaluated with modified Lentz.
fn erfcx_cf(u: f64) -> f64 {
    const TINY: f64 = 1e-300;
    let mut f = TINY;
    let mut c = f;
    let mut d = 0.0f64;
    for n in 1..=300u32 {
        let a = if n == 1 { 1.0 } else { 0.5 * f64::from(n - 1) };
        d = u + a * d;
        if d == 0.0 {
            d = TINY;
        }
        c = u + a / c;
        if c == 0.0 {
            c = TINY;
        }
        d = 1.0 / d;
        let delta = c * d;
        f *= delta;
        if (delta - 1.0).abs() < 1e-16 {
            break;
        }
    }
    0.5 * FRAC_2_SQRT_PI * f
}

/// Splits t^2/2 into `hi + lo` with the product residual recovered via fma.
fn half_square(t: f64) -> (f64, f64) {
    let tt = t * t;
    let lo = 0.5 * t.mul_add(t, -tt);
    (0.5 * tt, lo)
}

/// Phi(-t) for t >= 0.
fn phi_neg(t: f64) -> f64 {
    let (w, w_lo) = half_square(t);
    let u = t * FRAC_1_SQRT_2;
    if u < ERF_SERIES_CUTOFF {
        0.5 * (1.0 - erf_series(u, w, w_lo))
    } else {
        0.5 * erfcx_cf(u) * (-w).exp() * (1.0 - w_lo)
    }
}

pub(crate) fn phi(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 - phi_neg(z)
    } else {
        phi_neg(-z)
    }
}

pub(crate) fn ln_phi(z: f64) -> f64 {
    if z >= 0.0 {
        (-phi_neg(z)).ln_1p()
    } else if z >= TAIL_Z {
        phi_neg(-z).ln()
    } else {
        let (w, w_lo) = half_square(z);
        let u = -z * FRAC_1_SQRT_2;
        (0.5 * erfcx_cf(u)).ln() - w - w_lo
    }
}

/// d/dz ln Phi(z) = phi(z)/Phi(z); the deep tail uses the scaled erfc so the
/// ratio never degenerates to 0/0.
pub(crate) fn mills_ratio(z: f64) -> f64 {
    if z < TAIL_Z {
        SQRT_2_OVER_PI / erfcx_cf(-z * FRAC_1_SQRT_2)
    } else {
        let (w, w_lo) = half_square(z);
        INV_SQRT_2PI * (-w).exp() * (1.0 - w_lo) / phi(z)
    }
}

/// Standard normal CDF. Absolute error stays below 1e-15 for |z| <= 8.
pub fn std_normal_cdf(z: f64) -> Result<f64> {
    if !z.is_finite() {
        return Err(Error::NonFinite { context: "std_normal_cdf", value: z });
    }
    Ok(phi(z))
}

/// ln of the standard normal CDF, stable far into the lower tail
/// (relative error below 1e-10 down to z = -40 and beyond).
pub fn std_normal_log_cdf(z: f64) -> Result<f64> {
    if !z.is_finite() {
        return Err(Error::NonFinite { context: "std_normal_log_cdf", value: z });
    }
    Ok(ln_phi(z))
}

/// Success diagnostics for one task: standardized margins over the required
/// traits and the resulting log/linear probability.
#[derive(Debug, Clone, PartialEq)]
pub struct TaskSuccess {
    pub per_trait_z: Vec<f64>,
    pub log_prob: f64,
    pub prob: f64,
}

fn check_rows(mu_row: ArrayView1<f64>, var_row: ArrayView1<f64>, req_row: ArrayView1<f64>) -> Result<()> {
    if mu_row.len() != var_row.len() || mu_row.len() != req_row.len() {
        return Err(Error::dim(
            "task success rows",
            mu_row.len(),
            if mu_row.len() != var_row.len() { var_row.len() } else { req_row.len() },
        ));
    }
    Ok(())
}

/// Evaluates one task's success, keeping the per-trait margins.
pub fn task_success(
    mu_row: ArrayView1<f64>,
    var_row: ArrayView1<f64>,
    req_row: ArrayView1<f64>,
) -> Result<TaskSuccess> {
    check_rows(mu_row, var_row, req_row)?;
    let mut per_trait_z = Vec::new();
    let mut log_prob = 0.0;
    for u in 0..req_row.len() {
        if req_row[u] > 0.0 {
            let sigma = var_row[u].max(VARIANCE_FLOOR).sqrt();
            let z = (mu_row[u] - req_row[u]) / sigma;
            per_trait_z.push(z);
            log_prob += ln_phi(z);
        }
    }
    Ok(TaskSuccess { per_trait_z, log_prob, prob: log_prob.exp() })
}

/// ln P(task succeeds) = sum over required traits of ln Phi((mu - y*)/sigma).
/// Traits with requirement 0 are skipped; with nothing required the task
/// succeeds surely and the result is 0.
pub fn task_success_log_prob(
    mu_row: ArrayView1<f64>,
    var_row: ArrayView1<f64>,
    req_row: ArrayView1<f64>,
) -> Result<f64> {
    check_rows(mu_row, var_row, req_row)?;
    let mut acc = 0.0;
    for u in 0..req_row.len() {
        if req_row[u] > 0.0 {
            let sigma = var_row[u].max(VARIANCE_FLOOR).sqrt();
            acc += ln_phi((mu_row[u] - req_row[u]) / sigma);
        }
    }
    Ok(acc)
}

fn check_x(x: &Array2<f64>, problem: &ProblemInstance, context: &'static str) -> Result<()> {
    if x.nrows() != problem.num_tasks() || x.ncols() != problem.num_species() {
        return Err(Error::dim(
            context,
            format!("{}x{}", problem.num_tasks(), problem.num_species()),
            format!("{}x{}", x.nrows(), x.ncols()),
        ));
    }
    for &v in x.iter() {
        if !v.is_finite() {
            return Err(Error::NonFinite { context, value: v });
        }
        if v < 0.0 {
            return Err(Error::InvalidValue {
                context,
                detail: format!("allocation entry {v} is negative"),
            });
        }
    }
    Ok(())
}

/// Per-task log success probabilities of an allocation (raw, unclamped).
pub fn success_log_probs(x: &Array2<f64>, problem: &ProblemInstance) -> Result<Array1<f64>> {
    check_x(x, problem, "success_log_probs")?;
    let means = aggregate_means(x, problem.species())?;
    let vars = aggregate_variances(x, problem.species())?;
    let req = problem.tasks().matrix();
    let mut out = Array1::zeros(problem.num_tasks());
    for m in 0..problem.num_tasks() {
        out[m] = task_success_log_prob(means.row(m), vars.row(m), req.row(m))?;
    }
    Ok(out)
}

/// Log-probabilities together with the compact gradient: row m of the second
/// return value is d(ln P_m)/d(x[m, :]). Entries of other rows are zero by
/// row separability, so they are not materialized.
pub(crate) fn log_probs_and_grad_rows(
    x: &Array2<f64>,
    problem: &ProblemInstance,
) -> Result<(Array1<f64>, Array2<f64>)> {
    check_x(x, problem, "grad_success_log_probs")?;
    let species = problem.species();
    let means = aggregate_means(x, species)?;
    let vars = aggregate_variances(x, species)?;
    let req = problem.tasks().matrix();
    let (m_tasks, s_species) = x.dim();
    let u_traits = problem.num_traits();
    let mut log_probs = Array1::zeros(m_tasks);
    let mut grad = Array2::zeros((m_tasks, s_species));
    for m in 0..m_tasks {
        for u in 0..u_traits {
            if req[[m, u]] <= 0.0 {
                continue;
            }
            let floored = vars[[m, u]] < VARIANCE_FLOOR;
            let sigma = vars[[m, u]].max(VARIANCE_FLOOR).sqrt();
            let z = (means[[m, u]] - req[[m, u]]) / sigma;
            log_probs[m] += ln_phi(z);
            let ratio = mills_ratio(z);
            for s in 0..s_species {
                let dsigma_term = if floored {
                    0.0
                } else {
                    z * x[[m, s]] * species.variances()[[s, u]] / sigma
                };
                grad[[m, s]] += ratio * (species.means()[[s, u]] - dsigma_term) / sigma;
            }
        }
    }
    Ok((log_probs, grad))
}

/// Gradient of each task's log success probability with respect to the full
/// allocation matrix; element m of the result is the M x S gradient of task
/// m's log-probability (nonzero only in row m).
pub fn grad_success_log_probs(x: &Array2<f64>, problem: &ProblemInstance) -> Result<Vec<Array2<f64>>> {
    let (_, rows) = log_probs_and_grad_rows(x, problem)?;
    let (m_tasks, s_species) = x.dim();
    let mut out = Vec::with_capacity(m_tasks);
    for m in 0..m_tasks {
        let mut g = Array2::zeros((m_tasks, s_species));
        g.row_mut(m).assign(&rows.row(m));
        out.push(g);
    }
    Ok(out)
}

#[cfg(test)]
#[allow(clippy::excessive_precision)] // literals keep every digit the oracle printed
mod tests {
    use super::*;
    use crate::model::{SpeciesTraitModel, TaskRequirements, TeamComposition};
    use ndarray::array;

    fn robotarium() -> ProblemInstance {
        ProblemInstance::new(
            SpeciesTraitModel::new(array![[2.0, 1.0], [1.0, 2.0]], array![[0.5, 1.0], [1.0, 0.5]])
                .unwrap(),
            TeamComposition::new(vec![6, 9]),
            TaskRequirements::new(array![[11.0, 0.0], [0.0, 14.0]]).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn cdf_at_zero_is_half() {
        assert_eq!(std_normal_cdf(0.0).unwrap(), 0.5);
    }

    #[test]
    fn cdf_symmetry() {
        for z in [0.5, 1.0, 2.0, 5.0] {
            let a = std_normal_cdf(z).unwrap();
            let b = std_normal_cdf(-z).unwrap();
            assert!((a + b - 1.0).abs() < 1e-15, "z={z}: {a} + {b}");
        }
    }

    #[test]
    fn cdf_spot_values() {
        // mpmath with 50 digits.
        let cases = [
            (0.4588, 0.67681110261747675552),
            (-8.0, 6.2209605742717841235e-16),
            (1.0, 0.84134474606854292578),
            (-3.0, 0.0013498980316300945266),
        ];
        for (z, want) in cases {
            let got = std_normal_cdf(z).unwrap();
            assert!((got - want).abs() < 1e-15, "z={z}: got {got}, want {want}");
        }
    }

    #[test]
    fn log_cdf_spot_values() {
        let cases = [
            (0.0, -std::f64::consts::LN_2),
            (-10.0, -53.231285150512470578),
            (-8.0, -35.013437159914549896),
            (-40.0, -804.60844201375378817),
        ];
        for (z, want) in cases {
            let got = std_normal_log_cdf(z).unwrap();
            assert!(
                ((got - want) / want).abs() < 1e-12,
                "z={z}: got {got}, want {want}"
            );
        }
    }

    #[test]
    fn log_cdf_matches_ln_of_cdf_on_grid() {
        let mut z = -6.0;
        while z <= 6.0 {
            let direct = std_normal_cdf(z).unwrap().ln();
            let stable = std_normal_log_cdf(z).unwrap();
            let denom = direct.abs().max(1e-300);
            assert!(
                (stable - direct).abs() / denom < 1e-12 || (stable - direct).abs() < 1e-15,
                "z={z}: {stable} vs {direct}"
            );
            z += 1e-3;
        }
    }

    #[test]
    fn non_finite_inputs_rejected() {
        assert!(std_normal_cdf(f64::NAN).is_err());
        assert!(std_normal_cdf(f64::INFINITY).is_err());
        assert!(std_normal_log_cdf(f64::NEG_INFINITY).is_err());
    }

    #[test]
    fn mills_ratio_spot_values() {
        // phi(10)/Phi(10) from mpmath.
        let r = mills_ratio(10.0);
        assert!(((r - 7.6945986267064193463e-23) / 7.6945986267064193463e-23).abs() < 1e-12);
        // Deep tail: ratio approaches -z.
        let r = mills_ratio(-50.0);
        assert!((r / 50.0 - 1.0).abs() < 1e-3);
        let fd = (ln_phi(-12.0 + 5e-7) - ln_phi(-12.0 - 5e-7)) / 1e-6;
        assert!(((mills_ratio(-12.0) - fd) / fd).abs() < 1e-6);
    }

    #[test]
    fn task_log_prob_no_required_traits() {
        let mu = array![3.0, 4.0];
        let var = array![1.0, 2.0];
        let req = array![0.0, 0.0];
        assert_eq!(task_success_log_prob(mu.view(), var.view(), req.view()).unwrap(), 0.0);
    }

    #[test]
    fn task_log_prob_centered_margin() {
        let mu = array![5.0];
        let var = array![2.0];
        let req = array![5.0];
        let lp = task_success_log_prob(mu.view(), var.view(), req.view()).unwrap();
        assert!((lp - 0.5f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn task_log_prob_robotarium_task1() {
        // mu=13, var=19, req=11 -> ln Phi(2/sqrt(19)).
        let lp = task_success_log_prob(
            array![13.0, 8.0].view(),
            array![19.0, 36.5].view(),
            array![11.0, 0.0].view(),
        )
        .unwrap();
        let want = -0.39034637101591588815;
        assert!(((lp - want) / want).abs() < 1e-12, "{lp}");
    }

    #[test]
    fn task_log_prob_factorizes() {
        let mu = array![3.0, 4.0, 2.0];
        let var = array![1.5, 0.7, 2.2];
        let req = array![2.5, 4.5, 0.0];
        let joint = task_success_log_prob(mu.view(), var.view(), req.view()).unwrap();
        let mut split = 0.0;
        for u in 0..3 {
            split += task_success_log_prob(
                mu.slice(ndarray::s![u..=u]),
                var.slice(ndarray::s![u..=u]),
                req.slice(ndarray::s![u..=u]),
            )
            .unwrap();
        }
        assert!((joint - split).abs() < 1e-14);
    }

    #[test]
    fn success_log_probs_robotarium_printed_allocations() {
        let problem = robotarium();
        let ours = array![[6.0, 1.0], [0.0, 8.0]];
        let lp = success_log_probs(&ours, &problem).unwrap();
        assert!(((lp[0] + 0.39034637101591588815) / 0.39).abs() < 1e-10, "{}", lp[0]);
        assert!(((lp[1] + 0.44916123667856087817) / 0.449).abs() < 1e-10, "{}", lp[1]);

        let averse = array![[4.0, 3.0], [2.0, 6.0]];
        let lp = success_log_probs(&averse, &problem).unwrap();
        for v in lp {
            assert!((v - 0.5f64.ln()).abs() < 1e-14, "{v}");
        }
    }

    #[test]
    fn success_log_probs_zero_allocation_fails_hard() {
        let problem = robotarium();
        let lp = success_log_probs(&Array2::zeros((2, 2)), &problem).unwrap();
        for v in lp {
            assert!(v < -1e9, "{v}");
        }
    }

    #[test]
    fn task_success_reports_margins() {
        let ts = task_success(
            array![13.0, 8.0].view(),
            array![19.0, 36.5].view(),
            array![11.0, 0.0].view(),
        )
        .unwrap();
        assert_eq!(ts.per_trait_z.len(), 1);
        assert!((ts.per_trait_z[0] - 2.0 / 19.0f64.sqrt()).abs() < 1e-15);
        assert!((ts.prob - ts.log_prob.exp()).abs() < 1e-12);
    }

    #[test]
    fn gradient_zero_outside_own_row() {
        let problem = robotarium();
        let x = array![[3.0, 1.0], [2.0, 5.0]];
        let grads = grad_success_log_probs(&x, &problem).unwrap();
        assert_eq!(grads.len(), 2);
        for (m, g) in grads.iter().enumerate() {
            for m2 in 0..2 {
                if m2 != m {
                    assert!(g.row(m2).iter().all(|&v| v == 0.0));
                }
            }
        }
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let problem = robotarium();
        let x = array![[3.0, 1.5], [2.0, 5.0]];
        let grads = grad_success_log_probs(&x, &problem).unwrap();
        let h = 1e-5;
        for m in 0..2 {
            for s in 0..2 {
                let mut xp = x.clone();
                let mut xm = x.clone();
                xp[[m, s]] += h;
                xm[[m, s]] -= h;
                let fp = success_log_probs(&xp, &problem).unwrap()[m];
                let fm = success_log_probs(&xm, &problem).unwrap()[m];
                let fd = (fp - fm) / (2.0 * h);
                let an = grads[m][[m, s]];
                assert!(
                    ((an - fd) / fd.abs().max(1e-9)).abs() < 1e-6,
                    "m={m} s={s}: {an} vs {fd}"
                );
            }
        }
    }

    #[test]
    fn gradient_vanishes_at_huge_margin() {
        // x = 100 robots: mu 100, sigma 1, req 90 -> z = +10.
        let species = SpeciesTraitModel::new(array![[1.0]], array![[1e-4]]).unwrap();
        let team = TeamComposition::new(vec![200]);
        let tasks = TaskRequirements::new(array![[90.0]]).unwrap();
        let problem = ProblemInstance::new(species, team, tasks).unwrap();
        let x = array![[100.0]];
        let grads = grad_success_log_probs(&x, &problem).unwrap();
        assert!(grads[0][[0, 0]].abs() <= 1e-20, "{}", grads[0][[0, 0]]);
    }

    #[test]
    fn monotone_in_mean() {
        let var = array![2.0];
        let req = array![5.0];
        let mut prev = f64::NEG_INFINITY;
        for k in 0..60 {
            let mu = array![k as f64 * 0.3];
            let lp = task_success_log_prob(mu.view(), var.view(), req.view()).unwrap();
            assert!(lp >= prev);
            prev = lp;
        }
    }

    #[test]
    fn risk_regime_scalar_law() {
        let req = array![5.0];
        // mu above requirement: more variance hurts.
        let lo = task_success_log_prob(array![6.0].view(), array![1.0].view(), req.view()).unwrap();
        let hi = task_success_log_prob(array![6.0].view(), array![4.0].view(), req.view()).unwrap();
        assert!(hi < lo);
        // mu below requirement: more variance helps.
        let lo = task_success_log_prob(array![4.0].view(), array![1.0].view(), req.view()).unwrap();
        let hi = task_success_log_prob(array![4.0].view(), array![4.0].view(), req.view()).unwrap();
        assert!(hi > lo);
    }
}
