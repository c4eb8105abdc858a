//! Randomized invariants spanning the model, numerics, and solver layers.

use coalition::gauss::{std_normal_cdf, std_normal_log_cdf, success_log_probs};
use coalition::solver::{
    project_capped_simplex, round_allocation, softmin, solve_risk_adaptive, solve_risk_neutral,
    SolverConfig, LOG_PROB_FLOOR,
};
use coalition::{
    aggregate_means, aggregate_variances, ProblemInstance, RelaxedAllocation, SpeciesTraitModel,
    TaskRequirements, TeamComposition,
};
use ndarray::{Array1, Array2};
use proptest::prelude::*;

fn matrix(rows: usize, cols: usize, lo: f64, hi: f64) -> impl Strategy<Value = Array2<f64>> {
    prop::collection::vec(lo..hi, rows * cols)
        .prop_map(move |v| Array2::from_shape_vec((rows, cols), v).unwrap())
}

fn problem() -> impl Strategy<Value = ProblemInstance> {
    (1usize..4, 1usize..4, 1usize..4).prop_flat_map(|(m, s, u)| {
        (
            matrix(s, u, 0.0, 5.0),
            matrix(s, u, 0.0, 2.0),
            prop::collection::vec(1u32..12, s),
            matrix(m, u, 0.0, 20.0),
        )
            .prop_map(|(mu, var, counts, req)| {
                ProblemInstance::new(
                    SpeciesTraitModel::new(mu, var).unwrap(),
                    TeamComposition::new(counts),
                    TaskRequirements::new(req).unwrap(),
                )
                .unwrap()
            })
    })
}

/// A problem plus a feasible relaxed allocation for it: column s holds
/// weights scaled so its sum stays at or below cap_s.
fn problem_with_relaxed() -> impl Strategy<Value = (ProblemInstance, Array2<f64>)> {
    problem().prop_flat_map(|p| {
        let (m, s) = (p.num_tasks(), p.num_species());
        let caps: Vec<f64> = p.team().counts().iter().map(|&c| f64::from(c)).collect();
        matrix(m, s, 0.0, 1.0).prop_map(move |w| {
            let mut x = w;
            for (j, &cap) in caps.iter().enumerate() {
                for i in 0..m {
                    x[[i, j]] *= cap / m as f64;
                }
            }
            (p.clone(), x)
        })
    })
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1.0)
}

proptest! {
    #[test]
    fn aggregate_means_are_linear((p, x) in problem_with_relaxed(), scale in 0.1f64..3.0) {
        let y = x.mapv(|v| v * 0.5);
        let lhs = aggregate_means(&(&x * scale + &y), p.species()).unwrap();
        let rhs = aggregate_means(&x, p.species()).unwrap() * scale
            + aggregate_means(&y, p.species()).unwrap();
        for (a, b) in lhs.iter().zip(rhs.iter()) {
            prop_assert!(close(*a, *b, 1e-12), "{a} vs {b}");
        }
    }

    #[test]
    fn aggregate_variances_never_negative((p, x) in problem_with_relaxed()) {
        let v = aggregate_variances(&x, p.species()).unwrap();
        prop_assert!(v.iter().all(|&e| e >= 0.0));
    }

    #[test]
    fn one_hot_row_scales_species_stats(p in problem(), x in 0u32..10) {
        let (m, s_n) = (p.num_tasks(), p.num_species());
        let xf = f64::from(x);
        for s in 0..s_n {
            let mut alloc = Array2::zeros((m, s_n));
            alloc[[0, s]] = xf;
            let means = aggregate_means(&alloc, p.species()).unwrap();
            let vars = aggregate_variances(&alloc, p.species()).unwrap();
            for u in 0..p.num_traits() {
                prop_assert_eq!(means[[0, u]], xf * p.species().means()[[s, u]]);
                prop_assert_eq!(vars[[0, u]], xf * xf * p.species().variances()[[s, u]]);
            }
        }
    }

    #[test]
    fn log_probs_invariant_under_species_relabeling((p, x) in problem_with_relaxed()) {
        let s_n = p.num_species();
        let perm: Vec<usize> = (0..s_n).rev().collect();
        let pick_rows = |a: &Array2<f64>| {
            let rows: Vec<_> = perm.iter().map(|&j| a.row(j).to_owned()).collect();
            ndarray::stack(ndarray::Axis(0), &rows.iter().map(|r| r.view()).collect::<Vec<_>>())
                .unwrap()
        };
        let permuted = ProblemInstance::new(
            SpeciesTraitModel::new(
                pick_rows(p.species().means()),
                pick_rows(p.species().variances()),
            )
            .unwrap(),
            TeamComposition::new(perm.iter().map(|&j| p.team().counts()[j]).collect()),
            TaskRequirements::new(p.tasks().matrix().clone()).unwrap(),
        )
        .unwrap();
        let mut x_perm = Array2::zeros(x.raw_dim());
        for (new_j, &old_j) in perm.iter().enumerate() {
            x_perm.column_mut(new_j).assign(&x.column(old_j));
        }
        let a = success_log_probs(&x, &p).unwrap();
        let b = success_log_probs(&x_perm, &permuted).unwrap();
        for (va, vb) in a.iter().zip(b.iter()) {
            prop_assert!(close(*va, *vb, 1e-9), "{va} vs {vb}");
        }
    }

    #[test]
    fn softmin_sandwiches_the_minimum(
        v in prop::collection::vec(-50.0f64..50.0, 1..8),
        beta in prop::sample::select(vec![1.0, 10.0, 100.0]),
    ) {
        // Mean-normalized softmin approaches the minimum from above.
        let arr = Array1::from_vec(v);
        let lo = arr.iter().cloned().fold(f64::INFINITY, f64::min);
        let sm = softmin(arr.view(), beta);
        prop_assert!(sm >= lo - 1e-12, "{sm} < min {lo}");
        prop_assert!(sm <= lo + (arr.len() as f64).ln() / beta + 1e-12);
    }

    #[test]
    fn softmin_tightens_as_beta_grows(v in prop::collection::vec(-50.0f64..50.0, 1..8)) {
        let arr = Array1::from_vec(v);
        let loose = softmin(arr.view(), 1.0);
        let tight = softmin(arr.view(), 10.0);
        prop_assert!(tight <= loose + 1e-12);
    }

    #[test]
    fn projection_is_feasible_idempotent_and_optimal(
        (v, w) in (2usize..6).prop_flat_map(|n| {
            (
                prop::collection::vec(-3.0f64..5.0, n),
                prop::collection::vec(0.0f64..1.0, n),
            )
        }),
        cap in 0.1f64..6.0,
    ) {
        let v = Array1::from_vec(v);
        let y = project_capped_simplex(v.view(), cap);
        prop_assert!(y.iter().all(|&e| e >= 0.0));
        prop_assert!(y.sum() <= cap + 1e-9);
        let twice = project_capped_simplex(y.view(), cap);
        for (a, b) in y.iter().zip(twice.iter()) {
            prop_assert!((a - b).abs() <= 1e-12);
        }
        // No feasible point sits strictly closer to v than the projection.
        let scale = cap / (w.iter().sum::<f64>() + 1.0);
        let candidate: Array1<f64> = w.iter().map(|&e| e * scale).collect();
        let d_proj: f64 = (&y - &v).mapv(|e| e * e).sum();
        let d_cand: f64 = (&candidate - &v).mapv(|e| e * e).sum();
        prop_assert!(d_proj <= d_cand + 1e-12, "{d_proj} vs {d_cand}");
    }

    #[test]
    fn projection_fixes_feasible_points(
        w in prop::collection::vec(0.0f64..1.0, 2..6),
        cap in 0.5f64..6.0,
    ) {
        let scale = cap / (w.iter().sum::<f64>() + 1.0);
        let y: Array1<f64> = w.iter().map(|&e| e * scale).collect();
        let back = project_capped_simplex(y.view(), cap);
        prop_assert_eq!(y, back);
    }

    #[test]
    fn projection_is_nonexpansive(
        u in prop::collection::vec(-4.0f64..4.0, 3),
        v in prop::collection::vec(-4.0f64..4.0, 3),
        cap in 0.1f64..5.0,
    ) {
        let (u, v) = (Array1::from_vec(u), Array1::from_vec(v));
        let pu = project_capped_simplex(u.view(), cap);
        let pv = project_capped_simplex(v.view(), cap);
        let din: f64 = (&u - &v).mapv(|e| e * e).sum();
        let dout: f64 = (&pu - &pv).mapv(|e| e * e).sum();
        prop_assert!(dout <= din + 1e-9);
    }

    #[test]
    fn cdf_is_symmetric_and_monotone(z in -8.0f64..8.0, dz in 0.0f64..4.0) {
        let p = std_normal_cdf(z).unwrap();
        let q = std_normal_cdf(-z).unwrap();
        prop_assert!((p + q - 1.0).abs() <= 1e-15, "{p} + {q}");
        prop_assert!(std_normal_cdf(z + dz).unwrap() >= p);
    }

    #[test]
    fn log_cdf_matches_cdf_where_it_does_not_underflow(z in -30.0f64..8.0) {
        let p = std_normal_cdf(z).unwrap();
        let lp = std_normal_log_cdf(z).unwrap();
        prop_assert!(close(lp.exp(), p, 1e-12), "{} vs {p}", lp.exp());
    }

    #[test]
    fn variance_helps_iff_the_mean_falls_short(
        margin in prop::sample::select(vec![-1.0f64, 1.0]),
        gap in 0.01f64..10.0,
        sigma in 0.3f64..4.9,
        bump in 0.1f64..5.0,
    ) {
        let z1 = margin * gap / sigma;
        let z2 = margin * gap / (sigma + bump);
        let p1 = std_normal_log_cdf(z1).unwrap();
        let p2 = std_normal_log_cdf(z2).unwrap();
        if margin > 0.0 {
            prop_assert!(p2 < p1, "spread hurt a satisfied task: {p2} vs {p1}");
        } else {
            prop_assert!(p2 > p1, "spread did not help a failing task: {p2} vs {p1}");
        }
    }

    #[test]
    fn rounding_respects_team_budget((p, x) in problem_with_relaxed()) {
        let relaxed = RelaxedAllocation::new(x, p.team()).unwrap();
        let objective = |xi: &Array2<f64>| {
            success_log_probs(xi, &p)
                .unwrap()
                .iter()
                .fold(f64::INFINITY, |acc, &v| acc.min(v.max(LOG_PROB_FLOOR)))
        };
        let rounded = round_allocation(&relaxed, &p, 200, &objective).unwrap();
        let report = coalition::validate_allocation(&rounded, p.team()).unwrap();
        prop_assert!(report.feasible, "slack {:?}", report.slack);
    }
}

#[test]
fn adaptive_never_trails_neutral_on_random_instances() {
    let cfg = SolverConfig { num_starts: 4, ..SolverConfig::default() };
    let gen = coalition::experiments::GeneratorConfig::default();
    for i in 0..10 {
        let mut rng = coalition::streams::stream_rng(gen.seed, i);
        let p = coalition::experiments::generate_instance(&gen, &mut rng).unwrap();
        let adaptive = solve_risk_adaptive(&p, &cfg).unwrap();
        let neutral = solve_risk_neutral(&p, &cfg).unwrap();
        assert!(
            adaptive.min_log_prob >= neutral.min_log_prob,
            "instance {i}: {} < {}",
            adaptive.min_log_prob,
            neutral.min_log_prob
        );
    }
}

#[test]
fn generated_instances_are_coverable_but_never_safe() {
    // Default requirement fractions top out at 0.6, so a proportional split
    // always covers expected demand and the neutral solver should reach zero
    // deficiency on every instance. Risk still differentiates methods: no
    // instance is certain to succeed, and the adaptive solver strictly
    // improves the worst task on most of them.
    let cfg = SolverConfig { num_starts: 4, ..SolverConfig::default() };
    let gen = coalition::experiments::GeneratorConfig::default();
    let n = 100;
    let mut strict_gains = 0usize;
    for i in 0..n {
        let mut rng = coalition::streams::stream_rng(gen.seed, i as u64);
        let p = coalition::experiments::generate_instance(&gen, &mut rng).unwrap();
        let neutral = solve_risk_neutral(&p, &cfg).unwrap();
        let means = aggregate_means(&neutral.allocation.to_f64(), p.species()).unwrap();
        let deficiency: f64 = p
            .tasks()
            .matrix()
            .iter()
            .zip(means.iter())
            .map(|(&req, &got)| (req - got).max(0.0).powi(2))
            .sum();
        assert_eq!(deficiency, 0.0, "instance {i} left unmet demand");
        assert!(neutral.min_prob() < 1.0, "instance {i} is risk-free");
        let adaptive = solve_risk_adaptive(&p, &cfg).unwrap();
        if adaptive.min_log_prob > neutral.min_log_prob + 1e-9 {
            strict_gains += 1;
        }
    }
    assert!(strict_gains >= n / 2, "adaptive only improved {strict_gains}/{n}");
}

#[test]
fn benchmark_probabilities_match_direct_recomputation() {
    let gen = coalition::experiments::GeneratorConfig::default();
    let solver = SolverConfig { num_starts: 4, ..SolverConfig::default() };
    let methods = coalition::solver::Method::ALL;
    let records =
        coalition::experiments::run_benchmark(6, &methods, &gen, &solver).unwrap();
    assert_eq!(records.len(), 24);
    for rec in &records {
        let mut rng = coalition::streams::stream_rng(gen.seed, rec.instance_id);
        let p = coalition::experiments::generate_instance(&gen, &mut rng).unwrap();
        let logs = success_log_probs(&rec.allocation.to_f64(), &p).unwrap();
        for (got, lp) in rec.task_probs.iter().zip(logs.iter()) {
            assert!((got - lp.exp()).abs() <= 1e-12, "{got} vs {}", lp.exp());
        }
        assert_eq!(
            rec.min_task_prob,
            rec.task_probs.iter().cloned().fold(f64::INFINITY, f64::min)
        );
    }
}
