//! Subcommand implementations shared by the binary and the test suites.

use std::path::{Path, PathBuf};

use coalition::experiments::{robotarium_preset, run_benchmark, summarize, GeneratorConfig};
use coalition::gauss::success_log_probs;
use coalition::montecarlo::{evaluate_allocation_mc, SamplingMode};
use coalition::solver::{
    solve_risk_adaptive, solve_risk_averse, solve_risk_neutral, solve_random, Method, SolverConfig,
};
use coalition::streams::stream_rng;
use coalition::{validate_allocation, Allocation, ProblemInstance};

use crate::io::{
    self, allocation_from_rows, allocation_rows, round_sig, AllocationsFile, EvalEntry,
    EvalReport, NamedAllocationEntry, ProblemFile, ResultFile,
};
use crate::CliError;

fn load_problem(path: &Path) -> Result<ProblemInstance, CliError> {
    let file: ProblemFile = io::read_json(path)?;
    file.to_problem()
}

fn solver_config(seed: u64, starts: usize, lambda: f64) -> Result<SolverConfig, CliError> {
    let cfg = SolverConfig { seed, num_starts: starts, lambda, ..SolverConfig::default() };
    cfg.validate().map_err(|e| CliError::Usage(e.to_string()))?;
    Ok(cfg)
}

fn species_names(problem: &ProblemInstance) -> Vec<String> {
    problem.labels().map_or_else(
        || (1..=problem.num_species()).map(|i| format!("species_{i}")).collect(),
        |l| l.species.clone(),
    )
}

fn task_names(problem: &ProblemInstance) -> Vec<String> {
    problem.labels().map_or_else(
        || (1..=problem.num_tasks()).map(|i| format!("task_{i}")).collect(),
        |l| l.tasks.clone(),
    )
}

fn print_allocation_table(problem: &ProblemInstance, x: &Allocation) {
    let species = species_names(problem);
    let tasks = task_names(problem);
    let width = tasks.iter().map(String::len).max().unwrap_or(4).max(4);
    println!("allocation (task x species):");
    print!("  {:width$}", "");
    for name in &species {
        print!("  {name:>10}");
    }
    println!();
    for (m, task) in tasks.iter().enumerate() {
        print!("  {task:<width$}");
        for s in 0..species.len() {
            print!("  {:>10}", x.matrix()[[m, s]]);
        }
        println!();
    }
}

pub fn solve(
    problem_path: &Path,
    method: Method,
    seed: u64,
    starts: usize,
    lambda: f64,
    out: Option<&Path>,
    timing: bool,
) -> Result<(), CliError> {
    let problem = load_problem(problem_path)?;
    let cfg = solver_config(seed, starts, lambda)?;
    let solution = match method {
        Method::Adaptive => solve_risk_adaptive(&problem, &cfg),
        Method::Neutral => solve_risk_neutral(&problem, &cfg),
        Method::Averse => solve_risk_averse(&problem, &cfg),
        Method::Random => solve_random(&problem, seed),
    }
    .map_err(|e| CliError::Runtime(e.to_string()))?;

    println!("method: {method}");
    print_allocation_table(&problem, &solution.allocation);
    let tasks = task_names(&problem);
    let width = tasks.iter().map(String::len).max().unwrap_or(4).max(4);
    println!("task success probabilities:");
    for (name, p) in tasks.iter().zip(solution.task_probs()) {
        println!("  {name:<width$}  {}", round_sig(p));
    }
    println!("min task probability: {}", round_sig(solution.min_prob()));
    println!(
        "solve stats: {} iterations across {} starts in {:.3} s",
        solution.stats.iterations, solution.stats.starts, solution.stats.seconds
    );

    if let Some(path) = out {
        let result = ResultFile::new(
            method,
            &solution.allocation,
            &solution.task_probs(),
            solution.min_prob(),
            &solution.stats,
            &cfg,
            timing,
        );
        io::write_json(path, &result)?;
        println!("wrote {}", path.display());
    }
    Ok(())
}

fn named_allocations(arg: &str) -> Result<Vec<NamedAllocationEntry>, CliError> {
    if arg.trim_start().starts_with('[') {
        let rows: Vec<Vec<u32>> = io::parse_json(arg)
            .map_err(|msg| CliError::Usage(format!("inline allocation: {msg}")))?;
        return Ok(vec![NamedAllocationEntry { name: "inline".into(), assignment: rows }]);
    }
    let file: AllocationsFile = io::read_json(Path::new(arg))?;
    if file.allocations.is_empty() {
        return Err(CliError::Runtime(format!("{arg}: no allocations listed")));
    }
    Ok(file.allocations)
}

fn check_feasible(
    name: &str,
    x: &Allocation,
    problem: &ProblemInstance,
) -> Result<(), CliError> {
    let report = validate_allocation(x, problem.team())
        .map_err(|e| CliError::Runtime(format!("allocation '{name}': {e}")))?;
    if report.feasible {
        return Ok(());
    }
    let species = species_names(problem);
    let over: Vec<String> = report
        .slack
        .iter()
        .enumerate()
        .filter(|(_, &s)| s < 0)
        .map(|(i, &s)| format!("'{}' over-assigned by {}", species[i], -s))
        .collect();
    Err(CliError::Runtime(format!("allocation '{name}' infeasible: {}", over.join(", "))))
}

#[allow(clippy::too_many_arguments)]
pub fn eval(
    problem_path: &Path,
    allocation_arg: &str,
    trials: u64,
    seed: u64,
    clamp_nonnegative: bool,
    out: Option<&Path>,
) -> Result<(), CliError> {
    if trials == 0 {
        return Err(CliError::Usage("--trials must be at least 1".into()));
    }
    let problem = load_problem(problem_path)?;
    let mode = if clamp_nonnegative { SamplingMode::ClampNonnegative } else { SamplingMode::Raw };
    let sampling = if clamp_nonnegative { "clamp_nonnegative" } else { "raw" };
    let tasks = task_names(&problem);
    let width = tasks.iter().map(String::len).max().unwrap_or(8).max(8);

    let mut entries = Vec::new();
    for (i, named) in named_allocations(allocation_arg)?.iter().enumerate() {
        let x = allocation_from_rows(&named.assignment)?;
        if x.matrix().nrows() != problem.num_tasks() || x.matrix().ncols() != problem.num_species()
        {
            return Err(CliError::Runtime(format!(
                "allocation '{}': expected a {}x{} matrix, found {}x{}",
                named.name,
                problem.num_tasks(),
                problem.num_species(),
                x.matrix().nrows(),
                x.matrix().ncols()
            )));
        }
        check_feasible(&named.name, &x, &problem)?;
        let log_probs = success_log_probs(&x.to_f64(), &problem)
            .map_err(|e| CliError::Runtime(e.to_string()))?;
        let probs: Vec<f64> = log_probs.iter().map(|&lp| lp.exp()).collect();
        let combined: f64 = probs.iter().product();
        let mc = evaluate_allocation_mc(&x, &problem, trials, mode, &mut stream_rng(seed, i as u64))
            .map_err(|e| CliError::Runtime(e.to_string()))?;
        let max_abs_gap = probs
            .iter()
            .zip(&mc.task_rates)
            .map(|(p, r)| (p - r).abs())
            .fold((combined - mc.combined_rate).abs(), f64::max);

        println!("allocation \"{}\" ({} trials, {} sampling):", named.name, trials, sampling);
        println!("  {:<width$}  {:>15}  {:>10}  {:>10}", "task", "closed_form", "mc_rate", "gap");
        for m in 0..tasks.len() {
            println!(
                "  {:<width$}  {:>15.12}  {:>10.6}  {:>10.6}",
                tasks[m],
                probs[m],
                mc.task_rates[m],
                (probs[m] - mc.task_rates[m]).abs()
            );
        }
        println!(
            "  {:<width$}  {:>15.12}  {:>10.6}  {:>10.6}",
            "combined",
            combined,
            mc.combined_rate,
            (combined - mc.combined_rate).abs()
        );
        entries.push(EvalEntry {
            name: named.name.clone(),
            allocation: allocation_rows(&x),
            task_probs: probs.iter().map(|&p| round_sig(p)).collect(),
            mc_task_rates: mc.task_rates.iter().map(|&r| round_sig(r)).collect(),
            combined_prob: round_sig(combined),
            mc_combined_rate: round_sig(mc.combined_rate),
            max_abs_gap: round_sig(max_abs_gap),
        });
    }

    if let Some(path) = out {
        let report = EvalReport {
            trials,
            sampling: sampling.to_string(),
            seed,
            allocations: entries,
        };
        io::write_json(path, &report)?;
        println!("wrote {}", path.display());
    }
    Ok(())
}

fn format_summary(summaries: &[coalition::experiments::MethodSummary]) -> String {
    let mut out = String::new();
    out.push_str(&format!(
        "{:<10} {:>7}  {:<13} {:>9} {:>9} {:>9} {:>9} {:>9}\n",
        "method", "records", "metric", "min", "q1", "median", "q3", "max"
    ));
    for s in summaries {
        for (metric, stats) in
            [("task_probs", &s.pooled_task_probs), ("min_task_prob", &s.min_task_probs)]
        {
            out.push_str(&format!(
                "{:<10} {:>7}  {:<13} {:>9.6} {:>9.6} {:>9.6} {:>9.6} {:>9.6}\n",
                s.method.name(),
                s.records,
                metric,
                stats.min,
                stats.q1,
                stats.median,
                stats.q3,
                stats.max
            ));
        }
    }
    out
}

#[allow(clippy::too_many_arguments)]
pub fn bench(
    instances: u64,
    methods: &[Method],
    seed: u64,
    out_dir: &Path,
    starts: usize,
    lambda: f64,
    timing: bool,
) -> Result<(), CliError> {
    if instances == 0 {
        return Err(CliError::Usage("--instances must be at least 1".into()));
    }
    let gen = GeneratorConfig { seed, ..GeneratorConfig::default() };
    let solver = solver_config(seed, starts, lambda)?;
    let records = run_benchmark(instances, methods, &gen, &solver)
        .map_err(|e| CliError::Runtime(e.to_string()))?;

    std::fs::create_dir_all(out_dir)
        .map_err(|e| CliError::Runtime(format!("cannot create {}: {e}", out_dir.display())))?;
    let num_tasks = records[0].task_probs.len();
    let mut csv = String::from("instance_id,method");
    for m in 1..=num_tasks {
        csv.push_str(&format!(",task_prob_{m}"));
    }
    csv.push_str(",min_task_prob,solve_seconds\n");
    for rec in &records {
        csv.push_str(&format!("{},{}", rec.instance_id, rec.method.name()));
        for &p in &rec.task_probs {
            csv.push_str(&format!(",{}", round_sig(p)));
        }
        let seconds = if timing { rec.solve_seconds } else { 0.0 };
        csv.push_str(&format!(",{},{}\n", round_sig(rec.min_task_prob), seconds));
    }
    let csv_path: PathBuf = out_dir.join("records.csv");
    std::fs::write(&csv_path, &csv)
        .map_err(|e| CliError::Runtime(format!("cannot write {}: {e}", csv_path.display())))?;

    let summaries = summarize(&records).map_err(|e| CliError::Runtime(e.to_string()))?;
    let table = format_summary(&summaries);
    let summary_path = out_dir.join("summary.txt");
    std::fs::write(&summary_path, &table)
        .map_err(|e| CliError::Runtime(format!("cannot write {}: {e}", summary_path.display())))?;

    print!("{table}");
    println!("wrote {} and {}", csv_path.display(), summary_path.display());
    Ok(())
}

pub fn preset(name: &str, out: &Path) -> Result<(), CliError> {
    if name != "robotarium" {
        return Err(CliError::Usage(format!(
            "unknown preset '{name}' (available presets: robotarium)"
        )));
    }
    let (problem, named) = robotarium_preset();
    io::write_json(out, &ProblemFile::from_problem(&problem))?;
    let stem = out.file_stem().map_or_else(|| "preset".to_string(), |s| s.to_string_lossy().into_owned());
    let alloc_path = out.with_file_name(format!("{stem}.allocations.json"));
    let allocations = AllocationsFile {
        allocations: named
            .iter()
            .map(|n| NamedAllocationEntry {
                name: n.name.clone(),
                assignment: allocation_rows(&n.allocation),
            })
            .collect(),
    };
    io::write_json(&alloc_path, &allocations)?;
    println!("wrote {} and {}", out.display(), alloc_path.display());
    Ok(())
}
