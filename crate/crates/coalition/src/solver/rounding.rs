//! Integer repair of a relaxed allocation: largest-remainder rounding per
//! species column, then best-improvement hill climbing on the integer score.

use ndarray::Array2;

use crate::error::Result;
use crate::model::{Allocation, ProblemInstance, RelaxedAllocation};

/// Stage 1: floor every entry, then hand each species' leftover integer
/// budget (min(cap, rounded column sum) minus the floor total) to the
/// largest fractional parts, ties to the lowest task index.
fn largest_remainder(xc: &Array2<f64>, caps: &[u32]) -> Array2<u32> {
    let m_tasks = xc.nrows();
    let mut out = Array2::<u32>::zeros(xc.dim());
    for (s, &cap) in caps.iter().enumerate() {
        let col = xc.column(s);
        let mut floors: Vec<u32> = Vec::with_capacity(m_tasks);
        let mut fracs: Vec<(usize, f64)> = Vec::with_capacity(m_tasks);
        let mut floor_total: u64 = 0;
        for (m, &v) in col.iter().enumerate() {
            let fl = v.floor();
            floors.push(fl as u32);
            floor_total += fl as u64;
            fracs.push((m, v - fl));
        }
        let target = (col.sum().round() as u64).min(u64::from(cap));
        let mut leftover = target.saturating_sub(floor_total) as usize;
        fracs.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(&b.0)));
        for &(m, _) in &fracs {
            if leftover == 0 {
                break;
            }
            floors[m] += 1;
            leftover -= 1;
        }
        for m in 0..m_tasks {
            out[[m, s]] = floors[m];
        }
    }
    out
}

/// Candidate moves around an integer allocation, in a fixed deterministic
/// order: transfers within a species, additions of spare agents, removals.
fn apply_best_move(
    x: &mut Array2<u32>,
    caps: &[u32],
    score: f64,
    objective_int: &dyn Fn(&Array2<f64>) -> f64,
) -> Option<f64> {
    let (m_tasks, s_species) = x.dim();
    let used: Vec<u32> = (0..s_species).map(|s| x.column(s).sum()).collect();
    type Move = (f64, usize, usize, i32, i32); // score, s, from, to, from_raw
    let mut best: Option<Move> = None;
    let consider = |x: &Array2<u32>, s: usize, from: i32, to: i32, best: &mut Option<Move>| {
        let mut trial = x.mapv(f64::from);
        if from >= 0 {
            trial[[from as usize, s]] -= 1.0;
        }
        if to >= 0 {
            trial[[to as usize, s]] += 1.0;
        }
        let sc = objective_int(&trial);
        let current_best = best.as_ref().map_or(score, |&(b, ..)| b);
        if sc > current_best {
            *best = Some((sc, s, from as usize, to, from));
        }
    };
    for s in 0..s_species {
        for m_from in 0..m_tasks {
            if x[[m_from, s]] == 0 {
                continue;
            }
            for m_to in 0..m_tasks {
                if m_to != m_from {
                    consider(x, s, m_from as i32, m_to as i32, &mut best);
                }
            }
        }
    }
    for s in 0..s_species {
        if used[s] < caps[s] {
            for m in 0..m_tasks {
                consider(x, s, -1, m as i32, &mut best);
            }
        }
    }
    for s in 0..s_species {
        for m in 0..m_tasks {
            if x[[m, s]] > 0 {
                consider(x, s, m as i32, -1, &mut best);
            }
        }
    }
    let (new_score, s, from, to, from_raw) = best?;
    if from_raw >= 0 {
        x[[from, s]] -= 1;
    }
    if to >= 0 {
        x[[to as usize, s]] += 1;
    }
    Some(new_score)
}

/// Rounds a relaxed allocation to a feasible integer one, then repairs it by
/// applying up to `max_moves` single best strictly-improving moves among
/// {transfer one agent between tasks, add one spare agent, remove one agent},
/// judged by `objective_int` (higher is better).
pub fn round_allocation(
    xc: &RelaxedAllocation,
    problem: &ProblemInstance,
    max_moves: usize,
    objective_int: &dyn Fn(&Array2<f64>) -> f64,
) -> Result<Allocation> {
    let caps = problem.team().counts();
    let mut x = largest_remainder(xc.matrix(), caps);
    let mut score = objective_int(&x.mapv(f64::from));
    for _ in 0..max_moves {
        match apply_best_move(&mut x, caps, score, objective_int) {
            Some(s) => score = s,
            None => break,
        }
    }
    Ok(Allocation::new(x))
}
