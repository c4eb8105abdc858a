//! Euclidean projection onto the capped simplex {x : x >= 0, sum(x) <= cap}.

use ndarray::{Array1, ArrayView1};

/// Projects `v` onto {x >= 0, sum(x) <= cap}. If clipping at zero already
/// satisfies the cap that is the answer; otherwise the mass constraint is
/// active and the sorted-threshold rule for the simplex {x >= 0, sum(x) = cap}
/// applies: x_i = max(v_i - tau, 0) with tau chosen so the sum hits the cap.
pub fn project_capped_simplex(v: ArrayView1<f64>, cap: f64) -> Array1<f64> {
    if cap <= 0.0 {
        return Array1::zeros(v.len());
    }
    let clipped = v.mapv(|x| x.max(0.0));
    if clipped.sum() <= cap {
        return clipped;
    }
    let mut sorted: Vec<f64> = v.to_vec();
    sorted.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let mut cumsum = 0.0;
    let mut tau = 0.0;
    for (j, &vj) in sorted.iter().enumerate() {
        cumsum += vj;
        let t = (cumsum - cap) / (j + 1) as f64;
        if vj - t > 0.0 {
            tau = t;
        } else {
            break;
        }
    }
    v.mapv(|x| (x - tau).max(0.0))
}
