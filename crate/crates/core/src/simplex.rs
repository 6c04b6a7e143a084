//! Derivative-free maximisation: Nelder–Mead with every trial point pushed
//! through a caller-supplied projection (box clamp plus any repair).

/// Result of one local search.
#[derive(Debug, Clone, PartialEq)]
pub struct SimplexResult {
    pub x: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
}

/// Maximise `f` from `x0`, initial simplex edge `step`. When the simplex
/// collapses (objective spread below `tol`) before the budget is used up it
/// is rebuilt around the incumbent with half the previous edge.
pub fn maximize<F, P>(f: F, project: P, x0: &[f64], step: f64, iters: usize, tol: f64) -> SimplexResult
where
    F: Fn(&[f64]) -> f64,
    P: Fn(&mut [f64]),
{
    let d = x0.len();
    let eval = |x: &mut Vec<f64>| {
        project(x);
        f(x)
    };
    let build = |center: &[f64], h: f64| -> Vec<(Vec<f64>, f64)> {
        let mut s = Vec::with_capacity(d + 1);
        let mut c = center.to_vec();
        let fc = eval(&mut c);
        s.push((c, fc));
        for k in 0..d {
            let mut v = center.to_vec();
            // step inward when the outward vertex would be clamped back onto the center
            v[k] += if center[k] + h <= 1.0 { h } else { -h };
            let fv = eval(&mut v);
            s.push((v, fv));
        }
        s
    };
    let mut h = step;
    let mut simplex = build(x0, h);
    let mut used = 0;
    while used < iters {
        used += 1;
        // best first
        simplex.sort_by(|a, b| b.1.total_cmp(&a.1));
        if simplex[0].1 - simplex[d].1 < tol {
            h *= 0.5;
            if h < 1e-12 {
                break;
            }
            let best = simplex[0].0.clone();
            simplex = build(&best, h);
            continue;
        }
        let centroid: Vec<f64> = (0..d)
            .map(|k| simplex[..d].iter().map(|v| v.0[k]).sum::<f64>() / d as f64)
            .collect();
        let worst = simplex[d].clone();
        let along = |t: f64| -> Vec<f64> {
            (0..d).map(|k| centroid[k] + t * (centroid[k] - worst.0[k])).collect()
        };
        let mut r = along(1.0);
        let fr = eval(&mut r);
        if fr > simplex[0].1 {
            let mut e = along(2.0);
            let fe = eval(&mut e);
            simplex[d] = if fe > fr { (e, fe) } else { (r, fr) };
        } else if fr > simplex[d - 1].1 {
            simplex[d] = (r, fr);
        } else {
            let mut c = if fr > worst.1 { along(0.5) } else { along(-0.5) };
            let fc = eval(&mut c);
            if fc > worst.1.max(fr) {
                simplex[d] = (c, fc);
            } else {
                let best = simplex[0].0.clone();
                for v in simplex.iter_mut().skip(1) {
                    let mut s: Vec<f64> = (0..d).map(|k| best[k] + 0.5 * (v.0[k] - best[k])).collect();
                    let fs = eval(&mut s);
                    *v = (s, fs);
                }
            }
        }
    }
    simplex.sort_by(|a, b| b.1.total_cmp(&a.1));
    let (x, value) = simplex.swap_remove(0);
    SimplexResult {
        x,
        value,
        iterations: used,
    }
}

/// Clamp every coordinate into [0, 1].
pub fn clamp_unit(x: &mut [f64]) {
    for v in x {
        *v = v.clamp(0.0, 1.0);
    }
}
