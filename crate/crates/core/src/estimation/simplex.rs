//! Box-constrained Nelder–Mead minimisation.

/// Outcome of a simplex search.
#[derive(Debug, Clone, PartialEq)]
pub struct SimplexResult {
    pub x: Vec<f64>,
    pub f: f64,
    pub iterations: usize,
    pub converged: bool,
}

#[derive(Debug, Clone, Copy)]
pub struct SimplexOptions {
    /// Stop when the spread of objective values across the simplex falls
    /// below this fraction of the best value.
    pub rel_tol: f64,
    /// Stop when every vertex lies within this distance of the best one.
    pub x_tol: f64,
    pub max_iter: usize,
}

/// Minimises `f` over the box `lo..=hi`, starting from the simplex formed by
/// `x0` and `x0 + step[i] e_i`. Trial points are projected onto the box.
pub fn nelder_mead<F: FnMut(&[f64]) -> f64>(
    mut f: F,
    x0: &[f64],
    step: &[f64],
    lo: &[f64],
    hi: &[f64],
    opts: SimplexOptions,
) -> SimplexResult {
    let n = x0.len();
    let clamp = |x: &mut Vec<f64>| {
        for (i, v) in x.iter_mut().enumerate() {
            *v = v.clamp(lo[i], hi[i]);
        }
    };
    let mut simplex: Vec<Vec<f64>> = Vec::with_capacity(n + 1);
    let mut start = x0.to_vec();
    clamp(&mut start);
    simplex.push(start.clone());
    for i in 0..n {
        let mut v = start.clone();
        v[i] += step[i];
        if v[i] > hi[i] {
            v[i] = start[i] - step[i];
        }
        clamp(&mut v);
        simplex.push(v);
    }
    let mut fv: Vec<f64> = simplex.iter().map(|v| f(v)).collect();

    let mut iterations = 0;
    let mut converged = false;
    while iterations < opts.max_iter {
        let mut order: Vec<usize> = (0..=n).collect();
        order.sort_by(|&a, &b| fv[a].total_cmp(&fv[b]));
        simplex = order.iter().map(|&i| simplex[i].clone()).collect();
        fv = order.iter().map(|&i| fv[i]).collect();

        let spread = fv[n] - fv[0];
        let size = simplex[1..]
            .iter()
            .map(|v| v.iter().zip(&simplex[0]).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
            .fold(0.0, f64::max);
        if spread <= opts.rel_tol * fv[0].abs() || size <= opts.x_tol {
            converged = true;
            break;
        }
        iterations += 1;

        let centroid: Vec<f64> =
            (0..n).map(|d| simplex[..n].iter().map(|v| v[d]).sum::<f64>() / n as f64).collect();
        let along = |t: f64| {
            let mut p: Vec<f64> = (0..n).map(|d| centroid[d] + t * (simplex[n][d] - centroid[d])).collect();
            clamp(&mut p);
            p
        };

        let xr = along(-1.0);
        let fr = f(&xr);
        if fr < fv[0] {
            let xe = along(-2.0);
            let fe = f(&xe);
            if fe < fr {
                simplex[n] = xe;
                fv[n] = fe;
            } else {
                simplex[n] = xr;
                fv[n] = fr;
            }
            continue;
        }
        if fr < fv[n - 1] {
            simplex[n] = xr;
            fv[n] = fr;
            continue;
        }
        let (xc, fc) = if fr < fv[n] {
            let xc = along(-0.5);
            let fc = f(&xc);
            (xc, fc)
        } else {
            let xc = along(0.5);
            let fc = f(&xc);
            (xc, fc)
        };
        if fc < fv[n].min(fr) {
            simplex[n] = xc;
            fv[n] = fc;
            continue;
        }
        for i in 1..=n {
            let mut v: Vec<f64> = (0..n).map(|d| simplex[0][d] + 0.5 * (simplex[i][d] - simplex[0][d])).collect();
            clamp(&mut v);
            fv[i] = f(&v);
            simplex[i] = v;
        }
    }
    let best = (0..=n).min_by(|&a, &b| fv[a].total_cmp(&fv[b])).expect("nonempty simplex");
    SimplexResult { x: simplex[best].clone(), f: fv[best], iterations, converged }
}

#[cfg(test)]
mod tests {
    use super::*;

    const OPTS: SimplexOptions = SimplexOptions { rel_tol: 1e-12, x_tol: 1e-10, max_iter: 2000 };

    #[test]
    fn minimises_rosenbrock() {
        let r = nelder_mead(
            |x| (1.0 - x[0]).powi(2) + 100.0 * (x[1] - x[0] * x[0]).powi(2),
            &[-1.2, 1.0],
            &[0.1, 0.1],
            &[-5.0, -5.0],
            &[5.0, 5.0],
            OPTS,
        );
        assert!(r.converged);
        assert!((r.x[0] - 1.0).abs() < 1e-4 && (r.x[1] - 1.0).abs() < 1e-4, "{r:?}");
    }

    #[test]
    fn respects_bounds() {
        let r = nelder_mead(|x| (x[0] - 3.0).powi(2), &[0.0], &[0.5], &[-1.0], &[1.0], OPTS);
        assert!((r.x[0] - 1.0).abs() < 1e-9);
        assert!(r.x[0] <= 1.0);
    }

    #[test]
    fn stops_at_iteration_cap() {
        let opts = SimplexOptions { max_iter: 3, ..OPTS };
        let r = nelder_mead(|x| x[0].powi(2) + x[1].powi(2), &[4.0, 4.0], &[0.01, 0.01], &[-9.0; 2], &[9.0; 2], opts);
        assert_eq!(r.iterations, 3);
        assert!(!r.converged);
    }
}
