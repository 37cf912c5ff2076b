//! Two-parameter Nelder-Mead minimizer.

#[derive(Debug, Clone, Copy)]
pub struct SimplexOptions {
    /// Stop once the spread of objective values over the simplex is below this...
    pub f_tol: f64,
    /// ...and every vertex lies within this distance of the best one.
    pub x_tol: f64,
    pub max_iter: usize,
}

#[derive(Debug, Clone, Copy)]
pub struct SimplexResult {
    pub x: [f64; 2],
    pub f: f64,
    pub iterations: usize,
    pub converged: bool,
}

fn dist(a: &[f64; 2], b: &[f64; 2]) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt()
}

fn lerp(a: &[f64; 2], b: &[f64; 2], t: f64) -> [f64; 2] {
    [a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])]
}

/// Minimizes `f` starting from the simplex `{x0, x0 + step e1, x0 + step e2}`.
pub fn minimize<F: FnMut(&[f64; 2]) -> f64>(mut f: F, x0: [f64; 2], step: f64, opts: &SimplexOptions) -> SimplexResult {
    let mut pts = [x0, [x0[0] + step, x0[1]], [x0[0], x0[1] + step]];
    let mut vals = [f(&pts[0]), f(&pts[1]), f(&pts[2])];
    let mut iterations = 0;
    let mut converged = false;

    while iterations < opts.max_iter {
        // sort ascending
        let mut idx = [0usize, 1, 2];
        idx.sort_by(|&a, &b| vals[a].total_cmp(&vals[b]));
        pts = [pts[idx[0]], pts[idx[1]], pts[idx[2]]];
        vals = [vals[idx[0]], vals[idx[1]], vals[idx[2]]];

        let spread = vals[2] - vals[0];
        let size = dist(&pts[0], &pts[1]).max(dist(&pts[0], &pts[2]));
        if spread <= opts.f_tol && size <= opts.x_tol {
            converged = true;
            break;
        }
        iterations += 1;

        let centroid = lerp(&pts[0], &pts[1], 0.5);
        let reflected = lerp(&centroid, &pts[2], -1.0);
        let fr = f(&reflected);
        if fr < vals[0] {
            let expanded = lerp(&centroid, &pts[2], -2.0);
            let fe = f(&expanded);
            if fe < fr {
                pts[2] = expanded;
                vals[2] = fe;
            } else {
                pts[2] = reflected;
                vals[2] = fr;
            }
            continue;
        }
        if fr < vals[1] {
            pts[2] = reflected;
            vals[2] = fr;
            continue;
        }
        let (contracted, fc) = if fr < vals[2] {
            let c = lerp(&centroid, &reflected, 0.5);
            let fc = f(&c);
            (c, fc)
        } else {
            let c = lerp(&centroid, &pts[2], 0.5);
            let fc = f(&c);
            (c, fc)
        };
        if fc < vals[2].min(fr) {
            pts[2] = contracted;
            vals[2] = fc;
            continue;
        }
        // shrink toward the best vertex
        for k in 1..3 {
            pts[k] = lerp(&pts[0], &pts[k], 0.5);
            vals[k] = f(&pts[k]);
        }
    }

    let best = (0..3).min_by(|&a, &b| vals[a].total_cmp(&vals[b])).unwrap_or(0);
    SimplexResult {
        x: pts[best],
        f: vals[best],
        iterations,
        converged,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const OPTS: SimplexOptions = SimplexOptions {
        f_tol: 1e-14,
        x_tol: 1e-8,
        max_iter: 2000,
    };

    #[test]
    fn finds_quadratic_minimum() {
        let res = minimize(
            |x| (x[0] - 1.0).powi(2) + 3.0 * (x[1] + 0.5).powi(2) + 0.5 * x[0] * x[1],
            [0.0, 0.0],
            0.5,
            &OPTS,
        );
        assert!(res.converged);
        // gradient vanishes at the minimum
        let gx = 2.0 * (res.x[0] - 1.0) + 0.5 * res.x[1];
        let gy = 6.0 * (res.x[1] + 0.5) + 0.5 * res.x[0];
        assert!(gx.abs() < 1e-6 && gy.abs() < 1e-6, "{:?}", res);
    }

    #[test]
    fn rosenbrock() {
        let res = minimize(
            |x| (1.0 - x[0]).powi(2) + 100.0 * (x[1] - x[0] * x[0]).powi(2),
            [-1.2, 1.0],
            0.1,
            &OPTS,
        );
        assert!(
            (res.x[0] - 1.0).abs() < 1e-5 && (res.x[1] - 1.0).abs() < 1e-5,
            "{:?}",
            res
        );
    }

    #[test]
    fn constant_objective_terminates() {
        let res = minimize(|_| 2.0, [0.0, 0.0], 1.0, &OPTS);
        assert!(res.converged);
        assert_eq!(res.f, 2.0);
    }
}
