//! Derivative-free Nelder-Mead minimization.

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NelderMeadConfig {
    /// Initial simplex edge along each coordinate.
    pub step: f64,
    /// Stop once the spread of objective values across the simplex is below
    /// this.
    pub f_tol: f64,
    /// ...and the simplex diameter is below this.
    pub x_tol: f64,
    pub max_iter: usize,
}

impl Default for NelderMeadConfig {
    fn default() -> Self {
        Self {
            step: 0.5,
            f_tol: 1e-8,
            x_tol: 1e-8,
            max_iter: 5_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub fx: f64,
    pub iterations: usize,
    pub evaluations: usize,
    pub converged: bool,
}

/// Minimizes `f` from `x0`. Non-finite objective values are treated as +∞,
/// which lets callers encode constraints by returning NaN or ∞.
pub fn nelder_mead<F>(mut f: F, x0: &[f64], config: &NelderMeadConfig) -> Minimum
where
    F: FnMut(&[f64]) -> f64,
{
    let n = x0.len();
    let mut evaluations = 0;
    let mut eval = |x: &[f64]| {
        evaluations += 1;
        let v = f(x);
        if v.is_finite() {
            v
        } else {
            f64::INFINITY
        }
    };

    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(n + 1);
    simplex.push((x0.to_vec(), eval(x0)));
    for i in 0..n {
        let mut x = x0.to_vec();
        x[i] += config.step;
        let fx = eval(&x);
        simplex.push((x, fx));
    }

    let (alpha, gamma, rho, sigma) = (1.0, 2.0, 0.5, 0.5);
    let mut iterations = 0;
    let mut converged = false;
    while iterations < config.max_iter {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let f_spread = simplex[n].1 - simplex[0].1;
        let diameter = simplex[1..]
            .iter()
            .map(|(x, _)| {
                x.iter()
                    .zip(&simplex[0].0)
                    .map(|(a, b)| (a - b).abs())
                    .fold(0.0, f64::max)
            })
            .fold(0.0, f64::max);
        if f_spread.is_finite() && f_spread <= config.f_tol && diameter <= config.x_tol {
            converged = true;
            break;
        }
        iterations += 1;

        let centroid: Vec<f64> = (0..n)
            .map(|j| simplex[..n].iter().map(|(x, _)| x[j]).sum::<f64>() / n as f64)
            .collect();
        let along = |t: f64, worst: &[f64]| -> Vec<f64> {
            centroid
                .iter()
                .zip(worst)
                .map(|(c, w)| c + t * (w - c))
                .collect()
        };
        let worst = simplex[n].0.clone();
        let reflected = along(-alpha, &worst);
        let fr = eval(&reflected);

        if fr < simplex[0].1 {
            let expanded = along(-gamma, &worst);
            let fe = eval(&expanded);
            simplex[n] = if fe < fr {
                (expanded, fe)
            } else {
                (reflected, fr)
            };
        } else if fr < simplex[n - 1].1 {
            simplex[n] = (reflected, fr);
        } else {
            // outside contraction if the reflection improved on the worst
            // vertex, inside otherwise
            let outside = fr < simplex[n].1;
            let contracted = along(if outside { -rho } else { rho }, &worst);
            let fc = eval(&contracted);
            let accept = if outside { fc <= fr } else { fc < simplex[n].1 };
            if accept {
                simplex[n] = (contracted, fc);
            } else {
                let best = simplex[0].0.clone();
                for vertex in simplex.iter_mut().skip(1) {
                    let x: Vec<f64> = best
                        .iter()
                        .zip(&vertex.0)
                        .map(|(b, v)| b + sigma * (v - b))
                        .collect();
                    let fx = eval(&x);
                    *vertex = (x, fx);
                }
            }
        }
    }
    simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
    let (x, fx) = simplex.swap_remove(0);
    Minimum {
        x,
        fx,
        iterations,
        evaluations,
        converged,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rosenbrock() {
        let cfg = NelderMeadConfig {
            f_tol: 1e-14,
            x_tol: 1e-10,
            max_iter: 20_000,
            ..Default::default()
        };
        let m = nelder_mead(
            |x| (1.0 - x[0]).powi(2) + 100.0 * (x[1] - x[0] * x[0]).powi(2),
            &[-1.2, 1.0],
            &cfg,
        );
        assert!(m.converged);
        assert!((m.x[0] - 1.0).abs() < 1e-5 && (m.x[1] - 1.0).abs() < 1e-5);
    }

    #[test]
    fn infeasible_region_is_avoided() {
        let m = nelder_mead(
            |x| {
                if x[0] < 0.0 {
                    f64::NAN
                } else {
                    (x[0] - 0.3).powi(2)
                }
            },
            &[2.0],
            &NelderMeadConfig::default(),
        );
        assert!((m.x[0] - 0.3).abs() < 1e-4);
    }

    #[test]
    fn reports_non_convergence() {
        let cfg = NelderMeadConfig {
            max_iter: 3,
            ..Default::default()
        };
        let m = nelder_mead(|x| x[0].powi(2) + x[1].powi(2), &[5.0, 5.0], &cfg);
        assert!(!m.converged);
        assert_eq!(m.iterations, 3);
    }
}
