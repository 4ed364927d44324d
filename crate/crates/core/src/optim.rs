//! Optimizers: a derivative-free Nelder-Mead simplex for the ARMA
//! objective and Adam for the neural models.

/// Nelder-Mead stopping/budget knobs.
#[derive(Debug, Clone)]
pub struct NelderMeadOptions {
    /// Total iteration budget, shared across restarts.
    pub max_iter: usize,
    /// Convergence tolerance on the objective spread across the simplex,
    /// relative to the incumbent value (absolute below magnitude 1).
    pub tol: f64,
}

fn spread_converged(best: f64, worst: f64, tol: f64) -> bool {
    worst.is_finite() && (worst - best).abs() <= tol * best.abs().max(1.0)
}

impl Default for NelderMeadOptions {
    fn default() -> Self {
        Self {
            max_iter: 2000,
            tol: 1e-8,
        }
    }
}

#[derive(Debug, Clone)]
pub struct NelderMeadResult {
    pub x: Vec<f64>,
    pub fx: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Minimize `f` from `x0`, stepping `steps[i]` along each axis to build
/// the initial simplex. Objective values of `INFINITY` act as rejections,
/// so hard constraints can be folded into `f`.
///
/// When the simplex collapses the search restarts around the incumbent
/// with shrunken steps until the iteration budget runs out or a restart
/// stops improving.
pub fn nelder_mead<F: FnMut(&[f64]) -> f64>(
    mut f: F,
    x0: &[f64],
    steps: &[f64],
    opts: &NelderMeadOptions,
) -> NelderMeadResult {
    assert_eq!(x0.len(), steps.len());
    let n = x0.len();
    let mut eval = |x: &[f64]| {
        let v = f(x);
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    };

    if n == 0 {
        let fx = eval(x0);
        return NelderMeadResult {
            x: x0.to_vec(),
            fx,
            iterations: 0,
            converged: true,
        };
    }

    let mut best_x = x0.to_vec();
    let mut best_fx = f64::INFINITY;
    let mut iterations = 0;
    let mut scale = 1.0;

    let converged = 'restarts: loop {
        // Simplex around the incumbent.
        let mut points: Vec<(Vec<f64>, f64)> = Vec::with_capacity(n + 1);
        let f0 = eval(&best_x);
        points.push((best_x.clone(), f0));
        for i in 0..n {
            let mut p = best_x.clone();
            p[i] += steps[i] * scale;
            let fp = eval(&p);
            points.push((p, fp));
        }
        points.sort_by(|a, b| a.1.total_cmp(&b.1));
        let fx_at_restart = points[0].1;

        while iterations < opts.max_iter {
            iterations += 1;
            if spread_converged(points[0].1, points[n].1, opts.tol) {
                break;
            }

            let centroid: Vec<f64> = (0..n)
                .map(|i| points[..n].iter().map(|(p, _)| p[i]).sum::<f64>() / n as f64)
                .collect();
            let worst = points[n].clone();

            let blend = |a: f64, b: f64| -> Vec<f64> {
                (0..n).map(|i| a * centroid[i] + b * worst.0[i]).collect()
            };

            // Reflection.
            let xr = blend(2.0, -1.0);
            let fr = eval(&xr);
            if fr < points[0].1 {
                // Expansion.
                let xe = blend(3.0, -2.0);
                let fe = eval(&xe);
                points[n] = if fe < fr { (xe, fe) } else { (xr, fr) };
            } else if fr < points[n - 1].1 {
                points[n] = (xr, fr);
            } else {
                // Contraction (outside if the reflection helped at all).
                let xc = if fr < worst.1 {
                    blend(1.5, -0.5)
                } else {
                    blend(0.5, 0.5)
                };
                let fc = eval(&xc);
                if fc < worst.1.min(fr) {
                    points[n] = (xc, fc);
                } else {
                    // Shrink toward the best vertex.
                    let best = points[0].0.clone();
                    for entry in points.iter_mut().skip(1) {
                        for i in 0..n {
                            entry.0[i] = 0.5 * (entry.0[i] + best[i]);
                        }
                        entry.1 = eval(&entry.0);
                    }
                }
            }
            points.sort_by(|a, b| a.1.total_cmp(&b.1));
        }

        if points[0].1 < best_fx {
            best_fx = points[0].1;
            best_x = points[0].0.clone();
        }
        let this_converged = spread_converged(points[0].1, points[n].1, opts.tol);
        if this_converged {
            let improved = fx_at_restart - points[0].1 > opts.tol * points[0].1.abs().max(1.0);
            if !improved || iterations >= opts.max_iter {
                break 'restarts true;
            }
            scale *= 0.1; // probe the neighborhood more finely
        } else {
            // Budget exhausted mid-simplex.
            break 'restarts false;
        }
    };

    NelderMeadResult {
        x: best_x,
        fx: best_fx,
        iterations,
        converged,
    }
}

/// Adam optimizer state; moment shapes mirror the parameter blocks.
#[derive(Debug, Clone)]
pub struct AdamState {
    m: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
    pub step_count: u64,
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl AdamState {
    pub fn new(block_sizes: &[usize], lr: f64) -> Self {
        Self {
            m: block_sizes.iter().map(|&s| vec![0.0; s]).collect(),
            v: block_sizes.iter().map(|&s| vec![0.0; s]).collect(),
            step_count: 0,
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }

    /// One optimizer step over all parameter blocks (params paired with
    /// their gradients, in the order used at construction).
    pub fn step(&mut self, blocks: &mut [(&mut [f64], &[f64])]) {
        assert_eq!(blocks.len(), self.m.len(), "block count mismatch");
        self.step_count += 1;
        let t = self.step_count as i32;
        let bc1 = 1.0 - self.beta1.powi(t);
        let bc2 = 1.0 - self.beta2.powi(t);
        for (b, (params, grads)) in blocks.iter_mut().enumerate() {
            assert_eq!(params.len(), self.m[b].len(), "block {b} size mismatch");
            assert_eq!(params.len(), grads.len());
            for i in 0..params.len() {
                let g = grads[i];
                self.m[b][i] = self.beta1 * self.m[b][i] + (1.0 - self.beta1) * g;
                self.v[b][i] = self.beta2 * self.v[b][i] + (1.0 - self.beta2) * g * g;
                let m_hat = self.m[b][i] / bc1;
                let v_hat = self.v[b][i] / bc2;
                params[i] -= self.lr * m_hat / (v_hat.sqrt() + self.eps);
            }
        }
    }
}
