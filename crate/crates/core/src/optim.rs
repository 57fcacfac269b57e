//! Derivative-free local search.

#[derive(Debug, Clone, Copy)]
pub struct PatternOptions {
    pub initial_step: f64,
    pub min_step: f64,
    pub shrink: f64,
    pub max_evals: usize,
}

impl Default for PatternOptions {
    fn default() -> Self {
        Self { initial_step: 0.25, min_step: 1e-7, shrink: 0.5, max_evals: 20_000 }
    }
}

#[derive(Debug, Clone)]
pub struct PatternResult {
    pub x: Vec<f64>,
    pub value: f64,
    pub evals: usize,
}

/// Hooke–Jeeves pattern search: coordinate exploration around the base
/// point, then a pattern move along the last improvement.
pub fn hooke_jeeves<F: FnMut(&[f64]) -> f64>(mut f: F, x0: &[f64], opts: &PatternOptions) -> PatternResult {
    let mut evals = 0usize;
    let mut eval = |x: &[f64], evals: &mut usize| {
        *evals += 1;
        let v = f(x);
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    };
    let mut base = x0.to_vec();
    let mut fbase = eval(&base, &mut evals);
    let mut step = opts.initial_step;

    let explore = |start: &[f64], fstart: f64, step: f64, evals: &mut usize, eval: &mut dyn FnMut(&[f64], &mut usize) -> f64| {
        let mut x = start.to_vec();
        let mut fx = fstart;
        for i in 0..x.len() {
            let orig = x[i];
            x[i] = orig + step;
            let up = eval(&x, evals);
            if up < fx {
                fx = up;
                continue;
            }
            x[i] = orig - step;
            let down = eval(&x, evals);
            if down < fx {
                fx = down;
                continue;
            }
            x[i] = orig;
        }
        (x, fx)
    };

    while step >= opts.min_step && evals < opts.max_evals {
        let (x, fx) = explore(&base, fbase, step, &mut evals, &mut eval);
        if fx < fbase {
            // pattern moves while they keep paying off
            let mut prev = base;
            base = x;
            fbase = fx;
            while evals < opts.max_evals {
                let probe: Vec<f64> = base.iter().zip(&prev).map(|(b, p)| 2.0 * b - p).collect();
                let fprobe = eval(&probe, &mut evals);
                let (y, fy) = explore(&probe, fprobe, step, &mut evals, &mut eval);
                if fy < fbase {
                    prev = std::mem::replace(&mut base, y);
                    fbase = fy;
                } else {
                    break;
                }
            }
        } else {
            step *= opts.shrink;
        }
    }
    PatternResult { x: base, value: fbase, evals }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadratic_bowl() {
        let r = hooke_jeeves(|x| (x[0] - 1.0).powi(2) + 3.0 * (x[1] + 2.0).powi(2), &[0.0, 0.0], &PatternOptions::default());
        assert!((r.x[0] - 1.0).abs() < 1e-6 && (r.x[1] + 2.0).abs() < 1e-6, "{r:?}");
    }

    #[test]
    fn rosenbrock_progress() {
        let f = |x: &[f64]| (1.0 - x[0]).powi(2) + 100.0 * (x[1] - x[0] * x[0]).powi(2);
        let r = hooke_jeeves(f, &[-1.2, 1.0], &PatternOptions { max_evals: 200_000, min_step: 1e-9, ..Default::default() });
        assert!(r.value < 1e-6, "{r:?}");
    }

    #[test]
    fn budget_respected() {
        let r = hooke_jeeves(|x| x.iter().map(|v| v.abs()).sum(), &[5.0; 4], &PatternOptions { max_evals: 50, ..Default::default() });
        assert!(r.evals <= 50 + 2 * 4 + 1);
    }
}
