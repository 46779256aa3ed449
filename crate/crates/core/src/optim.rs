//! Small deterministic optimizers shared by the solvers and the oracles.

const GOLDEN: f64 = 0.381_966_011_250_105_1;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalarMin {
    pub x: f64,
    pub fx: f64,
    pub iterations: usize,
}

/// Bounded Brent minimization (golden section with parabolic steps) of `f`
/// on `[a, b]`.
pub fn brent_minimize<F: FnMut(f64) -> f64>(
    mut f: F,
    mut a: f64,
    mut b: f64,
    xtol: f64,
    max_iter: usize,
) -> ScalarMin {
    let sqrt_eps = f64::EPSILON.sqrt();
    let mut fulc = a + GOLDEN * (b - a);
    let mut nfc = fulc;
    let mut xf = fulc;
    let mut rat = 0.0_f64;
    let mut e = 0.0_f64;
    let mut fx = f(xf);
    let mut ffulc = fx;
    let mut fnfc = fx;
    let mut xm = 0.5 * (a + b);
    let mut tol1 = sqrt_eps * xf.abs() + xtol / 3.0;
    let mut tol2 = 2.0 * tol1;
    let mut iterations = 0;

    while (xf - xm).abs() > tol2 - 0.5 * (b - a) && iterations < max_iter {
        let mut golden = true;
        if e.abs() > tol1 {
            let mut r = (xf - nfc) * (fx - ffulc);
            let mut q = (xf - fulc) * (fx - fnfc);
            let mut p = (xf - fulc) * q - (xf - nfc) * r;
            q = 2.0 * (q - r);
            if q > 0.0 {
                p = -p;
            }
            q = q.abs();
            r = e;
            e = rat;
            if p.abs() < (0.5 * q * r).abs() && p > q * (a - xf) && p < q * (b - xf) {
                rat = p / q;
                let x = xf + rat;
                golden = false;
                if (x - a) < tol2 || (b - x) < tol2 {
                    let si = if xm - xf >= 0.0 { 1.0 } else { -1.0 };
                    rat = tol1 * si;
                }
            }
        }
        if golden {
            e = if xf >= xm { a - xf } else { b - xf };
            rat = GOLDEN * e;
        }
        let si = if rat >= 0.0 { 1.0 } else { -1.0 };
        let x = xf + si * rat.abs().max(tol1);
        let fu = f(x);
        if fu <= fx {
            if x >= xf {
                a = xf;
            } else {
                b = xf;
            }
            fulc = nfc;
            ffulc = fnfc;
            nfc = xf;
            fnfc = fx;
            xf = x;
            fx = fu;
        } else {
            if x < xf {
                a = x;
            } else {
                b = x;
            }
            if fu <= fnfc || nfc == xf {
                fulc = nfc;
                ffulc = fnfc;
                nfc = x;
                fnfc = fu;
            } else if fu <= ffulc || fulc == xf || fulc == nfc {
                fulc = x;
                ffulc = fu;
            }
        }
        xm = 0.5 * (a + b);
        tol1 = sqrt_eps * xf.abs() + xtol / 3.0;
        tol2 = 2.0 * tol1;
        iterations += 1;
    }
    ScalarMin { x: xf, fx, iterations }
}

/// Bisection for a sign change of `f` on `[a, b]`. Requires `f(a)` and `f(b)`
/// of opposite sign (or one of them zero); returns the final bracket midpoint.
pub fn bisect<F: FnMut(f64) -> f64>(
    mut f: F,
    mut a: f64,
    mut b: f64,
    xtol: f64,
    max_iter: usize,
) -> Option<(f64, usize)> {
    let mut fa = f(a);
    let fb = f(b);
    if fa == 0.0 {
        return Some((a, 0));
    }
    if fb == 0.0 {
        return Some((b, 0));
    }
    if fa.signum() == fb.signum() || fa.is_nan() || fb.is_nan() {
        return None;
    }
    let mut it = 0;
    while it < max_iter {
        let m = 0.5 * (a + b);
        if (b - a).abs() <= xtol || m == a || m == b {
            break;
        }
        let fm = f(m);
        if fm == 0.0 {
            return Some((m, it + 1));
        }
        if fm.signum() == fa.signum() {
            a = m;
            fa = fm;
        } else {
            b = m;
        }
        it += 1;
    }
    Some((0.5 * (a + b), it))
}

#[derive(Debug, Clone, Copy)]
pub struct NelderMeadOptions {
    pub max_evals: usize,
    /// Stop when the spread of simplex values falls below
    /// `f_tol * (1 + |f_best|)` ...
    pub f_tol: f64,
    /// ... and the simplex diameter below `x_tol`.
    pub x_tol: f64,
    pub restarts: usize,
}

impl Default for NelderMeadOptions {
    fn default() -> Self {
        Self { max_evals: 20_000, f_tol: 1e-14, x_tol: 1e-10, restarts: 2 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimplexMin {
    pub x: Vec<f64>,
    pub fx: f64,
    pub evaluations: usize,
    pub converged: bool,
}

/// Nelder–Mead minimization with standard coefficients, restarted from the
/// best vertex `restarts` times to escape collapsed simplices.
pub fn nelder_mead<F: FnMut(&[f64]) -> f64>(
    mut f: F,
    x0: &[f64],
    step: &[f64],
    opts: NelderMeadOptions,
) -> SimplexMin {
    let mut best = x0.to_vec();
    let mut evaluations = 0;
    let mut result = None;
    for _ in 0..=opts.restarts {
        let r = nelder_mead_once(&mut f, &best, step, &opts, &mut evaluations);
        best = r.0.clone();
        result = Some(r);
        if evaluations >= opts.max_evals {
            break;
        }
    }
    let (x, fx, converged) = result.expect("at least one pass");
    SimplexMin { x, fx, evaluations, converged }
}

fn nelder_mead_once<F: FnMut(&[f64]) -> f64>(
    f: &mut F,
    x0: &[f64],
    step: &[f64],
    opts: &NelderMeadOptions,
    evaluations: &mut usize,
) -> (Vec<f64>, f64, bool) {
    let n = x0.len();
    let mut eval = |x: &[f64], evals: &mut usize| {
        *evals += 1;
        let v = f(x);
        if v.is_nan() { f64::INFINITY } else { v }
    };
    let mut simplex: Vec<Vec<f64>> = Vec::with_capacity(n + 1);
    simplex.push(x0.to_vec());
    for i in 0..n {
        let mut v = x0.to_vec();
        v[i] += if step[i] != 0.0 { step[i] } else { 1e-3 };
        simplex.push(v);
    }
    let mut values: Vec<f64> = simplex.iter().map(|v| eval(v, evaluations)).collect();
    let mut converged = false;

    while *evaluations < opts.max_evals {
        let mut order: Vec<usize> = (0..=n).collect();
        order.sort_by(|&i, &j| values[i].total_cmp(&values[j]).then(i.cmp(&j)));
        simplex = order.iter().map(|&i| simplex[i].clone()).collect();
        values = order.iter().map(|&i| values[i]).collect();

        let spread = (values[n] - values[0]).abs();
        let diam = simplex[1..]
            .iter()
            .map(|v| v.iter().zip(&simplex[0]).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
            .fold(0.0, f64::max);
        if spread <= opts.f_tol * (1.0 + values[0].abs()) && diam <= opts.x_tol {
            converged = true;
            break;
        }

        let centroid: Vec<f64> = (0..n)
            .map(|k| simplex[..n].iter().map(|v| v[k]).sum::<f64>() / n as f64)
            .collect();
        let along = |t: f64| -> Vec<f64> {
            centroid.iter().zip(&simplex[n]).map(|(c, w)| c + t * (c - w)).collect()
        };

        let xr = along(1.0);
        let fr = eval(&xr, evaluations);
        if fr < values[0] {
            let xe = along(2.0);
            let fe = eval(&xe, evaluations);
            if fe < fr {
                simplex[n] = xe;
                values[n] = fe;
            } else {
                simplex[n] = xr;
                values[n] = fr;
            }
        } else if fr < values[n - 1] {
            simplex[n] = xr;
            values[n] = fr;
        } else {
            let (xc, fc) = if fr < values[n] {
                let xc = along(0.5);
                let fc = eval(&xc, evaluations);
                (xc, fc)
            } else {
                let xc = along(-0.5);
                let fc = eval(&xc, evaluations);
                (xc, fc)
            };
            if fc < values[n].min(fr) {
                simplex[n] = xc;
                values[n] = fc;
            } else {
                for i in 1..=n {
                    let shrunk: Vec<f64> = simplex[i]
                        .iter()
                        .zip(&simplex[0])
                        .map(|(v, b)| b + 0.5 * (v - b))
                        .collect();
                    values[i] = eval(&shrunk, evaluations);
                    simplex[i] = shrunk;
                }
            }
        }
    }
    let (ib, _) = values
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1).then(a.0.cmp(&b.0)))
        .expect("non-empty simplex");
    (simplex[ib].clone(), values[ib], converged)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn brent_finds_parabola_vertex() {
        let r = brent_minimize(|x| (x - 0.3).powi(2) + 1.0, -2.0, 2.0, 1e-12, 200);
        assert!((r.x - 0.3).abs() < 1e-7);
        assert!((r.fx - 1.0).abs() < 1e-14);
    }

    #[test]
    fn brent_respects_bounds() {
        let r = brent_minimize(|x| x, 1.0, 3.0, 1e-10, 200);
        assert!(r.x >= 1.0 && r.x < 1.0 + 1e-6);
    }

    #[test]
    fn bisect_root_of_cubic() {
        let (x, _) = bisect(|x| x * x * x - 2.0, 0.0, 2.0, 1e-15, 200).unwrap();
        assert!((x - 2f64.cbrt()).abs() < 1e-14);
        assert!(bisect(|x| x * x + 1.0, -1.0, 1.0, 1e-12, 100).is_none());
    }

    #[test]
    fn nelder_mead_rosenbrock() {
        let r = nelder_mead(
            |v| (1.0 - v[0]).powi(2) + 100.0 * (v[1] - v[0] * v[0]).powi(2),
            &[-1.2, 1.0],
            &[0.5, 0.5],
            NelderMeadOptions::default(),
        );
        assert!((r.x[0] - 1.0).abs() < 1e-6, "{:?}", r);
        assert!((r.x[1] - 1.0).abs() < 1e-6, "{:?}", r);
    }
}
