//! Adaptive Gauss–Kronrod quadrature used as a reference for the closed
//! forms elsewhere in the crate.
//!
//! The GIG integrals here never touch a Bessel function: the normalizing
//! constant is itself integrated numerically.

#![allow(clippy::excessive_precision)]

use std::cmp::Ordering;
use std::collections::BinaryHeap;

const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.0,
];
const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];
const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quadrature {
    pub value: f64,
    pub error: f64,
    pub intervals: usize,
}

fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for j in 0..7 {
        let dx = half * XGK[j];
        let pair = f(center - dx) + f(center + dx);
        kronrod += WGK[j] * pair;
        if j % 2 == 1 {
            gauss += WG[j / 2] * pair;
        }
    }
    (kronrod * half, ((kronrod - gauss) * half).abs())
}

struct Piece {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Piece {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Piece {}
impl PartialOrd for Piece {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Piece {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

/// `∫_a^b f` by globally adaptive G7–K15 bisection.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, rel_tol: f64) -> Quadrature {
    integrate_breaks(&f, &[a, b], rel_tol)
}

/// Like [`integrate`] but starting from the given partition.
pub fn integrate_breaks<F: Fn(f64) -> f64>(f: &F, breaks: &[f64], rel_tol: f64) -> Quadrature {
    const MAX_INTERVALS: usize = 4000;
    let mut heap = BinaryHeap::new();
    let (mut value, mut error) = (0.0, 0.0);
    for w in breaks.windows(2) {
        let (v, e) = gk15(f, w[0], w[1]);
        value += v;
        error += e;
        heap.push(Piece { a: w[0], b: w[1], value: v, error: e });
    }
    while error > rel_tol * value.abs() && error > 1e-300 && heap.len() < MAX_INTERVALS {
        let worst = heap.pop().expect("heap is nonempty");
        let mid = 0.5 * (worst.a + worst.b);
        let (v1, e1) = gk15(f, worst.a, mid);
        let (v2, e2) = gk15(f, mid, worst.b);
        value += v1 + v2 - worst.value;
        error += e1 + e2 - worst.error;
        heap.push(Piece { a: worst.a, b: mid, value: v1, error: e1 });
        heap.push(Piece { a: mid, b: worst.b, value: v2, error: e2 });
    }
    // Re-sum to shed the drift of the running totals.
    let value = heap.iter().map(|p| p.value).sum();
    let error = heap.iter().map(|p| p.error).sum();
    Quadrature { value, error, intervals: heap.len() }
}

/// `∫_0^∞ f` for integrands concentrated around `scale > 0`. The far tail
/// `[64·scale, ∞)` is mapped onto `(0, 1]` by `z = 64·scale / t`.
pub fn integrate_positive_axis<F: Fn(f64) -> f64>(f: F, scale: f64, rel_tol: f64) -> Quadrature {
    let mut breaks = vec![0.0];
    let mut z = scale / 4096.0;
    while z < 64.0 * scale {
        breaks.push(z);
        z *= 2.0;
    }
    breaks.push(64.0 * scale);
    let body = integrate_breaks(&f, &breaks, rel_tol);
    let cut = 64.0 * scale;
    let tail = integrate(
        |t: f64| {
            if t <= 0.0 {
                0.0
            } else {
                let v = f(cut / t);
                if v == 0.0 { 0.0 } else { v * cut / (t * t) }
            }
        },
        0.0,
        1.0,
        rel_tol,
    );
    Quadrature {
        value: body.value + tail.value,
        error: body.error + tail.error,
        intervals: body.intervals + tail.intervals,
    }
}

/// `ln ∫_0^∞ z^{λ−1} exp(−(χ/z + ψz)/2) dz`, the unnormalized GIG mass.
pub fn ln_gig_mass(lambda: f64, chi: f64, psi: f64) -> f64 {
    let l1 = lambda - 1.0;
    let mode = (l1 + (l1 * l1 + chi * psi).sqrt()) / psi;
    let log_kernel = |z: f64| l1 * z.ln() - 0.5 * (chi / z + psi * z);
    let peak = log_kernel(mode);
    let q = integrate_positive_axis(
        |z| if z <= 0.0 { 0.0 } else { (log_kernel(z) - peak).exp() },
        mode,
        1e-14,
    );
    peak + q.value.ln()
}

/// `K_ν(x) = ∫_0^∞ e^{−x cosh t} cosh(νt) dt`, evaluated relative to its
/// peak so that large `x` does not underflow. Returns `ln K_ν(x)`.
pub fn ln_bessel_k_integral(nu: f64, x: f64) -> f64 {
    let nu = nu.abs();
    let log_kernel = |t: f64| -x * t.cosh() + nu * t + (-(2.0 * nu * t)).exp().ln_1p() - std::f64::consts::LN_2;
    // Stationary point of −x cosh t + νt.
    let t_peak = (nu / x).asinh();
    let peak = log_kernel(t_peak);
    let scale = t_peak.max(1.0 / x.sqrt()).max(0.05);
    let q = integrate_positive_axis(|t| (log_kernel(t) - peak).exp(), scale, 1e-14);
    peak + q.value.ln()
}
