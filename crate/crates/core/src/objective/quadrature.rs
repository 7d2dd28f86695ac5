//! Exact reduction of the population expectations to the 2D marginal on
//! span(w̃, ṽ) for spherically symmetric D̃.
//!
//! On the circle of radius ρ each sign set {A > 0}, {B > 0} is an arc, so the
//! angular integrals of the piecewise quadratic integrands are evaluated in
//! closed form. The remaining radial integral is done by adaptive
//! Gauss–Kronrod with breakpoints where the arc structure changes.

use super::arcs::{moments, positive_arc, Arc, Intervals};
use crate::distributions::InputDistribution;
use crate::error::{LabError, Result};
use crate::params::NeuronParams;
use crate::quad::{integrate_panels, QuadSettings};
use crate::scalar::{dot, norm, Scalar};

pub(crate) struct Plane<T> {
    pub e1: Vec<T>,
    pub e2: Vec<T>,
    /// A(y) = a[0] + a[1] y₁ + a[2] y₂ for the learner.
    pub a: [T; 3],
    /// B(y) for the target.
    pub b: [T; 3],
}

fn unit_orthogonal_to<T: Scalar>(e1: &[T]) -> Vec<T> {
    let k = (0..e1.len())
        .min_by(|&i, &j| e1[i].abs().partial_cmp(&e1[j].abs()).unwrap())
        .unwrap_or(0);
    let mut e = vec![T::zero(); e1.len()];
    e[k] = T::one();
    orthonormalize(&mut e, e1);
    e
}

/// Two passes of Gram–Schmidt against a unit vector, then normalization.
fn orthonormalize<T: Scalar>(x: &mut [T], e1: &[T]) -> T {
    for _ in 0..2 {
        let p = dot(x, e1);
        for (xi, &ei) in x.iter_mut().zip(e1) {
            *xi -= p * ei;
        }
    }
    let n = norm(x);
    if n > T::zero() {
        for xi in x.iter_mut() {
            *xi /= n;
        }
    }
    n
}

pub(crate) fn build_plane<T: Scalar>(w: &NeuronParams<T>, v: &NeuronParams<T>) -> Result<Plane<T>> {
    let d = v.dim();
    if d < 2 {
        return Err(LabError::Unsupported("planar quadrature needs dim >= 2".into()));
    }
    let wn = w.weight_norm();
    let vn = v.weight_norm();
    let e1: Vec<T> = if wn > T::zero() {
        w.weights.iter().map(|&x| x / wn).collect()
    } else if vn > T::zero() {
        v.weights.iter().map(|&x| x / vn).collect()
    } else {
        let mut e = vec![T::zero(); d];
        e[0] = T::one();
        e
    };
    let mut e2 = v.weights.clone();
    let resid = orthonormalize(&mut e2, &e1);
    let e2 = if vn > T::zero() && resid > T::lit(1e-10) * vn {
        e2
    } else {
        unit_orthogonal_to(&e1)
    };
    let a = if wn > T::zero() {
        [w.bias, wn, T::zero()]
    } else {
        [w.bias, T::zero(), T::zero()]
    };
    let b = [v.bias, dot(&v.weights, &e1), dot(&v.weights, &e2)];
    Ok(Plane { e1, e2, a, b })
}

/// Everything the objective module needs from one radial integration.
#[derive(Clone, Debug)]
pub(crate) struct PlaneEval<T> {
    pub loss: T,
    /// Gradient components along e1, e2 and the bias.
    pub grad: [T; 3],
    pub joint: T,
    pub cross: T,
    pub sq_w: T,
    pub loss_err: T,
    pub grad_err: [T; 3],
}

type M6<T> = [T; 6];

fn lin<T: Scalar>(f: &[T; 3], m: &M6<T>) -> T {
    f[0] * m[0] + f[1] * m[1] + f[2] * m[2]
}

fn quad<T: Scalar>(f: &[T; 3], g: &[T; 3], m: &M6<T>) -> T {
    f[0] * g[0] * m[0]
        + (f[0] * g[1] + f[1] * g[0]) * m[1]
        + (f[0] * g[2] + f[2] * g[0]) * m[2]
        + f[1] * g[1] * m[3]
        + (f[1] * g[2] + f[2] * g[1]) * m[4]
        + f[2] * g[2] * m[5]
}

fn lin_y1<T: Scalar>(f: &[T; 3], m: &M6<T>) -> T {
    f[0] * m[1] + f[1] * m[3] + f[2] * m[4]
}

fn lin_y2<T: Scalar>(f: &[T; 3], m: &M6<T>) -> T {
    f[0] * m[2] + f[1] * m[4] + f[2] * m[5]
}

fn abs3<T: Scalar>(f: &[T; 3]) -> [T; 3] {
    [f[0].abs(), f[1].abs(), f[2].abs()]
}

fn breakpoints<T: Scalar>(a: &[T; 3], b: &[T; 3], radius: T) -> Vec<T> {
    let mut pts = vec![T::zero(), radius];
    for f in [a, b] {
        let s = f[1].hypot(f[2]);
        if s > T::zero() {
            pts.push(f[0].abs() / s);
        }
    }
    let det = a[1] * b[2] - a[2] * b[1];
    let scale = a[1].hypot(a[2]) * b[1].hypot(b[2]);
    if det.abs() > T::lit(1e-14) * scale {
        // intersection of the two zero lines
        let y1 = (-a[0] * b[2] + b[0] * a[2]) / det;
        let y2 = (-a[1] * b[0] + b[1] * a[0]) / det;
        pts.push(y1.hypot(y2));
    }
    pts.retain(|p| p.is_finite() && *p >= T::zero() && *p <= radius);
    pts.sort_by(|x, y| x.partial_cmp(y).unwrap());
    pts.dedup();
    pts
}

pub(crate) fn evaluate_plane<T: Scalar>(
    plane: &Plane<T>,
    dist: &InputDistribution<T>,
    relu_deriv_at_zero: T,
    settings: &QuadSettings<T>,
) -> PlaneEval<T> {
    let (a, b) = (&plane.a, &plane.b);
    let radius = dist.plane_radius();
    let breaks = breakpoints(a, b, radius);
    let integrand = |rho: T| -> [T; 18] {
        let weight = rho * dist.radial_density_2d_unchecked(rho);
        let mut out = [T::zero(); 18];
        if weight == T::zero() {
            return out;
        }
        let arc_a = positive_arc(a, rho);
        let arc_b = positive_arc(b, rho);
        let base = match arc_a {
            Arc::Window { center, .. } => center,
            _ => T::zero(),
        };
        let ia = Intervals::from_arc(arc_a, base);
        let ib = Intervals::from_arc(arc_b, base);
        let iab = ia.intersect(&ib);
        let ma = moments(&ia, rho);
        let mb = moments(&ib, rho);
        let mab = moments(&iab, rho);
        for k in 0..6 {
            out[k] = mab[k] * weight;
            out[6 + k] = (ma[k] - mab[k]) * weight;
            out[12 + k] = (mb[k] - mab[k]) * weight;
        }
        out
    };
    let r = integrate_panels(integrand, &breaks, settings);
    let split = |arr: &[T; 18]| -> (M6<T>, M6<T>, M6<T>) {
        let mut x = [[T::zero(); 6]; 3];
        for (j, xj) in x.iter_mut().enumerate() {
            xj.copy_from_slice(&arr[6 * j..6 * j + 6]);
        }
        (x[0], x[1], x[2])
    };
    let (mwv, mw, mv) = split(&r.value);
    let (ewv, ew, ev) = split(&r.error);
    let dcoef = [a[0] - b[0], a[1] - b[1], a[2] - b[2]];
    let half = T::lit(0.5);
    let a_zero = a.iter().all(|&x| x == T::zero());
    let b_zero = b.iter().all(|&x| x == T::zero());

    let loss = half * (quad(&dcoef, &dcoef, &mwv) + quad(a, a, &mw) + quad(b, b, &mv));
    let (aa, ab, ad) = (abs3(a), abs3(b), abs3(&dcoef));
    let loss_err = half * (quad(&ad, &ad, &ewv) + quad(&aa, &aa, &ew) + quad(&ab, &ab, &ev));

    let (grad, grad_err) = if a_zero {
        let s = relu_deriv_at_zero;
        (
            [-s * lin_y1(b, &mv), -s * lin_y2(b, &mv), -s * lin(b, &mv)],
            [s * lin_y1(&ab, &ev), s * lin_y2(&ab, &ev), s * lin(&ab, &ev)],
        )
    } else {
        (
            [
                lin_y1(&dcoef, &mwv) + lin_y1(a, &mw),
                lin_y2(&dcoef, &mwv) + lin_y2(a, &mw),
                lin(&dcoef, &mwv) + lin(a, &mw),
            ],
            [
                lin_y1(&ad, &ewv) + lin_y1(&aa, &ew),
                lin_y2(&ad, &ewv) + lin_y2(&aa, &ew),
                lin(&ad, &ewv) + lin(&aa, &ew),
            ],
        )
    };
    let joint = match (a_zero, b_zero) {
        (true, true) => T::one(),
        (true, false) => mv[0],
        (false, true) => mw[0],
        (false, false) => mwv[0],
    };
    PlaneEval {
        loss,
        grad,
        joint,
        cross: quad(a, b, &mwv),
        sq_w: quad(a, a, &mwv) + quad(a, a, &mw),
        loss_err,
        grad_err,
    }
}

/// Maps planar gradient components back to R^{d+1}.
pub(crate) fn lift_gradient<T: Scalar>(plane: &Plane<T>, g: &[T; 3]) -> Vec<T> {
    let mut out: Vec<T> = plane.e1.iter().zip(&plane.e2).map(|(&x, &y)| g[0] * x + g[1] * y).collect();
    out.push(g[2]);
    out
}
