//! Subsets of a circle given by affine sign conditions, and closed-form
//! angular moments of y = ρ(cos φ, sin φ) over them.

use crate::scalar::Scalar;

/// The set {φ : f₀ + ρ(f₁ cos φ + f₂ sin φ) > 0} on one circle.
#[derive(Clone, Copy, Debug, PartialEq)]
pub(crate) enum Arc<T> {
    Empty,
    Full,
    /// The affine form vanishes identically.
    ZeroLevel,
    Window { center: T, half: T },
}

pub(crate) fn positive_arc<T: Scalar>(f: &[T; 3], rho: T) -> Arc<T> {
    let m = rho * f[1].hypot(f[2]);
    if m == T::zero() {
        return if f[0] > T::zero() {
            Arc::Full
        } else if f[0] < T::zero() {
            Arc::Empty
        } else {
            Arc::ZeroLevel
        };
    }
    // cos(φ − φ₀) > −f₀/m
    if f[0] >= m {
        return Arc::Full;
    }
    if -f[0] >= m {
        return Arc::Empty;
    }
    let one_minus_k = (m + f[0]) / m;
    let half = T::lit(2.0) * (one_minus_k * T::lit(0.5)).sqrt().min(T::one()).asin();
    Arc::Window { center: f[2].atan2(f[1]), half }
}

/// Up to six disjoint intervals inside a window of length 2π.
#[derive(Clone, Copy, Debug)]
pub(crate) struct Intervals<T> {
    items: [(T, T); 6],
    len: usize,
}

impl<T: Scalar> Intervals<T> {
    pub fn empty() -> Self {
        Self { items: [(T::zero(), T::zero()); 6], len: 0 }
    }

    fn push(&mut self, lo: T, hi: T) {
        if hi > lo {
            self.items[self.len] = (lo, hi);
            self.len += 1;
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = &(T, T)> {
        self.items[..self.len].iter()
    }

    /// Places an arc inside [base − π, base + π], splitting at the window edge.
    pub fn from_arc(arc: Arc<T>, base: T) -> Self {
        let mut out = Self::empty();
        let (lo_w, hi_w) = (base - T::PI(), base + T::PI());
        match arc {
            Arc::Empty | Arc::ZeroLevel => {}
            Arc::Full => out.push(lo_w, hi_w),
            Arc::Window { center, half } => {
                let c = base + wrap_pi(center - base);
                let (lo, hi) = (c - half, c + half);
                if lo < lo_w {
                    out.push(lo_w, hi.min(hi_w));
                    out.push(lo + T::TAU(), hi_w);
                } else if hi > hi_w {
                    out.push(lo.max(lo_w), hi_w);
                    out.push(lo_w, hi - T::TAU());
                } else {
                    out.push(lo, hi);
                }
            }
        }
        out
    }

    /// Overlaps narrower than a few ulps of π are rounding artefacts of
    /// touching arcs and are dropped.
    pub fn intersect(&self, other: &Self) -> Self {
        let tiny = T::lit(16.0) * T::epsilon() * T::PI();
        let mut out = Self::empty();
        for &(a0, a1) in self.iter() {
            for &(b0, b1) in other.iter() {
                let lo = a0.max(b0);
                let hi = a1.min(b1);
                if hi - lo > tiny {
                    out.push(lo, hi);
                }
            }
        }
        out
    }

    /// Complement within [base − π, base + π].
    #[cfg(test)]
    pub fn complement(&self, base: T) -> Self {
        let mut sorted = self.items;
        let s = &mut sorted[..self.len];
        s.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap_or(std::cmp::Ordering::Equal));
        let mut out = Self::empty();
        let mut cur = base - T::PI();
        for &(lo, hi) in s.iter() {
            out.push(cur, lo);
            cur = cur.max(hi);
        }
        out.push(cur, base + T::PI());
        out
    }
}

fn wrap_pi<T: Scalar>(x: T) -> T {
    let mut y = x % T::TAU();
    if y >= T::PI() {
        y -= T::TAU();
    } else if y < -T::PI() {
        y += T::TAU();
    }
    y
}

/// Angular moments over a set: [∫1, ∫y₁, ∫y₂, ∫y₁², ∫y₁y₂, ∫y₂²] dφ at radius ρ.
pub(crate) fn moments<T: Scalar>(set: &Intervals<T>, rho: T) -> [T; 6] {
    let half = T::lit(0.5);
    let two = T::lit(2.0);
    let mut m = [T::zero(); 6];
    for &(p, q) in set.iter() {
        let d = q - p;
        let s = p + q;
        let (sh, ch) = (s * half).sin_cos();
        let sd2 = (d * half).sin();
        let (ss, cs) = s.sin_cos();
        let sd = d.sin();
        m[0] += d;
        m[1] += two * ch * sd2;
        m[2] += two * sh * sd2;
        m[3] += d * half + cs * sd * half;
        m[4] += ss * sd * half;
        m[5] += d * half - cs * sd * half;
    }
    m[1] *= rho;
    m[2] *= rho;
    let r2 = rho * rho;
    m[3] *= r2;
    m[4] *= r2;
    m[5] *= r2;
    m
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn brute(set: &Intervals<f64>, rho: f64) -> [f64; 6] {
        let mut m = [0.0; 6];
        let n = 200_000;
        for &(p, q) in set.iter() {
            let h = (q - p) / n as f64;
            for i in 0..n {
                let phi = p + (i as f64 + 0.5) * h;
                let (y1, y2) = (rho * phi.cos(), rho * phi.sin());
                let vals = [1.0, y1, y2, y1 * y1, y1 * y2, y2 * y2];
                for k in 0..6 {
                    m[k] += vals[k] * h;
                }
            }
        }
        m
    }

    #[test]
    fn arc_classification() {
        assert_eq!(positive_arc(&[1.0, 0.0, 0.0], 2.0), Arc::Full);
        assert_eq!(positive_arc(&[-1.0, 0.0, 0.0], 2.0), Arc::Empty);
        assert_eq!(positive_arc(&[0.0, 0.0, 0.0], 2.0), Arc::ZeroLevel);
        assert_eq!(positive_arc(&[-3.0, 1.0, 1.0], 2.0), Arc::Empty);
        match positive_arc(&[0.0, 0.0, 1.0], 1.0) {
            Arc::Window { center, half } => {
                assert!((center - PI / 2.0).abs() < 1e-15);
                assert!((half - PI / 2.0).abs() < 1e-15);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn moments_match_brute_force_with_wrapping() {
        let a = Intervals::from_arc(Arc::Window { center: 3.0, half: 0.9 }, 0.0);
        assert_eq!(a.iter().count(), 2);
        let exact = moments(&a, 1.7);
        let approx = brute(&a, 1.7);
        for k in 0..6 {
            assert!((exact[k] - approx[k]).abs() < 1e-8, "{k}");
        }
        let c = a.complement(0.0);
        let full = moments(&Intervals::from_arc(Arc::Full, 0.0), 1.7);
        let mc = moments(&c, 1.7);
        for k in 0..6 {
            assert!((exact[k] + mc[k] - full[k]).abs() < 1e-12);
        }
        assert!((full[0] - 2.0 * PI).abs() < 1e-14);
        assert!((full[3] - PI * 1.7 * 1.7).abs() < 1e-12);
    }

    #[test]
    fn intersection_of_disjoint_arcs_is_empty() {
        let a = Intervals::from_arc(Arc::Window { center: 0.0, half: 1.0 }, 0.0);
        let b = Intervals::from_arc(Arc::Window { center: PI, half: 1.0 }, 0.0);
        assert_eq!(a.intersect(&b).iter().count(), 0);
    }
}
