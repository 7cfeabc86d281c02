//! Polar quadrature over convex regions with a point singularity at the
//! polar origin, and the two-centre split used for products of two
//! singular kernels.

use std::f64::consts::{PI, TAU};

use super::adaptive::{Adaptive, Estimate};
use super::gauss::gauss_legendre;
use crate::geom::Vec2;

type V = Vec2<f64>;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Constraint {
    /// `|u − center| ≤ radius`
    Disc { center: V, radius: f64 },
    /// `normal · u ≤ offset`
    HalfPlane { normal: V, offset: f64 },
}

impl Constraint {
    pub fn disc(center: V, radius: f64) -> Self {
        Constraint::Disc { center, radius }
    }

    /// Points closer to `near` than to `far`.
    pub fn closer_to(near: V, far: V) -> Self {
        let d = far - near;
        let n = d.scale(1.0 / d.norm());
        Constraint::HalfPlane {
            normal: n,
            offset: n.dot((near + far).scale(0.5)),
        }
    }

    pub fn contains(&self, u: V) -> bool {
        match *self {
            Constraint::Disc { center, radius } => (u - center).norm() <= radius,
            Constraint::HalfPlane { normal, offset } => normal.dot(u) <= offset,
        }
    }

    /// Parameter range `t ≥ 0` of `o + t·e` inside the constraint.
    fn ray(&self, o: V, e: V) -> Option<(f64, f64)> {
        match *self {
            Constraint::Disc { center, radius } => {
                let w = o - center;
                let b = e.dot(w);
                let c = w.norm_sq() - radius * radius;
                let disc = b * b - c;
                if disc < 0.0 {
                    return None;
                }
                let s = disc.sqrt();
                // Stable roots of t² + 2bt + c.
                let (t1, t2) = if b > 0.0 {
                    let q = -b - s;
                    (q, if q != 0.0 { c / q } else { 0.0 })
                } else {
                    let q = -b + s;
                    (if q != 0.0 { c / q } else { 0.0 }, q)
                };
                let (lo, hi) = (t1.min(t2), t1.max(t2));
                if hi < 0.0 {
                    None
                } else {
                    Some((lo.max(0.0), hi))
                }
            }
            Constraint::HalfPlane { normal, offset } => {
                let ne = normal.dot(e);
                let g = offset - normal.dot(o);
                if ne == 0.0 {
                    if g >= 0.0 {
                        Some((0.0, f64::INFINITY))
                    } else {
                        None
                    }
                } else if ne > 0.0 {
                    let t = g / ne;
                    if t < 0.0 {
                        None
                    } else {
                        Some((0.0, t))
                    }
                } else {
                    Some(((g / ne).max(0.0), f64::INFINITY))
                }
            }
        }
    }
}

/// Radial rule for each ray.
#[derive(Debug, Clone, Copy)]
pub struct PolarRule {
    pub angular: Adaptive,
    pub radial_nodes: usize,
}

impl Default for PolarRule {
    fn default() -> Self {
        Self {
            angular: Adaptive::new(1e-9, 1e-10).with_max_intervals(4000),
            radial_nodes: 10,
        }
    }
}

impl PolarRule {
    pub fn with_tol(abs_tol: f64) -> Self {
        let mut r = Self::default();
        r.angular.abs_tol = abs_tol;
        r.angular.rel_tol = abs_tol.min(1e-10);
        r
    }
}

/// A convex region integrated in polar coordinates about `origin`.
#[derive(Debug, Clone)]
pub struct PolarRegion {
    pub origin: V,
    /// Exponent `p < 2` of the integrand's `|u − origin|^{−p}` behaviour.
    pub singularity: f64,
    pub constraints: Vec<Constraint>,
    /// Circles `(centre, radius)` across which the integrand has kinks.
    pub kinks: Vec<(V, f64)>,
    /// Additional angular breakpoints.
    pub angles: Vec<f64>,
    /// First radial grading length; panels double from here outwards.
    pub scale: f64,
    /// Decay exponent `q > 2` for unbounded rays, `f ~ ρ^{−q}`.
    pub tail: Option<f64>,
}

impl PolarRegion {
    pub fn new(origin: V, singularity: f64) -> Self {
        Self {
            origin,
            singularity,
            constraints: Vec::new(),
            kinks: Vec::new(),
            angles: Vec::new(),
            scale: 1.0,
            tail: None,
        }
    }

    pub fn constrain(mut self, c: Constraint) -> Self {
        self.constraints.push(c);
        self
    }

    pub fn kink(mut self, center: V, radius: f64) -> Self {
        self.kinks.push((center, radius));
        self
    }

    pub fn scale(mut self, s: f64) -> Self {
        self.scale = s;
        self
    }

    pub fn tail(mut self, q: f64) -> Self {
        self.tail = Some(q);
        self
    }

    pub fn angle(mut self, a: f64) -> Self {
        self.angles.push(a);
        self
    }

    fn ray_interval(&self, e: V) -> Option<(f64, f64)> {
        let mut lo = 0.0f64;
        let mut hi = f64::INFINITY;
        for c in &self.constraints {
            let (a, b) = c.ray(self.origin, e)?;
            lo = lo.max(a);
            hi = hi.min(b);
            if lo >= hi {
                return None;
            }
        }
        Some((lo, hi))
    }

    /// Directions at which the radial integral is not smooth in the angle.
    fn breakpoints(&self) -> Vec<f64> {
        let o = self.origin;
        let mut circles: Vec<(V, f64)> = self.kinks.clone();
        let mut lines: Vec<(V, f64)> = Vec::new();
        for c in &self.constraints {
            match *c {
                Constraint::Disc { center, radius } => circles.push((center, radius)),
                Constraint::HalfPlane { normal, offset } => lines.push((normal, offset)),
            }
        }
        let mut pts: Vec<V> = Vec::new();
        let mut angles: Vec<f64> = self.angles.clone();
        for &(c, r) in &circles {
            let w = c - o;
            let d = w.norm();
            if d >= r && d > 0.0 {
                let base = w.angle();
                let half = (r / d).min(1.0).asin();
                angles.push(base + half);
                angles.push(base - half);
            }
        }
        for &(n, _) in &lines {
            let t = n.perp_cw().angle();
            angles.push(t);
            angles.push(t + PI);
        }
        for i in 0..circles.len() {
            for j in (i + 1)..circles.len() {
                pts.extend(circle_circle(circles[i], circles[j]));
            }
            for &l in &lines {
                pts.extend(circle_line(circles[i], l));
            }
        }
        for i in 0..lines.len() {
            for j in (i + 1)..lines.len() {
                if let Some(p) = line_line(lines[i], lines[j]) {
                    pts.push(p);
                }
            }
        }
        for p in pts {
            let w = p - o;
            if w.norm() > 1e-14 {
                angles.push(w.angle());
            }
        }
        let mut out: Vec<f64> = angles.into_iter().map(|a| a.rem_euclid(TAU)).collect();
        out.push(0.0);
        out.push(TAU);
        out.sort_by(f64::total_cmp);
        out.dedup_by(|a, b| (*a - *b).abs() < 1e-13);
        out
    }

    fn radial<F: Fn(V) -> f64>(&self, e: V, f: &F, nodes: usize) -> f64 {
        let Some((lo, hi)) = self.ray_interval(e) else {
            return 0.0;
        };
        let o = self.origin;
        let g = |rho: f64| f(o + e.scale(rho)) * rho;
        let mut edges = vec![lo];
        for &(c, r) in &self.kinks {
            if let Some((a, b)) = Constraint::disc(c, r).ray(o, e) {
                for t in [a, b] {
                    if t > lo && t < hi {
                        edges.push(t);
                    }
                }
            }
        }
        let finite_hi = if hi.is_finite() {
            hi
        } else {
            let far = edges.iter().copied().fold(self.scale, f64::max);
            4.0 * far.max(1.0)
        };
        edges.push(finite_hi);
        if lo == 0.0 && self.scale < finite_hi {
            edges.push(self.scale);
        }
        edges.sort_by(f64::total_cmp);
        edges.dedup();
        // Keep every panel away from the origin within a factor two of its start.
        let mut graded = Vec::with_capacity(edges.len() + 16);
        for w in edges.windows(2) {
            graded.push(w[0]);
            if w[0] > 0.0 {
                let mut t = 2.0 * w[0];
                while t < w[1] {
                    graded.push(t);
                    t *= 2.0;
                }
            }
        }
        graded.push(*edges.last().unwrap());
        let edges = graded;
        let rule = gauss_legendre(nodes);
        let mut sum = 0.0;
        for w in edges.windows(2) {
            let (a, b) = (w[0], w[1]);
            if b <= a {
                continue;
            }
            if a == 0.0 && self.singularity > 0.0 {
                let m = 1.0 / (2.0 - self.singularity);
                sum += rule.integrate(0.0, 1.0, |s| {
                    if s <= 0.0 {
                        return 0.0;
                    }
                    let rho = b * s.powf(m);
                    g(rho) * b * m * s.powf(m - 1.0)
                });
            } else {
                sum += rule.integrate(a, b, g);
            }
        }
        if !hi.is_finite() {
            let q = self.tail.expect("unbounded region needs a tail exponent");
            let beta = q - 2.0;
            let t0 = finite_hi.powf(-beta);
            let h = |tau: f64| {
                let rho = tau.powf(-1.0 / beta);
                g(rho) * tau.powf(-1.0 / beta - 1.0) / beta
            };
            let mut top = t0;
            for _ in 0..48 {
                let bottom = 0.5 * top;
                sum += rule.integrate(bottom, top, h);
                top = bottom;
            }
            sum += rule.integrate(0.0, top, h);
        }
        sum
    }

    pub fn integrate<F: Fn(V) -> f64>(&self, rule: &PolarRule, f: F) -> Estimate {
        let br = self.breakpoints();
        rule.angular
            .estimate(&br, |a| self.radial(V::unit(a), &f, rule.radial_nodes))
    }
}

fn circle_circle((c1, r1): (V, f64), (c2, r2): (V, f64)) -> Vec<V> {
    let w = c2 - c1;
    let d = w.norm();
    if d == 0.0 || d > r1 + r2 || d < (r1 - r2).abs() {
        return Vec::new();
    }
    let a = (r1 * r1 - r2 * r2 + d * d) / (2.0 * d);
    let h = (r1 * r1 - a * a).max(0.0).sqrt();
    let u = w.scale(1.0 / d);
    let p = c1 + u.scale(a);
    let n = u.perp_cw();
    vec![p + n.scale(h), p - n.scale(h)]
}

fn circle_line((c, r): (V, f64), (n, off): (V, f64)) -> Vec<V> {
    let dist = off - n.dot(c);
    if dist.abs() > r {
        return Vec::new();
    }
    let foot = c + n.scale(dist);
    let h = (r * r - dist * dist).max(0.0).sqrt();
    let t = n.perp_cw();
    vec![foot + t.scale(h), foot - t.scale(h)]
}

fn line_line((n1, o1): (V, f64), (n2, o2): (V, f64)) -> Option<V> {
    let det = n1.x * n2.y - n1.y * n2.x;
    if det.abs() < 1e-14 {
        return None;
    }
    Some(V::new(
        (o1 * n2.y - n1.y * o2) / det,
        (n1.x * o2 - o1 * n2.x) / det,
    ))
}

/// Integral over `∩ common` of an integrand singular at `a` (exponent `pa`)
/// and at `b` (exponent `pb`). The region is split along the bisector and
/// each half is integrated in polar coordinates about its own centre;
/// `extra_a`/`extra_b` add constraints to one half only.
#[allow(clippy::too_many_arguments)]
pub fn two_center<F: Fn(V) -> f64>(
    a: V,
    pa: f64,
    b: V,
    pb: f64,
    common: &[Constraint],
    extra_a: &[Constraint],
    extra_b: &[Constraint],
    kinks: &[(V, f64)],
    tail: Option<f64>,
    rule: &PolarRule,
    f: F,
) -> Estimate {
    let d = (b - a).norm();
    let half = |o: V, p: f64, other: V, extra: &[Constraint]| {
        let mut r = PolarRegion::new(o, p)
            .scale(0.25 * d)
            .angle((other - o).angle());
        r.constraints.push(Constraint::closer_to(o, other));
        r.constraints.extend_from_slice(common);
        r.constraints.extend_from_slice(extra);
        r.kinks.extend_from_slice(kinks);
        r.tail = tail;
        r
    };
    let mut sub = *rule;
    sub.angular.abs_tol *= 0.5;
    let ea = half(a, pa, b, extra_a).integrate(&sub, &f);
    let eb = half(b, pb, a, extra_b).integrate(&sub, &f);
    Estimate {
        value: ea.value + eb.value,
        error: ea.error + eb.error,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn disc_area() {
        let r = PolarRegion::new(V::new(0.1, 0.0), 0.0).constrain(Constraint::disc(V::zero(), 1.0));
        let e = r.integrate(&PolarRule::default(), |_| 1.0);
        assert!((e.value - PI).abs() < 1e-10, "{}", e.value);
    }

    #[test]
    fn origin_outside_region() {
        let r = PolarRegion::new(V::new(3.0, 0.0), 0.0).constrain(Constraint::disc(V::zero(), 1.0));
        let e = r.integrate(&PolarRule::default(), |u| u.x * u.x);
        assert!((e.value - PI / 4.0).abs() < 1e-10, "{}", e.value);
    }

    #[test]
    fn lens_area() {
        let d = 0.6;
        let c = [
            Constraint::disc(V::zero(), 1.0),
            Constraint::disc(V::new(d, 0.0), 1.0),
        ];
        let e = two_center(
            V::zero(),
            0.0,
            V::new(d, 0.0),
            0.0,
            &c,
            &[],
            &[],
            &[],
            None,
            &PolarRule::default(),
            |_| 1.0,
        );
        let exact = 2.0 * (d / 2.0).acos() - 0.5 * d * (4.0 - d * d).sqrt();
        assert!((e.value - exact).abs() < 1e-10, "{} vs {}", e.value, exact);
    }

    #[test]
    fn singular_unbounded_tail() {
        // ∫ |u|^{-1} (1 + |u|^2)^{-1} over the plane = 2π · π/2.
        let r = PolarRegion::new(V::zero(), 1.0).tail(3.0).scale(0.25);
        let e = r.integrate(&PolarRule::default(), |u| {
            1.0 / (u.norm() * (1.0 + u.norm_sq()))
        });
        assert!((e.value - PI * PI).abs() < 1e-8, "{}", e.value);
    }
}
