//! Planar geometry helpers: angle wrapping and analytic ray intersections.

use std::f64::consts::{PI, TAU};

/// Wraps an angle into (−π, π].
pub fn wrap_angle(a: f64) -> f64 {
    if a > -PI && a <= PI {
        return a;
    }
    let mut w = (a + PI).rem_euclid(TAU) - PI;
    if w <= -PI {
        w += TAU;
    }
    if w > PI {
        w -= TAU;
    }
    w
}

/// Distance along the ray `origin + t·dir` (unit `dir`, t ≥ 0) to the first
/// point of the disc, or `None` when the ray misses. An origin inside the
/// disc yields `Some(0.0)`.
pub fn ray_circle(origin: (f64, f64), dir: (f64, f64), center: (f64, f64), radius: f64) -> Option<f64> {
    let ox = origin.0 - center.0;
    let oy = origin.1 - center.1;
    let c = ox * ox + oy * oy - radius * radius;
    if c <= 0.0 {
        return Some(0.0);
    }
    let b = ox * dir.0 + oy * dir.1;
    if b >= 0.0 {
        // Outside and pointing away.
        return None;
    }
    let disc = b * b - c;
    if disc < 0.0 {
        return None;
    }
    // Numerically stable near root: c / (-b + sqrt(disc)).
    Some(c / (-b + disc.sqrt()))
}

/// Distance along the ray to the segment `p → q`, or `None`.
pub fn ray_segment(origin: (f64, f64), dir: (f64, f64), p: (f64, f64), q: (f64, f64)) -> Option<f64> {
    let ex = q.0 - p.0;
    let ey = q.1 - p.1;
    let denom = cross(dir, (ex, ey));
    if denom == 0.0 {
        return None;
    }
    let wx = p.0 - origin.0;
    let wy = p.1 - origin.1;
    let t = cross((wx, wy), (ex, ey)) / denom;
    let u = cross((wx, wy), dir) / denom;
    if t >= 0.0 && (0.0..=1.0).contains(&u) {
        Some(t)
    } else {
        None
    }
}

fn cross(a: (f64, f64), b: (f64, f64)) -> f64 {
    a.0 * b.1 - a.1 * b.0
}
