//! Airy and Bessel functions of real argument.
//!
//! Airy: Taylor continuation of `y'' = x y` from the origin for
//! `-10 < x <= 2`, backward continuation from the decaying asymptotic
//! expansion at `x = 9` for `2 < x < 9`, and the asymptotic expansions
//! themselves beyond.
//!
//! Bessel `J_a(t)`, `a > -1`, `t >= 0`: ascending series for `t <= 8`,
//! Taylor continuation of Bessel's equation from `t = 8` up to `t = 25`,
//! Hankel's expansion beyond.

use std::f64::consts::{FRAC_PI_4, PI};

use statrs::function::gamma::gamma;

const AI0: f64 = 0.355_028_053_887_817_2;
const AIP0: f64 = -0.258_819_403_792_806_8;

const AIRY_NEG_ASYMPTOTIC: f64 = -10.0;
const AIRY_FORWARD_LIMIT: f64 = 2.0;
const AIRY_POS_ASYMPTOTIC: f64 = 9.0;

const BESSEL_SERIES_LIMIT: f64 = 8.0;
const BESSEL_ASYMPTOTIC: f64 = 25.0;

/// `Ai(x)`.
pub fn airy_ai(x: f64) -> f64 {
    airy_pair(x).0
}

/// `Ai'(x)`.
pub fn airy_ai_prime(x: f64) -> f64 {
    airy_pair(x).1
}

/// `(Ai(x), Ai'(x))`.
pub fn airy_pair(x: f64) -> (f64, f64) {
    if x.is_nan() {
        return (f64::NAN, f64::NAN);
    }
    if x <= AIRY_NEG_ASYMPTOTIC {
        airy_asymptotic_negative(-x)
    } else if x <= AIRY_FORWARD_LIMIT {
        continue_airy(0.0, AI0, AIP0, x)
    } else if x < AIRY_POS_ASYMPTOTIC {
        let (y, yp) = airy_asymptotic_positive(AIRY_POS_ASYMPTOTIC);
        continue_airy(AIRY_POS_ASYMPTOTIC, y, yp, x)
    } else {
        airy_asymptotic_positive(x)
    }
}

fn continue_airy(mut x0: f64, mut y: f64, mut yp: f64, x: f64) -> (f64, f64) {
    let steps = (x - x0).abs().ceil().max(1.0);
    let h = (x - x0) / steps;
    for _ in 0..steps as usize {
        (y, yp) = airy_taylor_step(x0, y, yp, h);
        x0 += h;
    }
    (y, yp)
}

/// One Taylor step of `y'' = x y` from `x0` by `h`.
fn airy_taylor_step(x0: f64, y0: f64, yp0: f64, h: f64) -> (f64, f64) {
    if h == 0.0 {
        return (y0, yp0);
    }
    // (k+2)(k+1) a_{k+2} = x0 a_k + a_{k-1}
    let mut a = [0.0f64; 3]; // a_{k-1}, a_k, a_{k+1}
    a[1] = y0;
    a[2] = yp0;
    let mut y = y0 + yp0 * h;
    let mut yp = yp0;
    let mut hp = h; // h^{k+1}
    let mut quiet = 0;
    for k in 0..200usize {
        let kf = k as f64;
        let next = (x0 * a[1] + a[0]) / ((kf + 2.0) * (kf + 1.0));
        let typ = (kf + 2.0) * next * hp;
        hp *= h;
        let ty = next * hp;
        y += ty;
        yp += typ;
        a = [a[1], a[2], next];
        if ty.abs() <= 1e-18 * y.abs().max(1e-300) && typ.abs() <= 1e-18 * yp.abs().max(1e-300)
        {
            quiet += 1;
            if quiet >= 3 {
                break;
            }
        } else {
            quiet = 0;
        }
    }
    (y, yp)
}

fn airy_u(k: usize) -> f64 {
    let mut u = 1.0;
    for j in 1..=k {
        let j = j as f64;
        u *= (6.0 * j - 5.0) * (6.0 * j - 3.0) * (6.0 * j - 1.0) / ((2.0 * j - 1.0) * 216.0 * j);
    }
    u
}

fn airy_v(k: usize) -> f64 {
    if k == 0 {
        return 1.0;
    }
    let kf = k as f64;
    -(6.0 * kf + 1.0) / (6.0 * kf - 1.0) * airy_u(k)
}

fn airy_asymptotic_positive(x: f64) -> (f64, f64) {
    let zeta = 2.0 / 3.0 * x.powf(1.5);
    let mut su = 0.0;
    let mut sv = 0.0;
    let mut zk = 1.0;
    let mut last = f64::INFINITY;
    for k in 0..40 {
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        let tu = sign * airy_u(k) / zk;
        if tu.abs() > last {
            break;
        }
        last = tu.abs();
        su += tu;
        sv += sign * airy_v(k) / zk;
        if tu.abs() < 1e-17 {
            break;
        }
        zk *= zeta;
    }
    let pref = (-zeta).exp() / (2.0 * PI.sqrt());
    let q = x.powf(0.25);
    (pref / q * su, -pref * q * sv)
}

fn airy_asymptotic_negative(z: f64) -> (f64, f64) {
    let zeta = 2.0 / 3.0 * z.powf(1.5);
    let (mut ue, mut uo, mut ve, mut vo) = (0.0, 0.0, 0.0, 0.0);
    let mut last = f64::INFINITY;
    for k in 0..30 {
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        let e = 2 * k;
        let o = 2 * k + 1;
        let te = airy_u(e) / zeta.powi(e as i32);
        if te.abs() > last {
            break;
        }
        last = te.abs();
        ue += sign * te;
        uo += sign * airy_u(o) / zeta.powi(o as i32);
        ve += sign * airy_v(e) / zeta.powi(e as i32);
        vo += sign * airy_v(o) / zeta.powi(o as i32);
        if te.abs() < 1e-17 {
            break;
        }
    }
    let phase = zeta - FRAC_PI_4;
    let (s, c) = phase.sin_cos();
    let q = z.powf(0.25);
    let ai = (c * ue + s * uo) / (PI.sqrt() * q);
    let aip = q / PI.sqrt() * (s * ve - c * vo);
    (ai, aip)
}

/// `J_a(t)` for `a > -1`, `t >= 0`.
pub fn bessel_j(order: f64, t: f64) -> f64 {
    bessel_pair(order, t).0
}

/// `J_a'(t)`.
pub fn bessel_j_prime(order: f64, t: f64) -> f64 {
    bessel_pair(order, t).1
}

/// `(J_a(t), J_a'(t))`.
pub fn bessel_pair(order: f64, t: f64) -> (f64, f64) {
    if t.is_nan() || t < 0.0 {
        return (f64::NAN, f64::NAN);
    }
    if t == 0.0 {
        return bessel_at_origin(order);
    }
    if t <= BESSEL_SERIES_LIMIT {
        bessel_series(order, t)
    } else if t < BESSEL_ASYMPTOTIC {
        let (y, yp) = bessel_series(order, BESSEL_SERIES_LIMIT);
        continue_bessel(order, BESSEL_SERIES_LIMIT, y, yp, t)
    } else {
        let j = bessel_hankel(order, t);
        let j1 = bessel_hankel(order + 1.0, t);
        (j, order / t * j - j1)
    }
}

fn bessel_at_origin(order: f64) -> (f64, f64) {
    let j = if order == 0.0 {
        1.0
    } else if order > 0.0 {
        0.0
    } else {
        f64::INFINITY
    };
    let jp = if order == 0.0 || order > 1.0 {
        0.0
    } else if order == 1.0 {
        0.5
    } else {
        f64::INFINITY
    };
    (j, jp)
}

fn bessel_series(order: f64, t: f64) -> (f64, f64) {
    let half = 0.5 * t;
    let q = -half * half;
    let mut term = half.powf(order) / gamma(order + 1.0);
    let mut j = term;
    let mut jp = term * order / t;
    for k in 1..300 {
        let kf = k as f64;
        term *= q / (kf * (kf + order));
        j += term;
        jp += term * (2.0 * kf + order) / t;
        if term.abs() < 1e-18 * j.abs().max(1e-300) && kf > half {
            break;
        }
    }
    (j, jp)
}

fn continue_bessel(order: f64, mut t0: f64, mut y: f64, mut yp: f64, t: f64) -> (f64, f64) {
    let steps = (t - t0).abs().ceil().max(1.0);
    let h = (t - t0) / steps;
    for _ in 0..steps as usize {
        (y, yp) = bessel_taylor_step(order, t0, y, yp, h);
        t0 += h;
    }
    (y, yp)
}

/// One Taylor step of `t^2 y'' + t y' + (t^2 - a^2) y = 0` from `t0` by `h`.
fn bessel_taylor_step(order: f64, t0: f64, y0: f64, yp0: f64, h: f64) -> (f64, f64) {
    if h == 0.0 {
        return (y0, yp0);
    }
    let a2 = order * order;
    let t02 = t0 * t0;
    // window holds a_{k-2}, a_{k-1}, a_k, a_{k+1}
    let mut a = [0.0, 0.0, y0, yp0];
    let mut y = y0 + yp0 * h;
    let mut yp = yp0;
    let mut hp = h;
    let mut quiet = 0;
    for k in 0..400usize {
        let kf = k as f64;
        let num = t0 * (kf + 1.0) * (2.0 * kf + 1.0) * a[3]
            + (kf * kf + t02 - a2) * a[2]
            + 2.0 * t0 * a[1]
            + a[0];
        let next = -num / (t02 * (kf + 2.0) * (kf + 1.0));
        let typ = (kf + 2.0) * next * hp;
        hp *= h;
        let ty = next * hp;
        y += ty;
        yp += typ;
        a = [a[1], a[2], a[3], next];
        if ty.abs() <= 1e-18 * y.abs().max(1e-300) && typ.abs() <= 1e-18 * yp.abs().max(1e-300)
        {
            quiet += 1;
            if quiet >= 3 {
                break;
            }
        } else {
            quiet = 0;
        }
    }
    (y, yp)
}

fn bessel_hankel(order: f64, t: f64) -> f64 {
    let mu = 4.0 * order * order;
    let mut p = 0.0;
    let mut q = 0.0;
    let mut coef = 1.0; // a_k(order) / t^k
    let mut last = f64::INFINITY;
    for k in 0..60usize {
        if k > 0 {
            let odd = (2 * k - 1) as f64;
            coef *= (mu - odd * odd) / (k as f64 * 8.0 * t);
        }
        if coef.abs() > last && k > 2 {
            break;
        }
        last = coef.abs();
        let sign = if (k / 2) % 2 == 0 { 1.0 } else { -1.0 };
        if k % 2 == 0 {
            p += sign * coef;
        } else {
            q += sign * coef;
        }
        if coef.abs() < 1e-17 {
            break;
        }
    }
    let chi = t - (0.5 * order + 0.25) * PI;
    (2.0 / (PI * t)).sqrt() * (p * chi.cos() - q * chi.sin())
}
