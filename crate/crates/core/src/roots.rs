//! Closed-form solution of a pair of bivariate quadratics.
//!
//! The `y^2` term is eliminated between the two equations, which leaves
//! `(t1 x + t2) y = t3 x^2 + t4 x + t5`. Substituting `y` back gives a quartic
//! in `x`, solved with Ferrari-style formulas over complex arithmetic. The
//! special case `t1 x + t2 = 0` is handled separately, and every recovered
//! `(x, y)` is checked against both original equations.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Default imaginary-part tolerance for [`real_filter`].
pub const DEFAULT_IMAG_TOL: f64 = 1e-9;

/// Relative back-substitution gate for a recovered pair.
pub const RESIDUAL_GATE: f64 = 1e-6;

const RESOLVENT_EPS: f64 = 1e-12;
const LEADING_EPS: f64 = 1e-12;

/// `a x^2 + b xy + c y^2 + d x + e y + f = 0`
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct QuadraticCoefficients {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
    pub e: f64,
    pub f: f64,
}

impl QuadraticCoefficients {
    pub fn new(a: f64, b: f64, c: f64, d: f64, e: f64, f: f64) -> Self {
        Self { a, b, c, d, e, f }
    }

    pub fn eval(&self, x: f64, y: f64) -> f64 {
        self.a * x * x + self.b * x * y + self.c * y * y + self.d * x + self.e * y + self.f
    }

    fn coefficients(&self) -> [f64; 6] {
        [self.a, self.b, self.c, self.d, self.e, self.f]
    }

    fn gradient(&self, x: f64, y: f64) -> (f64, f64) {
        (
            2.0 * self.a * x + self.b * y + self.d,
            self.b * x + 2.0 * self.c * y + self.e,
        )
    }

    /// Same curve in `x = sx X`, `y = sy Y`, normalized to unit largest
    /// coefficient.
    fn rescaled(&self, sx: f64, sy: f64) -> Self {
        let q = Self {
            a: self.a * sx * sx,
            b: self.b * sx * sy,
            c: self.c * sy * sy,
            d: self.d * sx,
            e: self.e * sy,
            f: self.f,
        };
        let m = q.max_abs();
        if m > 0.0 && m.is_finite() {
            let n = 2f64.powi(-(m.log2().round() as i32));
            Self { a: q.a * n, b: q.b * n, c: q.c * n, d: q.d * n, e: q.e * n, f: q.f * n }
        } else {
            q
        }
    }

    fn max_abs(&self) -> f64 {
        self.coefficients().iter().fold(0.0, |m, c| m.max(c.abs()))
    }

    fn is_finite(&self) -> bool {
        self.coefficients().iter().all(|c| c.is_finite())
    }

    /// Real `y` values satisfying the equation at a fixed `x`.
    fn solve_for_y(&self, x: f64, imag_tol: f64) -> Vec<f64> {
        let qa = self.c;
        let qb = self.b * x + self.e;
        let qc = self.a * x * x + self.d * x + self.f;
        let size = qa.abs().max(qb.abs()).max(qc.abs());
        if size == 0.0 {
            return Vec::new();
        }
        if qa.abs() <= LEADING_EPS * size {
            if qb.abs() <= LEADING_EPS * size {
                return Vec::new();
            }
            return vec![-qc / qb];
        }
        real_filter(&quadratic_roots(qa, qb, qc), imag_tol)
    }
}

/// A real solution `(x, y)` of the pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RootPair {
    pub x: f64,
    pub y: f64,
    /// Largest absolute value of the two quadratics at `(x, y)`.
    pub back_substitution_residual: f64,
}

/// Keeps roots whose imaginary part is at most `tol_rel * max(1, |re|)`.
pub fn real_filter(roots: &[Complex64], tol_rel: f64) -> Vec<f64> {
    roots
        .iter()
        .filter(|z| z.im.abs() <= tol_rel * z.re.abs().max(1.0))
        .map(|z| z.re)
        .collect()
}

fn quartic_eval(coef: &[f64; 5], x: Complex64) -> Complex64 {
    coef.iter()
        .fold(Complex64::new(0.0, 0.0), |acc, c| acc * x + c)
}

fn quartic_derivative(coef: &[f64; 5], x: Complex64) -> Complex64 {
    let n = coef.len() - 1;
    coef[..n]
        .iter()
        .enumerate()
        .fold(Complex64::new(0.0, 0.0), |acc, (i, c)| acc * x + c * (n - i) as f64)
}

/// One Newton step on the polynomial, kept only if it does not increase |P|.
fn polish(coef: &[f64; 5], x: Complex64) -> Complex64 {
    let px = quartic_eval(coef, x);
    let dpx = quartic_derivative(coef, x);
    if px.norm() == 0.0 || dpx.norm() == 0.0 {
        return x;
    }
    let next = x - px / dpx;
    if next.is_finite() && quartic_eval(coef, next).norm() <= px.norm() {
        next
    } else {
        x
    }
}

/// Cube roots of `z` on all three branches, principal branch first.
fn cube_roots(z: Complex64) -> [Complex64; 3] {
    let principal = z.powf(1.0 / 3.0);
    let turn = Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI / 3.0);
    [principal, principal * turn, principal * turn * turn]
}

fn quadratic_roots(a: f64, b: f64, c: f64) -> Vec<Complex64> {
    let disc = b * b - 4.0 * a * c;
    if disc >= 0.0 {
        let q = -0.5 * (b + b.signum() * disc.sqrt());
        if q == 0.0 {
            // b = 0 and c = 0
            return vec![Complex64::new(0.0, 0.0); 2];
        }
        vec![Complex64::new(q / a, 0.0), Complex64::new(c / q, 0.0)]
    } else {
        let re = -b / (2.0 * a);
        let im = (-disc).sqrt() / (2.0 * a);
        vec![Complex64::new(re, im), Complex64::new(re, -im)]
    }
}

fn cubic_roots(a: f64, b: f64, c: f64, d: f64) -> Vec<Complex64> {
    let shift = b / (3.0 * a);
    let p = (3.0 * a * c - b * b) / (3.0 * a * a);
    let q = (2.0 * b * b * b - 9.0 * a * b * c + 27.0 * a * a * d) / (27.0 * a * a * a);
    let root = Complex64::new(q * q / 4.0 + p * p * p / 27.0, 0.0).sqrt();
    let plus = -q / 2.0 + root;
    let minus = -q / 2.0 - root;
    let inner = if plus.norm() >= minus.norm() { plus } else { minus };
    let coef = [0.0, a, b, c, d];
    if inner.norm() == 0.0 {
        // triple root
        return vec![Complex64::new(-shift, 0.0); 3];
    }
    cube_roots(inner)
        .iter()
        .map(|u| {
            let t = u - p / (3.0 * u);
            polish(&coef, t - shift)
        })
        .collect()
}

/// Roots of `alpha x^4 + beta x^3 + gamma x^2 + lambda x + mu`, `alpha != 0`.
///
/// Uses the closed-form quartic formulas over complex numbers and polishes
/// each root with one Newton step. The cube root inside the resolvent is
/// tried on all three branches until one gives a non-vanishing `s`; when all
/// vanish and the depressed quartic has no odd term it is solved as a
/// quadratic in `x^2` instead.
pub fn solve_quartic(alpha: f64, beta: f64, gamma: f64, lambda: f64, mu: f64) -> Result<[Complex64; 4]> {
    if alpha == 0.0 || !alpha.is_finite() {
        return Err(Error::InvalidValue {
            field: "alpha".into(),
            reason: "leading quartic coefficient must be finite and non-zero".into(),
        });
    }
    let coef = [alpha, beta, gamma, lambda, mu];
    let p = (8.0 * alpha * gamma - 3.0 * beta * beta) / (8.0 * alpha * alpha);
    let q0 = (beta.powi(3) - 4.0 * alpha * beta * gamma + 8.0 * alpha * alpha * lambda)
        / (8.0 * alpha.powi(3));
    let delta0 = gamma * gamma - 3.0 * beta * lambda + 12.0 * alpha * mu;
    let delta1 = 2.0 * gamma.powi(3) - 9.0 * beta * gamma * lambda + 27.0 * beta * beta * mu
        + 27.0 * alpha * lambda * lambda
        - 72.0 * alpha * gamma * mu;
    // -27 * Delta
    let minus_27_delta = Complex64::new(delta1 * delta1 - 4.0 * delta0.powi(3), 0.0);
    let sq = minus_27_delta.sqrt();
    let plus = (delta1 + sq) / 2.0;
    let minus = (delta1 - sq) / 2.0;
    let inner = if plus.norm() >= minus.norm() { plus } else { minus };

    let shift = -beta / (4.0 * alpha);
    let root_scale = shift.abs().max(p.abs().sqrt()).max(1.0);
    let mut s = None;
    if inner.norm() == 0.0 {
        let candidate = 0.5 * Complex64::new(-2.0 * p / 3.0, 0.0).sqrt();
        if candidate.norm() > RESOLVENT_EPS * root_scale {
            s = Some(candidate);
        }
    } else {
        for q1 in cube_roots(inner) {
            let candidate =
                0.5 * (-2.0 * p / 3.0 + (q1 + delta0 / q1) / (3.0 * alpha)).sqrt();
            if candidate.is_finite() && candidate.norm() > RESOLVENT_EPS * root_scale {
                s = Some(candidate);
                break;
            }
        }
    }

    let raw = match s {
        Some(s) => {
            let first = 0.5 * (-4.0 * s * s - 2.0 * p + q0 / s).sqrt();
            let second = 0.5 * (-4.0 * s * s - 2.0 * p - q0 / s).sqrt();
            [
                shift - s + first,
                shift - s - first,
                shift + s + second,
                shift + s - second,
            ]
        }
        None => {
            // s = 0 only when the depressed quartic is biquadratic.
            if q0.abs() > RESOLVENT_EPS * root_scale.powi(3) {
                return Err(Error::DegenerateResolvent);
            }
            let r = (-3.0 * beta.powi(4) + 256.0 * alpha.powi(3) * mu
                - 64.0 * alpha * alpha * beta * lambda
                + 16.0 * alpha * beta * beta * gamma)
                / (256.0 * alpha.powi(4));
            let disc = Complex64::new(p * p - 4.0 * r, 0.0).sqrt();
            let z1 = (-p + disc) / 2.0;
            let z2 = (-p - disc) / 2.0;
            let (y1, y2) = (z1.sqrt(), z2.sqrt());
            [shift + y1, shift - y1, shift + y2, shift - y2]
        }
    };
    Ok(raw.map(|x| polish(&coef, x)))
}

/// Roots of the quartic after dropping leading coefficients that vanish
/// relative to the largest one (quartic, then cubic, quadratic, linear).
fn solve_degraded(coef: [f64; 5]) -> Result<Vec<Complex64>> {
    let scale = coef.iter().fold(0.0, |m: f64, c| m.max(c.abs()));
    if scale == 0.0 {
        return Ok(Vec::new());
    }
    let eps = LEADING_EPS * scale;
    let [alpha, beta, gamma, lambda, mu] = coef;
    if alpha.abs() > eps {
        return Ok(solve_quartic(alpha, beta, gamma, lambda, mu)?.to_vec());
    }
    if beta.abs() > eps {
        return Ok(cubic_roots(beta, gamma, lambda, mu));
    }
    if gamma.abs() > eps {
        return Ok(quadratic_roots(gamma, lambda, mu));
    }
    if lambda.abs() > eps {
        return Ok(vec![Complex64::new(-mu / lambda, 0.0)]);
    }
    Ok(Vec::new())
}

/// Solves the pair with the default imaginary-part tolerance.
pub fn solve_quadratic_pair(
    eq1: &QuadraticCoefficients,
    eq2: &QuadraticCoefficients,
) -> Result<Vec<RootPair>> {
    solve_quadratic_pair_with(eq1, eq2, DEFAULT_IMAG_TOL)
}

/// All real solutions of the pair whose back-substitution residual is at most
/// `1e-6 * max(1, largest |coefficient|)`.
///
/// Both unknowns are rescaled to unit magnitude before solving, and every
/// recovered pair gets a few Newton steps on the original equations.
/// Two proportional equations describe a curve rather than isolated points
/// and are reported as [`Error::NoRealSolution`].
pub fn solve_quadratic_pair_with(
    eq1: &QuadraticCoefficients,
    eq2: &QuadraticCoefficients,
    imag_tol: f64,
) -> Result<Vec<RootPair>> {
    if !eq1.is_finite() || !eq2.is_finite() {
        return Err(Error::NonFinite("quadratic coefficients".into()));
    }
    let gate = RESIDUAL_GATE * eq1.max_abs().max(eq2.max_abs()).max(1.0);
    let sx = variable_scale([eq1.a, eq2.a], [eq1.d, eq2.d], [eq1.f, eq2.f]);
    let sy = variable_scale([eq1.c, eq2.c], [eq1.e, eq2.e], [eq1.f, eq2.f]);
    let s1 = eq1.rescaled(sx, sy);
    let s2 = eq2.rescaled(sx, sy);

    let mut pairs: Vec<RootPair> = Vec::new();
    for (x, y) in raw_pairs(&s1, &s2, imag_tol, false)? {
        let (x, y) = newton_pair(eq1, eq2, x * sx, y * sy);
        let residual = eq1.eval(x, y).abs().max(eq2.eval(x, y).abs());
        if residual.is_finite() && residual <= gate {
            push_unique(&mut pairs, RootPair { x, y, back_substitution_residual: residual });
        }
    }
    if pairs.is_empty() {
        Err(Error::NoRealSolution)
    } else {
        Ok(pairs)
    }
}

/// Typical magnitude of one unknown, from balancing its quadratic and linear
/// terms against the constants; rounded to a power of two.
fn variable_scale(quad: [f64; 2], lin: [f64; 2], constant: [f64; 2]) -> f64 {
    let q = quad[0].abs().max(quad[1].abs());
    let l = lin[0].abs().max(lin[1].abs());
    let c = constant[0].abs().max(constant[1].abs());
    let s = if c > 0.0 && q > 0.0 {
        (c / q).sqrt()
    } else if c > 0.0 && l > 0.0 {
        c / l
    } else {
        1.0
    };
    if s.is_finite() && s > 0.0 {
        2f64.powi(s.log2().round() as i32)
    } else {
        1.0
    }
}

/// Up to four Newton steps on the pair, each kept only if it lowers the
/// larger residual.
fn newton_pair(eq1: &QuadraticCoefficients, eq2: &QuadraticCoefficients, mut x: f64, mut y: f64) -> (f64, f64) {
    let res = |x: f64, y: f64| eq1.eval(x, y).abs().max(eq2.eval(x, y).abs());
    let mut current = res(x, y);
    for _ in 0..4 {
        if current == 0.0 {
            break;
        }
        let (f1, f2) = (eq1.eval(x, y), eq2.eval(x, y));
        let (g1x, g1y) = eq1.gradient(x, y);
        let (g2x, g2y) = eq2.gradient(x, y);
        let det = g1x * g2y - g1y * g2x;
        if det == 0.0 || !det.is_finite() {
            break;
        }
        let nx = x - (f1 * g2y - f2 * g1y) / det;
        let ny = y - (g1x * f2 - g2x * f1) / det;
        let next = res(nx, ny);
        if !(next < current) {
            break;
        }
        (x, y, current) = (nx, ny, next);
    }
    (x, y)
}

/// Pairs built from the complex-conjugate roots of the eliminant: the real
/// part of each conjugate pair is completed with `y` and given the same
/// Newton steps as the real roots. These do not solve the pair and carry no
/// residual gate; they stand in for real solutions that noise has pushed
/// slightly into the complex plane.
pub fn projected_pairs(
    eq1: &QuadraticCoefficients,
    eq2: &QuadraticCoefficients,
    imag_tol: f64,
) -> Result<Vec<RootPair>> {
    if !eq1.is_finite() || !eq2.is_finite() {
        return Err(Error::NonFinite("quadratic coefficients".into()));
    }
    let sx = variable_scale([eq1.a, eq2.a], [eq1.d, eq2.d], [eq1.f, eq2.f]);
    let sy = variable_scale([eq1.c, eq2.c], [eq1.e, eq2.e], [eq1.f, eq2.f]);
    let mut pairs: Vec<RootPair> = Vec::new();
    let (s1, s2) = (eq1.rescaled(sx, sy), eq2.rescaled(sx, sy));
    for (x, y) in raw_pairs(&s1, &s2, imag_tol, true)? {
        let (x, y) = closest_approach(&s1, &s2, x, y);
        let (x, y) = (x * sx, y * sy);
        let residual = eq1.eval(x, y).abs().max(eq2.eval(x, y).abs());
        if residual.is_finite() {
            push_unique(&mut pairs, RootPair { x, y, back_substitution_residual: residual });
        }
    }
    Ok(pairs)
}

/// Local minimum of `eq1^2 + eq2^2` near `(x, y)` by Levenberg-Marquardt.
fn closest_approach(eq1: &QuadraticCoefficients, eq2: &QuadraticCoefficients, mut x: f64, mut y: f64) -> (f64, f64) {
    let cost = |x: f64, y: f64| eq1.eval(x, y).powi(2) + eq2.eval(x, y).powi(2);
    let mut current = cost(x, y);
    let mut mu = 1e-3;
    for _ in 0..50 {
        let (f1, f2) = (eq1.eval(x, y), eq2.eval(x, y));
        let (a, b) = eq1.gradient(x, y);
        let (c, d) = eq2.gradient(x, y);
        // J^T J and J^T f
        let (jxx, jxy, jyy) = (a * a + c * c, a * b + c * d, b * b + d * d);
        let (gx, gy) = (a * f1 + c * f2, b * f1 + d * f2);
        let mut improved = false;
        for _ in 0..20 {
            let (hxx, hyy) = (jxx + mu * jxx.max(1e-300), jyy + mu * jyy.max(1e-300));
            let det = hxx * hyy - jxy * jxy;
            if det == 0.0 || !det.is_finite() {
                mu *= 10.0;
                continue;
            }
            let nx = x - (hyy * gx - jxy * gy) / det;
            let ny = y - (hxx * gy - jxy * gx) / det;
            let next = cost(nx, ny);
            if next < current {
                (x, y, current) = (nx, ny, next);
                mu = (mu * 0.3).max(1e-12);
                improved = true;
                break;
            }
            mu *= 10.0;
        }
        if !improved || current == 0.0 {
            break;
        }
    }
    (x, y)
}

/// Real parts of the roots with a non-negligible imaginary part, one per
/// conjugate pair.
fn complex_parts(roots: &[Complex64], tol_rel: f64) -> Vec<f64> {
    roots
        .iter()
        .filter(|z| z.im > tol_rel * z.re.abs().max(1.0))
        .map(|z| z.re)
        .collect()
}

/// Candidate pairs before any residual check: from the real roots of the
/// eliminant, or with `projected` from its complex roots.
fn raw_pairs(
    eq1: &QuadraticCoefficients,
    eq2: &QuadraticCoefficients,
    imag_tol: f64,
    projected: bool,
) -> Result<Vec<(f64, f64)>> {
    let pick = |roots: &[Complex64]| {
        if projected {
            complex_parts(roots, imag_tol)
        } else {
            real_filter(roots, imag_tol)
        }
    };
    let scale = eq1.max_abs().max(eq2.max_abs()).max(1.0);

    // (t1 x + t2) y = t3 x^2 + t4 x + t5, and the equation the quartic is
    // built from. Without any y^2 term the second equation is already in
    // that form.
    let c_eps = LEADING_EPS * scale;
    let (t, target, back) = if eq1.c.abs() <= c_eps && eq2.c.abs() <= c_eps {
        ([eq2.b, eq2.e, -eq2.a, -eq2.d, -eq2.f], eq1, eq1)
    } else {
        let (c1, c2) = (eq1.c, eq2.c);
        (
            [
                eq1.b * c2 - eq2.b * c1,
                eq1.e * c2 - eq2.e * c1,
                -eq1.a * c2 + eq2.a * c1,
                -eq1.d * c2 + eq2.d * c1,
                -eq1.f * c2 + eq2.f * c1,
            ],
            eq1,
            eq2,
        )
    };
    let [t1, t2, t3, t4, t5] = t;
    let t_scale = t.iter().fold(0.0, |m: f64, c| m.max(c.abs()));

    let mut xs_with_y: Vec<(f64, Option<f64>)> = Vec::new();
    let zero_den = |v: f64| v.abs() <= LEADING_EPS * t_scale;

    if t_scale == 0.0 || (zero_den(t1) && zero_den(t2)) {
        // Case 1 with t1 = t2 = 0: x solves t3 x^2 + t4 x + t5 = 0.
        if t_scale == 0.0 || (zero_den(t3) && zero_den(t4) && zero_den(t5)) {
            return Err(Error::NoRealSolution);
        }
        for x in pick(&solve_degraded([0.0, 0.0, t3, t4, t5])?) {
            xs_with_y.push((x, None));
        }
    } else {
        // Case 1 with t1 != 0: x = -t2 / t1 only if it also solves t3 x^2 + t4 x + t5.
        if !zero_den(t1) && !projected {
            let x0 = -t2 / t1;
            let lhs = t3 * x0 * x0 + t4 * x0 + t5;
            let size = (t3 * x0 * x0).abs() + (t4 * x0).abs() + t5.abs();
            if lhs.abs() <= 1e-9 * size.max(f64::MIN_POSITIVE) {
                xs_with_y.push((x0, None));
            }
        }
        // Case 2: y = (t3 x^2 + t4 x + t5) / (t1 x + t2), substituted into
        // the target equation.
        let (a1, b1, c1, d1, e1, f1) = (target.a, target.b, target.c, target.d, target.e, target.f);
        let alpha = a1 * t1 * t1 + b1 * t1 * t3 + c1 * t3 * t3;
        let beta = d1 * t1 * t1 + 2.0 * a1 * t1 * t2 + b1 * t1 * t4 + b1 * t2 * t3
            + 2.0 * c1 * t3 * t4
            + e1 * t1 * t3;
        let gamma = c1 * (t4 * t4 + 2.0 * t3 * t5)
            + a1 * t2 * t2
            + f1 * t1 * t1
            + b1 * t1 * t5
            + b1 * t2 * t4
            + 2.0 * d1 * t1 * t2
            + e1 * t1 * t4
            + e1 * t2 * t3;
        let lambda = d1 * t2 * t2 + b1 * t2 * t5 + 2.0 * c1 * t4 * t5 + e1 * t1 * t5 + e1 * t2 * t4
            + 2.0 * f1 * t1 * t2;
        let mu = f1 * t2 * t2 + e1 * t2 * t5 + c1 * t5 * t5;
        for x in pick(&solve_degraded([alpha, beta, gamma, lambda, mu])?) {
            let den = t1 * x + t2;
            if den.abs() > 1e-9 * ((t1 * x).abs() + t2.abs()) {
                xs_with_y.push((x, Some((t3 * x * x + t4 * x + t5) / den)));
            } else {
                xs_with_y.push((x, None));
            }
        }
    }

    let mut pairs = Vec::new();
    for (x, y) in xs_with_y {
        match y {
            Some(y) => pairs.push((x, y)),
            None => {
                let ys = back.solve_for_y(x, imag_tol);
                let ys = if ys.is_empty() { other(back, eq1, eq2).solve_for_y(x, imag_tol) } else { ys };
                pairs.extend(ys.into_iter().map(|y| (x, y)));
            }
        }
    }
    Ok(pairs)
}

fn other<'a>(
    current: &QuadraticCoefficients,
    eq1: &'a QuadraticCoefficients,
    eq2: &'a QuadraticCoefficients,
) -> &'a QuadraticCoefficients {
    if std::ptr::eq(current, eq1) {
        eq2
    } else {
        eq1
    }
}

fn push_unique(pairs: &mut Vec<RootPair>, pair: RootPair) {
    let close = |a: &RootPair| {
        let tol = 1e-9 * a.x.abs().max(a.y.abs()).max(pair.x.abs()).max(pair.y.abs()).max(1.0);
        (a.x - pair.x).abs() <= tol && (a.y - pair.y).abs() <= tol
    };
    match pairs.iter_mut().find(|a| close(a)) {
        Some(existing) => {
            if pair.back_substitution_residual < existing.back_substitution_residual {
                *existing = pair;
            }
        }
        None => pairs.push(pair),
    }
}
