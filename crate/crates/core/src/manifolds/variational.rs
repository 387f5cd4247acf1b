use crate::error::{Error, Result};
use crate::map_core::TorusPoint;
use crate::profile::ShearProfile;

/// Generating function `L(x, x₁) = (x - x₁)²/2 + G(x)`.
pub fn generating_l(x: f64, x1: f64, h: &ShearProfile) -> f64 {
    0.5 * (x - x1) * (x - x1) + h.g(x)
}

/// Closure of the sequence beyond its last entry.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TailRule {
    /// `x_{N+1} = A / (N + 1 + c)`.
    Asymptotic,
    /// `x_{N+1} = 0`.
    Zero,
}

/// Truncated critical sequence `x_1, ..., x_N` anchored at `x_0 = a`.
#[derive(Debug, Clone, PartialEq)]
pub struct SequenceWindow {
    pub a: f64,
    pub xs: Vec<f64>,
    pub tail: TailRule,
    /// `A = √(2/b)`.
    pub big_a: f64,
    /// `c = A / a`.
    pub c: f64,
    /// Band constant `B`.
    pub band_b: f64,
    /// Sup-norm of the Lagrangian gradient.
    pub residual: f64,
    /// Whether the band projection stayed active through convergence.
    pub projected: bool,
}

impl SequenceWindow {
    /// Window with entries `x_n = A/(n + c)`.
    pub fn asymptotic(a: f64, n: usize, tail: TailRule, h: &ShearProfile) -> Self {
        let big_a = h.a_const();
        let c = big_a / a;
        SequenceWindow {
            a,
            xs: (1..=n).map(|k| big_a / (k as f64 + c)).collect(),
            tail,
            big_a,
            c,
            band_b: big_a,
            residual: f64::NAN,
            projected: false,
        }
    }

    pub fn len(&self) -> usize {
        self.xs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.xs.is_empty()
    }

    pub fn tail_value(&self) -> f64 {
        match self.tail {
            TailRule::Asymptotic => self.big_a / ((self.xs.len() + 1) as f64 + self.c),
            TailRule::Zero => 0.0,
        }
    }

    /// `x_n` for `n = 0..=N+1`.
    pub fn x(&self, n: usize) -> f64 {
        if n == 0 {
            self.a
        } else if n <= self.xs.len() {
            self.xs[n - 1]
        } else {
            self.tail_value()
        }
    }

    /// Center and half-width of the band at index `n`.
    pub fn band(&self, n: usize) -> (f64, f64) {
        let s = n as f64 + self.c;
        (self.big_a / s, self.band_b * s.powf(-1.5))
    }

    pub fn band_ok(&self) -> bool {
        (1..=self.xs.len()).all(|n| {
            let (m, w) = self.band(n);
            (self.x(n) - m).abs() <= w
        })
    }

    pub fn is_monotone(&self) -> bool {
        (0..=self.xs.len()).all(|n| self.x(n + 1) < self.x(n))
    }

    /// `y_n = x_{n+1} - x_n - h(x_n)`, the momenta of the orbit.
    pub fn momenta(&self, h: &ShearProfile) -> Vec<f64> {
        (0..=self.xs.len())
            .map(|n| self.x(n + 1) - self.x(n) - h.h(self.x(n)))
            .collect()
    }

    /// Backward orbit `Π(x_k, y_k)`, `k = 0..=N`, of the point `Π(a, γ_s(a))` on the
    /// unstable manifold; exact up to the minimizer residual.
    pub fn unstable_backward_orbit(&self, h: &ShearProfile) -> Vec<TorusPoint> {
        self.momenta(h)
            .into_iter()
            .enumerate()
            .map(|(k, y)| {
                let x = self.x(k);
                TorusPoint::local(x, -y - h.h(x))
            })
            .collect()
    }

    /// `γ_s(a) = y_0`.
    pub fn y0(&self, h: &ShearProfile) -> f64 {
        self.x(1) - self.a - h.h(self.a)
    }
}

/// `(∇L_a)_n = 2x_n - x_{n-1} - x_{n+1} + h(x_n)`, `n = 1..=N`.
pub fn lagrangian_gradient(w: &SequenceWindow, h: &ShearProfile) -> Vec<f64> {
    (1..=w.xs.len())
        .map(|n| {
            let x = w.x(n);
            2.0 * x - w.x(n - 1) - w.x(n + 1) + h.h(x)
        })
        .collect()
}

fn sup(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, g| m.max(g.abs()))
}

/// Solves the symmetric tridiagonal system with diagonal `d` and off-diagonals `-1`.
fn solve_tridiagonal(d: &[f64], rhs: &[f64]) -> Vec<f64> {
    let n = d.len();
    let mut cp = vec![0.0; n];
    let mut dp = vec![0.0; n];
    cp[0] = -1.0 / d[0];
    dp[0] = rhs[0] / d[0];
    for i in 1..n {
        let m = d[i] + cp[i - 1];
        cp[i] = -1.0 / m;
        dp[i] = (rhs[i] + dp[i - 1]) / m;
    }
    let mut x = vec![0.0; n];
    x[n - 1] = dp[n - 1];
    for i in (0..n - 1).rev() {
        x[i] = dp[i] - cp[i] * x[i + 1];
    }
    x
}

/// Default truncation `max(200, ceil(10/a))`.
pub fn default_length(a: f64) -> usize {
    200usize.max((10.0 / a).ceil() as usize)
}

fn newton(w: &mut SequenceWindow, tol: f64, h: &ShearProfile, project: bool) -> bool {
    const MAX_ITER: usize = 100;
    let n = w.xs.len();
    let mut best = f64::INFINITY;
    let mut stalled = 0;
    for _ in 0..MAX_ITER {
        let g = lagrangian_gradient(w, h);
        let r = sup(&g);
        w.residual = r;
        if r <= tol {
            return true;
        }
        if r < 0.5 * best {
            best = r;
            stalled = 0;
        } else {
            stalled += 1;
            if stalled > 8 {
                return false;
            }
        }
        let d: Vec<f64> = w.xs.iter().map(|&x| 2.0 + h.dh(x)).collect();
        let delta = solve_tridiagonal(&d, &g);
        for k in 0..n {
            let mut x = w.xs[k] - delta[k];
            if project {
                let (m, hw) = w.band(k + 1);
                x = x.clamp(m - hw, m + hw);
            }
            w.xs[k] = x;
        }
    }
    w.residual = sup(&lagrangian_gradient(w, h));
    w.residual <= tol
}

/// Critical point of the truncated action anchored at `a`, projected into the
/// band `|x_n - A/(n+c)| <= B (n+c)^{-3/2}` while iterating. If the projected
/// iteration cannot reach `tol` the band is released and `projected` is false.
pub fn minimize_stable_sequence(
    a: f64,
    n: usize,
    tol: f64,
    h: &ShearProfile,
) -> Result<SequenceWindow> {
    if !(a > 0.0 && a <= 0.5) {
        return Err(Error::Range {
            value: a,
            lo: 0.0,
            hi: 0.5,
        });
    }
    if n < 2 {
        return Err(Error::Domain(format!(
            "sequence length {n} must be at least 2"
        )));
    }
    let mut w = SequenceWindow::asymptotic(a, n, TailRule::Asymptotic, h);
    if newton(&mut w, tol, h, true) {
        w.projected = true;
        return Ok(w);
    }
    let mut w = SequenceWindow::asymptotic(a, n, TailRule::Asymptotic, h);
    if newton(&mut w, tol, h, false) {
        return Ok(w);
    }
    Err(Error::Convergence {
        what: format!("stable sequence at a = {a}"),
        residual: w.residual,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::map_core::{step_inverse_local, step_local};
    use proptest::prelude::*;

    const SINE: ShearProfile = ShearProfile::Sine;

    #[test]
    fn generating_function_values() {
        assert_eq!(generating_l(0.0, 0.0, &SINE), 0.0);
        assert!((generating_l(0.0, 0.1, &SINE) - 0.005).abs() < 1e-17);
    }

    proptest! {
        #[test]
        fn generating_function_partials(x in -0.4f64..0.4, x1 in -0.4f64..0.4) {
            let e = 1e-6;
            let y = x1 - x - SINE.h(x);
            let y1 = x1 - x;
            let dx = (generating_l(x + e, x1, &SINE) - generating_l(x - e, x1, &SINE)) / (2.0 * e);
            let dx1 = (generating_l(x, x1 + e, &SINE) - generating_l(x, x1 - e, &SINE)) / (2.0 * e);
            prop_assert!((-dx - y).abs() <= 1e-6 * (1.0 + y.abs()));
            prop_assert!((dx1 - y1).abs() <= 1e-6 * (1.0 + y1.abs()));
        }
    }

    #[test]
    fn gradient_examples() {
        let mut w = SequenceWindow::asymptotic(0.1, 10, TailRule::Zero, &SINE);
        w.a = 0.0;
        w.xs.iter_mut().for_each(|x| *x = 0.0);
        assert!(lagrangian_gradient(&w, &SINE).iter().all(|&g| g == 0.0));
        w.a = 0.1;
        w.xs.iter_mut().for_each(|x| *x = 0.1);
        let g = lagrangian_gradient(&w, &SINE);
        for &gn in &g[..9] {
            assert!((gn - SINE.h(0.1)).abs() < 1e-16);
        }
    }

    #[test]
    fn minimizer_contract() {
        let a = 0.1;
        let n = default_length(a);
        let w = minimize_stable_sequence(a, n, 1e-13, &SINE).unwrap();
        assert!(w.residual <= 1e-12);
        assert!(sup(&lagrangian_gradient(&w, &SINE)) <= 1e-12);
        assert!(w.band_ok() && w.is_monotone() && w.projected);
        let (m, hw) = w.band(1);
        assert!((w.x(1) - m).abs() <= hw);
        assert!((m - 0.097_19).abs() < 1e-4);

        // forward shooting reproduces the sequence
        let ys = w.momenta(&SINE);
        let mut p = TorusPoint::local(a, ys[0]);
        for k in 1..=n / 2 {
            p = step_local(p, &SINE);
            assert!(
                (p.x - w.x(k)).abs() < 1e-10 && (p.y - ys[k]).abs() < 1e-10,
                "n={k}"
            );
        }
    }

    #[test]
    fn unstable_orbit_is_backward_orbit() {
        let w = minimize_stable_sequence(0.1, 400, 1e-13, &SINE).unwrap();
        let orb = w.unstable_backward_orbit(&SINE);
        for k in 0..50 {
            let q = step_inverse_local(orb[k], &SINE);
            assert!((q - orb[k + 1]).norm() < 1e-13);
        }
    }

    #[test]
    fn lipschitz_in_anchor() {
        for &a in &[0.02, 0.05, 0.1, 0.15] {
            let n = default_length(a);
            let w0 = minimize_stable_sequence(a, n, 1e-13, &SINE).unwrap();
            let w1 = minimize_stable_sequence(a + 1e-4, n, 1e-13, &SINE).unwrap();
            let d1 = (w1.x(1) - w0.x(1)).abs();
            assert!(d1 <= 1e-4);
            for k in 1..=n {
                assert!((w1.x(k) - w0.x(k)).abs() <= d1 + 1e-12);
            }
        }
    }

    #[test]
    fn rejects_bad_anchor() {
        assert!(minimize_stable_sequence(0.0, 100, 1e-12, &SINE).is_err());
        assert!(minimize_stable_sequence(0.1, 1, 1e-12, &SINE).is_err());
    }
}
