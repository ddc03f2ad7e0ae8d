//! Elementwise scalar functions together with their first two derivatives.
//!
//! The second derivative is needed when a gradient-penalty graph (built from
//! first derivatives) is itself differentiated.

/// Lower clamp applied to `acosh` arguments in derivative evaluation.
pub const ACOSH_GRAD_CLAMP: f64 = 1.0 + 1e-12;
const SQRT_GRAD_FLOOR: f64 = 1e-30;
const SERIES_CUTOFF: f64 = 1e-2;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum UnaryFn {
    Sigmoid,
    Cosh,
    Sinh,
    /// `acosh(max(x, 1))`.
    Acosh,
    /// `sqrt(max(x, 0))`.
    Sqrt,
    Square,
    Exp,
    Ln,
    Relu,
    /// `sinh(sqrt(u)) / sqrt(u)` for `u >= 0`.
    SinhcSqrt,
    /// `cosh(sqrt(u))` for `u >= 0`.
    CoshSqrt,
    /// `asinh(sqrt(u)) / sqrt(u)` for `u >= 0`.
    AsinhcSqrt,
}

impl UnaryFn {
    pub fn name(self) -> &'static str {
        match self {
            UnaryFn::Sigmoid => "sigmoid",
            UnaryFn::Cosh => "cosh",
            UnaryFn::Sinh => "sinh",
            UnaryFn::Acosh => "acosh",
            UnaryFn::Sqrt => "sqrt",
            UnaryFn::Square => "square",
            UnaryFn::Exp => "exp",
            UnaryFn::Ln => "ln",
            UnaryFn::Relu => "relu",
            UnaryFn::SinhcSqrt => "sinhc_sqrt",
            UnaryFn::CoshSqrt => "cosh_sqrt",
            UnaryFn::AsinhcSqrt => "asinhc_sqrt",
        }
    }

    pub fn eval(self, x: f64) -> f64 {
        match self {
            UnaryFn::Sigmoid => sigmoid(x),
            UnaryFn::Cosh => x.cosh(),
            UnaryFn::Sinh => x.sinh(),
            UnaryFn::Acosh => x.max(1.0).acosh(),
            UnaryFn::Sqrt => x.max(0.0).sqrt(),
            UnaryFn::Square => x * x,
            UnaryFn::Exp => x.exp(),
            UnaryFn::Ln => x.ln(),
            UnaryFn::Relu => x.max(0.0),
            UnaryFn::SinhcSqrt | UnaryFn::CoshSqrt | UnaryFn::AsinhcSqrt => self.sqrt_family(x).0,
        }
    }

    pub fn d1(self, x: f64) -> f64 {
        match self {
            UnaryFn::Sigmoid => {
                let s = sigmoid(x);
                s * (1.0 - s)
            }
            UnaryFn::Cosh => x.sinh(),
            UnaryFn::Sinh => x.cosh(),
            UnaryFn::Acosh => {
                let c = x.max(ACOSH_GRAD_CLAMP);
                1.0 / (c * c - 1.0).sqrt()
            }
            UnaryFn::Sqrt => 0.5 / x.max(SQRT_GRAD_FLOOR).sqrt(),
            UnaryFn::Square => 2.0 * x,
            UnaryFn::Exp => x.exp(),
            UnaryFn::Ln => 1.0 / x,
            UnaryFn::Relu => {
                if x > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            UnaryFn::SinhcSqrt | UnaryFn::CoshSqrt | UnaryFn::AsinhcSqrt => self.sqrt_family(x).1,
        }
    }

    pub fn d2(self, x: f64) -> f64 {
        match self {
            UnaryFn::Sigmoid => {
                let s = sigmoid(x);
                s * (1.0 - s) * (1.0 - 2.0 * s)
            }
            UnaryFn::Cosh => x.cosh(),
            UnaryFn::Sinh => x.sinh(),
            UnaryFn::Acosh => {
                let c = x.max(ACOSH_GRAD_CLAMP);
                -c / (c * c - 1.0).powf(1.5)
            }
            UnaryFn::Sqrt => -0.25 * x.max(SQRT_GRAD_FLOOR).powf(-1.5),
            UnaryFn::Square => 2.0,
            UnaryFn::Exp => x.exp(),
            UnaryFn::Ln => -1.0 / (x * x),
            UnaryFn::Relu => 0.0,
            UnaryFn::SinhcSqrt | UnaryFn::CoshSqrt | UnaryFn::AsinhcSqrt => self.sqrt_family(x).2,
        }
    }

    /// Value and first two derivatives in `u` of `f(sqrt(u))`.
    fn sqrt_family(self, u: f64) -> (f64, f64, f64) {
        let u = u.max(0.0);
        if u < SERIES_CUTOFF {
            return series3(&self.series_coeffs(), u);
        }
        let s = u.sqrt();
        // f(s), f'(s), f''(s) in the variable s.
        let (f, fs, fss) = match self {
            UnaryFn::SinhcSqrt => {
                let (sh, ch) = (s.sinh(), s.cosh());
                (sh / s, (s * ch - sh) / (s * s), (s * s * sh - 2.0 * s * ch + 2.0 * sh) / (s * s * s))
            }
            UnaryFn::CoshSqrt => (s.cosh(), s.sinh(), s.cosh()),
            UnaryFn::AsinhcSqrt => {
                let r = (1.0 + s * s).sqrt();
                let a = s / r - s.asinh();
                (s.asinh() / s, a / (s * s), -1.0 / (r * r * r) - 2.0 * a / (s * s * s))
            }
            _ => unreachable!("not a sqrt-family function"),
        };
        let du = fs / (2.0 * s);
        let du2 = (fss * s - fs) / (4.0 * s * s * s);
        (f, du, du2)
    }

    fn series_coeffs(self) -> [f64; 9] {
        let mut c = [0.0; 9];
        for (k, ck) in c.iter_mut().enumerate() {
            let k = k as i32;
            *ck = match self {
                UnaryFn::SinhcSqrt => 1.0 / factorial(2 * k + 1),
                UnaryFn::CoshSqrt => 1.0 / factorial(2 * k),
                UnaryFn::AsinhcSqrt => {
                    let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
                    sign * factorial(2 * k)
                        / (4f64.powi(k) * factorial(k) * factorial(k) * (2 * k + 1) as f64)
                }
                _ => unreachable!("not a sqrt-family function"),
            };
        }
        c
    }
}

fn factorial(n: i32) -> f64 {
    (1..=n).map(f64::from).product()
}

/// Value, first and second derivative of the power series `Σ c_k u^k`.
fn series3(c: &[f64], u: f64) -> (f64, f64, f64) {
    let (mut f, mut d1, mut d2) = (0.0, 0.0, 0.0);
    for k in (0..c.len()).rev() {
        let kf = k as f64;
        f = f * u + c[k];
        if k >= 1 {
            d1 = d1 * u + kf * c[k];
        }
        if k >= 2 {
            d2 = d2 * u + kf * (kf - 1.0) * c[k];
        }
    }
    (f, d1, d2)
}

#[inline]
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const ALL: [UnaryFn; 12] = [
        UnaryFn::Sigmoid,
        UnaryFn::Cosh,
        UnaryFn::Sinh,
        UnaryFn::Acosh,
        UnaryFn::Sqrt,
        UnaryFn::Square,
        UnaryFn::Exp,
        UnaryFn::Ln,
        UnaryFn::Relu,
        UnaryFn::SinhcSqrt,
        UnaryFn::CoshSqrt,
        UnaryFn::AsinhcSqrt,
    ];

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / 1f64.max(a.abs()).max(b.abs())
    }

    #[test]
    fn derivatives_match_central_differences() {
        for f in ALL {
            for &x in &[0.003f64, 0.009, 0.011, 0.3, 1.7, 2.0, 4.5, 9.0] {
                let x = if f == UnaryFn::Acosh { x + 1.1 } else { x };
                let h = 1e-5 * x.min(1.0);
                let n1 = (f.eval(x + h) - f.eval(x - h)) / (2.0 * h);
                let n2 = (f.d1(x + h) - f.d1(x - h)) / (2.0 * h);
                assert!(rel(f.d1(x), n1) < 1e-7, "{} d1 at {x}: {} vs {n1}", f.name(), f.d1(x));
                assert!(rel(f.d2(x), n2) < 1e-7, "{} d2 at {x}: {} vs {n2}", f.name(), f.d2(x));
            }
        }
    }

    #[test]
    fn series_and_closed_forms_agree_at_cutoff() {
        for f in [UnaryFn::SinhcSqrt, UnaryFn::CoshSqrt, UnaryFn::AsinhcSqrt] {
            let below = f.sqrt_family(SERIES_CUTOFF * (1.0 - 1e-12));
            let above = f.sqrt_family(SERIES_CUTOFF);
            assert!(rel(below.0, above.0) < 1e-12, "{}", f.name());
            assert!(rel(below.1, above.1) < 1e-10, "{}", f.name());
            assert!(rel(below.2, above.2) < 1e-7, "{}", f.name());
        }
    }

    #[test]
    fn known_values() {
        assert_eq!(UnaryFn::Sigmoid.d1(0.0), 0.25);
        assert!((UnaryFn::Acosh.d1(2.0) - 1.0 / 3f64.sqrt()).abs() < 1e-15);
        assert_eq!(UnaryFn::Acosh.eval(0.5), 0.0);
        assert_eq!(UnaryFn::SinhcSqrt.eval(0.0), 1.0);
        assert!((UnaryFn::SinhcSqrt.eval(4.0) - 2f64.sinh() / 2.0).abs() < 1e-15);
        assert!((UnaryFn::AsinhcSqrt.eval(9.0) - 3f64.asinh() / 3.0).abs() < 1e-15);
        assert!(UnaryFn::Acosh.d1(1.0).is_finite());
    }
}
