//! Sensitivity scalars, L^p indices and the norm arithmetic built on them.
//!
//! Sensitivities live in the extended non-negative reals. Multiplication uses
//! the absorbing convention `0 * inf = inf * 0 = inf`, which is what keeps
//! scaling sound when a zero-sensitive context is placed under an
//! infinitely-sensitive one.

use std::fmt;

/// Absolute tolerance used when comparing grades produced by floating-point
/// contraction arithmetic.
pub const GRADE_TOL: f64 = 1e-9;

/// Indices at or above this value are treated as `inf` by [`lp_norm`].
pub const P_INF_CUTOFF: f64 = 1e6;

/// An extended non-negative real: a sensitivity, a distance, or a privacy
/// budget.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd)]
pub struct Sens(f64);

impl Sens {
    pub const ZERO: Sens = Sens(0.0);
    pub const ONE: Sens = Sens(1.0);
    pub const INF: Sens = Sens(f64::INFINITY);

    /// Returns `None` for negative or NaN input.
    pub fn new(value: f64) -> Option<Sens> {
        if value.is_nan() || value < 0.0 {
            None
        } else {
            // normalise -0.0
            Some(Sens(value + 0.0))
        }
    }

    /// Like [`Sens::new`] but clamps tiny negative rounding noise to zero.
    pub fn from_f64_lossy(value: f64) -> Sens {
        if value.is_nan() || value <= 0.0 {
            Sens::ZERO
        } else {
            Sens(value)
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }

    pub fn is_inf(self) -> bool {
        self.0.is_infinite()
    }

    pub fn is_zero(self) -> bool {
        self.0 == 0.0
    }

    pub fn max(self, other: Sens) -> Sens {
        if other.0 > self.0 {
            other
        } else {
            self
        }
    }

    /// `self <= other` up to [`GRADE_TOL`].
    pub fn approx_le(self, other: Sens) -> bool {
        if other.is_inf() {
            return true;
        }
        if self.is_inf() {
            return false;
        }
        self.0 <= other.0 + GRADE_TOL
    }

    pub fn approx_eq(self, other: Sens) -> bool {
        if self.is_inf() || other.is_inf() {
            return self.is_inf() && other.is_inf();
        }
        (self.0 - other.0).abs() <= GRADE_TOL
    }
}

impl fmt::Display for Sens {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_inf() {
            f.write_str("inf")
        } else {
            write!(f, "{}", self.0)
        }
    }
}

/// An L^p index, `p >= 1` or `inf`.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd)]
pub struct PIdx(f64);

impl PIdx {
    pub const ONE: PIdx = PIdx(1.0);
    pub const TWO: PIdx = PIdx(2.0);
    pub const INF: PIdx = PIdx(f64::INFINITY);

    /// Returns `None` when `value < 1` or NaN.
    pub fn new(value: f64) -> Option<PIdx> {
        if value.is_nan() || value < 1.0 {
            None
        } else {
            Some(PIdx(value))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }

    pub fn is_inf(self) -> bool {
        self.0.is_infinite()
    }

    /// `1/p`, with `1/inf = 0`.
    pub fn recip(self) -> f64 {
        if self.is_inf() {
            0.0
        } else {
            1.0 / self.0
        }
    }

    /// Hölder conjugate: `1/p + 1/q = 1`.
    pub fn conjugate(self) -> PIdx {
        if self.is_inf() {
            PIdx::ONE
        } else if self.0 == 1.0 {
            PIdx::INF
        } else {
            PIdx(self.0 / (self.0 - 1.0))
        }
    }

    pub fn approx_eq(self, other: PIdx) -> bool {
        if self.is_inf() || other.is_inf() {
            return self.is_inf() && other.is_inf();
        }
        (self.0 - other.0).abs() <= GRADE_TOL
    }
}

impl fmt::Display for PIdx {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_inf() {
            f.write_str("inf")
        } else {
            write!(f, "{}", self.0)
        }
    }
}

/// Product with `0 * inf = inf * 0 = inf`.
pub fn sens_mul(a: Sens, b: Sens) -> Sens {
    if a.is_inf() || b.is_inf() {
        Sens::INF
    } else {
        Sens(a.0 * b.0)
    }
}

pub fn sens_add(a: Sens, b: Sens) -> Sens {
    if a.is_inf() || b.is_inf() {
        Sens::INF
    } else {
        Sens(a.0 + b.0)
    }
}

/// `(sum x_i^p)^(1/p)`; the maximum for `p = inf`; `inf` as soon as any
/// entry is infinite; `0` on empty input.
pub fn lp_norm(p: PIdx, xs: &[Sens]) -> Sens {
    if xs.iter().any(|x| x.is_inf()) {
        return Sens::INF;
    }
    let max = xs.iter().fold(0.0_f64, |m, x| m.max(x.0));
    if max == 0.0 {
        return Sens::ZERO;
    }
    if p.is_inf() || p.0 >= P_INF_CUTOFF {
        return Sens(max);
    }
    if p.0 == 1.0 {
        return Sens(xs.iter().map(|x| x.0).sum());
    }
    // scale by the maximum so that x^p cannot overflow
    let acc: f64 = xs.iter().map(|x| (x.0 / max).powf(p.0)).sum();
    Sens(max * acc.powf(1.0 / p.0))
}

/// Correction factor applied when contracting at `p` across a node indexed
/// by `q`: `1` if `p = inf`, else `2^|1/q - 1/p|`. Not symmetric.
pub fn c_factor(p: PIdx, q: PIdx) -> Sens {
    if p.is_inf() {
        return Sens::ONE;
    }
    Sens(2f64.powf((q.recip() - p.recip()).abs()))
}

/// Least `s` with `sens_mul(r, s) >= target`.
pub fn sens_div_ceil(target: Sens, r: Sens) -> Sens {
    if target.is_zero() {
        return Sens::ZERO;
    }
    if r.is_inf() {
        // inf * 0 = inf already dominates any target
        return Sens::ZERO;
    }
    if target.is_inf() || r.is_zero() {
        return Sens::INF;
    }
    Sens(target.0 / r.0)
}

/// Renders a grade with nine significant digits for reports; `inf` for
/// infinity.
pub fn fmt_grade(s: Sens) -> String {
    if s.is_inf() {
        return "inf".to_string();
    }
    let rounded: f64 = format!("{:.8e}", s.value()).parse().unwrap_or(s.value());
    format!("{rounded}")
}
