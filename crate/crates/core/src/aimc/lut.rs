//! Hard-wired lookup tables of the digital unit.
//!
//! Both tabulated functions are even, so a table is addressed by `|x|`: the
//! grid runs from 0 to `max(|lo|, |hi|)` in `entries - 1` equal steps and
//! returns the nearest entry without interpolation. Zero is always a grid
//! point and `f(-x) == f(x)` holds exactly.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ref_models::log2cosh;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LutFunction {
    Log2Cosh,
    Square,
}

impl LutFunction {
    pub fn eval(self, x: f64) -> f64 {
        match self {
            LutFunction::Log2Cosh => log2cosh(x),
            LutFunction::Square => x * x,
        }
    }

    /// Largest `|f'|` on `[-m, m]`.
    pub fn max_slope(self, m: f64) -> f64 {
        match self {
            LutFunction::Log2Cosh => m.tanh(),
            LutFunction::Square => 2.0 * m,
        }
    }

    /// Out-of-range rule: `log2cosh` continues with slope one, `square` clamps.
    pub fn default_extension(self) -> LutExtension {
        match self {
            LutFunction::Log2Cosh => LutExtension::AbsLinear,
            LutFunction::Square => LutExtension::Clamp,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LutExtension {
    Clamp,
    AbsLinear,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Lut {
    pub function: LutFunction,
    pub domain_lo: f64,
    pub domain_hi: f64,
    pub extension: LutExtension,
    step: f64,
    entries: Vec<f64>,
}

impl Lut {
    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    /// Largest tabulated `|x|`.
    pub fn magnitude_range(&self) -> f64 {
        self.domain_lo.abs().max(self.domain_hi.abs())
    }

    /// Worst-case nearest-entry error inside the domain.
    pub fn error_bound(&self) -> f64 {
        self.function.max_slope(self.magnitude_range()) * self.step / 2.0
    }
}

/// Tabulates `function` with `entries` points over `[lo, hi]`.
pub fn lut_build(function: LutFunction, domain_lo: f64, domain_hi: f64, entries: usize) -> Result<Lut> {
    if !(domain_lo < domain_hi) || !domain_lo.is_finite() || !domain_hi.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "lookup table domain [{domain_lo}, {domain_hi}] is empty or not finite"
        )));
    }
    if entries < 2 {
        return Err(Error::InvalidArgument("a lookup table needs at least 2 entries".into()));
    }
    let m = domain_lo.abs().max(domain_hi.abs());
    let last = entries - 1;
    let step = m / last as f64;
    let table = (0..entries)
        .map(|k| {
            let x = if k == last { m } else { k as f64 * step };
            function.eval(x)
        })
        .collect();
    Ok(Lut {
        function,
        domain_lo,
        domain_hi,
        extension: function.default_extension(),
        step,
        entries: table,
    })
}

/// Nearest-entry lookup; outside the tabulated range the extension rule applies.
#[inline]
pub fn lut_eval(l: &Lut, x: f64) -> f64 {
    let a = x.abs();
    let last = l.entries.len() - 1;
    let k = (a / l.step).round();
    if k <= last as f64 {
        return l.entries[k as usize];
    }
    match l.extension {
        LutExtension::Clamp => l.entries[last],
        LutExtension::AbsLinear => l.entries[last] + (a - l.magnitude_range()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn zero_is_a_grid_point() {
        let l = lut_build(LutFunction::Log2Cosh, -3.0, 3.0, 1024).unwrap();
        assert_eq!(lut_eval(&l, 0.0), std::f64::consts::LN_2);
        let s = lut_build(LutFunction::Square, -2.0, 5.0, 1024).unwrap();
        assert_eq!(lut_eval(&s, 0.0), 0.0);
    }

    #[test]
    fn square_clamps_beyond_domain() {
        let s = lut_build(LutFunction::Square, -4.0, 4.0, 1024).unwrap();
        assert_eq!(lut_eval(&s, 8.0), 16.0);
        assert_eq!(lut_eval(&s, -1e9), 16.0);
    }

    #[test]
    fn log2cosh_extends_linearly() {
        let l = lut_build(LutFunction::Log2Cosh, -2.0, 2.0, 1024).unwrap();
        let v = lut_eval(&l, 12.0);
        assert!((v - (log2cosh(2.0) + 10.0)).abs() < 1e-12);
        assert!((v - log2cosh(12.0)).abs() < 0.02);
    }

    #[test]
    fn dense_sweep_within_bound() {
        for (f, lo, hi) in [
            (LutFunction::Log2Cosh, -3.0, 3.0),
            (LutFunction::Log2Cosh, -0.5, 1.7),
            (LutFunction::Square, -30.0, 30.0),
        ] {
            let l = lut_build(f, lo, hi, 1024).unwrap();
            let bound = l.error_bound();
            let n = 200_000;
            for k in 0..=n {
                let x = lo + (hi - lo) * k as f64 / n as f64;
                let err = (lut_eval(&l, x) - f.eval(x)).abs();
                assert!(err <= bound * (1.0 + 1e-9) + 1e-15, "{f:?} x={x} err={err} bound={bound}");
            }
        }
    }

    #[test]
    fn rejects_bad_domains() {
        assert!(lut_build(LutFunction::Square, 1.0, 1.0, 16).is_err());
        assert!(lut_build(LutFunction::Square, 0.0, f64::INFINITY, 16).is_err());
        assert!(lut_build(LutFunction::Square, 0.0, 1.0, 1).is_err());
    }

    proptest! {
        #[test]
        fn lookup_is_even(x in -50.0f64..50.0, m in 0.1f64..40.0) {
            let l = lut_build(LutFunction::Log2Cosh, -m, m, 1024).unwrap();
            prop_assert_eq!(lut_eval(&l, x), lut_eval(&l, -x));
        }
    }
}
