//! Exact decimal values on a power-of-ten grid.
//!
//! Spectral efficiencies like 6.67 bits/s/Hz are treated as the exact
//! decimals they are printed as, not as the nearest binary float. Keeping
//! them on an integer grid makes set membership exact and makes the
//! minimum-gap computation behind the power regularizer a plain integer
//! gcd.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// A nonnegative decimal number `units / 10^scale`, normalized so that
/// `units` has no trailing zero factor of ten (or `scale == 0`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Decimal {
    units: i64,
    scale: u32,
}

impl Decimal {
    pub const ZERO: Decimal = Decimal { units: 0, scale: 0 };
    pub const ONE: Decimal = Decimal { units: 1, scale: 0 };

    pub fn new(units: i64, scale: u32) -> Self {
        Decimal { units, scale }.normalized()
    }

    fn normalized(mut self) -> Self {
        if self.units == 0 {
            self.scale = 0;
            return self;
        }
        while self.scale > 0 && self.units % 10 == 0 {
            self.units /= 10;
            self.scale -= 1;
        }
        self
    }

    pub fn is_zero(&self) -> bool {
        self.units == 0
    }

    pub fn to_f64(&self) -> f64 {
        self.units as f64 / 10f64.powi(self.scale as i32)
    }

    /// Exact product of two decimals.
    pub fn mul(&self, other: &Decimal) -> Result<Decimal> {
        let units = (self.units as i128) * (other.units as i128);
        if units.unsigned_abs() > i64::MAX as u128 {
            return Err(Error::domain(format!(
                "decimal product {} * {} overflows",
                self, other
            )));
        }
        Ok(Decimal::new(units as i64, self.scale + other.scale))
    }

    /// Parses a decimal literal from the shortest round-trip
    /// representation of `x`. Fails for values that are not plain
    /// decimals (NaN, infinities, exponents beyond 18 digits).
    pub fn from_f64(x: f64) -> Result<Decimal> {
        if !x.is_finite() {
            return Err(Error::domain(format!("{x} is not a decimal value")));
        }
        format!("{x}").parse()
    }
}

impl FromStr for Decimal {
    type Err = Error;

    fn from_str(s: &str) -> Result<Decimal> {
        let s = s.trim();
        let bad = || Error::domain(format!("'{s}' is not a plain decimal literal"));
        let (int_part, frac_part) = match s.split_once('.') {
            Some((i, f)) => (i, f),
            None => (s, ""),
        };
        if int_part.is_empty() && frac_part.is_empty() {
            return Err(bad());
        }
        let digits: String = [int_part, frac_part].concat();
        if digits.starts_with('-') {
            return Err(Error::domain(format!("'{s}': negative values not allowed")));
        }
        if !digits.chars().all(|c| c.is_ascii_digit()) {
            return Err(bad());
        }
        let units: i64 = digits.parse().map_err(|_| bad())?;
        Ok(Decimal::new(units, frac_part.len() as u32))
    }
}

impl fmt::Display for Decimal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.scale == 0 {
            write!(f, "{}", self.units)
        } else {
            let div = 10i64.pow(self.scale);
            write!(
                f,
                "{}.{:0width$}",
                self.units / div,
                self.units % div,
                width = self.scale as usize
            )
        }
    }
}

impl PartialOrd for Decimal {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Decimal {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        let scale = self.scale.max(other.scale);
        let a = self.units as i128 * 10i128.pow(scale - self.scale);
        let b = other.units as i128 * 10i128.pow(scale - other.scale);
        a.cmp(&b)
    }
}

/// Greatest common divisor of a set of decimals, exact on the common
/// power-of-ten grid. Zero entries are ignored; returns `None` if all
/// entries are zero (or the set is empty).
pub fn decimal_gcd(values: &[Decimal]) -> Option<Decimal> {
    let scale = values.iter().map(|v| v.scale).max()?;
    let mut g: i64 = 0;
    for v in values {
        let u = (v.units as i128 * 10i128.pow(scale - v.scale)).unsigned_abs() as u64;
        g = gcd_u64(g as u64, u) as i64;
    }
    if g == 0 {
        None
    } else {
        Some(Decimal::new(g, scale))
    }
}

fn gcd_u64(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_and_normalizes() {
        let d: Decimal = "6.67".parse().unwrap();
        assert_eq!(d, Decimal::new(667, 2));
        assert_eq!(d.to_f64(), 6.67);
        assert_eq!("0.50".parse::<Decimal>().unwrap(), Decimal::new(5, 1));
        assert_eq!("4".parse::<Decimal>().unwrap(), Decimal::new(4, 0));
        assert_eq!(format!("{}", Decimal::new(667, 2)), "6.67");
        assert_eq!(format!("{}", Decimal::new(405, 2)), "4.05");
        assert!("1e3".parse::<Decimal>().is_err());
        assert!("-1".parse::<Decimal>().is_err());
    }

    #[test]
    fn from_f64_round_trips_short_literals() {
        for s in ["0", "0.5", "1", "1.33", "6.67", "3.2"] {
            let via_str: Decimal = s.parse().unwrap();
            let via_f64 = Decimal::from_f64(s.parse::<f64>().unwrap()).unwrap();
            assert_eq!(via_str, via_f64);
        }
    }

    #[test]
    fn gcd_on_centibit_grid() {
        // {0.5, 1, 1.5, 2, 3, 4, 4.5, 5, 6, 6.67} -> 0.01
        let vals: Vec<Decimal> = ["0.5", "1", "1.5", "2", "3", "4", "4.5", "5", "6", "6.67"]
            .iter()
            .map(|s| s.parse().unwrap())
            .collect();
        assert_eq!(decimal_gcd(&vals).unwrap(), Decimal::new(1, 2));

        let ints: Vec<Decimal> = ["1", "2"].iter().map(|s| s.parse().unwrap()).collect();
        assert_eq!(decimal_gcd(&ints).unwrap(), Decimal::ONE);

        assert!(decimal_gcd(&[Decimal::ZERO]).is_none());
        assert!(decimal_gcd(&[]).is_none());
    }

    #[test]
    fn ordering_uses_common_grid() {
        let a: Decimal = "0.5".parse().unwrap();
        let b: Decimal = "0.45".parse().unwrap();
        assert!(a > b);
        assert_eq!("2.0".parse::<Decimal>().unwrap(), "2".parse().unwrap());
    }
}
