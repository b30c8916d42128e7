//! SSIM class schemes: `K` equal bins over `[0, 1]` and the three-level
//! clinical scheme.
//!
//! Bins are half-open `[lo, hi)` except the top one, which is closed. Equal
//! bins are numbered 1..=K from low to high SSIM; clinical classes are
//! numbered 1 = best (`[0.85, 1.00]`) to 3 = worst (`[0.00, 0.60)`).

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const CLINICAL_EDGES: [f64; 4] = [0.0, 0.60, 0.85, 1.0];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClassScheme {
    EqualBins(usize),
    Clinical,
}

impl ClassScheme {
    pub fn equal(k: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::invalid("class count must be positive"));
        }
        Ok(ClassScheme::EqualBins(k))
    }

    pub fn arity(&self) -> usize {
        match self {
            ClassScheme::EqualBins(k) => *k,
            ClassScheme::Clinical => 3,
        }
    }

    /// Bin edges in increasing SSIM order, from 0.0 to 1.0.
    pub fn edges(&self) -> Vec<f64> {
        match self {
            ClassScheme::EqualBins(k) => (0..=*k).map(|i| i as f64 / *k as f64).collect(),
            ClassScheme::Clinical => CLINICAL_EDGES.to_vec(),
        }
    }

    /// Class label (1-based) of an SSIM value in `[0, 1]`.
    pub fn bin_of(&self, ssim: f64) -> Result<usize> {
        if !(0.0..=1.0).contains(&ssim) {
            return Err(Error::invalid(format!("SSIM {ssim} outside [0, 1]")));
        }
        let edges = self.edges();
        let k = edges.len() - 1;
        // interior edges <= ssim; comparing against the edges themselves
        // keeps boundary values exact
        let ascending = edges[1..k].partition_point(|&e| e <= ssim);
        Ok(match self {
            ClassScheme::EqualBins(_) => ascending + 1,
            ClassScheme::Clinical => k - ascending,
        })
    }

    /// SSIM interval of each class, in class order 1..=K.
    pub fn class_ranges(&self) -> Vec<ClassRange> {
        let edges = self.edges();
        let k = edges.len() - 1;
        let mut ranges: Vec<ClassRange> = (0..k)
            .map(|i| ClassRange {
                lo: edges[i],
                hi: edges[i + 1],
                closed_hi: i + 1 == k,
            })
            .collect();
        if *self == ClassScheme::Clinical {
            ranges.reverse();
        }
        ranges
    }
}

impl fmt::Display for ClassScheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ClassScheme::EqualBins(k) => write!(f, "{k}"),
            ClassScheme::Clinical => f.write_str("clinical"),
        }
    }
}

impl FromStr for ClassScheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s.eq_ignore_ascii_case("clinical") {
            return Ok(ClassScheme::Clinical);
        }
        let k: usize = s
            .parse()
            .map_err(|_| Error::invalid(format!("class scheme '{s}' is neither a count nor 'clinical'")))?;
        ClassScheme::equal(k)
    }
}

/// `[lo, hi)`, or `[lo, hi]` for the top bin.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassRange {
    pub lo: f64,
    pub hi: f64,
    pub closed_hi: bool,
}

impl ClassRange {
    pub fn contains(&self, v: f64) -> bool {
        v >= self.lo && (v < self.hi || (self.closed_hi && v == self.hi))
    }
}

impl fmt::Display for ClassRange {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let close = if self.closed_hi { ']' } else { ')' };
        write!(f, "[{:.2} - {:.2}{close}", self.lo, self.hi)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn examples() {
        assert_eq!(ClassScheme::EqualBins(3).bin_of(0.5).unwrap(), 2);
        for k in [3, 5, 10] {
            assert_eq!(ClassScheme::EqualBins(k).bin_of(1.0).unwrap(), k);
            assert_eq!(ClassScheme::EqualBins(k).bin_of(0.0).unwrap(), 1);
        }
        assert_eq!(ClassScheme::Clinical.bin_of(0.90).unwrap(), 1);
        assert_eq!(ClassScheme::Clinical.bin_of(0.85).unwrap(), 1);
        assert_eq!(ClassScheme::Clinical.bin_of(0.849).unwrap(), 2);
        assert_eq!(ClassScheme::Clinical.bin_of(0.60).unwrap(), 2);
        assert_eq!(ClassScheme::Clinical.bin_of(0.59).unwrap(), 3);
        assert_eq!(ClassScheme::Clinical.bin_of(0.0).unwrap(), 3);
        assert_eq!(ClassScheme::Clinical.bin_of(1.0).unwrap(), 1);
    }

    #[test]
    fn boundaries_are_half_open() {
        for k in [3usize, 5, 10] {
            let s = ClassScheme::EqualBins(k);
            for i in 1..k {
                let edge = i as f64 / k as f64;
                assert_eq!(s.bin_of(edge).unwrap(), i + 1, "k={k} edge {edge}");
                assert_eq!(s.bin_of(edge - 1e-12).unwrap(), i, "k={k} below {edge}");
            }
        }
    }

    #[test]
    fn out_of_range_rejected() {
        assert!(ClassScheme::EqualBins(3).bin_of(-0.01).is_err());
        assert!(ClassScheme::EqualBins(3).bin_of(1.01).is_err());
        assert!(ClassScheme::Clinical.bin_of(f64::NAN).is_err());
        assert!(ClassScheme::equal(0).is_err());
    }

    #[test]
    fn ranges() {
        let r5: Vec<String> = ClassScheme::EqualBins(5)
            .class_ranges()
            .iter()
            .map(|r| r.to_string())
            .collect();
        assert_eq!(
            r5,
            [
                "[0.00 - 0.20)",
                "[0.20 - 0.40)",
                "[0.40 - 0.60)",
                "[0.60 - 0.80)",
                "[0.80 - 1.00]"
            ]
        );
        let r10 = ClassScheme::EqualBins(10).class_ranges();
        assert_eq!((r10[0].lo, r10[0].hi, r10[0].closed_hi), (0.0, 0.1, false));
        let rc: Vec<String> = ClassScheme::Clinical
            .class_ranges()
            .iter()
            .map(|r| r.to_string())
            .collect();
        assert_eq!(rc, ["[0.85 - 1.00]", "[0.60 - 0.85)", "[0.00 - 0.60)"]);
        let r3: Vec<String> = ClassScheme::EqualBins(3)
            .class_ranges()
            .iter()
            .map(|r| r.to_string())
            .collect();
        assert_eq!(r3, ["[0.00 - 0.33)", "[0.33 - 0.67)", "[0.67 - 1.00]"]);
    }

    #[test]
    fn ranges_agree_with_bin_of() {
        for scheme in [
            ClassScheme::EqualBins(3),
            ClassScheme::EqualBins(7),
            ClassScheme::Clinical,
        ] {
            let ranges = scheme.class_ranges();
            for i in 0..=1000 {
                let v = i as f64 / 1000.0;
                let c = scheme.bin_of(v).unwrap();
                assert!(ranges[c - 1].contains(v));
                assert_eq!(ranges.iter().filter(|r| r.contains(v)).count(), 1);
            }
        }
    }

    #[test]
    fn parse() {
        assert_eq!("5".parse::<ClassScheme>().unwrap(), ClassScheme::EqualBins(5));
        assert_eq!("clinical".parse::<ClassScheme>().unwrap(), ClassScheme::Clinical);
        assert!("x".parse::<ClassScheme>().is_err());
        assert!("0".parse::<ClassScheme>().is_err());
    }
}
