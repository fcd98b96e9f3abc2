use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::Error;

/// Calendar month, written `YYYY-MM`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct MonthStamp {
    year: i32,
    month: u8,
}

impl MonthStamp {
    pub fn new(year: i32, month: u8) -> Result<Self, Error> {
        if !(1..=12).contains(&month) || !(0..=9999).contains(&year) {
            return Err(Error::InvalidDate(format!("{year}-{month}")));
        }
        Ok(Self { year, month })
    }

    pub fn year(self) -> i32 {
        self.year
    }

    pub fn month(self) -> u8 {
        self.month
    }

    pub fn next(self) -> Self {
        if self.month == 12 {
            Self {
                year: self.year + 1,
                month: 1,
            }
        } else {
            Self {
                year: self.year,
                month: self.month + 1,
            }
        }
    }

    /// Months elapsed since year 0.
    pub fn ordinal(self) -> i64 {
        self.year as i64 * 12 + (self.month as i64 - 1)
    }

    /// `n` consecutive months starting at `self`.
    pub fn range(self, n: usize) -> Vec<MonthStamp> {
        std::iter::successors(Some(self), |m| Some(m.next()))
            .take(n)
            .collect()
    }
}

impl FromStr for MonthStamp {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        let bad = || Error::InvalidDate(s.to_string());
        let b = s.as_bytes();
        if b.len() != 7 || b[4] != b'-' {
            return Err(bad());
        }
        let digits = |r: std::ops::Range<usize>| -> Option<u32> {
            b[r.clone()]
                .iter()
                .all(u8::is_ascii_digit)
                .then(|| s[r].parse().ok())
                .flatten()
        };
        let year = digits(0..4).ok_or_else(bad)?;
        let month = digits(5..7).ok_or_else(bad)?;
        MonthStamp::new(year as i32, month as u8).map_err(|_| bad())
    }
}

impl fmt::Display for MonthStamp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:04}-{:02}", self.year, self.month)
    }
}

impl Serialize for MonthStamp {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for MonthStamp {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_display() {
        let m: MonthStamp = "1986-01".parse().unwrap();
        assert_eq!((m.year(), m.month()), (1986, 1));
        assert_eq!(m.to_string(), "1986-01");
        for bad in [
            "1986-1",
            "1986-13",
            "1986-00",
            "86-01",
            "1986/01",
            "1986-01-01",
            "abcd-01",
        ] {
            assert!(bad.parse::<MonthStamp>().is_err(), "{bad}");
        }
    }

    #[test]
    fn month_arithmetic() {
        let dec: MonthStamp = "2016-12".parse().unwrap();
        assert_eq!(dec.next().to_string(), "2017-01");
        let r = "1986-01".parse::<MonthStamp>().unwrap().range(388);
        assert_eq!(r.last().unwrap().to_string(), "2018-04");
        assert_eq!(r[387].ordinal() - r[0].ordinal(), 387);
    }
}
