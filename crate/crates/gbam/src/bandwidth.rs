//! Integer bandwidth quantities in kbps.

use std::fmt;
use std::iter::Sum;
use std::ops::{Add, AddAssign, Sub, SubAssign};

/// A bandwidth amount in kbps (1 Mbps = 1000 kbps).
///
/// All accounting in this crate is integer kbps so that bounds, totals and
/// table values compare exactly. Arithmetic panics on overflow or underflow
/// instead of wrapping; use the `checked_*` / `saturating_sub` forms where an
/// out-of-range result is an expected input condition rather than a bug.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Bandwidth(u64);

impl Bandwidth {
    pub const ZERO: Bandwidth = Bandwidth(0);

    pub const fn from_kbps(kbps: u64) -> Self {
        Bandwidth(kbps)
    }

    pub const fn kbps(self) -> u64 {
        self.0
    }

    pub const fn is_zero(self) -> bool {
        self.0 == 0
    }

    pub fn checked_add(self, rhs: Bandwidth) -> Option<Bandwidth> {
        self.0.checked_add(rhs.0).map(Bandwidth)
    }

    pub fn checked_sub(self, rhs: Bandwidth) -> Option<Bandwidth> {
        self.0.checked_sub(rhs.0).map(Bandwidth)
    }

    pub fn saturating_sub(self, rhs: Bandwidth) -> Bandwidth {
        Bandwidth(self.0.saturating_sub(rhs.0))
    }

    /// Mbps rendering with two decimals and a decimal point, truncated:
    /// 248800 kbps becomes "248.80".
    pub fn mbps_string(self) -> String {
        format!("{}.{:02}", self.0 / 1000, (self.0 % 1000) / 10)
    }
}

impl fmt::Display for Bandwidth {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

impl Add for Bandwidth {
    type Output = Bandwidth;
    fn add(self, rhs: Bandwidth) -> Bandwidth {
        self.checked_add(rhs).expect("bandwidth addition overflow")
    }
}

impl AddAssign for Bandwidth {
    fn add_assign(&mut self, rhs: Bandwidth) {
        *self = *self + rhs;
    }
}

impl Sub for Bandwidth {
    type Output = Bandwidth;
    fn sub(self, rhs: Bandwidth) -> Bandwidth {
        self.checked_sub(rhs).expect("bandwidth subtraction underflow")
    }
}

impl SubAssign for Bandwidth {
    fn sub_assign(&mut self, rhs: Bandwidth) {
        *self = *self - rhs;
    }
}

impl Sum for Bandwidth {
    fn sum<I: Iterator<Item = Bandwidth>>(iter: I) -> Bandwidth {
        iter.fold(Bandwidth::ZERO, |acc, b| acc + b)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mbps_rendering_matches_table_values() {
        assert_eq!(Bandwidth::from_kbps(248_800).mbps_string(), "248.80");
        assert_eq!(Bandwidth::from_kbps(217_700).mbps_string(), "217.70");
        assert_eq!(Bandwidth::from_kbps(155_500).mbps_string(), "155.50");
        assert_eq!(Bandwidth::from_kbps(622_000).mbps_string(), "622.00");
        assert_eq!(Bandwidth::from_kbps(1).mbps_string(), "0.00");
        assert_eq!(Bandwidth::from_kbps(373_200).mbps_string(), "373.20");
    }

    #[test]
    fn checked_arithmetic() {
        let max = Bandwidth::from_kbps(u64::MAX);
        assert_eq!(max.checked_add(Bandwidth::from_kbps(1)), None);
        assert_eq!(Bandwidth::ZERO.checked_sub(Bandwidth::from_kbps(1)), None);
        assert_eq!(
            Bandwidth::from_kbps(5).saturating_sub(Bandwidth::from_kbps(9)),
            Bandwidth::ZERO
        );
    }

    #[test]
    #[should_panic(expected = "overflow")]
    fn add_overflow_panics() {
        let _ = Bandwidth::from_kbps(u64::MAX) + Bandwidth::from_kbps(1);
    }

    #[test]
    #[should_panic(expected = "underflow")]
    fn sub_underflow_panics() {
        let _ = Bandwidth::ZERO - Bandwidth::from_kbps(1);
    }
}
