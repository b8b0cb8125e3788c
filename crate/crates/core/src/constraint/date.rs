use std::fmt;

use chrono::{Datelike, Duration, NaiveDate, Weekday};

use super::ConstraintError;

/// First year representable with a two-digit `aa` field.
const PIVOT_YEAR: i32 = 2000;

/// A calendar day. Constraints are evaluated at day granularity.
///
/// The surface form is `jj/mm/aa`; two-digit years map onto 2000..=2099.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Date(NaiveDate);

impl Date {
    /// Builds a date from day, month and two-digit year fields.
    pub fn from_dmy(day: u32, month: u32, year: u32) -> Result<Self, ConstraintError> {
        if year > 99 {
            return Err(ConstraintError::InvalidDate {
                text: format!("{day:02}/{month:02}/{year}"),
            });
        }
        NaiveDate::from_ymd_opt(PIVOT_YEAR + year as i32, month, day)
            .map(Date)
            .ok_or_else(|| ConstraintError::InvalidDate {
                text: format!("{day:02}/{month:02}/{year:02}"),
            })
    }

    pub fn from_naive(date: NaiveDate) -> Result<Self, ConstraintError> {
        if (PIVOT_YEAR..PIVOT_YEAR + 100).contains(&date.year()) {
            Ok(Date(date))
        } else {
            Err(ConstraintError::InvalidDate { text: date.to_string() })
        }
    }

    pub fn naive(self) -> NaiveDate {
        self.0
    }

    pub fn weekday(self) -> Weekday {
        self.0.weekday()
    }

    /// The following day, or `None` past 31/12/99.
    pub fn succ(self) -> Option<Date> {
        self.0.succ_opt().and_then(|d| Date::from_naive(d).ok())
    }

    pub fn pred(self) -> Option<Date> {
        self.0.pred_opt().and_then(|d| Date::from_naive(d).ok())
    }

    pub fn add_days(self, days: i64) -> Option<Date> {
        self.0
            .checked_add_signed(Duration::days(days))
            .and_then(|d| Date::from_naive(d).ok())
    }

    /// Inclusive day count between `self` and `last` (zero if `last < self`).
    pub fn days_through(self, last: Date) -> u64 {
        let span = (last.0 - self.0).num_days();
        if span < 0 {
            0
        } else {
            span as u64 + 1
        }
    }

    /// Iterates every day from `self` through `last`, inclusive.
    pub fn iter_through(self, last: Date) -> impl Iterator<Item = Date> {
        let mut next = if self <= last { Some(self) } else { None };
        std::iter::from_fn(move || {
            let current = next?;
            next = current.succ().filter(|d| *d <= last);
            Some(current)
        })
    }
}

impl fmt::Display for Date {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{:02}/{:02}/{:02}",
            self.0.day(),
            self.0.month(),
            self.0.year() - PIVOT_YEAR
        )
    }
}

impl std::str::FromStr for Date {
    type Err = ConstraintError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let invalid = || ConstraintError::InvalidDate { text: s.to_string() };
        let mut parts = s.trim().split('/');
        let mut field = |max_len: usize| -> Result<u32, ConstraintError> {
            let part = parts.next().ok_or_else(invalid)?;
            if part.is_empty() || part.len() > max_len || !part.bytes().all(|b| b.is_ascii_digit()) {
                return Err(invalid());
            }
            part.parse().map_err(|_| invalid())
        };
        let day = field(2)?;
        let month = field(2)?;
        let year = field(2)?;
        if parts.next().is_some() {
            return Err(invalid());
        }
        Date::from_dmy(day, month, year).map_err(|_| invalid())
    }
}

/// A closed day interval `[begin-end]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Interval {
    begin: Date,
    end: Date,
}

impl Interval {
    pub fn new(begin: Date, end: Date) -> Result<Self, ConstraintError> {
        if begin > end {
            return Err(ConstraintError::IntervalOrder { begin, end });
        }
        Ok(Interval { begin, end })
    }

    pub fn begin(&self) -> Date {
        self.begin
    }

    pub fn end(&self) -> Date {
        self.end
    }

    pub fn contains(&self, day: Date) -> bool {
        self.begin <= day && day <= self.end
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}-{}]", self.begin, self.end)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_and_prints_two_digit_years() {
        let d: Date = "03/01/25".parse().unwrap();
        assert_eq!(d.naive(), NaiveDate::from_ymd_opt(2025, 1, 3).unwrap());
        assert_eq!(d.to_string(), "03/01/25");
        let short: Date = "3/1/25".parse().unwrap();
        assert_eq!(short, d);
    }

    #[test]
    fn rejects_non_calendar_dates() {
        assert!("31/02/25".parse::<Date>().is_err());
        assert!("29/02/23".parse::<Date>().is_err());
        assert!("29/02/24".parse::<Date>().is_ok());
        assert!("00/01/25".parse::<Date>().is_err());
        assert!("01/13/25".parse::<Date>().is_err());
        assert!("01/01/2025".parse::<Date>().is_err());
        assert!("01-01-25".parse::<Date>().is_err());
    }

    #[test]
    fn interval_requires_ordered_bounds() {
        let a = Date::from_dmy(1, 1, 25).unwrap();
        let b = Date::from_dmy(5, 1, 25).unwrap();
        assert!(Interval::new(a, b).is_ok());
        assert!(Interval::new(a, a).is_ok());
        assert!(matches!(
            Interval::new(b, a),
            Err(ConstraintError::IntervalOrder { .. })
        ));
    }

    #[test]
    fn day_iteration_is_inclusive() {
        let a = Date::from_dmy(30, 12, 24).unwrap();
        let b = Date::from_dmy(2, 1, 25).unwrap();
        let days: Vec<String> = a.iter_through(b).map(|d| d.to_string()).collect();
        assert_eq!(days, ["30/12/24", "31/12/24", "01/01/25", "02/01/25"]);
        assert_eq!(a.days_through(b), 4);
        assert_eq!(b.iter_through(a).count(), 0);
    }

    #[test]
    fn last_representable_day_has_no_successor() {
        let last = Date::from_dmy(31, 12, 99).unwrap();
        assert_eq!(last.succ(), None);
        assert_eq!(last.iter_through(last).count(), 1);
    }
}
