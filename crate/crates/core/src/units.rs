//! Unit-suffixed quantities for declarative input files.
//!
//! A quantity is written as a number followed by a unit, e.g. `"8 MHz"`,
//! `"628 ns"` or `"1.7 um"`. Frequencies given in Hz multiples are ordinary
//! frequencies and are converted to angular frequency (factor `2 pi`);
//! `rad/s` is taken as angular already. The written text is kept verbatim so
//! files round-trip exactly.

use std::fmt;
use std::marker::PhantomData;

use serde::de::{self, Visitor};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

const TWO_PI: f64 = 2.0 * std::f64::consts::PI;

pub trait Dimension {
    const NAME: &'static str;
    /// Accepted unit spellings with their SI factors.
    fn units() -> &'static [(&'static str, f64)];
}

macro_rules! dimension {
    ($name:ident, $label:expr, [$(($unit:expr, $factor:expr)),* $(,)?]) => {
        #[derive(Debug, Clone, Copy, PartialEq, Eq)]
        pub struct $name;
        impl Dimension for $name {
            const NAME: &'static str = $label;
            fn units() -> &'static [(&'static str, f64)] {
                const UNITS: &[(&str, f64)] = &[$(($unit, $factor)),*];
                UNITS
            }
        }
    };
}

dimension!(AngularFrequency, "angular frequency", [
    ("Hz", TWO_PI),
    ("kHz", TWO_PI * 1e3),
    ("MHz", TWO_PI * 1e6),
    ("GHz", TWO_PI * 1e9),
    ("rad/s", 1.0),
    ("1/s", 1.0),
]);
dimension!(Time, "time", [
    ("s", 1.0),
    ("ms", 1e-3),
    ("us", 1e-6),
    ("µs", 1e-6),
    ("μs", 1e-6),
    ("ns", 1e-9),
]);
dimension!(Length, "length", [
    ("m", 1.0),
    ("mm", 1e-3),
    ("um", 1e-6),
    ("µm", 1e-6),
    ("μm", 1e-6),
    ("nm", 1e-9),
]);
dimension!(Angle, "angle", [
    ("rad", 1.0),
    ("mrad", 1e-3),
    ("deg", std::f64::consts::PI / 180.0),
]);
dimension!(Density, "number density", [
    ("m^-3", 1.0),
    ("cm^-3", 1e6),
    ("um^-3", 1e18),
    ("µm^-3", 1e18),
]);
dimension!(Dispersion, "van der Waals coefficient", [
    ("rad/s m^6", 1.0),
    ("GHz um^6", TWO_PI * 1e9 * 1e-36),
    ("MHz um^6", TWO_PI * 1e6 * 1e-36),
    ("GHz µm^6", TWO_PI * 1e9 * 1e-36),
    ("MHz µm^6", TWO_PI * 1e6 * 1e-36),
]);

/// A parsed dimensioned number together with the text it was read from.
pub struct Quantity<D> {
    text: String,
    si: f64,
    _dimension: PhantomData<D>,
}

impl<D> Clone for Quantity<D> {
    fn clone(&self) -> Self {
        Self { text: self.text.clone(), si: self.si, _dimension: PhantomData }
    }
}

impl<D> PartialEq for Quantity<D> {
    fn eq(&self, other: &Self) -> bool {
        self.text == other.text
    }
}

impl<D: Dimension> fmt::Debug for Quantity<D> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Quantity<{}>({:?} = {:e})", D::NAME, self.text, self.si)
    }
}

impl<D> fmt::Display for Quantity<D> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.text)
    }
}

impl<D: Dimension> Quantity<D> {
    pub fn parse(text: &str) -> Result<Self> {
        let trimmed = text.trim();
        let split = trimmed
            .char_indices()
            .find(|&(i, c)| {
                !(c.is_ascii_digit()
                    || c == '.'
                    || ((c == '-' || c == '+') && (i == 0 || matches!(trimmed.as_bytes()[i - 1], b'e' | b'E')))
                    || ((c == 'e' || c == 'E') && i > 0))
            })
            .map_or(trimmed.len(), |(i, _)| i);
        let (number, unit) = trimmed.split_at(split);
        let unit = unit.trim();
        let value: f64 = number
            .parse()
            .map_err(|_| Error::Format(format!("cannot read a number from {text:?} ({})", D::NAME)))?;
        if !value.is_finite() {
            return Err(Error::Format(format!("{text:?} is not finite")));
        }
        if unit.is_empty() {
            return Err(Error::Format(format!(
                "{text:?} has no unit; {} needs one of {}",
                D::NAME,
                Self::unit_list()
            )));
        }
        let unit = unit.split_whitespace().collect::<Vec<_>>().join(" ");
        let factor = D::units()
            .iter()
            .find(|(u, _)| *u == unit)
            .map(|(_, f)| *f)
            .ok_or_else(|| Error::Format(format!("unknown {} unit {unit:?}; use one of {}", D::NAME, Self::unit_list())))?;
        Ok(Self { text: trimmed.to_string(), si: value * factor, _dimension: PhantomData })
    }

    /// Formats an SI value in the given unit.
    pub fn from_si(si: f64, unit: &str) -> Result<Self> {
        let factor = D::units()
            .iter()
            .find(|(u, _)| *u == unit)
            .map(|(_, f)| *f)
            .ok_or_else(|| Error::Format(format!("unknown {} unit {unit:?}", D::NAME)))?;
        Self::parse(&format!("{} {unit}", si / factor))
    }

    fn unit_list() -> String {
        D::units().iter().map(|(u, _)| *u).collect::<Vec<_>>().join(", ")
    }

    pub fn si(&self) -> f64 {
        self.si
    }

    pub fn text(&self) -> &str {
        &self.text
    }
}

impl<D> Serialize for Quantity<D> {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.text)
    }
}

struct QuantityVisitor<D>(PhantomData<D>);

impl<D: Dimension> Visitor<'_> for QuantityVisitor<D> {
    type Value = Quantity<D>;

    fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "a {} with an explicit unit, e.g. \"{} {}\"", D::NAME, 1, D::units()[0].0)
    }

    fn visit_str<E: de::Error>(self, v: &str) -> std::result::Result<Self::Value, E> {
        Quantity::parse(v).map_err(E::custom)
    }

    fn visit_i64<E: de::Error>(self, v: i64) -> std::result::Result<Self::Value, E> {
        Err(E::custom(format!("bare number {v} for a {}; write it with a unit as a string", D::NAME)))
    }

    fn visit_u64<E: de::Error>(self, v: u64) -> std::result::Result<Self::Value, E> {
        Err(E::custom(format!("bare number {v} for a {}; write it with a unit as a string", D::NAME)))
    }

    fn visit_f64<E: de::Error>(self, v: f64) -> std::result::Result<Self::Value, E> {
        Err(E::custom(format!("bare number {v} for a {}; write it with a unit as a string", D::NAME)))
    }
}

impl<'de, D: Dimension> Deserialize<'de> for Quantity<D> {
    fn deserialize<De: Deserializer<'de>>(deserializer: De) -> std::result::Result<Self, De::Error> {
        deserializer.deserialize_any(QuantityVisitor(PhantomData))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn frequencies_are_angular() {
        let q = Quantity::<AngularFrequency>::parse("8 MHz").unwrap();
        assert!((q.si() - TWO_PI * 8e6).abs() < 1e-6);
        assert_eq!(Quantity::<AngularFrequency>::parse("-3.5 rad/s").unwrap().si(), -3.5);
    }

    #[test]
    fn exponents_and_tight_spacing() {
        assert!((Quantity::<Time>::parse("6.28e2 ns").unwrap().si() - 628e-9).abs() < 1e-20);
        assert!((Quantity::<Time>::parse("100us").unwrap().si() - 1e-4).abs() < 1e-18);
        assert!((Quantity::<Length>::parse("1.7 µm").unwrap().si() - 1.7e-6).abs() < 1e-20);
        assert!((Quantity::<Density>::parse("2.3e11 cm^-3").unwrap().si() - 2.3e17).abs() < 1e3);
    }

    #[test]
    fn missing_or_wrong_unit_rejected() {
        assert!(Quantity::<Time>::parse("5").is_err());
        assert!(Quantity::<Time>::parse("5 MHz").is_err());
        assert!(Quantity::<Angle>::parse("abc rad").is_err());
    }

    #[test]
    fn text_is_kept_verbatim() {
        let q = Quantity::<Angle>::parse("90 deg").unwrap();
        assert_eq!(q.to_string(), "90 deg");
        assert!((q.si() - std::f64::consts::FRAC_PI_2).abs() < 1e-15);
    }
}
