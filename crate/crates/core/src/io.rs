//! Text formats: number formatting for CSV output and the reference-spectrum
//! CSV reader.

use std::io::Write;

use crate::error::{Error, Result};

/// Formats like C's `%.9g`: nine significant digits, trailing zeros dropped,
/// exponent notation outside `1e-4 <= |v| < 1e9`.
pub fn format_sig9(v: f64) -> String {
    if v == 0.0 {
        return if v.is_sign_negative() { "-0".into() } else { "0".into() };
    }
    if v.is_nan() {
        return "nan".into();
    }
    if v.is_infinite() {
        return if v > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let sci = format!("{v:.8e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-4..9).contains(&exp) {
        let decimals = (8 - exp).max(0) as usize;
        trim_zeros(&format!("{v:.decimals$}")).to_string()
    } else {
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{}e{sign}{:02}", trim_zeros(mantissa), exp.abs())
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// Writes a header row followed by numeric rows.
pub fn write_csv<W: Write>(mut w: W, header: &[&str], rows: impl IntoIterator<Item = Vec<f64>>) -> Result<()> {
    writeln!(w, "{}", header.join(","))?;
    for row in rows {
        let cells: Vec<String> = row.into_iter().map(format_sig9).collect();
        writeln!(w, "{}", cells.join(","))?;
    }
    Ok(())
}

/// Absorption spectrum read from a `wavelength_nm,alpha` CSV file.
#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceSpectrum {
    pub wavelengths_nm: Vec<f64>,
    pub alpha: Vec<f64>,
}

impl ReferenceSpectrum {
    /// Parses the CSV text. An optional non-numeric header row is skipped,
    /// as are blank lines and `#` comments. Wavelengths must be strictly
    /// increasing and absorption values finite and nonnegative.
    pub fn parse(text: &str) -> Result<Self> {
        let mut wavelengths_nm = Vec::new();
        let mut alpha = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split(',').map(str::trim).collect();
            if fields.len() != 2 {
                return Err(Error::format(format!(
                    "reference spectrum line {}: expected 2 columns, found {}",
                    lineno + 1,
                    fields.len()
                )));
            }
            let parsed = (fields[0].parse::<f64>(), fields[1].parse::<f64>());
            let (wl, a) = match parsed {
                (Ok(wl), Ok(a)) => (wl, a),
                _ if wavelengths_nm.is_empty() && lineno == 0 => continue,
                _ => {
                    return Err(Error::format(format!("reference spectrum line {}: non-numeric value", lineno + 1)))
                }
            };
            if !(wl.is_finite() && wl > 0.0) {
                return Err(Error::format(format!("reference spectrum line {}: invalid wavelength {wl}", lineno + 1)));
            }
            if !(a.is_finite() && a >= 0.0) {
                return Err(Error::format(format!(
                    "reference spectrum line {}: absorption must be finite and >= 0, got {a}",
                    lineno + 1
                )));
            }
            if wavelengths_nm.last().is_some_and(|&prev| wl <= prev) {
                return Err(Error::format(format!(
                    "reference spectrum line {}: wavelengths must be strictly increasing",
                    lineno + 1
                )));
            }
            wavelengths_nm.push(wl);
            alpha.push(a);
        }
        if wavelengths_nm.is_empty() {
            return Err(Error::format("reference spectrum has no data rows"));
        }
        Ok(ReferenceSpectrum { wavelengths_nm, alpha })
    }

    /// Linear interpolation at `wavelength_nm`; out-of-range requests fail.
    pub fn at(&self, wavelength_nm: f64) -> Result<f64> {
        let wl = &self.wavelengths_nm;
        let out_of_range =
            || Error::domain(format!("wavelength {wavelength_nm} nm outside reference range [{}, {}]", wl[0], wl[wl.len() - 1]));
        let hi = wl.partition_point(|&w| w < wavelength_nm);
        if hi == wl.len() {
            return Err(out_of_range());
        }
        if wl[hi] == wavelength_nm {
            return Ok(self.alpha[hi]);
        }
        if hi == 0 {
            return Err(out_of_range());
        }
        let t = (wavelength_nm - wl[hi - 1]) / (wl[hi] - wl[hi - 1]);
        Ok(self.alpha[hi - 1] + t * (self.alpha[hi] - self.alpha[hi - 1]))
    }

    pub fn resample(&self, wavelengths_nm: &[f64]) -> Result<Vec<f64>> {
        wavelengths_nm.iter().map(|&w| self.at(w)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn sig9_matches_printf() {
        let cases = [
            (1.0, "1"),
            (0.1, "0.1"),
            (1.0 / 3.0, "0.333333333"),
            (123456789.0, "123456789"),
            (1234567891.0, "1.23456789e+09"),
            (0.0001, "0.0001"),
            (0.00001234, "1.234e-05"),
            (-2.5, "-2.5"),
            (1e100, "1e+100"),
            (0.0, "0"),
            (999999999.5, "1e+09"),
        ];
        for (v, s) in cases {
            assert_eq!(format_sig9(v), s, "{v}");
        }
    }

    #[test]
    fn reference_csv_parsing() {
        let r = ReferenceSpectrum::parse("wavelength_nm,alpha\n700,1.0\n# note\n800, 3.0\n\n").unwrap();
        assert_eq!(r.wavelengths_nm, vec![700.0, 800.0]);
        assert!((r.at(750.0).unwrap() - 2.0).abs() < 1e-12);
        assert_eq!(r.at(800.0).unwrap(), 3.0);
        assert!(r.at(650.0).is_err());
        assert!(r.at(801.0).is_err());
        assert!(ReferenceSpectrum::parse("700,1\n690,1\n").is_err());
        assert!(ReferenceSpectrum::parse("700,-1\n").is_err());
        assert!(ReferenceSpectrum::parse("700,1\nx,y\n").is_err());
        assert!(ReferenceSpectrum::parse("wavelength_nm,alpha\n").is_err());
    }

    proptest! {
        #[test]
        fn sig9_round_trips_to_nine_digits(v in -1e12f64..1e12) {
            let back: f64 = format_sig9(v).parse().unwrap();
            let tol = v.abs() * 1e-8 + f64::MIN_POSITIVE;
            prop_assert!((back - v).abs() <= tol);
        }
    }
}
