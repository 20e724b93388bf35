//! Agreement between simulated and measured intercepted fractions.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationRecord {
    pub genotype: String,
    pub measured_fraction: f64,
    pub simulated_fraction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationReport {
    pub r_squared: f64,
    pub records: Vec<ValidationRecord>,
    /// `simulated - measured`, in record order.
    pub residuals: Vec<f64>,
}

/// Reads `genotype,measured_fraction,simulated_fraction` rows.
pub fn read_records(path: &Path) -> Result<Vec<ValidationRecord>> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_records_from(file)
}

pub fn read_records_from<R: std::io::Read>(r: R) -> Result<Vec<ValidationRecord>> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(r);
    let mut out = Vec::new();
    for row in rdr.deserialize() {
        out.push(row?);
    }
    Ok(out)
}

/// Coefficient of determination `1 - SS_res / SS_tot` of the simulated
/// values as predictions of the measured ones.
pub fn r_squared(records: &[ValidationRecord]) -> Result<f64> {
    if records.len() < 3 {
        return Err(Error::Validation(format!("need at least 3 records, got {}", records.len())));
    }
    for r in records {
        if !r.measured_fraction.is_finite() || !r.simulated_fraction.is_finite() {
            return Err(Error::Validation(format!("non-finite value for genotype {}", r.genotype)));
        }
        if !(0.0..=1.0).contains(&r.measured_fraction) || !(0.0..=1.0).contains(&r.simulated_fraction) {
            return Err(Error::Validation(format!("fraction outside [0, 1] for genotype {}", r.genotype)));
        }
    }
    let n = records.len() as f64;
    let mean = records.iter().map(|r| r.measured_fraction).sum::<f64>() / n;
    let ss_tot: f64 = records.iter().map(|r| (r.measured_fraction - mean).powi(2)).sum();
    if ss_tot == 0.0 {
        return Err(Error::Validation("measured values have zero variance".into()));
    }
    let ss_res: f64 = records
        .iter()
        .map(|r| (r.measured_fraction - r.simulated_fraction).powi(2))
        .sum();
    Ok(1.0 - ss_res / ss_tot)
}

pub fn validate(records: Vec<ValidationRecord>) -> Result<ValidationReport> {
    let r_squared = r_squared(&records)?;
    let residuals = records
        .iter()
        .map(|r| r.simulated_fraction - r.measured_fraction)
        .collect();
    Ok(ValidationReport {
        r_squared,
        records,
        residuals,
    })
}

/// Writes `genotype,measured_fraction,simulated_fraction,residual` rows.
pub fn write_report<W: std::io::Write>(w: W, report: &ValidationReport) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["genotype", "measured_fraction", "simulated_fraction", "residual"])?;
    for (r, res) in report.records.iter().zip(&report.residuals) {
        out.write_record([
            r.genotype.clone(),
            r.measured_fraction.to_string(),
            r.simulated_fraction.to_string(),
            res.to_string(),
        ])?;
    }
    out.flush().map_err(csv::Error::from)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(m: f64, s: f64) -> ValidationRecord {
        ValidationRecord {
            genotype: format!("g{m}"),
            measured_fraction: m,
            simulated_fraction: s,
        }
    }

    #[test]
    fn perfect_fit() {
        let recs: Vec<_> = (0..10).map(|i| rec(0.4 + 0.05 * i as f64, 0.4 + 0.05 * i as f64)).collect();
        assert_eq!(r_squared(&recs).unwrap(), 1.0);
    }

    #[test]
    fn mean_prediction_is_zero() {
        let m = [0.42, 0.6, 0.75, 0.96];
        let mean = m.iter().sum::<f64>() / 4.0;
        let recs: Vec<_> = m.iter().map(|&x| rec(x, mean)).collect();
        assert!(r_squared(&recs).unwrap().abs() < 1e-12);
    }

    #[test]
    fn errors() {
        assert!(r_squared(&[rec(0.5, 0.5), rec(0.6, 0.6)]).is_err());
        assert!(r_squared(&[rec(0.5, 0.1), rec(0.5, 0.6), rec(0.5, 0.7)]).is_err());
        assert!(r_squared(&[rec(0.5, f64::NAN), rec(0.4, 0.6), rec(0.3, 0.7)]).is_err());
    }

    #[test]
    fn parses_csv() {
        let text = "genotype,measured_fraction,simulated_fraction\nA, 0.5,0.55\nB,0.7,0.66\n";
        let recs = read_records_from(text.as_bytes()).unwrap();
        assert_eq!(recs.len(), 2);
        assert_eq!(recs[0].genotype, "A");
        assert_eq!(recs[1].simulated_fraction, 0.66);
        assert!(read_records_from("genotype,measured_fraction\nA,0.5\n".as_bytes()).is_err());
    }
}
