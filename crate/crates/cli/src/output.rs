//! Number formatting and the curve CSV.

use std::io::Write;

use serde::Serialize;

use crate::CliError;

pub const CSV_HEADER: [&str; 14] = [
    "rate",
    "dual",
    "regime",
    "regime_label",
    "Er",
    "Esp",
    "Eex",
    "primal",
    "sigma",
    "tau",
    "lambda",
    "theta",
    "zeta",
    "warnings",
];

/// 12 significant digits in scientific notation, `inf`/`-inf`/`nan` for
/// non-finite values and no negative zero. Independent of locale.
pub fn fmt_num(v: f64) -> String {
    if v.is_nan() {
        "nan".into()
    } else if v == f64::INFINITY {
        "inf".into()
    } else if v == f64::NEG_INFINITY {
        "-inf".into()
    } else if v == 0.0 {
        format!("{:.11e}", 0.0)
    } else {
        format!("{v:.11e}")
    }
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(fmt_num).unwrap_or_default()
}

/// One rate of a curve sweep.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CurveRow {
    pub rate: f64,
    pub dual_value: f64,
    /// Closed-form three-regime value; only for matched deterministic decoding.
    pub regime_value: Option<f64>,
    pub regime_label: String,
    pub e_r: f64,
    pub e_sp: f64,
    pub e_ex: f64,
    pub primal_value: Option<f64>,
    pub sigma: f64,
    pub tau: f64,
    pub lambda: f64,
    pub theta: f64,
    pub zeta: f64,
    pub warnings: Vec<String>,
}

impl CurveRow {
    /// Rates and exponents divided by `ln 2`; the dual parameters are
    /// unitless and stay put.
    pub fn in_bits(&self) -> CurveRow {
        let b = |v: f64| v / std::f64::consts::LN_2;
        CurveRow {
            rate: b(self.rate),
            dual_value: b(self.dual_value),
            regime_value: self.regime_value.map(b),
            e_r: b(self.e_r),
            e_sp: b(self.e_sp),
            e_ex: b(self.e_ex),
            primal_value: self.primal_value.map(b),
            ..self.clone()
        }
    }

    fn record(&self) -> [String; 14] {
        [
            fmt_num(self.rate),
            fmt_num(self.dual_value),
            fmt_opt(self.regime_value),
            self.regime_label.clone(),
            fmt_num(self.e_r),
            fmt_num(self.e_sp),
            fmt_num(self.e_ex),
            fmt_opt(self.primal_value),
            fmt_num(self.sigma),
            fmt_num(self.tau),
            fmt_num(self.lambda),
            fmt_num(self.theta),
            fmt_num(self.zeta),
            self.warnings.join("; "),
        ]
    }
}

/// Header row, then one row per rate.
pub fn write_csv_to<W: Write>(rows: &[CurveRow], out: W) -> Result<(), CliError> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
    w.write_record(CSV_HEADER)?;
    for r in rows {
        w.write_record(r.record())?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_csv(rows: &[CurveRow], path: &std::path::Path) -> Result<(), CliError> {
    let f = std::fs::File::create(path)?;
    write_csv_to(rows, std::io::BufWriter::new(f))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row() -> CurveRow {
        CurveRow {
            rate: 0.1,
            dual_value: 0.117_982_4,
            regime_value: Some(0.1179),
            regime_label: "moderate".into(),
            e_r: 0.1,
            e_sp: f64::INFINITY,
            e_ex: -0.0,
            primal_value: None,
            sigma: 0.5,
            tau: 0.0,
            lambda: 0.0,
            theta: 0.0,
            zeta: 1.0,
            warnings: vec!["a, b".into(), "c".into()],
        }
    }

    #[test]
    fn number_format() {
        assert_eq!(fmt_num(0.2231435513142098), "2.23143551314e-1");
        assert_eq!(fmt_num(-0.0), "0.00000000000e0");
        assert_eq!(fmt_num(f64::INFINITY), "inf");
        assert_eq!(fmt_num(f64::NEG_INFINITY), "-inf");
    }

    #[test]
    fn empty_rows_give_header_only() {
        let mut buf = Vec::new();
        write_csv_to(&[], &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), CSV_HEADER.join(",") + "\n");
    }

    #[test]
    fn row_round_trips_through_reader() {
        let mut buf = Vec::new();
        write_csv_to(&[row()], &mut buf).unwrap();
        let mut rd = csv::Reader::from_reader(buf.as_slice());
        let rec = rd.records().next().unwrap().unwrap();
        assert_eq!(rec.len(), 14);
        assert_eq!(rec[0].parse::<f64>().unwrap(), 0.1);
        assert_eq!(rec[2].parse::<f64>().unwrap(), 0.1179);
        assert_eq!(&rec[3], "moderate");
        assert_eq!(&rec[5], "inf");
        assert_eq!(&rec[7], "");
        assert_eq!(&rec[13], "a, b; c");
    }

    #[test]
    fn bits_conversion_leaves_parameters() {
        let r = row().in_bits();
        assert!((r.rate - 0.1 / std::f64::consts::LN_2).abs() < 1e-15);
        assert_eq!(r.zeta, 1.0);
    }
}
