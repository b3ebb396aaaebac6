//! Report serialization.
//!
//! Reports are pretty-printed JSON. Every float is written with 17
//! significant digits so it parses back to the same `f64`; non-finite values
//! are written as the strings `"inf"`, `"-inf"` and `"nan"`.

use std::io;

use gibbsgap::{SensitivityReport, WorstCaseTilt};
use serde::Serialize;
use serde_json::ser::{Formatter, PrettyFormatter};

/// `f64` that serializes non-finite values as strings.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Real(pub f64);

impl Serialize for Real {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self.0 {
            v if v.is_finite() => s.serialize_f64(v),
            v if v.is_nan() => s.serialize_str("nan"),
            v if v > 0.0 => s.serialize_str("inf"),
            _ => s.serialize_str("-inf"),
        }
    }
}

pub fn reals(values: &[f64]) -> Vec<Real> {
    values.iter().copied().map(Real).collect()
}

/// `%.17g`-style rendering.
pub fn format_sig17(v: f64) -> String {
    if v == 0.0 {
        return if v.is_sign_negative() {
            "-0.0".into()
        } else {
            "0.0".into()
        };
    }
    let sci = format!("{v:.16e}");
    let (mantissa, exp) = sci.split_once('e').expect("scientific format has an exponent");
    let exp: i32 = exp.parse().expect("exponent is an integer");
    if (-5..17).contains(&exp) {
        let fixed = format!("{:.*}", (16 - exp) as usize, v);
        let trimmed = if fixed.contains('.') {
            fixed.trim_end_matches('0').trim_end_matches('.')
        } else {
            &fixed
        };
        if trimmed.contains('.') {
            trimmed.to_owned()
        } else {
            format!("{trimmed}.0")
        }
    } else {
        let m = mantissa.trim_end_matches('0').trim_end_matches('.');
        format!("{m}e{exp}")
    }
}

struct Sig17<'a>(PrettyFormatter<'a>);

impl Formatter for Sig17<'_> {
    fn write_f64<W: ?Sized + io::Write>(&mut self, w: &mut W, value: f64) -> io::Result<()> {
        w.write_all(format_sig17(value).as_bytes())
    }
    fn begin_array<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_array(w)
    }
    fn end_array<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array(w)
    }
    fn begin_array_value<W: ?Sized + io::Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_array_value(w, first)
    }
    fn end_array_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array_value(w)
    }
    fn begin_object<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object(w)
    }
    fn end_object<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object(w)
    }
    fn begin_object_key<W: ?Sized + io::Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_object_key(w, first)
    }
    fn begin_object_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object_value(w)
    }
    fn end_object_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object_value(w)
    }
}

pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut out = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut out, Sig17(PrettyFormatter::with_indent(b"  ")));
    value.serialize(&mut ser).expect("report types always serialize");
    let mut s = String::from_utf8(out).expect("serde_json emits UTF-8");
    s.push('\n');
    s
}

#[derive(Clone, Debug, Serialize)]
pub struct InputDigest {
    pub role: String,
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Serialize)]
pub struct Report<T: Serialize> {
    /// Arguments after the program name, without `--output`.
    pub command: Vec<String>,
    pub inputs: Vec<InputDigest>,
    pub result: T,
}

#[derive(Debug, Serialize)]
pub struct TiltOut {
    pub model: String,
    pub beta: Real,
    pub beta_infinite: bool,
    pub gamma: Real,
    pub log_partition: Real,
    pub reference: Vec<Real>,
    pub measure: Vec<Real>,
}

impl TiltOut {
    pub fn new(w: &WorstCaseTilt, model: &str) -> Self {
        Self {
            model: model.to_owned(),
            beta: Real(w.beta().value()),
            beta_infinite: w.beta().is_infinite(),
            gamma: Real(w.gamma()),
            log_partition: Real(w.log_partition()),
            reference: reals(w.base().weights()),
            measure: reals(w.measure().weights()),
        }
    }
}

#[derive(Debug, Serialize)]
pub struct TermOut {
    pub label: String,
    pub coefficient: Real,
    pub value: Real,
}

#[derive(Debug, Serialize)]
pub struct GroupingOut {
    pub worst_case: Real,
    pub reference: Real,
}

#[derive(Debug, Serialize)]
pub struct SensitivityOut {
    pub g_direct: Real,
    pub g_closed_form: Real,
    pub residual: Real,
    pub beta: Real,
    pub reference: Vec<Real>,
    pub terms: Vec<TermOut>,
    pub grouping: Option<GroupingOut>,
}

impl From<&SensitivityReport> for SensitivityOut {
    fn from(r: &SensitivityReport) -> Self {
        Self {
            g_direct: Real(r.g_direct),
            g_closed_form: Real(r.g_closed_form),
            residual: Real(r.residual),
            beta: Real(r.beta),
            reference: reals(r.reference.weights()),
            terms: r
                .terms
                .iter()
                .map(|t| TermOut {
                    label: t.label.clone(),
                    coefficient: Real(t.coefficient),
                    value: Real(t.value),
                })
                .collect(),
            grouping: r.grouping.map(|g| GroupingOut {
                worst_case: Real(g.worst_case),
                reference: Real(g.reference),
            }),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sig17_round_trips() {
        for v in [
            0.1,
            1.0 / 3.0,
            1e-300,
            6.02214076e23,
            -2.5,
            std::f64::consts::LN_2,
            123456789.0,
            1e-5,
            9.999999999999999e16,
        ] {
            let s = format_sig17(v);
            assert_eq!(s.parse::<f64>().unwrap(), v, "{s}");
        }
    }

    #[test]
    fn sig17_shapes() {
        assert_eq!(format_sig17(0.0), "0.0");
        assert_eq!(format_sig17(1.0), "1.0");
        assert_eq!(format_sig17(0.5), "0.5");
        assert_eq!(format_sig17(0.1), "0.10000000000000001");
        assert_eq!(format_sig17(1e-7), "9.9999999999999995e-8");
        assert_eq!(format_sig17(1e20), "1e20");
    }

    #[test]
    fn non_finite_as_strings() {
        let s = to_json(&vec![Real(f64::INFINITY), Real(1.5), Real(f64::NEG_INFINITY)]);
        assert_eq!(s, "[\n  \"inf\",\n  1.5,\n  \"-inf\"\n]\n");
    }
}
