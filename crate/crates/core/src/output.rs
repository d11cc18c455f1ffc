//! CSV rows with a fixed float format: 12 significant digits, shortest
//! form, in the style of C's `%.12g`.

use std::io::Write;

use crate::error::Result;
use crate::gates::GateRecord;
use crate::receiver::ReceiverState;
use crate::region::RegionSample;

pub const REGION_HEADER: &str = "scenario,alpha11,alpha12,alpha21,alpha22,phi11,phi12,phi21,phi22,lambda,beta1,beta2";
pub const RECEIVER_HEADER: &str = "lambda,beta1,beta2,policy";
pub const GATE_HEADER: &str = GateRecord::CSV_HEADER;

const DIGITS: i32 = 12;

pub fn fmt_g(v: f64) -> String {
    if v.is_nan() {
        return "nan".into();
    }
    if v.is_infinite() {
        return if v > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if v == 0.0 {
        return if v.is_sign_negative() { "-0".into() } else { "0".into() };
    }
    let sci = format!("{:.*e}", (DIGITS - 1) as usize, v);
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-4..DIGITS).contains(&exp) {
        let m = trim_zeros(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{m}e{sign}{:02}", exp.abs())
    } else {
        let decimals = (DIGITS - 1 - exp).max(0) as usize;
        trim_zeros(&format!("{v:.decimals$}")).to_string()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

fn join(values: &[f64]) -> String {
    values.iter().map(|v| fmt_g(*v)).collect::<Vec<_>>().join(",")
}

pub fn write_region_csv<W: Write>(w: &mut W, samples: &[RegionSample]) -> Result<()> {
    writeln!(w, "{REGION_HEADER}")?;
    for s in samples {
        writeln!(w, "{},{},{}", s.scenario, join(&s.angles), join(&[s.lambda, s.beta1, s.beta2]))?;
    }
    Ok(())
}

pub fn write_receiver_csv<W: Write>(w: &mut W, states: &[ReceiverState]) -> Result<()> {
    writeln!(w, "{RECEIVER_HEADER}")?;
    for s in states {
        writeln!(w, "{},{}", join(&[s.lambda, s.beta1, s.beta2]), s.policy.as_str())?;
    }
    Ok(())
}

pub fn write_gate_csv<W: Write>(w: &mut W, records: &[GateRecord]) -> Result<()> {
    writeln!(w, "{GATE_HEADER}")?;
    for r in records {
        let mut row = r.angles.to_vec();
        row.extend_from_slice(&r.outputs);
        row.push(r.residual);
        writeln!(w, "{}", join(&row))?;
    }
    Ok(())
}
