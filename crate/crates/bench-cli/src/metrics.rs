//! Metrics CSV: one row per iteration, reals with 9 significant digits.

use std::fmt::Write as _;

use thiserror::Error;
use tpil_core::orchestrator::MetricsRow;

pub const METRICS_HEADER: &str =
    "iter,mean_true_return,std_true_return,disc_class_acc,disc_domain_acc,disc_loss,policy_kl,policy_entropy";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CsvError {
    #[error("line 1: header does not match the metrics schema: '{0}'")]
    Header(String),
    #[error("line {line}: {detail}")]
    Row { line: usize, detail: String },
    #[error("empty file")]
    Empty,
}

/// Formats `v` like C's `%.9g`: 9 significant digits, trailing zeros
/// trimmed, scientific notation outside `1e-4 <= |v| < 1e9`.
pub fn sig9(v: f64) -> String {
    if v.is_nan() {
        return "nan".into();
    }
    if v.is_infinite() {
        return if v > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if v == 0.0 {
        return if v.is_sign_negative() { "-0".into() } else { "0".into() };
    }
    // `{:.8e}` does the correct decimal rounding; only the layout changes.
    let sci = format!("{v:.8e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    let negative = mantissa.starts_with('-');
    let digits: String = mantissa.chars().filter(char::is_ascii_digit).collect();
    let sign = if negative { "-" } else { "" };
    if !(-4..9).contains(&exp) {
        let (head, tail) = digits.split_at(1);
        let tail = tail.trim_end_matches('0');
        let dot = if tail.is_empty() { "" } else { "." };
        return format!("{sign}{head}{dot}{tail}e{}{:02}", if exp < 0 { '-' } else { '+' }, exp.abs());
    }
    let body = if exp >= 0 {
        let (int, frac) = digits.split_at(exp as usize + 1);
        let frac = frac.trim_end_matches('0');
        if frac.is_empty() {
            int.to_string()
        } else {
            format!("{int}.{frac}")
        }
    } else {
        let zeros = "0".repeat((-exp - 1) as usize);
        format!("0.{zeros}{}", digits.trim_end_matches('0'))
    };
    format!("{sign}{body}")
}

pub fn metrics_csv(rows: &[MetricsRow]) -> String {
    let mut out = String::from(METRICS_HEADER);
    out.push('\n');
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            r.iter,
            sig9(r.mean_true_return),
            sig9(r.std_true_return),
            sig9(r.disc_class_acc),
            sig9(r.disc_domain_acc),
            sig9(r.disc_loss),
            sig9(r.policy_kl),
            sig9(r.policy_entropy)
        );
    }
    out
}

pub fn parse_metrics_csv(text: &str) -> Result<Vec<MetricsRow>, CsvError> {
    let mut lines = text.lines();
    let header = lines.next().ok_or(CsvError::Empty)?;
    if header.trim() != METRICS_HEADER {
        return Err(CsvError::Header(header.to_string()));
    }
    let mut rows: Vec<MetricsRow> = Vec::new();
    for (i, line) in lines.enumerate() {
        let line_no = i + 2;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 8 {
            return Err(CsvError::Row { line: line_no, detail: format!("expected 8 columns, got {}", fields.len()) });
        }
        let iter: usize = fields[0]
            .trim()
            .parse()
            .map_err(|_| CsvError::Row { line: line_no, detail: format!("bad iteration '{}'", fields[0]) })?;
        if rows.last().is_some_and(|prev| prev.iter >= iter) {
            return Err(CsvError::Row { line: line_no, detail: "iterations must increase".into() });
        }
        let mut vals = [0.0; 7];
        for (v, f) in vals.iter_mut().zip(&fields[1..]) {
            *v = f.trim().parse().map_err(|_| CsvError::Row { line: line_no, detail: format!("bad number '{f}'") })?;
        }
        rows.push(MetricsRow {
            iter,
            mean_true_return: vals[0],
            std_true_return: vals[1],
            disc_class_acc: vals[2],
            disc_domain_acc: vals[3],
            disc_loss: vals[4],
            policy_kl: vals[5],
            policy_entropy: vals[6],
        });
    }
    Ok(rows)
}

/// Picks a named metrics column.
pub fn column(row: &MetricsRow, name: &str) -> Option<f64> {
    Some(match name {
        "mean_true_return" => row.mean_true_return,
        "std_true_return" => row.std_true_return,
        "disc_class_acc" => row.disc_class_acc,
        "disc_domain_acc" => row.disc_domain_acc,
        "disc_loss" => row.disc_loss,
        "policy_kl" => row.policy_kl,
        "policy_entropy" => row.policy_entropy,
        _ => return None,
    })
}
