//! Twelve-significant-digit rendering shared by every output mode.

use qifs_core::matcore::ComplexMatrix;
use serde_json::{json, Map, Value};

pub const SIG_DIGITS: usize = 12;

/// C-style `%.12g`.
pub fn fmt_g(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return if x.is_sign_negative() { "-0".into() } else { "0".into() };
    }
    let sci = format!("{:.*e}", SIG_DIGITS - 1, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("integer exponent");
    if exp < -4 || exp >= SIG_DIGITS as i32 {
        let m = strip_zeros(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{m}e{sign}{:02}", exp.abs())
    } else {
        let decimals = (SIG_DIGITS as i32 - 1 - exp).max(0) as usize;
        strip_zeros(&format!("{:.*}", decimals, x)).to_string()
    }
}

fn strip_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// JSON number carrying the value rounded to twelve significant digits.
pub fn num(x: f64) -> Value {
    if !x.is_finite() {
        return Value::String(fmt_g(x));
    }
    let rounded: f64 = fmt_g(x).parse().expect("formatted float parses");
    json!(rounded)
}

pub fn nums(xs: &[f64]) -> Value {
    Value::Array(xs.iter().map(|x| num(*x)).collect())
}

pub fn real_rows(m: &qifs_core::nalgebra::DMatrix<f64>) -> Value {
    Value::Array(
        (0..m.nrows())
            .map(|i| Value::Array((0..m.ncols()).map(|j| num(m[(i, j)])).collect()))
            .collect(),
    )
}

/// Rows of `[re, im]` pairs, or plain numbers when the matrix is real.
pub fn complex_rows(m: &ComplexMatrix) -> Value {
    let real = m.iter().all(|z| z.im.abs() < 1e-15);
    Value::Array(
        (0..m.nrows())
            .map(|i| {
                Value::Array(
                    (0..m.ncols())
                        .map(|j| {
                            let z = m[(i, j)];
                            if real {
                                num(z.re)
                            } else {
                                Value::Array(vec![num(z.re), num(z.im)])
                            }
                        })
                        .collect(),
                )
            })
            .collect(),
    )
}

fn scalar(v: &Value) -> String {
    match v {
        Value::Number(n) if n.is_i64() || n.is_u64() => n.to_string(),
        Value::Number(n) => fmt_g(n.as_f64().unwrap_or(f64::NAN)),
        Value::String(s) => s.clone(),
        Value::Bool(b) => b.to_string(),
        Value::Null => "-".into(),
        Value::Array(items) => format!("[{}]", items.iter().map(scalar).collect::<Vec<_>>().join(", ")),
        Value::Object(o) => format!(
            "{{{}}}",
            o.iter().map(|(k, v)| format!("{k}: {}", scalar(v))).collect::<Vec<_>>().join(", ")
        ),
    }
}

fn is_matrix(v: &Value) -> bool {
    matches!(v, Value::Array(rows) if !rows.is_empty() && rows.iter().all(Value::is_array))
}

pub fn table_section(out: &mut String, title: &str, map: &Map<String, Value>) {
    if map.is_empty() {
        return;
    }
    out.push_str(title);
    out.push_str(":\n");
    let width = map.keys().map(|k| k.len()).max().unwrap_or(0);
    for (k, v) in map {
        if is_matrix(v) {
            out.push_str(&format!("  {k}\n"));
            for row in v.as_array().unwrap() {
                out.push_str(&format!("  {:<width$}  {}\n", "", scalar(row)));
            }
        } else {
            out.push_str(&format!("  {k:<width$}  {}\n", scalar(v)));
        }
    }
}

/// `key,value` lines; arrays are flattened with `;`.
pub fn csv_pairs(out: &mut String, section: &str, map: &Map<String, Value>) {
    for (k, v) in map {
        let text = scalar(v).replace(", ", ";");
        let text = if text.contains(',') { format!("\"{text}\"") } else { text };
        out.push_str(&format!("{section},{k},{text}\n"));
    }
}

pub fn csv_cell(v: &Value) -> String {
    let s = scalar(v);
    if s.contains(',') {
        format!("\"{s}\"")
    } else {
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matches_printf_g() {
        assert_eq!(fmt_g(4.561552812808830), "4.56155281281");
        assert_eq!(fmt_g(0.5), "0.5");
        assert_eq!(fmt_g(1.0), "1");
        assert_eq!(fmt_g(-2.5e-7), "-2.5e-07");
        assert_eq!(fmt_g(123456789012345.0), "1.23456789012e+14");
        assert_eq!(fmt_g(0.0001234), "0.0001234");
        assert_eq!(fmt_g(1.0 / 3.0), "0.333333333333");
        assert_eq!(fmt_g(999999999999.9), "1e+12");
        assert_eq!(fmt_g(f64::NAN), "nan");
    }

    #[test]
    fn json_numbers_are_rounded() {
        assert_eq!(num(1.0 / 3.0), json!(0.333333333333));
        assert_eq!(num(f64::INFINITY), json!("inf"));
    }
}
