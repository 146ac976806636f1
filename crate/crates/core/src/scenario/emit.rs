//! CSV and SVG output for trace records.

use std::fs;
use std::io::{self, Write};
use std::path::Path;

use crate::dynamics::TraceRecord;
use crate::error::{Error, Result};

/// Decimal rendering with 12 significant digits, `%.12g` style.
pub fn format_value(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let sci = format!("{x:.11e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("integer exponent");
    let digits: String = mantissa.chars().filter(char::is_ascii_digit).collect();
    let body = if (-5..12).contains(&exp) {
        if exp >= 0 {
            let (int, frac) = digits.split_at(exp as usize + 1);
            let frac = frac.trim_end_matches('0');
            if frac.is_empty() {
                int.to_string()
            } else {
                format!("{int}.{frac}")
            }
        } else {
            let frac = format!("{}{digits}", "0".repeat((-exp - 1) as usize));
            format!("0.{}", frac.trim_end_matches('0'))
        }
    } else {
        let (first, rest) = digits.split_at(1);
        let rest = rest.trim_end_matches('0');
        if rest.is_empty() {
            format!("{first}e{exp}")
        } else {
            format!("{first}.{rest}e{exp}")
        }
    };
    if x < 0.0 {
        format!("-{body}")
    } else {
        body
    }
}

pub fn write_csv(trace: &TraceRecord, mut w: impl Write) -> io::Result<()> {
    let mut header = String::from("step,time");
    for l in trace.labels() {
        header.push(',');
        header.push_str(l);
    }
    writeln!(w, "{header}")?;
    for row in trace.rows() {
        let mut line = format!("{},{}", row.step, format_value(row.time));
        for v in &row.values {
            line.push(',');
            line.push_str(&format_value(*v));
        }
        writeln!(w, "{line}")?;
    }
    Ok(())
}

pub fn emit_csv(trace: &TraceRecord, path: &Path) -> Result<()> {
    let mut buf = Vec::new();
    write_csv(trace, &mut buf).expect("writing to memory");
    fs::write(path, buf).map_err(|e| Error::io(format!("writing {}", path.display()), e))
}

const WIDTH: f64 = 800.0;
const HEIGHT: f64 = 600.0;
const LEFT: f64 = 90.0;
const RIGHT: f64 = 30.0;
const TOP: f64 = 60.0;
const BOTTOM: f64 = 60.0;

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

fn span(values: &[f64]) -> (f64, f64) {
    values
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)))
}

/// Maps `v` from `[lo, hi]` onto `[a, b]`; a degenerate range lands midway.
fn scale(v: f64, lo: f64, hi: f64, a: f64, b: f64) -> f64 {
    if hi > lo {
        a + (v - lo) / (hi - lo) * (b - a)
    } else {
        (a + b) / 2.0
    }
}

pub fn write_svg(trace: &TraceRecord, metric: &str, mut w: impl Write) -> Result<()> {
    let values = trace
        .series(metric)
        .ok_or_else(|| Error::InvalidParameter(format!("trace has no metric {metric:?}")))?;
    let times = trace.times();
    if values.is_empty() {
        return Err(Error::InvalidParameter("cannot plot an empty trace".into()));
    }
    let (t0, t1) = span(&times);
    let (y0, y1) = span(&values);
    let (x_left, x_right) = (LEFT, WIDTH - RIGHT);
    let (y_bottom, y_top) = (HEIGHT - BOTTOM, TOP);

    let points: Vec<String> = times
        .iter()
        .zip(&values)
        .map(|(&t, &v)| {
            format!(
                "{:.2},{:.2}",
                scale(t, t0, t1, x_left, x_right),
                scale(v, y0, y1, y_bottom, y_top)
            )
        })
        .collect();

    let title = escape(metric);
    let mut s = String::new();
    s.push_str("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
    s.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" viewBox=\"0 0 {WIDTH} {HEIGHT}\">\n"
    ));
    s.push_str(&format!("<title>{title}</title>\n"));
    s.push_str(&format!(
        "<text x=\"{}\" y=\"30\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"18\">{title}</text>\n",
        WIDTH / 2.0
    ));
    s.push_str(&format!(
        "<line x1=\"{x_left}\" y1=\"{y_bottom}\" x2=\"{x_right}\" y2=\"{y_bottom}\" stroke=\"black\"/>\n"
    ));
    s.push_str(&format!(
        "<line x1=\"{x_left}\" y1=\"{y_bottom}\" x2=\"{x_left}\" y2=\"{y_top}\" stroke=\"black\"/>\n"
    ));
    let label = |x: f64, y: f64, anchor: &str, text: String| {
        format!(
            "<text x=\"{x}\" y=\"{y}\" text-anchor=\"{anchor}\" font-family=\"sans-serif\" font-size=\"12\">{text}</text>\n"
        )
    };
    s.push_str(&label(x_left, y_bottom + 20.0, "start", format_value(t0)));
    s.push_str(&label(x_right, y_bottom + 20.0, "end", format_value(t1)));
    s.push_str(&label(x_left - 6.0, y_bottom, "end", format_value(y0)));
    s.push_str(&label(x_left - 6.0, y_top + 4.0, "end", format_value(y1)));
    s.push_str(&format!(
        "<polyline fill=\"none\" stroke=\"steelblue\" stroke-width=\"1.5\" points=\"{}\"/>\n",
        points.join(" ")
    ));
    s.push_str("</svg>\n");
    w.write_all(s.as_bytes())
        .map_err(|e| Error::io("writing SVG", e))
}

pub fn emit_svg(trace: &TraceRecord, metric: &str, path: &Path) -> Result<()> {
    let mut buf = Vec::new();
    write_svg(trace, metric, &mut buf)?;
    fs::write(path, buf).map_err(|e| Error::io(format!("writing {}", path.display()), e))
}
