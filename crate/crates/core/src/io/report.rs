use std::fmt::Write as _;

use super::fixed;
use crate::eval::{MetricSeries, Report, Stats};

const DECIMALS: usize = 6;

pub const REPORT_FORMAT: &str = "evaluation-report";
pub const REPORT_VERSION: u32 = 1;

fn stats_row(out: &mut String, variant: &str, method: &str, metric: &str, s: &Stats) {
    let f = |v| fixed(v, DECIMALS);
    writeln!(
        out,
        "{variant}\t{method}\t{metric}\t{}\t{}\t{}\t{}\t{}",
        s.count,
        f(s.mean),
        f(s.sd),
        f(s.min),
        f(s.max)
    )
    .unwrap();
}

/// Per-condition statistics as a tab-separated table.
pub fn write_report(report: &Report) -> String {
    let mut out = String::new();
    writeln!(out, "# {REPORT_FORMAT} {REPORT_VERSION}").unwrap();
    writeln!(
        out,
        "# deltas shoulder_width={} leg_length={}",
        fixed(report.deltas.shoulder_width, DECIMALS),
        fixed(report.deltas.leg_length, DECIMALS)
    )
    .unwrap();
    for d in &report.dispersion {
        writeln!(out, "# knee_dispersion_deg {} {}", d.method, fixed(d.mean, DECIMALS)).unwrap();
    }
    out.push_str("variant\tmethod\tmetric\tn\tmean\tsd\tmin\tmax\n");
    for s in &report.summaries {
        let v = s.condition.variant.as_str();
        let m = s.condition.method.as_str();
        stats_row(&mut out, v, m, "Hand_Dist_cm", &s.hand);
        stats_row(&mut out, v, m, "Leg_Dist_cm", &s.leg);
        stats_row(&mut out, v, m, "Knee_Ang_deg", &s.knee);
    }
    out
}

fn arms_series(s: &MetricSeries) -> String {
    let mut out = String::from("t\thand_left_cm\thand_right_cm\n");
    for (t, h) in s.arm_times.iter().zip(&s.hand) {
        writeln!(out, "{}\t{}\t{}", fixed(*t, DECIMALS), fixed(h[0], DECIMALS), fixed(h[1], DECIMALS)).unwrap();
    }
    out
}

fn legs_series(s: &MetricSeries) -> String {
    let mut out = String::from("t\tleg_left_cm\tleg_right_cm\tknee_left_deg\tknee_right_deg\n");
    for ((t, l), k) in s.leg_times.iter().zip(&s.leg).zip(&s.knee) {
        writeln!(
            out,
            "{}\t{}\t{}\t{}\t{}",
            fixed(*t, DECIMALS),
            fixed(l[0], DECIMALS),
            fixed(l[1], DECIMALS),
            fixed(k[0], DECIMALS),
            fixed(k[1], DECIMALS)
        )
        .unwrap();
    }
    out
}

/// Per-frame series files as (file name, contents).
pub fn write_series(report: &Report) -> Vec<(String, String)> {
    let mut files = Vec::new();
    for s in &report.series {
        let stem = format!("{}_{}", s.condition.variant, s.condition.method);
        files.push((format!("{stem}_arms.tsv"), arms_series(s)));
        files.push((format!("{stem}_legs.tsv"), legs_series(s)));
    }
    if let Some(first) = report.series.first() {
        let mut out = String::from("t");
        for d in &report.dispersion {
            write!(out, "\tknee_sd_{}_deg", d.method).unwrap();
        }
        out.push('\n');
        for (k, t) in first.leg_times.iter().enumerate() {
            out.push_str(&fixed(*t, DECIMALS));
            for d in &report.dispersion {
                write!(out, "\t{}", fixed(d.per_frame[k], DECIMALS)).unwrap();
            }
            out.push('\n');
        }
        files.push(("knee_dispersion.tsv".to_string(), out));
    }
    files
}
