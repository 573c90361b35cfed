//! Report rendering: JSON (full report), CSV (final table) and plain text.

use std::fmt::Write as _;

use gradefuse_core::RunReport;

use crate::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, clap::ValueEnum)]
pub enum ReportFormat {
    #[default]
    Json,
    Csv,
    Text,
}

pub fn render(report: &RunReport, format: ReportFormat) -> Result<String, Error> {
    match format {
        ReportFormat::Json => to_json(report),
        ReportFormat::Csv => to_csv(report),
        ReportFormat::Text => Ok(to_text(report)),
    }
}

pub fn to_json(report: &RunReport) -> Result<String, Error> {
    let mut s = serde_json::to_string_pretty(report)?;
    s.push('\n');
    Ok(s)
}

pub fn from_json(text: &str) -> Result<RunReport, Error> {
    Ok(serde_json::from_str(text)?)
}

/// One row per student: `class,student,fused,display,rank`.
pub fn to_csv(report: &RunReport) -> Result<String, Error> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let csv_err = |e: csv::Error| Error::Parse {
        line: 0,
        message: e.to_string(),
    };
    w.write_record(["class", "student", "fused", "display", "rank"])
        .map_err(csv_err)?;
    for r in &report.results {
        w.write_record([
            r.class.as_str(),
            r.student.as_str(),
            &r.fused.to_string(),
            &format!("{:.2}", r.display),
            &r.rank.to_string(),
        ])
        .map_err(csv_err)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io {
        path: "<report>".into(),
        source: e.into_error(),
    })?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

pub fn to_text(report: &RunReport) -> String {
    let mut out = String::new();
    let multi = report.classes > 1;
    let label = |class: &str, student: &str| {
        if multi {
            format!("{class}/{student}")
        } else {
            student.to_string()
        }
    };
    let _ = writeln!(
        out,
        "{} class(es), {} reviewer(s), {} student(s)",
        report.classes, report.reviewers, report.students
    );

    if !report.hypothesis_tests.is_empty() {
        let _ = writeln!(out, "\nclass comparisons");
        for t in &report.hypothesis_tests {
            let mean = t.comparison.mean_test.map_or("skipped".to_string(), |m| {
                format!("t={:.4} crit={:.4} reject={}", m.statistic, m.critical, m.reject)
            });
            let var = t.comparison.variance_test.map_or("skipped".to_string(), |v| {
                format!(
                    "F={:.4} in [{:.4}, {:.4}] reject={}",
                    v.statistic, v.lower, v.upper, v.reject
                )
            });
            let _ = writeln!(
                out,
                "  {} class {} vs {}: {mean}; {var}; case {}",
                t.reviewer,
                t.class,
                t.reference_class,
                t.applied_case.number()
            );
        }
    }

    let _ = writeln!(out, "\nrough flags: {}", report.rough_flags.len());
    if !report.decreases.is_empty() {
        let _ = writeln!(out, "decreases:");
        for d in &report.decreases {
            let _ = writeln!(
                out,
                "  ({}, {}): {}",
                label(d.class.as_str(), d.student.as_str()),
                d.reviewer,
                d.decrease.map_or("-".into(), |v| format!("{v:.4}"))
            );
        }
    }
    let _ = writeln!(out, "confirmed: {}", report.confirmed.len());
    for c in &report.confirmed {
        let _ = writeln!(
            out,
            "  ({}, {}) score {}",
            label(c.class.as_str(), c.student.as_str()),
            c.reviewer,
            c.score
        );
    }
    if let (Some(b), Some(a)) = (report.objective_before, report.objective_after) {
        let _ = writeln!(out, "objective: {b:.4} -> {a:.4}");
    }

    if !report.weights.is_empty() {
        let _ = writeln!(out, "\nweights        w1         w2         w");
        for w in &report.weights {
            let _ = writeln!(
                out,
                "  {:<10} {:.6}   {:.6}   {:.6}",
                w.reviewer.as_str(),
                w.w1,
                w.w2,
                w.w
            );
        }
    }

    if !report.results.is_empty() {
        if let (Some(r), Some((lo, hi))) = (&report.reference_reviewer, report.reference_range) {
            let _ = writeln!(out, "\ndisplay range from reviewer {r}: [{lo}, {hi}]");
        }
        let _ = writeln!(out, "rank  student        fused      display");
        let mut rows: Vec<_> = report.results.iter().collect();
        rows.sort_by_key(|r| r.rank);
        for r in rows {
            let _ = writeln!(
                out,
                "{:>4}  {:<12} {:.6}   {:.2}",
                r.rank,
                label(r.class.as_str(), r.student.as_str()),
                r.fused,
                r.display
            );
        }
    }

    if !report.warnings.is_empty() {
        let _ = writeln!(out, "\nwarnings:");
        for w in &report.warnings {
            let _ = writeln!(out, "  {w}");
        }
    }
    if let Some(timing) = &report.timing {
        let _ = writeln!(out, "\ntiming:");
        for t in timing {
            let _ = writeln!(out, "  {}: {:.3} ms", t.stage, t.millis);
        }
    }
    out
}
