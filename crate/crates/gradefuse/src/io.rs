//! Delimited-text grade tables.
//!
//! Long format, one row per cell:
//!
//! ```text
//! class,student,reviewer,score
//! 1,s07,r2,86.5
//! ```
//!
//! Wide format, one row per student and one column per reviewer:
//!
//! ```text
//! class,student,r1,r2,r3
//! 1,s07,80,86.5,79
//! ```

use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use gradefuse_core::{GradeTable, GradeTableBuilder, ModelError, ReviewerId, Violation};

use crate::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum InputFormat {
    /// Pick long or wide from the header.
    Auto,
    Long,
    Wide,
}

const LONG_HEADER: [&str; 4] = ["class", "student", "reviewer", "score"];

fn parse_error(line: u64, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        message: message.into(),
    }
}

fn line_of(record: &csv::StringRecord) -> u64 {
    record.position().map_or(0, |p| p.line())
}

fn parse_score(field: &str, line: u64) -> Result<f64, Error> {
    let score: f64 = field
        .parse()
        .map_err(|_| parse_error(line, format!("score {field:?} is not a number")))?;
    if !score.is_finite() {
        return Err(parse_error(line, format!("score {field:?} is not finite")));
    }
    Ok(score)
}

fn csv_error(e: csv::Error) -> Error {
    let line = e.position().map_or(0, |p| p.line());
    parse_error(line, e.to_string())
}

fn insert(
    builder: &mut GradeTableBuilder,
    line: u64,
    class: &str,
    student: &str,
    reviewer: &str,
    score: f64,
) -> Result<(), Error> {
    builder
        .insert(class.into(), student.into(), reviewer.into(), score)
        .map_err(|e| match e {
            ModelError::DuplicateCell { .. } => parse_error(line, e.to_string()),
            other => Error::Model(other),
        })
}

/// Parses a table without validating it.
pub fn parse(reader: impl Read, format: InputFormat) -> Result<GradeTable, Error> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(reader);
    let header: Vec<String> = rdr
        .headers()
        .map_err(csv_error)?
        .iter()
        .map(str::to_lowercase)
        .collect();
    let format = match format {
        InputFormat::Auto if header == LONG_HEADER => InputFormat::Long,
        InputFormat::Auto => InputFormat::Wide,
        f => f,
    };
    let mut builder = GradeTableBuilder::new();
    match format {
        InputFormat::Long => {
            let col = |name: &str| {
                header
                    .iter()
                    .position(|h| h == name)
                    .ok_or_else(|| parse_error(1, format!("header lacks column {name:?}")))
            };
            let idx = [col("class")?, col("student")?, col("reviewer")?, col("score")?];
            for record in rdr.records() {
                let record = record.map_err(csv_error)?;
                let line = line_of(&record);
                let field = |i: usize| record.get(i).unwrap_or("");
                let score = parse_score(field(idx[3]), line)?;
                insert(&mut builder, line, field(idx[0]), field(idx[1]), field(idx[2]), score)?;
            }
        }
        InputFormat::Wide => {
            if header.len() < 3 || header[0] != "class" || header[1] != "student" {
                return Err(parse_error(
                    1,
                    "wide header must be class,student,<reviewer>...",
                ));
            }
            // keep the reviewer labels as written
            let reviewers: Vec<String> = rdr
                .headers()
                .map_err(csv_error)?
                .iter()
                .skip(2)
                .map(String::from)
                .collect();
            for r in &reviewers {
                builder.declare_reviewer(ReviewerId::from(r.as_str()));
            }
            for record in rdr.records() {
                let record = record.map_err(csv_error)?;
                let line = line_of(&record);
                let class = record.get(0).unwrap_or("");
                let student = record.get(1).unwrap_or("");
                for (i, reviewer) in reviewers.iter().enumerate() {
                    let field = record.get(i + 2).unwrap_or("");
                    if field.is_empty() {
                        builder.declare_student(class.into(), student.into());
                        continue;
                    }
                    let score = parse_score(field, line)?;
                    insert(&mut builder, line, class, student, reviewer, score)?;
                }
            }
        }
        InputFormat::Auto => unreachable!(),
    }
    builder.build().map_err(Error::Model)
}

/// Parses and validates a table from a file.
pub fn ingest(path: &Path, format: InputFormat) -> Result<GradeTable, Error> {
    let file = File::open(path).map_err(|e| Error::Io {
        path: path.display().to_string(),
        source: e,
    })?;
    let table = parse(file, format)?;
    check(&table)?;
    Ok(table)
}

pub fn check(table: &GradeTable) -> Result<(), Error> {
    let violations: Vec<Violation> = table.validate();
    if violations.is_empty() {
        Ok(())
    } else {
        Err(Error::Validation(violations))
    }
}

/// Writes every present cell in long format, ordered by class, student,
/// reviewer. Scores use the shortest representation that parses back to the
/// same value.
pub fn write_long(table: &GradeTable, writer: impl Write) -> Result<(), Error> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(LONG_HEADER).map_err(csv_error)?;
    for s in table.student_refs() {
        for (reviewer, rid) in table.reviewers().iter().enumerate() {
            let at = gradefuse_core::CellRef {
                class: s.class,
                reviewer,
                student: s.student,
            };
            if let Some(cell) = table.cell(at) {
                w.write_record([
                    table.class_id(s.class).as_str(),
                    table.student_id(s).as_str(),
                    rid.as_str(),
                    &cell.score.to_string(),
                ])
                .map_err(csv_error)?;
            }
        }
    }
    w.flush().map_err(|e| Error::Io {
        path: "<output>".into(),
        source: e,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use gradefuse_core::CellRef;

    #[test]
    fn long_row() {
        let t = parse(
            "class,student,reviewer,score\n1,s07,r2,86.5\n".as_bytes(),
            InputFormat::Auto,
        )
        .unwrap();
        let at = t.locate(&"1".into(), &"r2".into(), &"s07".into()).unwrap();
        assert_eq!(t.cell(at).unwrap().score, 86.5);
    }

    #[test]
    fn duplicate_row_names_its_line() {
        let err = parse(
            "class,student,reviewer,score\n1,a,r,1\n1,b,r,2\n1,a,r,3\n".as_bytes(),
            InputFormat::Long,
        )
        .unwrap_err();
        match err {
            Error::Parse { line, message } => {
                assert_eq!(line, 4);
                assert!(message.contains("duplicate"));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn bad_score_names_its_line() {
        let err = parse(
            "class,student,reviewer,score\n1,a,r,1\n1,b,r,abc\n".as_bytes(),
            InputFormat::Long,
        )
        .unwrap_err();
        assert!(matches!(err, Error::Parse { line: 3, .. }));
    }

    #[test]
    fn wide_format() {
        let t = parse(
            "class,student,x,y\n1,a,80,81\n1,b,70,\n2,a,60,61\n".as_bytes(),
            InputFormat::Auto,
        )
        .unwrap();
        assert_eq!(t.classes().len(), 2);
        assert_eq!(t.reviewers().len(), 2);
        let missing = t.validate();
        assert_eq!(missing.len(), 1);
        let at = CellRef {
            class: 1,
            reviewer: 1,
            student: 0,
        };
        assert_eq!(t.cell(at).unwrap().score, 61.0);
    }

    #[test]
    fn export_then_ingest_is_identity() {
        let src = "class,student,reviewer,score\n2,b,r9,70.25\n2,a,r9,0\n1,z,r1,99.99\n1,z,r9,1.5\n2,a,r1,100\n2,b,r1,33.3\n";
        let t = parse(src.as_bytes(), InputFormat::Long).unwrap();
        let mut out = Vec::new();
        write_long(&t, &mut out).unwrap();
        let back = parse(out.as_slice(), InputFormat::Long).unwrap();
        assert_eq!(t, back);
    }
}
