//! Grade tables, cell status and per-reviewer rankings.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};

/// Lowest admissible score on the percentage scale.
pub const SCORE_MIN: f64 = 0.0;
/// Highest admissible score on the percentage scale.
pub const SCORE_MAX: f64 = 100.0;

macro_rules! string_id {
    ($(#[$meta:meta])* $name:ident) => {
        $(#[$meta])*
        #[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
        #[serde(transparent)]
        pub struct $name(pub String);

        impl $name {
            pub fn as_str(&self) -> &str {
                &self.0
            }
        }

        impl From<&str> for $name {
            fn from(s: &str) -> Self {
                Self(String::from(s))
            }
        }

        impl From<String> for $name {
            fn from(s: String) -> Self {
                Self(s)
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(&self.0)
            }
        }
    };
}

string_id!(
    /// Label of a class (a group of students graded together).
    ClassId
);
string_id!(
    /// Label of a reviewer.
    ReviewerId
);
string_id!(
    /// Label of a student, unique within its class.
    StudentId
);

/// Dense position of a student: class index, then index within the class.
///
/// Students are kept sorted by [`StudentId`] inside each class, so the derived
/// ordering is (class input order, student id ascending).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct StudentRef {
    pub class: usize,
    pub student: usize,
}

/// Dense position of one grade cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct CellRef {
    pub class: usize,
    pub reviewer: usize,
    pub student: usize,
}

impl CellRef {
    pub fn student_ref(&self) -> StudentRef {
        StudentRef {
            class: self.class,
            student: self.student,
        }
    }
}

/// Screening stage that produced a flag or a status change.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stage {
    Rough,
    Greedy,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Retained,
    Screened(Stage),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub score: f64,
    pub status: Status,
}

impl Cell {
    pub fn is_retained(&self) -> bool {
        self.status == Status::Retained
    }
}

/// A problem found by [`GradeTable::validate`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Violation {
    EmptyDimension {
        dimension: String,
    },
    MissingCell {
        class: ClassId,
        reviewer: ReviewerId,
        student: StudentId,
    },
    ScoreOutOfRange {
        class: ClassId,
        reviewer: ReviewerId,
        student: StudentId,
        score: f64,
    },
    ExcessPrecision {
        class: ClassId,
        reviewer: ReviewerId,
        student: StudentId,
        score: f64,
    },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::EmptyDimension { dimension } => write!(f, "no {dimension} declared"),
            Violation::MissingCell {
                class,
                reviewer,
                student,
            } => write!(f, "missing cell (class {class}, reviewer {reviewer}, student {student})"),
            Violation::ScoreOutOfRange {
                class,
                reviewer,
                student,
                score,
            } => write!(
                f,
                "score {score} outside [0, 100] at (class {class}, reviewer {reviewer}, student {student})"
            ),
            Violation::ExcessPrecision {
                class,
                reviewer,
                student,
                score,
            } => write!(
                f,
                "score {score} has more than 2 decimals at (class {class}, reviewer {reviewer}, student {student})"
            ),
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ModelError {
    #[error("unknown class {0}")]
    UnknownClass(ClassId),
    #[error("unknown reviewer {0}")]
    UnknownReviewer(ReviewerId),
    #[error("unknown student {student} in class {class}")]
    UnknownStudent { class: ClassId, student: StudentId },
    #[error("duplicate {what} {id}")]
    DuplicateId { what: &'static str, id: String },
    #[error("duplicate cell (class {class}, reviewer {reviewer}, student {student})")]
    DuplicateCell {
        class: ClassId,
        reviewer: ReviewerId,
        student: StudentId,
    },
    #[error("cell {0:?} is outside the table")]
    OutOfBounds(CellRef),
    #[error("cell {0:?} is missing")]
    MissingCell(CellRef),
    #[error("cell {0:?} is already screened")]
    AlreadyScreened(CellRef),
}

/// Sparse-at-ingestion grade table `(class, reviewer, student) -> Cell`.
///
/// Classes and reviewers keep their declaration order; students are sorted by
/// id within each class.
#[derive(Debug, Clone, PartialEq)]
pub struct GradeTable {
    classes: Vec<ClassId>,
    reviewers: Vec<ReviewerId>,
    students: Vec<Vec<StudentId>>,
    // [class][reviewer][student]
    cells: Vec<Vec<Vec<Option<Cell>>>>,
}

fn check_unique<T: Ord + fmt::Display>(what: &'static str, ids: &[T]) -> Result<(), ModelError> {
    let mut seen = BTreeMap::new();
    for id in ids {
        if seen.insert(id, ()).is_some() {
            return Err(ModelError::DuplicateId {
                what,
                id: alloc::format!("{id}"),
            });
        }
    }
    Ok(())
}

impl GradeTable {
    /// Creates an empty table with the given dimensions. Every cell starts
    /// missing.
    pub fn new(
        classes: Vec<ClassId>,
        reviewers: Vec<ReviewerId>,
        mut students: Vec<Vec<StudentId>>,
    ) -> Result<Self, ModelError> {
        check_unique("class", &classes)?;
        check_unique("reviewer", &reviewers)?;
        students.resize(classes.len(), Vec::new());
        for list in &mut students {
            check_unique("student", list)?;
            list.sort();
        }
        let cells = students
            .iter()
            .map(|list| {
                (0..reviewers.len())
                    .map(|_| alloc::vec![None; list.len()])
                    .collect()
            })
            .collect();
        Ok(Self {
            classes,
            reviewers,
            students,
            cells,
        })
    }

    /// Builds a complete single-class table from reviewer-major score rows.
    pub fn from_scores(
        class: &str,
        reviewers: &[&str],
        students: &[&str],
        scores: &[&[f64]],
    ) -> Result<Self, ModelError> {
        let mut builder = GradeTableBuilder::new();
        for (r, row) in reviewers.iter().zip(scores) {
            for (s, &score) in students.iter().zip(row.iter()) {
                builder.insert(ClassId::from(class), StudentId::from(*s), ReviewerId::from(*r), score)?;
            }
        }
        builder.build()
    }

    pub fn classes(&self) -> &[ClassId] {
        &self.classes
    }

    pub fn reviewers(&self) -> &[ReviewerId] {
        &self.reviewers
    }

    pub fn students(&self, class: usize) -> &[StudentId] {
        &self.students[class]
    }

    /// Every student of every class, in (class, student) order.
    pub fn student_refs(&self) -> impl Iterator<Item = StudentRef> + '_ {
        self.students.iter().enumerate().flat_map(|(class, list)| {
            (0..list.len()).map(move |student| StudentRef { class, student })
        })
    }

    pub fn student_count(&self) -> usize {
        self.students.iter().map(Vec::len).sum()
    }

    pub fn class_index(&self, id: &ClassId) -> Option<usize> {
        self.classes.iter().position(|c| c == id)
    }

    pub fn reviewer_index(&self, id: &ReviewerId) -> Option<usize> {
        self.reviewers.iter().position(|r| r == id)
    }

    pub fn student_index(&self, class: usize, id: &StudentId) -> Option<usize> {
        self.students.get(class)?.binary_search(id).ok()
    }

    pub fn class_id(&self, class: usize) -> &ClassId {
        &self.classes[class]
    }

    pub fn reviewer_id(&self, reviewer: usize) -> &ReviewerId {
        &self.reviewers[reviewer]
    }

    pub fn student_id(&self, student: StudentRef) -> &StudentId {
        &self.students[student.class][student.student]
    }

    /// Resolves a cell from its labels.
    pub fn locate(
        &self,
        class: &ClassId,
        reviewer: &ReviewerId,
        student: &StudentId,
    ) -> Result<CellRef, ModelError> {
        let c = self
            .class_index(class)
            .ok_or_else(|| ModelError::UnknownClass(class.clone()))?;
        let r = self
            .reviewer_index(reviewer)
            .ok_or_else(|| ModelError::UnknownReviewer(reviewer.clone()))?;
        let s = self
            .student_index(c, student)
            .ok_or_else(|| ModelError::UnknownStudent {
                class: class.clone(),
                student: student.clone(),
            })?;
        Ok(CellRef {
            class: c,
            reviewer: r,
            student: s,
        })
    }

    fn slot(&self, cell: CellRef) -> Option<&Option<Cell>> {
        self.cells
            .get(cell.class)?
            .get(cell.reviewer)?
            .get(cell.student)
    }

    fn slot_mut(&mut self, cell: CellRef) -> Result<&mut Option<Cell>, ModelError> {
        self.cells
            .get_mut(cell.class)
            .and_then(|c| c.get_mut(cell.reviewer))
            .and_then(|r| r.get_mut(cell.student))
            .ok_or(ModelError::OutOfBounds(cell))
    }

    pub fn cell(&self, cell: CellRef) -> Option<Cell> {
        self.slot(cell).copied().flatten()
    }

    /// Stores a retained score. Fails if the cell already holds one.
    pub fn insert(&mut self, cell: CellRef, score: f64) -> Result<(), ModelError> {
        let duplicate = || ModelError::DuplicateCell {
            class: self.classes[cell.class].clone(),
            reviewer: self.reviewers[cell.reviewer].clone(),
            student: self.students[cell.class][cell.student].clone(),
        };
        match self.slot(cell) {
            None => return Err(ModelError::OutOfBounds(cell)),
            Some(Some(_)) => return Err(duplicate()),
            Some(None) => {}
        }
        *self.slot_mut(cell)? = Some(Cell {
            score,
            status: Status::Retained,
        });
        Ok(())
    }

    /// Marks a retained cell as screened. Status never flips back.
    pub fn screen(&mut self, cell: CellRef, stage: Stage) -> Result<(), ModelError> {
        let slot = self.slot_mut(cell)?;
        match slot {
            None => Err(ModelError::MissingCell(cell)),
            Some(c) if !c.is_retained() => Err(ModelError::AlreadyScreened(cell)),
            Some(c) => {
                c.status = Status::Screened(stage);
                Ok(())
            }
        }
    }

    /// All present cells in (class, reviewer, student) order.
    pub fn cells(&self) -> impl Iterator<Item = (CellRef, Cell)> + '_ {
        self.cells.iter().enumerate().flat_map(|(class, by_reviewer)| {
            by_reviewer.iter().enumerate().flat_map(move |(reviewer, row)| {
                row.iter().enumerate().filter_map(move |(student, c)| {
                    c.map(|c| {
                        (
                            CellRef {
                                class,
                                reviewer,
                                student,
                            },
                            c,
                        )
                    })
                })
            })
        })
    }

    /// Checks completeness, score range and precision. An empty result means
    /// every downstream operation is defined on this table.
    pub fn validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        for (dimension, empty) in [
            ("classes", self.classes.is_empty()),
            ("reviewers", self.reviewers.is_empty()),
        ] {
            if empty {
                out.push(Violation::EmptyDimension {
                    dimension: dimension.into(),
                });
            }
        }
        for (c, list) in self.students.iter().enumerate() {
            if list.is_empty() {
                out.push(Violation::EmptyDimension {
                    dimension: alloc::format!("students in class {}", self.classes[c]),
                });
            }
        }
        for (c, by_reviewer) in self.cells.iter().enumerate() {
            for (r, row) in by_reviewer.iter().enumerate() {
                for (s, slot) in row.iter().enumerate() {
                    let class = self.classes[c].clone();
                    let reviewer = self.reviewers[r].clone();
                    let student = self.students[c][s].clone();
                    match slot {
                        None => out.push(Violation::MissingCell {
                            class,
                            reviewer,
                            student,
                        }),
                        Some(cell) => {
                            let score = cell.score;
                            if !(SCORE_MIN..=SCORE_MAX).contains(&score) {
                                out.push(Violation::ScoreOutOfRange {
                                    class,
                                    reviewer,
                                    student,
                                    score,
                                });
                            } else if libm::round(score * 100.0) / 100.0 != score {
                                out.push(Violation::ExcessPrecision {
                                    class,
                                    reviewer,
                                    student,
                                    score,
                                });
                            }
                        }
                    }
                }
            }
        }
        out
    }

    /// Descending ranking of one reviewer's retained scores, optionally
    /// restricted to one class.
    pub fn ranking_of(
        &self,
        reviewer: &ReviewerId,
        class_filter: Option<&ClassId>,
    ) -> Result<Ranking, ModelError> {
        let r = self
            .reviewer_index(reviewer)
            .ok_or_else(|| ModelError::UnknownReviewer(reviewer.clone()))?;
        let class_filter = class_filter
            .map(|c| {
                self.class_index(c)
                    .ok_or_else(|| ModelError::UnknownClass(c.clone()))
            })
            .transpose()?;
        let entries = self
            .cells()
            .filter(|(at, cell)| {
                at.reviewer == r
                    && cell.is_retained()
                    && class_filter.is_none_or(|c| c == at.class)
            })
            .map(|(at, cell)| (at.student_ref(), cell.score));
        Ok(Ranking::new(r, entries))
    }
}

/// Row-at-a-time table assembly used by ingestion and tests.
///
/// Classes and reviewers are registered in order of first appearance.
#[derive(Debug, Default, Clone)]
pub struct GradeTableBuilder {
    classes: Vec<ClassId>,
    reviewers: Vec<ReviewerId>,
    students: Vec<Vec<StudentId>>,
    rows: BTreeMap<(usize, usize, StudentId), f64>,
}

impl GradeTableBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn declare_class(&mut self, class: ClassId) -> usize {
        match self.classes.iter().position(|c| *c == class) {
            Some(i) => i,
            None => {
                self.classes.push(class);
                self.students.push(Vec::new());
                self.classes.len() - 1
            }
        }
    }

    pub fn declare_reviewer(&mut self, reviewer: ReviewerId) -> usize {
        match self.reviewers.iter().position(|r| *r == reviewer) {
            Some(i) => i,
            None => {
                self.reviewers.push(reviewer);
                self.reviewers.len() - 1
            }
        }
    }

    pub fn declare_student(&mut self, class: ClassId, student: StudentId) {
        let c = self.declare_class(class);
        if !self.students[c].contains(&student) {
            self.students[c].push(student);
        }
    }

    pub fn insert(
        &mut self,
        class: ClassId,
        student: StudentId,
        reviewer: ReviewerId,
        score: f64,
    ) -> Result<(), ModelError> {
        let c = self.declare_class(class.clone());
        let r = self.declare_reviewer(reviewer.clone());
        self.declare_student(class.clone(), student.clone());
        if self.rows.insert((c, r, student.clone()), score).is_some() {
            return Err(ModelError::DuplicateCell {
                class,
                reviewer,
                student,
            });
        }
        Ok(())
    }

    /// Produces the table; cells never inserted stay missing and show up in
    /// [`GradeTable::validate`].
    pub fn build(self) -> Result<GradeTable, ModelError> {
        let mut table = GradeTable::new(self.classes, self.reviewers, self.students)?;
        for ((c, r, student), score) in self.rows {
            let s = table.student_index(c, &student).ok_or_else(|| ModelError::UnknownStudent {
                class: table.classes[c].clone(),
                student: student.clone(),
            })?;
            table.insert(
                CellRef {
                    class: c,
                    reviewer: r,
                    student: s,
                },
                score,
            )?;
        }
        Ok(table)
    }
}

/// One reviewer's retained students in descending score order.
///
/// Equal scores are ordered by student position and share a tie group.
#[derive(Debug, Clone, PartialEq)]
pub struct Ranking {
    pub reviewer: usize,
    pub ordered: Vec<(StudentRef, f64)>,
    pub tie_groups: Vec<Vec<StudentRef>>,
}

impl Ranking {
    pub fn new(reviewer: usize, entries: impl IntoIterator<Item = (StudentRef, f64)>) -> Self {
        let mut ordered: Vec<(StudentRef, f64)> = entries.into_iter().collect();
        ordered.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
        let mut tie_groups: Vec<Vec<StudentRef>> = Vec::new();
        let mut last: Option<f64> = None;
        for &(student, score) in &ordered {
            match (last, tie_groups.last_mut()) {
                (Some(prev), Some(group)) if prev == score => group.push(student),
                _ => tie_groups.push(alloc::vec![student]),
            }
            last = Some(score);
        }
        Self {
            reviewer,
            ordered,
            tie_groups,
        }
    }

    pub fn len(&self) -> usize {
        self.ordered.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ordered.is_empty()
    }

    pub fn students(&self) -> impl Iterator<Item = StudentRef> + '_ {
        self.ordered.iter().map(|(s, _)| *s)
    }

    pub fn score_of(&self, student: StudentRef) -> Option<f64> {
        self.ordered
            .iter()
            .find(|(s, _)| *s == student)
            .map(|(_, g)| *g)
    }

    /// Lookup table from student to score.
    pub fn score_map(&self) -> BTreeMap<StudentRef, f64> {
        self.ordered.iter().copied().collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn sref(student: usize) -> StudentRef {
        StudentRef { class: 0, student }
    }

    #[test]
    fn complete_table_has_no_violations() {
        let table = GradeTable::from_scores(
            "1",
            &["r1", "r2", "r3"],
            &["s1", "s2", "s3", "s4", "s5"],
            &[
                &[80.0, 70.0, 60.0, 90.0, 85.5],
                &[81.0, 71.0, 61.0, 91.0, 86.0],
                &[82.0, 72.0, 62.0, 92.0, 86.25],
            ],
        )
        .unwrap();
        assert!(table.validate().is_empty());
    }

    #[test]
    fn missing_cell_is_reported() {
        let mut b = GradeTableBuilder::new();
        for r in ["1", "2"] {
            for s in ["1", "2", "3", "4"] {
                if r == "2" && s == "4" {
                    continue;
                }
                b.insert("1".into(), s.into(), r.into(), 75.0).unwrap();
            }
        }
        let table = b.build().unwrap();
        assert_eq!(
            table.validate(),
            vec![Violation::MissingCell {
                class: "1".into(),
                reviewer: "2".into(),
                student: "4".into(),
            }]
        );
    }

    #[test]
    fn out_of_range_score_is_reported() {
        let table = GradeTable::from_scores("1", &["1"], &["1", "2"], &[&[105.0, 50.0]]).unwrap();
        assert_eq!(
            table.validate(),
            vec![Violation::ScoreOutOfRange {
                class: "1".into(),
                reviewer: "1".into(),
                student: "1".into(),
                score: 105.0,
            }]
        );
    }

    #[test]
    fn third_decimal_is_rejected() {
        let table = GradeTable::from_scores("1", &["1"], &["1"], &[&[86.125]]).unwrap();
        assert!(matches!(
            table.validate()[..],
            [Violation::ExcessPrecision { .. }]
        ));
        let table = GradeTable::from_scores("1", &["1"], &["1"], &[&[86.57]]).unwrap();
        assert!(table.validate().is_empty());
    }

    #[test]
    fn duplicate_cell_is_rejected() {
        let mut b = GradeTableBuilder::new();
        b.insert("1".into(), "s".into(), "r".into(), 1.0).unwrap();
        let err = b.insert("1".into(), "s".into(), "r".into(), 2.0).unwrap_err();
        assert!(matches!(err, ModelError::DuplicateCell { .. }));
    }

    #[test]
    fn ranking_sorts_descending() {
        let t = GradeTable::from_scores("1", &["r"], &["s1", "s2", "s3"], &[&[90.0, 80.0, 85.0]])
            .unwrap();
        let r = t.ranking_of(&"r".into(), None).unwrap();
        let order: Vec<_> = r.students().collect();
        assert_eq!(order, vec![sref(0), sref(2), sref(1)]);
        assert_eq!(r.tie_groups.len(), 3);
    }

    #[test]
    fn ranking_ties_break_by_student_id() {
        let t = GradeTable::from_scores("1", &["r"], &["s2", "s1"], &[&[90.0, 90.0]]).unwrap();
        let r = t.ranking_of(&"r".into(), None).unwrap();
        let ids: Vec<_> = r.students().map(|s| t.student_id(s).as_str()).collect();
        assert_eq!(ids, vec!["s1", "s2"]);
        assert_eq!(r.tie_groups, vec![vec![sref(0), sref(1)]]);
    }

    #[test]
    fn ranking_skips_screened_cells() {
        let mut t = GradeTable::from_scores("1", &["r"], &["s1", "s2", "s3"], &[&[90.0, 95.0, 80.0]])
            .unwrap();
        let cell = t.locate(&"1".into(), &"r".into(), &"s2".into()).unwrap();
        t.screen(cell, Stage::Greedy).unwrap();
        let r = t.ranking_of(&"r".into(), None).unwrap();
        assert_eq!(r.students().collect::<Vec<_>>(), vec![sref(0), sref(2)]);
    }

    #[test]
    fn unknown_reviewer_is_an_error() {
        let t = GradeTable::from_scores("1", &["r"], &["s1"], &[&[90.0]]).unwrap();
        assert!(matches!(
            t.ranking_of(&"nobody".into(), None),
            Err(ModelError::UnknownReviewer(_))
        ));
    }

    #[test]
    fn screening_is_one_way() {
        let mut t = GradeTable::from_scores("1", &["r"], &["s1"], &[&[90.0]]).unwrap();
        let cell = CellRef {
            class: 0,
            reviewer: 0,
            student: 0,
        };
        t.screen(cell, Stage::Greedy).unwrap();
        assert_eq!(t.screen(cell, Stage::Greedy), Err(ModelError::AlreadyScreened(cell)));
        assert_eq!(t.cell(cell).unwrap().status, Status::Screened(Stage::Greedy));
    }

    #[test]
    fn ranking_of_screened_table_equals_ranking_of_reduced_table() {
        let mut full = GradeTable::from_scores(
            "1",
            &["r"],
            &["a", "b", "c", "d"],
            &[&[70.0, 90.0, 80.0, 60.0]],
        )
        .unwrap();
        let reduced =
            GradeTable::from_scores("1", &["r"], &["a", "b", "d"], &[&[70.0, 90.0, 60.0]]).unwrap();
        let cell = full.locate(&"1".into(), &"r".into(), &"c".into()).unwrap();
        full.screen(cell, Stage::Greedy).unwrap();
        let ids = |t: &GradeTable| -> Vec<(String, f64)> {
            t.ranking_of(&"r".into(), None)
                .unwrap()
                .ordered
                .iter()
                .map(|(s, g)| (t.student_id(*s).0.clone(), *g))
                .collect()
        };
        assert_eq!(ids(&full), ids(&reduced));
    }
}
