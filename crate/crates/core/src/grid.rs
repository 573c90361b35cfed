//! Dense reviewer × student view of a grade table.
//!
//! Screening and fusion work on grids rather than on the table itself: the
//! values may be rescaled scores or rank surrogates, and the retained mask
//! follows the screening decisions.

use alloc::vec::Vec;

use crate::model::{CellRef, GradeTable, ModelError, Ranking, Stage, StudentRef};

/// Which classes a grid covers.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ClassScope {
    All,
    Class(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScoreGrid {
    students: Vec<StudentRef>,
    // [reviewer][column]
    values: Vec<Vec<f64>>,
    retained: Vec<Vec<bool>>,
}

impl ScoreGrid {
    /// Builds a grid from reviewer-major rows. Every cell starts retained.
    ///
    /// # Panics
    ///
    /// If a row length differs from the number of students.
    pub fn from_rows(students: Vec<StudentRef>, values: Vec<Vec<f64>>) -> Self {
        assert!(values.iter().all(|row| row.len() == students.len()));
        let retained = values.iter().map(|row| alloc::vec![true; row.len()]).collect();
        Self {
            students,
            values,
            retained,
        }
    }

    /// Single-class grid with students numbered 0..n, handy for tests and
    /// for callers that hold plain matrices.
    pub fn from_matrix(values: Vec<Vec<f64>>) -> Self {
        let n = values.first().map_or(0, Vec::len);
        let students = (0..n).map(|student| StudentRef { class: 0, student }).collect();
        Self::from_rows(students, values)
    }

    /// Copies the table's scores and statuses over `scope`.
    pub fn from_table(table: &GradeTable, scope: ClassScope) -> Result<Self, ModelError> {
        let students: Vec<StudentRef> = table
            .student_refs()
            .filter(|s| match scope {
                ClassScope::All => true,
                ClassScope::Class(c) => s.class == c,
            })
            .collect();
        let mut values = Vec::with_capacity(table.reviewers().len());
        let mut retained = Vec::with_capacity(table.reviewers().len());
        for reviewer in 0..table.reviewers().len() {
            let mut row = Vec::with_capacity(students.len());
            let mut mask = Vec::with_capacity(students.len());
            for s in &students {
                let at = CellRef {
                    class: s.class,
                    reviewer,
                    student: s.student,
                };
                let cell = table.cell(at).ok_or(ModelError::MissingCell(at))?;
                row.push(cell.score);
                mask.push(cell.is_retained());
            }
            values.push(row);
            retained.push(mask);
        }
        Ok(Self {
            students,
            values,
            retained,
        })
    }

    pub fn reviewer_count(&self) -> usize {
        self.values.len()
    }

    pub fn student_count(&self) -> usize {
        self.students.len()
    }

    pub fn students(&self) -> &[StudentRef] {
        &self.students
    }

    pub fn column_of(&self, student: StudentRef) -> Option<usize> {
        self.students.binary_search(&student).ok()
    }

    pub fn value(&self, reviewer: usize, column: usize) -> f64 {
        self.values[reviewer][column]
    }

    pub fn row(&self, reviewer: usize) -> &[f64] {
        &self.values[reviewer]
    }

    pub fn is_retained(&self, reviewer: usize, column: usize) -> bool {
        self.retained[reviewer][column]
    }

    pub fn retained_mask(&self, reviewer: usize) -> &[bool] {
        &self.retained[reviewer]
    }

    /// Retained values of one reviewer, in column order.
    pub fn retained_row(&self, reviewer: usize) -> Vec<f64> {
        self.values[reviewer]
            .iter()
            .zip(&self.retained[reviewer])
            .filter_map(|(v, keep)| keep.then_some(*v))
            .collect()
    }

    /// Retained values of one student across reviewers, in reviewer order.
    pub fn retained_column(&self, column: usize) -> Vec<f64> {
        (0..self.reviewer_count())
            .filter(|&r| self.retained[r][column])
            .map(|r| self.values[r][column])
            .collect()
    }

    pub fn retained_count(&self, reviewer: usize) -> usize {
        self.retained[reviewer].iter().filter(|k| **k).count()
    }

    pub fn screened_count(&self, reviewer: usize) -> usize {
        self.student_count() - self.retained_count(reviewer)
    }

    pub fn screen(&mut self, reviewer: usize, column: usize) {
        self.retained[reviewer][column] = false;
    }

    /// Same mask, different values (e.g. raw scores next to surrogates).
    pub fn with_values(&self, values: Vec<Vec<f64>>) -> Self {
        assert_eq!(values.len(), self.values.len());
        assert!(values.iter().all(|row| row.len() == self.students.len()));
        Self {
            students: self.students.clone(),
            values,
            retained: self.retained.clone(),
        }
    }

    /// Copies the retained mask of `other`, which must cover the same cells.
    pub fn copy_mask_from(&mut self, other: &ScoreGrid) {
        assert_eq!(self.students, other.students);
        self.retained.clone_from(&other.retained);
    }

    pub fn ranking(&self, reviewer: usize) -> Ranking {
        Ranking::new(
            reviewer,
            self.students
                .iter()
                .zip(&self.values[reviewer])
                .zip(&self.retained[reviewer])
                .filter_map(|((s, v), keep)| keep.then_some((*s, *v))),
        )
    }

    pub fn rankings(&self) -> Vec<Ranking> {
        (0..self.reviewer_count()).map(|r| self.ranking(r)).collect()
    }

    /// Writes this grid's screened cells back into the table.
    pub fn apply_mask(&self, table: &mut GradeTable, stage: Stage) -> Result<(), ModelError> {
        for (reviewer, mask) in self.retained.iter().enumerate() {
            for (column, keep) in mask.iter().enumerate() {
                let s = self.students[column];
                let at = CellRef {
                    class: s.class,
                    reviewer,
                    student: s.student,
                };
                if !keep && table.cell(at).is_some_and(|c| c.is_retained()) {
                    table.screen(at, stage)?;
                }
            }
        }
        Ok(())
    }
}
