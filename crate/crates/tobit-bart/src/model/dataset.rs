//! Observed data for the selection model.

use super::ModelError;
use crate::bart::Covariates;

/// Outcome covariates X, selection covariates W, the partially observed
/// outcome, and the selection indicator (true = outcome observed).
#[derive(Debug, Clone)]
pub struct Dataset {
    pub x: Covariates,
    pub w: Covariates,
    pub y: Vec<Option<f64>>,
    pub selected: Vec<bool>,
}

impl Dataset {
    pub fn new(
        x: Covariates,
        w: Covariates,
        y: Vec<Option<f64>>,
        selected: Vec<bool>,
    ) -> Result<Self, ModelError> {
        let n = selected.len();
        if n == 0 {
            return Err(ModelError::Data("empty dataset".into()));
        }
        if x.n_rows() != n || w.n_rows() != n || y.len() != n {
            return Err(ModelError::Dimension(format!(
                "rows: x {}, w {}, y {}, selected {}",
                x.n_rows(),
                w.n_rows(),
                y.len(),
                n
            )));
        }
        for (i, (yi, &si)) in y.iter().zip(selected.iter()).enumerate() {
            match (yi, si) {
                (Some(v), true) => {
                    if !v.is_finite() {
                        return Err(ModelError::Data(format!("row {i}: non-finite outcome")));
                    }
                }
                (None, false) => {}
                (Some(_), false) => {
                    return Err(ModelError::Data(format!(
                        "row {i}: outcome present but selection indicator is 0"
                    )))
                }
                (None, true) => {
                    return Err(ModelError::Data(format!(
                        "row {i}: outcome missing but selection indicator is 1"
                    )))
                }
            }
        }
        Ok(Self { x, w, y, selected })
    }

    pub fn n(&self) -> usize {
        self.selected.len()
    }

    pub fn n_selected(&self) -> usize {
        self.selected.iter().filter(|&&s| s).count()
    }

    pub fn selected_indices(&self) -> Vec<usize> {
        (0..self.n()).filter(|&i| self.selected[i]).collect()
    }

    /// Observed outcomes in row order of `selected_indices`.
    pub fn selected_outcomes(&self) -> Vec<f64> {
        self.y.iter().flatten().copied().collect()
    }

    /// Outcome covariates restricted to the selected rows.
    pub fn x_selected(&self) -> Covariates {
        let rows: Vec<Vec<f64>> = self.selected_indices().iter().map(|&i| self.x.row(i)).collect();
        Covariates::from_rows(&rows)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_inconsistent_outcome_and_indicator() {
        let x = Covariates::from_columns(vec![vec![1.0, 2.0]]);
        let w = Covariates::from_columns(vec![vec![1.0, 2.0]]);
        let bad = Dataset::new(x.clone(), w.clone(), vec![Some(1.0), Some(2.0)], vec![true, false]);
        assert!(bad.is_err());
        let bad = Dataset::new(x.clone(), w.clone(), vec![None, None], vec![true, false]);
        assert!(bad.is_err());
        let ok = Dataset::new(x, w, vec![Some(1.0), None], vec![true, false]).unwrap();
        assert_eq!(ok.n_selected(), 1);
        assert_eq!(ok.selected_outcomes(), vec![1.0]);
    }
}
