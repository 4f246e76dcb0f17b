use super::EvalError;

/// All-pair cross-lingual scores: `f1[s][t]` is the F1 of a model trained
/// on language `s` evaluated on language `t`; the diagonal is the
/// supervised score.
#[derive(Debug, Clone)]
pub struct TransferMatrix {
    pub languages: Vec<String>,
    pub f1: Vec<Vec<f64>>,
}

impl TransferMatrix {
    pub fn new(languages: Vec<String>, f1: Vec<Vec<f64>>) -> Self {
        let n = languages.len();
        assert_eq!(f1.len(), n);
        assert!(f1.iter().all(|row| row.len() == n));
        Self { languages, f1 }
    }

    pub fn language_index(&self, name: &str) -> Result<usize, EvalError> {
        self.languages
            .iter()
            .position(|l| l == name)
            .ok_or_else(|| EvalError::MissingLanguage(name.to_string()))
    }

    /// Transfer efficiency of each source language, in row order.
    pub fn rho_all(&self) -> Result<Vec<f64>, EvalError> {
        (0..self.languages.len())
            .map(|s| compute_rho(self, s))
            .collect()
    }

    /// CSV: one row per source language with its cross-lingual F1 toward
    /// every target and the transfer-efficiency summary.
    pub fn to_csv(&self) -> Result<String, EvalError> {
        let rho = self.rho_all()?;
        let mut out = String::from("source");
        for t in &self.languages {
            out.push_str(&format!(",{t}"));
        }
        out.push_str(",rho\n");
        for (s, row) in self.f1.iter().enumerate() {
            out.push_str(&self.languages[s]);
            for v in row {
                out.push_str(&format!(",{v:.4}"));
            }
            out.push_str(&format!(",{:.4}\n", rho[s]));
        }
        Ok(out)
    }
}

/// Average normalized cross-lingual accuracy of source `s`:
/// `rho(s) = sum_{t != s} f(s,t)/f(t,t) / (|L| - 1)`.
pub fn compute_rho(matrix: &TransferMatrix, source: usize) -> Result<f64, EvalError> {
    let n = matrix.languages.len();
    if n < 2 {
        return Err(EvalError::TooFewLanguages);
    }
    let mut sum = 0.0;
    for t in 0..n {
        if t == source {
            continue;
        }
        let supervised = matrix.f1[t][t];
        if supervised == 0.0 {
            return Err(EvalError::DegenerateSupervised(matrix.languages[t].clone()));
        }
        sum += matrix.f1[source][t] / supervised;
    }
    Ok(sum / (n - 1) as f64)
}
