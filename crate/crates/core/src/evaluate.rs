//! Composite quality score for embedding methods: combines embedding rate,
//! accuracy impact, and an effort penalty into a single figure, with
//! per-model and overall averages.

use crate::error::{Error, Result};

/// Score parameters. `alpha` weighs embedding rate against impact, `epsilon`
/// keeps the denominator away from zero, and `penalty` accounts for extra
/// embedding effort (1.0 for plain substitution, 1.1 for mapping methods
/// that need an index permutation, 1.2 for retraining-based methods).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalParams {
    pub alpha: f64,
    pub epsilon: f64,
    pub penalty: f64,
}

impl Default for EvalParams {
    fn default() -> Self {
        EvalParams {
            alpha: 0.5,
            epsilon: 0.1,
            penalty: 1.0,
        }
    }
}

impl EvalParams {
    pub fn with_penalty(penalty: f64) -> Self {
        EvalParams {
            penalty,
            ..Default::default()
        }
    }
}

/// Effort penalty for a method label.
pub fn penalty_for_method(method: &str) -> f64 {
    match method {
        "value_mapping" | "sign_mapping" => 1.1,
        "resilience_training" => 1.2,
        // lsb, msb_reservation, fast, half: no retraining, no permutation
        _ => 1.0,
    }
}

/// One (model, payload) measurement.
#[derive(Debug, Clone, PartialEq)]
pub struct CellInput {
    pub model: String,
    pub sample: String,
    /// Baseline accuracy of the clean model.
    pub base_acc: f64,
    /// Accuracy with the payload embedded; ignored when not embeddable.
    pub acc: f64,
    pub payload_len: u64,
    pub model_len: u64,
    pub embeddable: bool,
}

/// A scored cell.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalCell {
    pub model: String,
    pub sample: String,
    pub embedding_rate: f64,
    pub impact: f64,
    pub quality: f64,
    pub embeddable: bool,
}

/// The quality score Q = α(E+ε) / ((1−α)(I+ε)P).
pub fn quality(embedding_rate: f64, impact: f64, params: &EvalParams) -> f64 {
    let EvalParams {
        alpha,
        epsilon,
        penalty,
    } = *params;
    alpha * (embedding_rate + epsilon) / ((1.0 - alpha) * (impact + epsilon) * penalty)
}

/// Apply the clamping conventions, then score: impact floors at zero, and a
/// non-embeddable cell scores as E = 0, I = 1.
pub fn score_cell(input: &CellInput, params: &EvalParams) -> EvalCell {
    let (e, i) = if input.embeddable {
        let e = input.payload_len as f64 / input.model_len as f64;
        let i = ((input.base_acc - input.acc) / input.base_acc).max(0.0);
        (e, i)
    } else {
        (0.0, 1.0)
    };
    EvalCell {
        model: input.model.clone(),
        sample: input.sample.clone(),
        embedding_rate: e,
        impact: i,
        quality: quality(e, i, params),
        embeddable: input.embeddable,
    }
}

/// Per-model average quality and the overall average of those averages.
#[derive(Debug, Clone, PartialEq)]
pub struct QualityTable {
    pub cells: Vec<EvalCell>,
    /// (model, AVG(Q_M)) in first-appearance order.
    pub per_model: Vec<(String, f64)>,
    /// AVG(Q): mean of the per-model averages.
    pub average: f64,
}

pub fn quality_table(inputs: &[CellInput], params: &EvalParams) -> Result<QualityTable> {
    if inputs.is_empty() {
        return Err(Error::InvalidArgument("no cells to evaluate".into()));
    }
    let cells: Vec<EvalCell> = inputs.iter().map(|c| score_cell(c, params)).collect();
    let mut order: Vec<String> = Vec::new();
    for cell in &cells {
        if !order.contains(&cell.model) {
            order.push(cell.model.clone());
        }
    }
    let per_model: Vec<(String, f64)> = order
        .into_iter()
        .map(|model| {
            let qs: Vec<f64> = cells
                .iter()
                .filter(|c| c.model == model)
                .map(|c| c.quality)
                .collect();
            let avg = qs.iter().sum::<f64>() / qs.len() as f64;
            (model, avg)
        })
        .collect();
    let average = per_model.iter().map(|&(_, q)| q).sum::<f64>() / per_model.len() as f64;
    Ok(QualityTable {
        cells,
        per_model,
        average,
    })
}

/// Parse cells from CSV text with the header
/// `model,sample,base_acc,acc,payload_len,model_len,embeddable`.
/// `acc` may be empty when `embeddable` is 0/false.
pub fn parse_cells_csv(text: &str) -> Result<Vec<CellInput>> {
    let mut cells = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || (lineno == 0 && line.starts_with("model,")) {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        let err = |msg: String| Error::CsvParse {
            line: lineno + 1,
            msg,
        };
        if fields.len() != 7 {
            return Err(err(format!("expected 7 fields, got {}", fields.len())));
        }
        let embeddable = match fields[6] {
            "1" | "true" => true,
            "0" | "false" => false,
            other => return Err(err(format!("bad embeddable flag {other:?}"))),
        };
        let num = |s: &str, what: &str| -> Result<f64> {
            s.parse::<f64>()
                .map_err(|_| err(format!("bad {what} {s:?}")))
        };
        let acc = if embeddable {
            num(fields[3], "acc")?
        } else if fields[3].is_empty() {
            0.0
        } else {
            num(fields[3], "acc")?
        };
        let int = |s: &str, what: &str| -> Result<u64> {
            s.parse::<u64>()
                .map_err(|_| err(format!("bad {what} {s:?}")))
        };
        cells.push(CellInput {
            model: fields[0].to_string(),
            sample: fields[1].to_string(),
            base_acc: num(fields[2], "base_acc")?,
            acc,
            payload_len: int(fields[4], "payload_len")?,
            model_len: int(fields[5], "model_len")?,
            embeddable,
        });
    }
    if cells.is_empty() {
        return Err(Error::InvalidArgument("no cells in CSV".into()));
    }
    Ok(cells)
}
