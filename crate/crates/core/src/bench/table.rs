use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One `experiment,model,seed,metric,value` record. `seed` is the repetition
/// index, or `mean` / `std` / `median` for aggregate rows; failed cells carry
/// metric `error` and the message as value.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ResultRow {
    pub experiment: String,
    pub model: String,
    pub seed: String,
    pub metric: String,
    pub value: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ResultTable {
    pub rows: Vec<ResultRow>,
}

impl ResultTable {
    pub fn push(&mut self, experiment: &str, model: &str, seed: impl ToString, metric: &str, value: impl ToString) {
        self.rows.push(ResultRow {
            experiment: experiment.to_string(),
            model: model.to_string(),
            seed: seed.to_string(),
            metric: metric.to_string(),
            value: value.to_string(),
        });
    }

    /// Number of failed cells.
    pub fn failures(&self) -> usize {
        self.rows.iter().filter(|r| r.metric == "error").count()
    }

    /// Values of `metric` for `model` over individual repetitions.
    pub fn values(&self, model: &str, metric: &str) -> Vec<f64> {
        self.rows
            .iter()
            .filter(|r| r.model == model && r.metric == metric && r.seed.parse::<usize>().is_ok())
            .filter_map(|r| r.value.parse().ok())
            .collect()
    }

    /// The aggregate row `(model, seed = stat, metric)`.
    pub fn aggregate(&self, model: &str, stat: &str, metric: &str) -> Option<f64> {
        self.rows
            .iter()
            .find(|r| r.model == model && r.seed == stat && r.metric == metric)
            .and_then(|r| r.value.parse().ok())
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        for r in &self.rows {
            w.serialize(r).map_err(|e| Error::Serialization(e.to_string()))?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Serialization(e.to_string()))?;
        String::from_utf8(bytes).map_err(|e| Error::Serialization(e.to_string()))
    }

    pub fn from_csv(s: &str) -> Result<Self> {
        let mut r = csv::Reader::from_reader(s.as_bytes());
        let rows = r
            .deserialize()
            .collect::<std::result::Result<Vec<ResultRow>, _>>()
            .map_err(|e| Error::Serialization(e.to_string()))?;
        Ok(Self { rows })
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv()?).map_err(|e| Error::io(path, e))
    }
}
