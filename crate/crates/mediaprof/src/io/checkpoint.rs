//! GNN checkpoints: JSON of named parameter tensors,
//! `{"variant": "gcn", "params": [{"name", "shape": [rows, cols], "decay",
//! "data": [row-major values]}]}`.

use std::path::Path;

use mediaprof_core::gnn::{GnnModel, GnnVariant, Param};
use ndarray::Array2;
use serde::{Deserialize, Serialize};

use super::{read_json, write_json};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TensorRecord {
    pub name: String,
    pub shape: [usize; 2],
    pub decay: bool,
    pub data: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Checkpoint {
    pub variant: GnnVariant,
    pub params: Vec<TensorRecord>,
}

impl Checkpoint {
    pub fn from_model(model: &GnnModel) -> Self {
        Checkpoint {
            variant: model.variant,
            params: model
                .params
                .iter()
                .map(|p| TensorRecord {
                    name: p.name.clone(),
                    shape: [p.value.nrows(), p.value.ncols()],
                    decay: p.decay,
                    data: p.value.iter().copied().collect(),
                })
                .collect(),
        }
    }

    pub fn into_model(self) -> mediaprof_core::Result<GnnModel> {
        let params = self
            .params
            .into_iter()
            .map(|t| {
                let value = Array2::from_shape_vec((t.shape[0], t.shape[1]), t.data).map_err(|_| {
                    mediaprof_core::Error::ShapeMismatch(format!(
                        "tensor {} does not hold {} x {} values",
                        t.name, t.shape[0], t.shape[1]
                    ))
                })?;
                Ok(Param {
                    name: t.name,
                    value,
                    decay: t.decay,
                })
            })
            .collect::<mediaprof_core::Result<Vec<_>>>()?;
        GnnModel::from_params(self.variant, params)
    }
}

pub fn write_checkpoint(path: &Path, model: &GnnModel) -> Result<()> {
    write_json(path, &Checkpoint::from_model(model))
}

pub fn read_checkpoint(path: &Path) -> Result<GnnModel> {
    let c: Checkpoint = read_json(path)?;
    c.into_model().map_err(|e| Error::format(path, 0, e.to_string()))
}
