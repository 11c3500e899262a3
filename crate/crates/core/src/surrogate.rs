//! Fitted surrogates bundled with their encoders, and their JSON files.
//!
//! Each file is a JSON object whose `format` and `version` fields identify
//! the model kind; the additive process also stores its training data so the
//! factorization can be rebuilt on load.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::agp::{self, AgpModel, AgpParams, FitOptions, FitReport, MixedInput, PredictiveDistribution};
use crate::assembly::DesignRun;
use crate::dataset::{ExperimentDataset, Response};
use crate::error::{Error, Result};
use crate::features::FeatureEncoder;
use crate::linear::{self, LinearModel};

pub const AGP_FORMAT: &str = "doaiq-agp";
pub const LINEAR_FORMAT: &str = "doaiq-linear";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq)]
pub struct AgpSurrogate {
    pub response: Response,
    pub encoder: FeatureEncoder,
    pub model: AgpModel,
}

impl AgpSurrogate {
    pub fn fit(data: &ExperimentDataset, response: Response, encoder: FeatureEncoder, opts: &FitOptions) -> Result<Self> {
        let inputs = data
            .observations
            .iter()
            .map(|o| encoder.mixed_input(&o.run))
            .collect::<Result<Vec<_>>>()?;
        let y = data.response(response);
        let q = encoder.levels.len() - 1;
        let model = agp::fit(&inputs, &y, &AgpParams::initial(q), opts)?;
        Ok(AgpSurrogate {
            response,
            encoder,
            model,
        })
    }

    pub fn predict(&self, run: &DesignRun) -> Result<PredictiveDistribution> {
        self.model.predict(&self.encoder.mixed_input(run)?)
    }

    pub fn to_json(&self) -> Result<String> {
        let file = AgpFile {
            format: AGP_FORMAT.into(),
            version: FORMAT_VERSION,
            response: self.response.to_string(),
            encoder: self.encoder.clone(),
            params: self.model.params().clone(),
            y_offset: self.model.y_offset(),
            report: self.model.report().clone(),
            inputs: self.model.inputs().to_vec(),
            y_centered: self.model.y_centered().to_vec(),
        };
        Ok(serde_json::to_string_pretty(&file)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: AgpFile = serde_json::from_str(text)?;
        check_header(&file.format, file.version, AGP_FORMAT)?;
        let model = AgpModel::from_parts(file.params, file.inputs, file.y_centered, file.y_offset, file.report)?;
        Ok(AgpSurrogate {
            response: file.response.parse()?,
            encoder: file.encoder,
            model,
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LinearSurrogate {
    pub response: Response,
    pub encoder: FeatureEncoder,
    pub model: LinearModel,
}

impl LinearSurrogate {
    pub fn fit(data: &ExperimentDataset, response: Response, encoder: FeatureEncoder) -> Result<Self> {
        let rows = data
            .observations
            .iter()
            .map(|o| encoder.regression_row(&o.run))
            .collect::<Result<Vec<_>>>()?;
        let model = linear::ols_fit(&rows, &data.response(response), &encoder.regression_columns())?;
        Ok(LinearSurrogate {
            response,
            encoder,
            model,
        })
    }

    pub fn predict(&self, run: &DesignRun) -> Result<f64> {
        self.model.predict(&self.encoder.regression_row(run)?)
    }

    pub fn to_json(&self) -> Result<String> {
        let file = LinearFile {
            format: LINEAR_FORMAT.into(),
            version: FORMAT_VERSION,
            response: self.response.to_string(),
            encoder: self.encoder.clone(),
            model: self.model.clone(),
        };
        Ok(serde_json::to_string_pretty(&file)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: LinearFile = serde_json::from_str(text)?;
        check_header(&file.format, file.version, LINEAR_FORMAT)?;
        Ok(LinearSurrogate {
            response: file.response.parse()?,
            encoder: file.encoder,
            model: file.model,
        })
    }
}

/// Either kind of model file.
#[allow(clippy::large_enum_variant)]
#[derive(Clone, Debug, PartialEq)]
pub enum SavedModel {
    Agp(AgpSurrogate),
    Linear(LinearSurrogate),
}

impl SavedModel {
    pub fn to_json(&self) -> Result<String> {
        match self {
            SavedModel::Agp(m) => m.to_json(),
            SavedModel::Linear(m) => m.to_json(),
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        #[derive(Deserialize)]
        struct Header {
            format: String,
        }
        let header: Header = serde_json::from_str(text)?;
        match header.format.as_str() {
            AGP_FORMAT => Ok(SavedModel::Agp(AgpSurrogate::from_json(text)?)),
            LINEAR_FORMAT => Ok(SavedModel::Linear(LinearSurrogate::from_json(text)?)),
            other => Err(Error::param(format!("unknown model format {other:?}"))),
        }
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut text = self.to_json()?;
        text.push('\n');
        std::fs::write(path, text).map_err(|e| Error::format(path, e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::format(path, e.to_string()))?;
        Self::from_json(&text).map_err(|e| match e {
            Error::Json(_) | Error::Parameter(_) => Error::format(path, e.to_string()),
            other => other,
        })
    }
}

fn check_header(format: &str, version: u32, expected: &str) -> Result<()> {
    if format != expected {
        return Err(Error::param(format!("expected format {expected:?}, found {format:?}")));
    }
    if version != FORMAT_VERSION {
        return Err(Error::param(format!("unsupported {format} version {version}")));
    }
    Ok(())
}

#[derive(Serialize, Deserialize)]
struct AgpFile {
    format: String,
    version: u32,
    response: String,
    encoder: FeatureEncoder,
    params: AgpParams,
    y_offset: f64,
    report: FitReport,
    inputs: Vec<MixedInput>,
    y_centered: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct LinearFile {
    format: String,
    version: u32,
    response: String,
    encoder: FeatureEncoder,
    model: LinearModel,
}
