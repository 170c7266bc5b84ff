//! Instance and field documents.

use std::fs;
use std::path::Path;

use lipext_core::{FiniteMetricSpace, Norm, Subspace, SubspaceMeasure, VectorField};
use serde::{Deserialize, Serialize};

use crate::error::HarnessError;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NormName {
    L1,
    L2,
    Linf,
}

impl From<NormName> for Norm {
    fn from(n: NormName) -> Self {
        match n {
            NormName::L1 => Norm::L1,
            NormName::L2 => Norm::L2,
            NormName::Linf => Norm::Linf,
        }
    }
}

impl From<Norm> for NormName {
    fn from(n: Norm) -> Self {
        match n {
            Norm::L1 => NormName::L1,
            Norm::L2 => NormName::L2,
            Norm::Linf => NormName::Linf,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum DistanceSpec {
    Matrix { values: Vec<Vec<f64>> },
    Coordinates { values: Vec<Vec<f64>>, norm: NormName },
}

/// On-disk instance: a metric space, a subspace and a measure on it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceFile {
    pub version: u32,
    pub name: String,
    pub points: Vec<String>,
    pub distance: DistanceSpec,
    pub subspace: Vec<usize>,
    pub measure: Vec<f64>,
    /// Forces the lift dimension instead of choosing it from the doubling
    /// constant. Used by negative controls.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lift_dimension: Option<usize>,
}

/// A validated instance.
#[derive(Debug, Clone)]
pub struct Instance {
    pub name: String,
    pub space: FiniteMetricSpace,
    pub measure: SubspaceMeasure,
    pub lift_dimension: Option<usize>,
}

impl Instance {
    pub fn subspace(&self) -> &Subspace {
        self.measure.subspace()
    }
}

impl InstanceFile {
    pub fn from_json(text: &str) -> Result<Self, HarnessError> {
        let file: InstanceFile =
            serde_json::from_str(text).map_err(|e| HarnessError::Schema(e.to_string()))?;
        if file.version != SCHEMA_VERSION {
            return Err(HarnessError::Schema(format!(
                "unsupported version {} (expected {SCHEMA_VERSION})",
                file.version
            )));
        }
        Ok(file)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("instance serializes")
    }

    pub fn validate(&self) -> Result<Instance, HarnessError> {
        let space = match &self.distance {
            DistanceSpec::Matrix { values } => lipext_core::validate_metric(values)?,
            DistanceSpec::Coordinates { values, norm } => {
                FiniteMetricSpace::from_coordinates(values, (*norm).into())?
            }
        };
        let space = space.with_labels(self.points.clone())?;
        let sub = Subspace::new(&space, self.subspace.clone())?;
        let measure = SubspaceMeasure::new(sub, self.measure.clone())?;
        if self.lift_dimension == Some(0) {
            return Err(HarnessError::Schema("lift_dimension must be positive".into()));
        }
        Ok(Instance {
            name: self.name.clone(),
            space,
            measure,
            lift_dimension: self.lift_dimension,
        })
    }

    pub fn save(&self, path: &Path) -> Result<(), HarnessError> {
        write_text(path, &(self.to_json() + "\n"))
    }
}

/// Read and validate an instance document.
pub fn load_instance(path: &Path) -> Result<Instance, HarnessError> {
    InstanceFile::from_json(&read_text(path)?)?.validate()
}

/// Field values aligned with a point list, plus the target norm.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FieldFile {
    #[serde(default = "default_version")]
    pub version: u32,
    pub norm: NormName,
    pub values: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub points: Option<Vec<String>>,
}

fn default_version() -> u32 {
    SCHEMA_VERSION
}

impl FieldFile {
    pub fn from_field(field: &VectorField, points: Option<Vec<String>>) -> Self {
        Self {
            version: SCHEMA_VERSION,
            norm: field.norm().into(),
            values: field.to_rows(),
            points,
        }
    }

    pub fn to_field(&self) -> Result<VectorField, HarnessError> {
        VectorField::new(&self.values, self.norm.into())
            .map_err(|e| HarnessError::Schema(format!("field: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        let file: FieldFile = serde_json::from_str(&read_text(path)?)
            .map_err(|e| HarnessError::Schema(e.to_string()))?;
        if file.version != SCHEMA_VERSION {
            return Err(HarnessError::Schema(format!(
                "unsupported field version {}",
                file.version
            )));
        }
        Ok(file)
    }

    pub fn save(&self, path: &Path) -> Result<(), HarnessError> {
        let text = serde_json::to_string_pretty(self).expect("field serializes");
        write_text(path, &(text + "\n"))
    }
}

pub(crate) fn read_text(path: &Path) -> Result<String, HarnessError> {
    fs::read_to_string(path).map_err(|source| HarnessError::Io {
        path: path.display().to_string(),
        source,
    })
}

pub(crate) fn write_text(path: &Path, text: &str) -> Result<(), HarnessError> {
    fs::write(path, text).map_err(|source| HarnessError::Io {
        path: path.display().to_string(),
        source,
    })
}
