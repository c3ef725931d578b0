//! JSON system files and region exports.
//!
//! A system file is a JSON object
//!
//! ```json
//! { "kind": "multi_area", "schema_version": 1, "system": { ... } }
//! ```
//!
//! where `kind` is one of `polytope`, `multi_area` or
//! `transmission_distribution` and `system` holds the matching
//! [`HPolytope`], [`MultiAreaSystem`] or [`TdSystem`] with fields by name.
//! Powers are in MW, costs in $/h, feeder impedances and voltages in p.u. on
//! the feeder's `base_mva`.

mod export;

use std::path::Path;

use serde::{Deserialize, Serialize};

pub use export::{facets_csv, polygon_ccw, shadow, svg, vertices_csv};

use crate::error::{Error, Result};
use crate::geometry::HPolytope;
use crate::macod::MultiAreaSystem;
use crate::tdcod::TdSystem;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Kind {
    Polytope,
    MultiArea,
    TransmissionDistribution,
}

#[derive(Debug, Clone, PartialEq)]
pub enum System {
    Polytope(HPolytope),
    MultiArea(MultiAreaSystem),
    TransmissionDistribution(TdSystem),
}

impl System {
    pub fn kind(&self) -> Kind {
        match self {
            System::Polytope(_) => Kind::Polytope,
            System::MultiArea(_) => Kind::MultiArea,
            System::TransmissionDistribution(_) => Kind::TransmissionDistribution,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            System::Polytope(p) => p.validate(),
            System::MultiArea(m) => m.validate(),
            System::TransmissionDistribution(t) => t.validate(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SystemFile {
    pub schema_version: u32,
    pub system: System,
}

#[derive(Deserialize)]
struct Header {
    kind: Kind,
    schema_version: u32,
}

#[derive(Serialize, Deserialize)]
struct Document<T> {
    kind: Kind,
    schema_version: u32,
    system: T,
}

/// Deserializes `text`, reporting failures with the field path and position.
fn parse<'de, T: Deserialize<'de>>(text: &'de str) -> Result<T> {
    let mut de = serde_json::Deserializer::from_str(text);
    let schema = |path: String, e: serde_json::Error| {
        let full = e.to_string();
        let message = full.rsplit_once(" at line ").map_or(full.as_str(), |(m, _)| m).to_string();
        let path = if path == "." { "document".to_string() } else { path };
        Error::Schema { path, line: e.line(), column: e.column(), message }
    };
    let value = serde_path_to_error::deserialize(&mut de).map_err(|e| {
        let path = e.path().to_string();
        schema(path, e.into_inner())
    })?;
    de.end().map_err(|e| schema("document".into(), e))?;
    Ok(value)
}

impl SystemFile {
    pub fn new(system: System) -> Self {
        Self { schema_version: SCHEMA_VERSION, system }
    }

    /// Parses and validates a system file.
    pub fn from_json(text: &str) -> Result<Self> {
        let header: Header = parse(text)?;
        if header.schema_version != SCHEMA_VERSION {
            return Err(Error::InvalidInput(format!(
                "schema_version {} is not supported (expected {SCHEMA_VERSION})",
                header.schema_version
            )));
        }
        let system = match header.kind {
            Kind::Polytope => System::Polytope(parse::<Document<HPolytope>>(text)?.system),
            Kind::MultiArea => System::MultiArea(parse::<Document<MultiAreaSystem>>(text)?.system),
            Kind::TransmissionDistribution => System::TransmissionDistribution(parse::<Document<TdSystem>>(text)?.system),
        };
        system.validate().map_err(|e| match e {
            Error::InvalidInput(msg) => Error::InvalidInput(format!("system: {msg}")),
            other => other,
        })?;
        Ok(Self { schema_version: header.schema_version, system })
    }

    pub fn to_json(&self) -> String {
        fn doc<T: Serialize>(kind: Kind, schema_version: u32, system: &T) -> String {
            let mut s =
                serde_json::to_string_pretty(&Document { kind, schema_version, system }).expect("system types serialize infallibly");
            s.push('\n');
            s
        }
        let kind = self.system.kind();
        match &self.system {
            System::Polytope(p) => doc(kind, self.schema_version, p),
            System::MultiArea(m) => doc(kind, self.schema_version, m),
            System::TransmissionDistribution(t) => doc(kind, self.schema_version, t),
        }
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        Self::from_json(&text).map_err(|e| match e {
            Error::Schema { path: field, line, column, message } => {
                Error::Schema { path: format!("{}: {field}", path.display()), line, column, message }
            }
            other => other,
        })
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        write_file(path, &self.to_json())
    }
}

pub(crate) fn write_file(path: &Path, contents: &str) -> Result<()> {
    std::fs::write(path, contents).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}
