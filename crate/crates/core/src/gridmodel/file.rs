//! Grid file format.
//!
//! TOML with three kinds of entries; every table rejects unknown keys.
//!
//! ```toml
//! name = "example"          # optional
//! v_slack = 1.0             # pu, default 1.0
//! delta_slack_deg = 0.0     # degrees, default 0.0
//!
//! [[bus]]
//! id = 1
//! type = "slack"            # "slack" or "pq"
//! p = 0.0                   # active demand, pu (positive = load)
//! q = 0.0                   # reactive demand, pu
//!
//! [[line]]
//! from = 1
//! to = 2
//! r = 0.01                  # series resistance, pu
//! x = 0.05                  # series reactance, pu
//! ```

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::GridError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BusKind {
    Slack,
    Pq,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BusRecord {
    pub id: u32,
    #[serde(rename = "type")]
    pub kind: BusKind,
    pub p: f64,
    pub q: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LineRecord {
    pub from: u32,
    pub to: u32,
    pub r: f64,
    pub x: f64,
}

/// Parsed grid description, input to [`super::build_grid`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    #[serde(default)]
    pub name: Option<String>,
    #[serde(default = "one")]
    pub v_slack: f64,
    #[serde(default)]
    pub delta_slack_deg: f64,
    #[serde(default)]
    pub bus: Vec<BusRecord>,
    #[serde(default)]
    pub line: Vec<LineRecord>,
}

fn one() -> f64 {
    1.0
}

pub fn parse_grid_file(text: &str) -> Result<GridSpec, GridError> {
    toml::from_str(text).map_err(|e| GridError::Parse(e.to_string()))
}

pub fn read_grid_file(path: impl AsRef<Path>) -> Result<GridSpec, GridError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)
        .map_err(|e| GridError::Io { path: path.display().to_string(), message: e.to_string() })?;
    parse_grid_file(&text)
}

#[cfg(test)]
mod tests {
    use super::*;

    const TWO_BUS: &str = r#"
        name = "two"
        [[bus]]
        id = 1
        type = "slack"
        p = 0.0
        q = 0.0
        [[bus]]
        id = 2
        type = "pq"
        p = 0.4
        q = 0.1
        [[line]]
        from = 1
        to = 2
        r = 0.01
        x = 0.1
    "#;

    #[test]
    fn parses_minimal_file() {
        let spec = parse_grid_file(TWO_BUS).unwrap();
        assert_eq!(spec.name.as_deref(), Some("two"));
        assert_eq!(spec.v_slack, 1.0);
        assert_eq!(spec.bus.len(), 2);
        assert_eq!(spec.bus[1].kind, BusKind::Pq);
        assert_eq!(spec.line[0], LineRecord { from: 1, to: 2, r: 0.01, x: 0.1 });
    }

    #[test]
    fn rejects_unknown_fields() {
        let bad_bus = TWO_BUS.replace("q = 0.1", "q = 0.1\nqmax = 3.0");
        assert!(matches!(parse_grid_file(&bad_bus), Err(GridError::Parse(_))));
        let bad_top = format!("base_mva = 100.0\n{TWO_BUS}");
        assert!(matches!(parse_grid_file(&bad_top), Err(GridError::Parse(_))));
        let bad_kind = TWO_BUS.replace("type = \"pq\"", "type = \"pv\"");
        assert!(matches!(parse_grid_file(&bad_kind), Err(GridError::Parse(_))));
    }
}
