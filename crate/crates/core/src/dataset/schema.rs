use std::collections::{BTreeMap, HashSet};
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Driver category of a variable in the supply/demand/balances/markets model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Category {
    Supply,
    Demand,
    Balances,
    FinancialMarkets,
    Target,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum SourceTag {
    Eia,
    Fred,
    Yahoo,
    Other,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariableSpec {
    pub name: String,
    pub category: Category,
    #[serde(default)]
    pub description: String,
    pub source_tag: SourceTag,
}

impl VariableSpec {
    pub fn new(name: impl Into<String>, category: Category, source_tag: SourceTag) -> Self {
        Self {
            name: name.into(),
            category,
            description: String::new(),
            source_tag,
        }
    }
}

/// Bundled transcription of the thirteen-variable crude oil dataset layout.
pub const DEFAULT_SCHEMA_JSON: &str = include_str!("../../data/schema_wti.json");

pub fn default_schema() -> Vec<VariableSpec> {
    serde_json::from_str(DEFAULT_SCHEMA_JSON).expect("bundled schema is valid JSON")
}

pub fn load_schema(path: impl AsRef<Path>) -> Result<Vec<VariableSpec>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let schema: Vec<VariableSpec> = serde_json::from_str(&text)?;
    validate_schema(&schema)?;
    Ok(schema)
}

/// Checks names are unique and non-empty and exactly one variable is the target.
/// Returns the target's position.
pub fn validate_schema(schema: &[VariableSpec]) -> Result<usize> {
    let mut seen = HashSet::new();
    for v in schema {
        if v.name.trim().is_empty() {
            return Err(Error::InvalidSchema("empty variable name".into()));
        }
        if v.name == "date" {
            return Err(Error::InvalidSchema(
                "`date` is reserved for the month column".into(),
            ));
        }
        if !seen.insert(v.name.as_str()) {
            return Err(Error::InvalidSchema(format!(
                "duplicate variable `{}`",
                v.name
            )));
        }
    }
    let targets: Vec<usize> = schema
        .iter()
        .enumerate()
        .filter(|(_, v)| v.category == Category::Target)
        .map(|(i, _)| i)
        .collect();
    match targets.as_slice() {
        [t] => Ok(*t),
        [] => Err(Error::InvalidSchema("no target variable".into())),
        _ => Err(Error::InvalidSchema(format!(
            "{} target variables, expected exactly one",
            targets.len()
        ))),
    }
}

/// Number of input variables per category (target excluded).
pub fn category_counts(schema: &[VariableSpec]) -> BTreeMap<Category, usize> {
    let mut counts = BTreeMap::new();
    for v in schema.iter().filter(|v| v.category != Category::Target) {
        *counts.entry(v.category).or_insert(0) += 1;
    }
    counts
}

/// Requires exactly `inputs` independent variables.
pub fn check_cardinality(schema: &[VariableSpec], inputs: usize) -> Result<()> {
    let found = schema
        .iter()
        .filter(|v| v.category != Category::Target)
        .count();
    if found != inputs {
        return Err(Error::InvalidSchema(format!(
            "expected {inputs} independent variables, schema has {found}"
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_schema_is_canonical() {
        let schema = default_schema();
        assert_eq!(schema.len(), 13);
        let t = validate_schema(&schema).unwrap();
        assert_eq!(schema[t].name, "WTI");
        check_cardinality(&schema, 12).unwrap();
        let counts = category_counts(&schema);
        for c in [
            Category::Supply,
            Category::Demand,
            Category::Balances,
            Category::FinancialMarkets,
        ] {
            assert_eq!(counts[&c], 3, "{c:?}");
        }
        for name in ["ARCA", "CPI", "Population", "OperableCapacity"] {
            assert!(schema.iter().any(|v| v.name == name), "{name}");
        }
    }

    #[test]
    fn schema_json_shape() {
        let json = r#"[{"name":"a","category":"financial_markets","description":"x","source_tag":"YAHOO"},
                       {"name":"y","category":"target","source_tag":"EIA"}]"#;
        let s: Vec<VariableSpec> = serde_json::from_str(json).unwrap();
        assert_eq!(s[0].category, Category::FinancialMarkets);
        assert_eq!(s[1].description, "");
        assert_eq!(validate_schema(&s).unwrap(), 1);
    }

    #[test]
    fn schema_errors() {
        let a = VariableSpec::new("a", Category::Supply, SourceTag::Eia);
        let t = VariableSpec::new("t", Category::Target, SourceTag::Eia);
        assert!(validate_schema(std::slice::from_ref(&a)).is_err());
        assert!(validate_schema(&[t.clone(), t.clone()]).is_err());
        assert!(validate_schema(&[a.clone(), a.clone(), t.clone()]).is_err());
        assert!(check_cardinality(&[a, t], 12).is_err());
    }
}
