//! Scenario grammar: the declarative search space a campaign fuzzes over.
//!
//! A schema document nests field groups the same way a simulator API would
//! (`pedestrian_0.setup.location.x`), and is flattened at parse time into an
//! ordered list of [`FieldSpec`]s. Document order defines the index order of
//! every [`ScenarioVector`].
//!
//! Leaf encodings accepted in the document:
//!
//! * `[min, max]`: continuous, uniform
//! * `[min, max, ["normal", mean | null, variance]]`: continuous, clipped normal
//! * `{"discrete": [min, max, ...]}` / `{"continuous": [min, max, ...]}`: explicit kind
//!
//! Reserved top-level keys: `map_id`, `ego_route`, `center_transforms` and
//! `customized_constraints`. Everything else is a field group.

use std::collections::HashMap;

use rand::Rng;
use rand_distr::{Distribution as _, Normal};
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use thiserror::Error;

/// Tolerance used when deciding whether a linear constraint is violated.
pub const CONSTRAINT_TOL: f64 = 1e-9;

/// Default number of full-vector rejections before sampling gives up.
pub const DEFAULT_MAX_ATTEMPTS: usize = 1000;

#[derive(Debug, Error)]
pub enum GrammarError {
    #[error("schema is not valid JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("field `{field}` has malformed range: min {min} > max {max}")]
    MalformedRange { field: String, min: f64, max: f64 },
    #[error("discrete field `{field}` has non-integer bounds [{min}, {max}]")]
    NonIntegerDiscrete { field: String, min: f64, max: f64 },
    #[error("constraint {index} references unknown field `{label}`")]
    UnknownLabel { index: usize, label: String },
    #[error("constraint {index} has {coefficients} coefficients but {labels} labels")]
    ConstraintArity {
        index: usize,
        coefficients: usize,
        labels: usize,
    },
    #[error("invalid entry at `{path}`: {reason}")]
    InvalidEntry { path: String, reason: String },
    #[error("constraints could not be satisfied after {attempts} sampling attempts")]
    ConstraintUnsatisfiable { attempts: usize },
    #[error("vector has {actual} entries, schema expects {expected}")]
    DimensionMismatch { expected: usize, actual: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FieldKind {
    Continuous,
    Discrete,
}

/// Sampling distribution of a field, always clipped to the field's range.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FieldDistribution {
    Uniform,
    /// `mean == None` means the midpoint of the range.
    Normal {
        mean: Option<f64>,
        variance: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldSpec {
    pub name: String,
    pub kind: FieldKind,
    pub min: f64,
    pub max: f64,
    pub distribution: FieldDistribution,
}

impl FieldSpec {
    pub fn is_changeable(&self) -> bool {
        self.max > self.min
    }

    pub fn span(&self) -> f64 {
        self.max - self.min
    }

    pub fn effective_mean(&self) -> f64 {
        match self.distribution {
            FieldDistribution::Normal { mean: Some(m), .. } => m,
            _ => 0.5 * (self.min + self.max),
        }
    }

    /// Clamp into range and round discrete values.
    pub fn repair(&self, value: f64) -> f64 {
        let v = value.clamp(self.min, self.max);
        match self.kind {
            FieldKind::Continuous => v,
            FieldKind::Discrete => v.round().clamp(self.min, self.max),
        }
    }

    fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        if !self.is_changeable() {
            return self.min;
        }
        let raw = match (self.distribution, self.kind) {
            (FieldDistribution::Uniform, FieldKind::Continuous) => rng.random_range(self.min..=self.max),
            // widen by half a step so every integer gets equal mass after rounding
            (FieldDistribution::Uniform, FieldKind::Discrete) => rng.random_range(self.min - 0.5..self.max + 0.5),
            (FieldDistribution::Normal { variance, .. }, _) => {
                let sd = variance.max(0.0).sqrt();
                match Normal::new(self.effective_mean(), sd) {
                    Ok(n) => n.sample(rng),
                    Err(_) => self.effective_mean(),
                }
            }
        };
        self.repair(raw)
    }
}

/// `Σ coefficients[i] · x[labels[i]] ≤ value`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearConstraint {
    pub coefficients: Vec<f64>,
    pub labels: Vec<String>,
    pub value: f64,
    /// Field indices resolved from `labels` at parse time.
    #[serde(skip)]
    pub indices: Vec<usize>,
}

impl LinearConstraint {
    pub fn lhs(&self, values: &[f64]) -> f64 {
        self.coefficients
            .iter()
            .zip(&self.indices)
            .map(|(c, &i)| c * values[i])
            .sum()
    }
}

/// Where a group's relative location fields are anchored on the map.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CenterTransform {
    /// Point at this fraction of the ego route's arc length.
    WaypointRatio(f64),
    Absolute {
        x: f64,
        y: f64,
    },
}

impl Default for CenterTransform {
    fn default() -> Self {
        CenterTransform::WaypointRatio(0.5)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchSpaceSchema {
    pub fields: Vec<FieldSpec>,
    pub constraints: Vec<LinearConstraint>,
    pub center_transforms: Vec<(String, CenterTransform)>,
    pub map_id: String,
    pub ego_route: Vec<[f64; 2]>,
    #[serde(skip)]
    index: HashMap<String, usize>,
}

/// One concrete assignment of every schema field, aligned to `schema.fields`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ScenarioVector(pub Vec<f64>);

impl ScenarioVector {
    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// A constraint that `check_constraints` found violated, with `lhs - value`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConstraintViolation {
    pub index: usize,
    pub slack: f64,
}

const RESERVED: [&str; 4] = ["map_id", "ego_route", "center_transforms", "customized_constraints"];

/// Turns `vehicle[0].trigger_event` into `vehicle_0.trigger_event`.
pub fn canonical_label(label: &str) -> String {
    label.replace('[', "_").replace(']', "")
}

pub fn parse_schema(document: &str) -> Result<SearchSpaceSchema, GrammarError> {
    let root: Value = serde_json::from_str(document)?;
    let obj = root.as_object().ok_or_else(|| GrammarError::InvalidEntry {
        path: "<root>".into(),
        reason: "schema must be a JSON object".into(),
    })?;

    let map_id = obj
        .get("map_id")
        .and_then(Value::as_str)
        .unwrap_or("straight_road")
        .to_string();

    let ego_route = match obj.get("ego_route") {
        None => Vec::new(),
        Some(v) => parse_route(v)?,
    };

    let mut fields = Vec::new();
    for (key, value) in obj {
        if RESERVED.contains(&key.as_str()) {
            continue;
        }
        collect_fields(key, value, &mut fields)?;
    }

    let mut index = HashMap::with_capacity(fields.len());
    for (i, f) in fields.iter().enumerate() {
        if index.insert(f.name.clone(), i).is_some() {
            return Err(GrammarError::InvalidEntry {
                path: f.name.clone(),
                reason: "duplicate field path".into(),
            });
        }
    }

    let center_transforms = match obj.get("center_transforms") {
        None => Vec::new(),
        Some(v) => parse_centers(v)?,
    };

    let constraints = match obj.get("customized_constraints") {
        None => Vec::new(),
        Some(v) => parse_constraints(v, &index)?,
    };

    Ok(SearchSpaceSchema {
        fields,
        constraints,
        center_transforms,
        map_id,
        ego_route,
        index,
    })
}

fn parse_route(v: &Value) -> Result<Vec<[f64; 2]>, GrammarError> {
    let bad = |reason: &str| GrammarError::InvalidEntry {
        path: "ego_route".into(),
        reason: reason.into(),
    };
    let arr = v.as_array().ok_or_else(|| bad("expected array of [x, y]"))?;
    arr.iter()
        .map(|p| {
            let xy = p.as_array().ok_or_else(|| bad("waypoint must be [x, y]"))?;
            match (xy.first().and_then(Value::as_f64), xy.get(1).and_then(Value::as_f64)) {
                (Some(x), Some(y)) if xy.len() == 2 => Ok([x, y]),
                _ => Err(bad("waypoint must be [x, y]")),
            }
        })
        .collect()
}

fn parse_centers(v: &Value) -> Result<Vec<(String, CenterTransform)>, GrammarError> {
    let obj = v.as_object().ok_or_else(|| GrammarError::InvalidEntry {
        path: "center_transforms".into(),
        reason: "expected object".into(),
    })?;
    let mut out = Vec::with_capacity(obj.len());
    for (prefix, spec) in obj {
        let bad = |reason: &str| GrammarError::InvalidEntry {
            path: format!("center_transforms.{prefix}"),
            reason: reason.into(),
        };
        let arr = spec
            .as_array()
            .ok_or_else(|| bad("expected [\"waypoint_ratio\", r] or [\"absolute\", x, y]"))?;
        let tag = arr.first().and_then(Value::as_str).unwrap_or_default();
        let num = |i: usize| arr.get(i).and_then(Value::as_f64);
        let ct = match tag {
            "waypoint_ratio" => {
                let r = num(1).ok_or_else(|| bad("missing ratio"))?;
                if !(0.0..=1.0).contains(&r) {
                    return Err(bad("ratio must be in [0, 1]"));
                }
                CenterTransform::WaypointRatio(r)
            }
            "absolute" | "absolute location" | "absolute_location" => CenterTransform::Absolute {
                x: num(1).ok_or_else(|| bad("missing x"))?,
                y: num(2).ok_or_else(|| bad("missing y"))?,
            },
            other => return Err(bad(&format!("unknown transform `{other}`"))),
        };
        out.push((canonical_label(prefix), ct));
    }
    Ok(out)
}

fn parse_constraints(v: &Value, index: &HashMap<String, usize>) -> Result<Vec<LinearConstraint>, GrammarError> {
    #[derive(Deserialize)]
    struct Raw {
        coefficients: Vec<f64>,
        labels: Vec<String>,
        value: f64,
    }
    let raws: Vec<Raw> = serde_json::from_value(v.clone())?;
    raws.into_iter()
        .enumerate()
        .map(|(ci, raw)| {
            if raw.coefficients.len() != raw.labels.len() {
                return Err(GrammarError::ConstraintArity {
                    index: ci,
                    coefficients: raw.coefficients.len(),
                    labels: raw.labels.len(),
                });
            }
            let labels: Vec<String> = raw.labels.iter().map(|l| canonical_label(l)).collect();
            let indices = labels
                .iter()
                .map(|l| {
                    index.get(l).copied().ok_or_else(|| GrammarError::UnknownLabel {
                        index: ci,
                        label: l.clone(),
                    })
                })
                .collect::<Result<Vec<_>, _>>()?;
            Ok(LinearConstraint {
                coefficients: raw.coefficients,
                labels,
                value: raw.value,
                indices,
            })
        })
        .collect()
}

fn collect_fields(path: &str, value: &Value, out: &mut Vec<FieldSpec>) -> Result<(), GrammarError> {
    match value {
        Value::Array(arr) => out.push(parse_leaf(path, arr, FieldKind::Continuous)?),
        Value::Object(map) => {
            if let Some((kind, arr)) = explicit_leaf(map) {
                out.push(parse_leaf(path, arr, kind)?);
            } else {
                for (key, child) in map {
                    collect_fields(&format!("{path}.{key}"), child, out)?;
                }
            }
        }
        _ => {
            return Err(GrammarError::InvalidEntry {
                path: path.into(),
                reason: "expected a range array or a nested group".into(),
            })
        }
    }
    Ok(())
}

fn explicit_leaf(map: &Map<String, Value>) -> Option<(FieldKind, &Vec<Value>)> {
    if map.len() != 1 {
        return None;
    }
    let (key, v) = map.iter().next()?;
    let kind = match key.as_str() {
        "discrete" => FieldKind::Discrete,
        "continuous" => FieldKind::Continuous,
        _ => return None,
    };
    v.as_array().map(|a| (kind, a))
}

fn parse_leaf(path: &str, arr: &[Value], kind: FieldKind) -> Result<FieldSpec, GrammarError> {
    let bad = |reason: &str| GrammarError::InvalidEntry {
        path: path.into(),
        reason: reason.into(),
    };
    if arr.len() < 2 || arr.len() > 3 {
        return Err(bad("range must be [min, max] or [min, max, distribution]"));
    }
    let min = arr[0].as_f64().ok_or_else(|| bad("min is not a number"))?;
    let max = arr[1].as_f64().ok_or_else(|| bad("max is not a number"))?;
    if !(min.is_finite() && max.is_finite()) {
        return Err(bad("bounds must be finite"));
    }
    if min > max {
        return Err(GrammarError::MalformedRange {
            field: path.into(),
            min,
            max,
        });
    }
    if kind == FieldKind::Discrete && (min.fract() != 0.0 || max.fract() != 0.0) {
        return Err(GrammarError::NonIntegerDiscrete {
            field: path.into(),
            min,
            max,
        });
    }
    let distribution = match arr.get(2) {
        None => FieldDistribution::Uniform,
        Some(d) => parse_distribution(d).map_err(|r| bad(&r))?,
    };
    Ok(FieldSpec {
        name: path.into(),
        kind,
        min,
        max,
        distribution,
    })
}

fn parse_distribution(v: &Value) -> Result<FieldDistribution, String> {
    let arr = v.as_array().ok_or("distribution must be [name, mean, variance]")?;
    let name = arr.first().and_then(Value::as_str).ok_or("distribution name missing")?;
    match name {
        "uniform" => Ok(FieldDistribution::Uniform),
        "normal" => {
            let mean = match arr.get(1) {
                None | Some(Value::Null) => None,
                Some(Value::String(s)) if s == "None" => None,
                Some(m) => Some(m.as_f64().ok_or("normal mean must be a number or null")?),
            };
            let variance = arr.get(2).and_then(Value::as_f64).ok_or("normal variance missing")?;
            if variance < 0.0 {
                return Err("variance must be non-negative".into());
            }
            Ok(FieldDistribution::Normal { mean, variance })
        }
        other => Err(format!("unknown distribution `{other}`")),
    }
}

impl SearchSpaceSchema {
    /// Build a schema programmatically. Constraint labels are resolved here.
    pub fn new(
        fields: Vec<FieldSpec>,
        constraints: Vec<LinearConstraint>,
        map_id: impl Into<String>,
        ego_route: Vec<[f64; 2]>,
    ) -> Result<Self, GrammarError> {
        let index: HashMap<String, usize> = fields.iter().enumerate().map(|(i, f)| (f.name.clone(), i)).collect();
        for f in &fields {
            if f.min > f.max {
                return Err(GrammarError::MalformedRange {
                    field: f.name.clone(),
                    min: f.min,
                    max: f.max,
                });
            }
        }
        let constraints = constraints
            .into_iter()
            .enumerate()
            .map(|(ci, mut c)| {
                if c.coefficients.len() != c.labels.len() {
                    return Err(GrammarError::ConstraintArity {
                        index: ci,
                        coefficients: c.coefficients.len(),
                        labels: c.labels.len(),
                    });
                }
                c.labels = c.labels.iter().map(|l| canonical_label(l)).collect();
                c.indices = c
                    .labels
                    .iter()
                    .map(|l| {
                        index.get(l).copied().ok_or_else(|| GrammarError::UnknownLabel {
                            index: ci,
                            label: l.clone(),
                        })
                    })
                    .collect::<Result<_, _>>()?;
                Ok(c)
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(SearchSpaceSchema {
            fields,
            constraints,
            center_transforms: Vec::new(),
            map_id: map_id.into(),
            ego_route,
            index,
        })
    }

    pub fn with_center(mut self, prefix: &str, transform: CenterTransform) -> Self {
        self.center_transforms.push((canonical_label(prefix), transform));
        self
    }

    pub fn dim(&self) -> usize {
        self.fields.len()
    }

    pub fn field_index(&self, path: &str) -> Option<usize> {
        self.index.get(&canonical_label(path)).copied()
    }

    pub fn changeable_count(&self) -> usize {
        self.fields.iter().filter(|f| f.is_changeable()).count()
    }

    /// Center transform for a group prefix; the route midpoint if unset.
    pub fn center_for(&self, prefix: &str) -> CenterTransform {
        self.center_transforms
            .iter()
            .find(|(p, _)| p == prefix)
            .map(|(_, c)| *c)
            .unwrap_or_default()
    }

    pub fn check_dim(&self, v: &ScenarioVector) -> Result<(), GrammarError> {
        if v.len() == self.dim() {
            Ok(())
        } else {
            Err(GrammarError::DimensionMismatch {
                expected: self.dim(),
                actual: v.len(),
            })
        }
    }

    pub fn in_bounds(&self, v: &ScenarioVector) -> bool {
        v.len() == self.dim()
            && self
                .fields
                .iter()
                .zip(&v.0)
                .all(|(f, &x)| x >= f.min && x <= f.max && (f.kind == FieldKind::Continuous || x.fract() == 0.0))
    }

    pub fn is_feasible(&self, v: &ScenarioVector) -> bool {
        self.in_bounds(v) && self.check_constraints(v).is_empty()
    }

    /// Clip every entry into range and round discrete entries.
    pub fn repair(&self, v: &ScenarioVector) -> ScenarioVector {
        ScenarioVector(self.fields.iter().zip(&v.0).map(|(f, &x)| f.repair(x)).collect())
    }

    pub fn check_constraints(&self, v: &ScenarioVector) -> Vec<ConstraintViolation> {
        self.constraints
            .iter()
            .enumerate()
            .filter_map(|(index, c)| {
                let slack = c.lhs(&v.0) - c.value;
                (slack > CONSTRAINT_TOL).then_some(ConstraintViolation { index, slack })
            })
            .collect()
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R, max_attempts: usize) -> Result<ScenarioVector, GrammarError> {
        let attempts = max_attempts.max(1);
        for _ in 0..attempts {
            let v = ScenarioVector(self.fields.iter().map(|f| f.draw(rng)).collect());
            if self.check_constraints(&v).is_empty() {
                return Ok(v);
            }
        }
        Err(GrammarError::ConstraintUnsatisfiable { attempts })
    }

    pub fn normalize(&self, v: &ScenarioVector) -> Vec<f64> {
        self.fields
            .iter()
            .zip(&v.0)
            .map(|(f, &x)| if f.is_changeable() { (x - f.min) / f.span() } else { 0.0 })
            .collect()
    }

    /// Inverse of [`normalize`](Self::normalize). Discrete entries are not rounded.
    pub fn denormalize(&self, unit: &[f64]) -> ScenarioVector {
        ScenarioVector(
            self.fields
                .iter()
                .zip(unit)
                .map(|(f, &u)| f.min + u * f.span())
                .collect(),
        )
    }

    /// Constraints re-expressed over the unit cube: dense rows `a` and bounds `b`
    /// with `a · u ≤ b`.
    pub fn normalized_constraints(&self) -> Vec<(Vec<f64>, f64)> {
        self.constraints
            .iter()
            .map(|c| {
                let mut row = vec![0.0; self.dim()];
                let mut rhs = c.value;
                for (coef, &i) in c.coefficients.iter().zip(&c.indices) {
                    let f = &self.fields[i];
                    row[i] += coef * f.span();
                    rhs -= coef * f.min;
                }
                (row, rhs)
            })
            .collect()
    }

    /// Midpoint of every range, rounded for discrete fields.
    pub fn midpoint(&self) -> ScenarioVector {
        ScenarioVector(self.fields.iter().map(|f| f.repair(0.5 * (f.min + f.max))).collect())
    }

    pub fn value_of(&self, v: &ScenarioVector, path: &str) -> Option<f64> {
        self.field_index(path).map(|i| v.0[i])
    }

    /// Rebuild the label index after deserialization.
    pub fn reindex(&mut self) {
        self.index = self
            .fields
            .iter()
            .enumerate()
            .map(|(i, f)| (f.name.clone(), i))
            .collect();
        for c in &mut self.constraints {
            c.indices = c.labels.iter().filter_map(|l| self.index.get(l).copied()).collect();
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    const LISTING: &str = r#"{
        "vehicle_0": {"trigger_event": {"target_speed": [0, 10]}},
        "vehicle_1": {"trigger_event": {"target_speed": [0, 10]}},
        "pedestrian_0": {
            "setup": {
                "location": {
                    "x": [-123, -83, ["normal", null, 10]],
                    "y": [3.5, 43.5, ["normal", null, 10]]
                },
                "direction": [0, 360],
                "type": {"discrete": [0, 12]}
            },
            "trigger_event": {
                "trigger_distance": [2, 50],
                "target_speed": [0, 4],
                "travel_distance": [0, 50]
            }
        },
        "customized_constraints": [{
            "coefficients": [1, -0.5],
            "labels": ["vehicle[0].trigger_event.target_speed",
                       "vehicle[1].trigger_event.target_speed"],
            "value": 0
        }]
    }"#;

    fn one_field(min: f64, max: f64) -> SearchSpaceSchema {
        SearchSpaceSchema::new(
            vec![FieldSpec {
                name: "x".into(),
                kind: FieldKind::Continuous,
                min,
                max,
                distribution: FieldDistribution::Uniform,
            }],
            vec![],
            "straight_road",
            vec![],
        )
        .unwrap()
    }

    #[test]
    fn parses_pedestrian_block() {
        let s = parse_schema(LISTING).unwrap();
        let i = s.field_index("pedestrian_0.setup.location.x").unwrap();
        let f = &s.fields[i];
        assert_eq!((f.min, f.max), (-123.0, -83.0));
        assert_eq!(
            f.distribution,
            FieldDistribution::Normal {
                mean: None,
                variance: 10.0
            }
        );
        assert_eq!(f.effective_mean(), -103.0);
        let t = &s.fields[s.field_index("pedestrian_0.setup.type").unwrap()];
        assert_eq!(t.kind, FieldKind::Discrete);
    }

    #[test]
    fn field_order_follows_document() {
        let s = parse_schema(LISTING).unwrap();
        let names: Vec<_> = s.fields.iter().map(|f| f.name.as_str()).collect();
        assert_eq!(names[0], "vehicle_0.trigger_event.target_speed");
        assert_eq!(names[2], "pedestrian_0.setup.location.x");
        assert_eq!(
            names.last().copied(),
            Some("pedestrian_0.trigger_event.travel_distance")
        );
    }

    #[test]
    fn parses_listing_constraint() {
        let s = parse_schema(LISTING).unwrap();
        assert_eq!(s.constraints.len(), 1);
        let c = &s.constraints[0];
        assert_eq!(c.coefficients, vec![1.0, -0.5]);
        assert_eq!(
            c.labels,
            vec![
                "vehicle_0.trigger_event.target_speed",
                "vehicle_1.trigger_event.target_speed"
            ]
        );
        assert_eq!(c.value, 0.0);
    }

    #[test]
    fn rejects_bad_documents() {
        assert!(matches!(
            parse_schema(r#"{"a": [5, 1]}"#),
            Err(GrammarError::MalformedRange { .. })
        ));
        assert!(matches!(
            parse_schema(r#"{"a": {"discrete": [0.5, 3]}}"#),
            Err(GrammarError::NonIntegerDiscrete { .. })
        ));
        assert!(matches!(
            parse_schema(
                r#"{"a": [0, 1], "customized_constraints": [{"coefficients": [1], "labels": ["b"], "value": 0}]}"#
            ),
            Err(GrammarError::UnknownLabel { .. })
        ));
        assert!(matches!(parse_schema("{not json"), Err(GrammarError::Json(_))));
    }

    #[test]
    fn empty_constraints_make_box_feasible() {
        let s = parse_schema(r#"{"a": [0, 1], "customized_constraints": []}"#).unwrap();
        assert!(s.constraints.is_empty());
        assert!(s.check_constraints(&ScenarioVector(vec![1.0])).is_empty());
    }

    #[test]
    fn sample_stays_in_box() {
        let s = one_field(0.0, 10.0);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..1000 {
            let v = s.sample(&mut rng, 10).unwrap();
            assert!((0.0..=10.0).contains(&v.0[0]));
        }
    }

    #[test]
    fn listing_constraint_holds_for_every_sample() {
        let s = parse_schema(LISTING).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let i0 = s.field_index("vehicle_0.trigger_event.target_speed").unwrap();
        let i1 = s.field_index("vehicle_1.trigger_event.target_speed").unwrap();
        for _ in 0..10_000 {
            let v = s.sample(&mut rng, DEFAULT_MAX_ATTEMPTS).unwrap();
            assert!(v.0[i0] - 0.5 * v.0[i1] <= 0.0);
            assert!(s.in_bounds(&v));
        }
    }

    #[test]
    fn unsatisfiable_constraint_errors() {
        let mut s = one_field(0.0, 10.0);
        s = SearchSpaceSchema::new(
            s.fields.clone(),
            vec![LinearConstraint {
                coefficients: vec![1.0],
                labels: vec!["x".into()],
                value: -1.0,
                indices: vec![],
            }],
            "straight_road",
            vec![],
        )
        .unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(matches!(
            s.sample(&mut rng, 50),
            Err(GrammarError::ConstraintUnsatisfiable { attempts: 50 })
        ));
    }

    #[test]
    fn discrete_samples_are_integers() {
        let s = parse_schema(r#"{"t": {"discrete": [0, 3]}}"#).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut seen = [0usize; 4];
        for _ in 0..4000 {
            let v = s.sample(&mut rng, 1).unwrap().0[0];
            assert_eq!(v.fract(), 0.0);
            seen[v as usize] += 1;
        }
        // each integer roughly equally likely
        assert!(seen.iter().all(|&c| c > 850 && c < 1150), "{seen:?}");
    }

    #[test]
    fn normalize_examples() {
        let s = one_field(0.0, 10.0);
        assert_eq!(s.normalize(&ScenarioVector(vec![3.0])), vec![0.3]);
        assert_eq!(s.normalize(&ScenarioVector(vec![0.0])), vec![0.0]);
        assert_eq!(s.normalize(&ScenarioVector(vec![10.0])), vec![1.0]);
        let fixed = one_field(4.0, 4.0);
        assert_eq!(fixed.normalize(&ScenarioVector(vec![4.0])), vec![0.0]);
        assert_eq!(fixed.denormalize(&[0.0]).0, vec![4.0]);
    }

    #[test]
    fn check_constraints_reports_slack() {
        let s = parse_schema(LISTING).unwrap();
        let mut v = s.midpoint();
        v.0[0] = 2.0;
        v.0[1] = 2.0;
        let viol = s.check_constraints(&v);
        assert_eq!(viol.len(), 1);
        assert_eq!(viol[0].index, 0);
        assert!((viol[0].slack - 1.0).abs() < 1e-12);
        // boundary is feasible (non-strict inequality)
        v.0[0] = 1.0;
        assert!(s.check_constraints(&v).is_empty());
    }

    #[test]
    fn normalized_constraints_match_original() {
        let s = parse_schema(LISTING).unwrap();
        let rows = s.normalized_constraints();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..200 {
            let v = ScenarioVector(s.fields.iter().map(|f| rng.random_range(f.min..=f.max)).collect());
            let u = s.normalize(&v);
            for (c, (row, rhs)) in s.constraints.iter().zip(&rows) {
                let orig = c.lhs(&v.0) - c.value;
                let unit: f64 = row.iter().zip(&u).map(|(a, b)| a * b).sum::<f64>() - rhs;
                assert!((orig - unit).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn center_transforms_parse() {
        let s = parse_schema(
            r#"{"center_transforms": {"vehicle_0": ["waypoint_ratio", 0], "static[1]": ["absolute", 3, -4]},
                "a": [0, 1]}"#,
        )
        .unwrap();
        assert_eq!(s.center_for("vehicle_0"), CenterTransform::WaypointRatio(0.0));
        assert_eq!(s.center_for("static_1"), CenterTransform::Absolute { x: 3.0, y: -4.0 });
        assert_eq!(s.center_for("pedestrian_0"), CenterTransform::WaypointRatio(0.5));
    }
}
