//! Unique-violation predicate and the violation archive.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::grammar::{FieldKind, ScenarioVector, SearchSpaceSchema};
use crate::objectives::{ObjectiveVector, ViolationKind};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UniquenessParams {
    /// Percentage of changeable fields that must differ.
    pub th1_percent: f64,
    /// Per-field normalized difference, in percent, that counts as distinct.
    pub th2_percent: f64,
}

impl Default for UniquenessParams {
    fn default() -> Self {
        UniquenessParams {
            th1_percent: 10.0,
            th2_percent: 50.0,
        }
    }
}

impl UniquenessParams {
    pub fn new(th1_percent: f64, th2_percent: f64) -> Self {
        UniquenessParams {
            th1_percent,
            th2_percent,
        }
    }

    pub fn is_valid(&self) -> bool {
        (0.0..=100.0).contains(&self.th1_percent)
            && self.th1_percent > 0.0
            && (0.0..=100.0).contains(&self.th2_percent)
            && self.th2_percent > 0.0
    }

    /// Differing fields needed out of `changeable`: `ceil(th1% · changeable)`, at least 1.
    pub fn required_differences(&self, changeable: usize) -> usize {
        let raw = self.th1_percent * changeable as f64 / 100.0;
        // tolerance keeps e.g. 10% of 20 at exactly 2 despite rounding noise
        ((raw - 1e-9).ceil().max(1.0)) as usize
    }
}

/// Number of changeable fields on which `a` and `b` are distinguishable.
pub fn fields_differ(a: &ScenarioVector, b: &ScenarioVector, schema: &SearchSpaceSchema, th2_percent: f64) -> usize {
    let th2 = th2_percent / 100.0;
    schema
        .fields
        .iter()
        .zip(a.values().iter().zip(b.values()))
        .filter(|(f, (x, y))| {
            f.is_changeable()
                && match f.kind {
                    FieldKind::Discrete => x != y,
                    FieldKind::Continuous => ((*x - *y) / f.span()).abs() >= th2,
                }
        })
        .count()
}

/// `a` and `b` are too close to count as distinct violations.
pub fn is_similar(
    a: &ScenarioVector,
    b: &ScenarioVector,
    schema: &SearchSpaceSchema,
    params: &UniquenessParams,
) -> bool {
    fields_differ(a, b, schema, params.th2_percent) < params.required_differences(schema.changeable_count())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArchiveEntry {
    pub vector: ScenarioVector,
    pub kind: ViolationKind,
    pub objectives: ObjectiveVector,
    pub generation: usize,
}

#[derive(Debug, Clone)]
pub struct ViolationArchive {
    pub entries: Vec<ArchiveEntry>,
    pub params: UniquenessParams,
    schema: Arc<SearchSpaceSchema>,
}

impl ViolationArchive {
    pub fn new(schema: Arc<SearchSpaceSchema>, params: UniquenessParams) -> Self {
        ViolationArchive {
            entries: Vec::new(),
            params,
            schema,
        }
    }

    pub fn schema(&self) -> &SearchSpaceSchema {
        &self.schema
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn count_kind(&self, kind: ViolationKind) -> usize {
        self.entries.iter().filter(|e| e.kind == kind).count()
    }

    /// Unique against every archived entry of the same kind.
    pub fn is_unique(&self, v: &ScenarioVector, kind: ViolationKind) -> bool {
        self.entries
            .iter()
            .filter(|e| e.kind == kind)
            .all(|e| !is_similar(v, &e.vector, &self.schema, &self.params))
    }

    /// Unique against every archived entry regardless of kind.
    pub fn is_novel(&self, v: &ScenarioVector) -> bool {
        self.entries
            .iter()
            .all(|e| !is_similar(v, &e.vector, &self.schema, &self.params))
    }

    /// Insert if unique; returns whether the entry was added.
    pub fn insert(&mut self, entry: ArchiveEntry) -> bool {
        if self.is_unique(&entry.vector, entry.kind) {
            self.entries.push(entry);
            true
        } else {
            false
        }
    }

    pub fn to_json(&self) -> serde_json::Result<String> {
        serde_json::to_string_pretty(&self.entries)
    }
}

/// Keep candidates that are novel w.r.t. the archive and mutually distinct
/// from `pending` and from earlier retained candidates; first one wins.
pub fn filter_similar(
    candidates: Vec<ScenarioVector>,
    archive: &ViolationArchive,
    pending: &[ScenarioVector],
) -> Vec<ScenarioVector> {
    let schema = archive.schema();
    let params = &archive.params;
    let mut kept: Vec<ScenarioVector> = Vec::with_capacity(candidates.len());
    for c in candidates {
        if !archive.is_novel(&c) {
            continue;
        }
        let clash = pending
            .iter()
            .chain(kept.iter())
            .any(|p| is_similar(&c, p, schema, params));
        if !clash {
            kept.push(c);
        }
    }
    kept
}
