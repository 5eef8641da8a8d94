//! JSON trace of interpolation queries.

use std::time::Instant;

use cdd_chc_core::interpolate::{Interpolator, ItpError, ItpQuery, ItpResult};
use serde::Serialize;

#[derive(Clone, Debug, Serialize)]
pub struct TraceEntry {
    pub label: String,
    pub pre_size: usize,
    pub post_size: usize,
    pub shared: Vec<String>,
    pub outcome: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub interpolant: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
    pub micros: u128,
}

/// Records every query passed to the inner backend.
#[derive(Debug)]
pub struct Tracing<I> {
    pub inner: I,
    pub entries: Vec<TraceEntry>,
}

impl<I> Tracing<I> {
    pub fn new(inner: I) -> Self {
        Tracing { inner, entries: Vec::new() }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.entries).expect("trace entries serialize")
    }
}

impl<I: Interpolator> Interpolator for Tracing<I> {
    fn interpolate(&mut self, q: &ItpQuery) -> Result<ItpResult, ItpError> {
        let start = Instant::now();
        let res = self.inner.interpolate(q);
        let (outcome, interpolant, detail) = match &res {
            Ok(ItpResult::Interpolant(i)) => ("interpolant", Some(i.to_string()), None),
            Ok(ItpResult::MutuallySat(_)) => ("mutually-sat", None, None),
            Ok(ItpResult::Unknown(r)) => ("unknown", None, Some(r.clone())),
            Err(e) => ("error", None, Some(e.to_string())),
        };
        self.entries.push(TraceEntry {
            label: q.label.clone(),
            pre_size: q.pre.size(),
            post_size: q.post.size(),
            shared: q.shared.iter().map(|v| v.name.clone()).collect(),
            outcome: outcome.to_string(),
            interpolant,
            detail,
            micros: start.elapsed().as_micros(),
        });
        res
    }
}
