//! Named reconstruction strategies, selectable at runtime.

use std::collections::BTreeMap;

use super::state::{linear_inversion_state, mle_state};
use super::{mle_process, Estimate, TomographyOptions, TomographyResult};
use crate::counts::CountRecord;
use crate::error::{Error, Result};
use crate::quantum::{bell_state, DensityMatrix, MetricReport};

/// Turns a set of count records into an estimate with metrics.
pub trait Reconstructor: Send + Sync {
    fn name(&self) -> &'static str;
    fn reconstruct(&self, records: &[CountRecord]) -> Result<TomographyResult>;
}

pub struct MleState {
    pub options: TomographyOptions,
}

impl Reconstructor for MleState {
    fn name(&self) -> &'static str {
        "mle"
    }

    fn reconstruct(&self, records: &[CountRecord]) -> Result<TomographyResult> {
        mle_state(records, &self.options)
    }
}

/// Linear inversion followed by eigenvalue clipping.
pub struct LinearState {
    pub options: TomographyOptions,
}

impl Reconstructor for LinearState {
    fn name(&self) -> &'static str {
        "linear"
    }

    fn reconstruct(&self, records: &[CountRecord]) -> Result<TomographyResult> {
        let records = if self.options.subtract_accidentals {
            super::subtract_accidentals(records)
        } else {
            records.to_vec()
        };
        let raw = linear_inversion_state(&records)?;
        let rho = DensityMatrix::project(&raw)?;
        let metrics = MetricReport::for_state(&rho, &bell_state(self.options.reference))?;
        let log_likelihood = super::state::state_log_likelihood(&records, &rho)?;
        Ok(TomographyResult {
            estimate: Estimate::State(rho),
            log_likelihood,
            iterations: 0,
            converged: true,
            metrics,
            likelihood_trace: vec![],
        })
    }
}

pub struct MleProcess {
    pub options: TomographyOptions,
}

impl Reconstructor for MleProcess {
    fn name(&self) -> &'static str {
        if self.options.trace_preserving {
            "mle"
        } else {
            "mle-postnorm"
        }
    }

    fn reconstruct(&self, records: &[CountRecord]) -> Result<TomographyResult> {
        mle_process(records, &self.options)
    }
}

type Factory = fn(&TomographyOptions) -> Box<dyn Reconstructor>;

/// Name → constructor table.
pub struct Registry {
    entries: BTreeMap<&'static str, Factory>,
}

impl Registry {
    pub fn empty() -> Self {
        Registry { entries: BTreeMap::new() }
    }

    pub fn register(&mut self, name: &'static str, factory: Factory) {
        self.entries.insert(name, factory);
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.entries.keys().copied().collect()
    }

    pub fn build(&self, name: &str, options: &TomographyOptions) -> Result<Box<dyn Reconstructor>> {
        self.entries
            .get(name)
            .map(|f| f(options))
            .ok_or_else(|| Error::UnknownStrategy(name.to_string()))
    }
}

pub fn state_reconstructors() -> Registry {
    let mut r = Registry::empty();
    r.register("mle", |o| Box::new(MleState { options: *o }));
    r.register("linear", |o| Box::new(LinearState { options: *o }));
    r
}

pub fn process_reconstructors() -> Registry {
    let mut r = Registry::empty();
    r.register("mle", |o| Box::new(MleProcess { options: TomographyOptions { trace_preserving: true, ..*o } }));
    r.register("mle-postnorm", |o| {
        Box::new(MleProcess { options: TomographyOptions { trace_preserving: false, ..*o } })
    });
    r
}
