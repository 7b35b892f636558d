//! The N-step measurement-assisted gauging protocol: ancilla addition, level
//! entanglers, Fourier measurements, and outcome correction along a spanning
//! tree, with full traces for replay.
//!
//! At level k the entangler writes the level component of the endpoint
//! vertices onto each edge, measurement projects every vertex onto a
//! character of the level quotient and attaches the corresponding chargeon
//! phases, and the correction rewrites those phases as clock operators on the
//! tree path to the root, where the outcome constraint annihilates them. The
//! state after level k is a symmetry-enriched state for the chain subgroup,
//! and after the last level the twisted-double ground state of the full
//! group.

use crate::cohomology::Cocycle3;
use crate::lattice::{CorrectionTree, TriLattice};
use crate::qstate::{measure_fourier, MeasurementRecord, OutcomePlan, QStateError, SparseState};
use crate::series::NormalSeries;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use serde::Serialize;
use std::sync::Arc;

/// A scheduled gauging run.
#[derive(Clone)]
pub struct GaugingPlan {
    pub series: NormalSeries,
    pub lattice: Arc<TriLattice>,
    pub omega: Cocycle3,
    pub seed: u64,
    /// Optional forced outcomes per level (outer index level-1) per vertex.
    pub forced: Option<Vec<Vec<Vec<u8>>>>,
}

/// One applied correction: the edge, the outcome exponents routed through it,
/// and the sign of the clock exponent.
#[derive(Clone, Debug, Serialize)]
pub struct CorrectionEntry {
    pub edge: usize,
    pub exponents: Vec<u8>,
    pub inverted: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct StepTrace {
    pub level: usize,
    pub record: MeasurementRecord,
    pub corrections: Vec<CorrectionEntry>,
    pub term_count: usize,
    pub norm2: f64,
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct GaugingTrace {
    pub steps: Vec<StepTrace>,
}

/// The outcome constraint: exponents sum to zero in every cyclic factor of
/// the level quotient.
pub fn verify_outcome_constraint(record: &MeasurementRecord, series: &NormalSeries) -> bool {
    record.satisfies_constraint(series)
}

/// Rewrites the measured chargeon phases as edge clock operators routed along
/// the correction tree and applies them; the resulting state carries no
/// outcome dependence.
pub fn correct_outcomes(
    state: &SparseState,
    record: &MeasurementRecord,
    series: &NormalSeries,
    tree: &CorrectionTree,
) -> Result<(SparseState, Vec<CorrectionEntry>), QStateError> {
    if !record.satisfies_constraint(series) {
        return Err(QStateError::ConstraintViolated);
    }
    let k = record.level;
    let mut current = state.clone();
    let mut entries = Vec::new();
    for (v, p) in record.outcomes.iter().enumerate() {
        if p.iter().all(|&x| x == 0) {
            continue;
        }
        for (e, toward_root) in tree.path_to_root(v) {
            // moving the chargeon across the edge multiplies by the edge
            // character, inverted when the edge points toward the root
            current = current.apply_edge_level_phase(series, k, e, p, toward_root)?;
            entries.push(CorrectionEntry {
                edge: e,
                exponents: p.clone(),
                inverted: toward_root,
            });
        }
    }
    Ok((current, entries))
}

/// One protocol level: entangle, measure, correct.
pub fn gauge_step(
    state: &SparseState,
    plan: &GaugingPlan,
    k: usize,
    rng: &mut ChaCha12Rng,
    tree: &CorrectionTree,
) -> Result<(SparseState, StepTrace), QStateError> {
    let series = &plan.series;
    let component = {
        let series = series.clone();
        move |g: crate::groups::Elt| series.component(k, g)
    };
    let entangled = state.apply_entangler(&component, None)?;
    let forced_level = plan.forced.as_ref().map(|f| &f[k - 1]);
    let (measured, record) = match forced_level {
        Some(f) => measure_fourier(&entangled, series, k, OutcomePlan::Forced(f))?,
        None => measure_fourier(&entangled, series, k, OutcomePlan::Sample(rng))?,
    };
    let (corrected, corrections) = correct_outcomes(&measured, &record, series, tree)?;
    let trace = StepTrace {
        level: k,
        record,
        corrections,
        term_count: corrected.term_count(),
        norm2: corrected.norm2(),
    };
    Ok((corrected, trace))
}

/// Runs the full protocol on a fixed-point SPT state.
pub fn run_gauging(
    spt: &SparseState,
    plan: &GaugingPlan,
) -> Result<(SparseState, GaugingTrace), QStateError> {
    let mut rng = ChaCha12Rng::seed_from_u64(plan.seed);
    let tree = CorrectionTree::build(&plan.lattice, 0);
    let mut state = spt.with_edge_ancillas()?;
    let mut trace = GaugingTrace::default();
    for k in 1..=plan.series.depth() {
        let (next, step) = gauge_step(&state, plan, k, &mut rng, &tree)?;
        state = next;
        trace.steps.push(step);
    }
    Ok((state, trace))
}
