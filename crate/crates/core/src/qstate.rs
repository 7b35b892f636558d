//! Sparse amplitude vectors over group-valued lattice configurations, the
//! fixed-point state constructors, and the shift/clock/entangling/measurement
//! primitives the gauging protocol is built from.
//!
//! A basis configuration assigns a group element to every vertex (when the
//! vertex sector is active) and every edge (when the edge sector is active).
//! Amplitudes are complex doubles; the phases attached to them come from
//! exact cocycle arithmetic and are converted on application.

use crate::cohomology::Cocycle3;
use crate::groups::{Elt, QuotientData, IDENTITY};
use crate::lattice::{CorrectionTree, TriLattice};
use crate::phase::PhaseExponent;
use crate::series::{GroupRef, NormalSeries};
use num_complex::Complex64;
use rand::RngExt;
use std::collections::BTreeMap;
use std::sync::Arc;
use thiserror::Error;

pub const DEFAULT_TOLERANCE: f64 = 1e-9;
pub const DEFAULT_TERM_BUDGET: usize = 1 << 22;

#[derive(Debug, Error)]
pub enum QStateError {
    #[error("operation targets an inactive sector")]
    SectorMismatch,
    #[error("term budget exceeded: {0} terms")]
    BudgetExceeded(usize),
    #[error("forced measurement outcome has zero probability at vertex {0}")]
    ZeroProbabilityForcedOutcome(usize),
    #[error("measurement outcomes violate the global symmetry constraint")]
    ConstraintViolated,
    #[error("edge value outside the expected subgroup during correction")]
    EdgeOutsideSubgroup,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Sectors {
    pub vertex: bool,
    pub edge: bool,
}

/// Basic one-site operations; series-indexed clock/shift operators live on
/// dedicated methods because they carry the decomposition context.
#[derive(Clone, Debug)]
pub enum LocalOp {
    /// `|g> -> |xg>` on a vertex.
    VertexLeft { v: usize, x: Elt },
    /// `|g> -> |g x⁻¹>` on a vertex (the symmetry convention).
    VertexRightInv { v: usize, x: Elt },
    /// `|h> -> |xh>` on an edge.
    EdgeLeft { e: usize, x: Elt },
    /// `|h> -> |h x⁻¹>` on an edge.
    EdgeRightInv { e: usize, x: Elt },
    /// `|h> -> |x h x⁻¹>` on an edge.
    EdgeConj { e: usize, x: Elt },
}

#[derive(Clone)]
pub struct SparseState {
    pub group: GroupRef,
    pub lattice: Arc<TriLattice>,
    pub sectors: Sectors,
    pub tolerance: f64,
    pub budget: usize,
    terms: BTreeMap<Box<[u8]>, Complex64>,
}

impl std::fmt::Debug for SparseState {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "SparseState({} on {}x{}, {} terms, sectors v={} e={})",
            self.group.name,
            self.lattice.lx,
            self.lattice.ly,
            self.terms.len(),
            self.sectors.vertex,
            self.sectors.edge
        )
    }
}

impl SparseState {
    pub fn empty(group: GroupRef, lattice: Arc<TriLattice>, sectors: Sectors) -> Self {
        SparseState {
            group,
            lattice,
            sectors,
            tolerance: DEFAULT_TOLERANCE,
            budget: DEFAULT_TERM_BUDGET,
            terms: BTreeMap::new(),
        }
    }

    pub fn term_count(&self) -> usize {
        self.terms.len()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&[u8], Complex64)> + '_ {
        self.terms.iter().map(|(k, &v)| (k.as_ref(), v))
    }

    pub fn config_len(&self) -> usize {
        let mut n = 0;
        if self.sectors.vertex {
            n += self.lattice.vertex_count;
        }
        if self.sectors.edge {
            n += self.lattice.edge_count();
        }
        n
    }

    fn edge_offset(&self) -> usize {
        if self.sectors.vertex {
            self.lattice.vertex_count
        } else {
            0
        }
    }

    pub fn vertex_val(&self, config: &[u8], v: usize) -> Elt {
        debug_assert!(self.sectors.vertex);
        Elt(config[v])
    }

    pub fn edge_val(&self, config: &[u8], e: usize) -> Elt {
        debug_assert!(self.sectors.edge);
        Elt(config[self.edge_offset() + e])
    }

    pub fn insert_term(&mut self, config: Box<[u8]>, amp: Complex64) {
        debug_assert_eq!(config.len(), self.config_len());
        let entry = self.terms.entry(config).or_insert(Complex64::ZERO);
        *entry += amp;
    }

    pub fn prune(&mut self) {
        let max = self.terms.values().map(|a| a.norm()).fold(0.0f64, f64::max);
        if max == 0.0 {
            self.terms.clear();
            return;
        }
        let cut = self.tolerance * max;
        self.terms.retain(|_, a| a.norm() >= cut);
    }

    pub fn norm2(&self) -> f64 {
        self.terms.values().map(|a| a.norm_sqr()).sum()
    }

    pub fn inner(&self, other: &SparseState) -> Complex64 {
        let mut acc = Complex64::ZERO;
        for (k, a) in &self.terms {
            if let Some(b) = other.terms.get(k) {
                acc += a.conj() * b;
            }
        }
        acc
    }

    pub fn scaled(&self, s: Complex64) -> SparseState {
        let mut out = self.clone();
        for a in out.terms.values_mut() {
            *a *= s;
        }
        out
    }

    pub fn add(&self, other: &SparseState) -> SparseState {
        let mut out = self.clone();
        for (k, &v) in &other.terms {
            out.insert_term(k.clone(), v);
        }
        out
    }

    /// Uniform superposition over all vertex configurations.
    pub fn uniform_vertex(
        group: GroupRef,
        lattice: Arc<TriLattice>,
        budget: usize,
    ) -> Result<Self, QStateError> {
        let v = lattice.vertex_count;
        let count = (group.order() as f64).powi(v as i32);
        if count > budget as f64 {
            return Err(QStateError::BudgetExceeded(count as usize));
        }
        let mut st = SparseState::empty(
            group.clone(),
            lattice,
            Sectors {
                vertex: true,
                edge: false,
            },
        );
        st.budget = budget;
        let ord = group.order() as u8;
        let mut config = vec![0u8; v];
        loop {
            st.terms
                .insert(config.clone().into_boxed_slice(), Complex64::ONE);
            // mixed-radix increment
            let mut i = 0;
            loop {
                if i == v {
                    return Ok(st);
                }
                config[i] += 1;
                if config[i] < ord {
                    break;
                }
                config[i] = 0;
                i += 1;
            }
        }
    }

    /// Tensors on the edge ancilla register in the all-identity state.
    pub fn with_edge_ancillas(&self) -> Result<SparseState, QStateError> {
        if !self.sectors.vertex || self.sectors.edge {
            return Err(QStateError::SectorMismatch);
        }
        let mut out = SparseState::empty(
            self.group.clone(),
            self.lattice.clone(),
            Sectors {
                vertex: true,
                edge: true,
            },
        );
        out.tolerance = self.tolerance;
        out.budget = self.budget;
        let e = self.lattice.edge_count();
        for (k, &a) in &self.terms {
            let mut config = Vec::with_capacity(k.len() + e);
            config.extend_from_slice(k);
            config.extend(std::iter::repeat_n(0u8, e));
            out.terms.insert(config.into_boxed_slice(), a);
        }
        Ok(out)
    }

    pub fn apply_local(&self, op: &LocalOp) -> Result<SparseState, QStateError> {
        let gr = self.group.clone();
        match *op {
            LocalOp::VertexLeft { v, x } => self.map_vertex(v, |g| gr.mul(x, g)),
            LocalOp::VertexRightInv { v, x } => self.map_vertex(v, |g| gr.mul(g, gr.inv(x))),
            LocalOp::EdgeLeft { e, x } => self.map_edge(e, |h| gr.mul(x, h)),
            LocalOp::EdgeRightInv { e, x } => self.map_edge(e, |h| gr.mul(h, gr.inv(x))),
            LocalOp::EdgeConj { e, x } => self.map_edge(e, |h| gr.conj(x, h)),
        }
    }

    fn map_vertex(&self, v: usize, f: impl Fn(Elt) -> Elt) -> Result<SparseState, QStateError> {
        if !self.sectors.vertex {
            return Err(QStateError::SectorMismatch);
        }
        let mut out = self.clone_empty();
        for (k, &a) in &self.terms {
            let mut config = k.to_vec();
            config[v] = f(Elt(config[v])).0;
            out.insert_term(config.into_boxed_slice(), a);
        }
        Ok(out)
    }

    fn map_edge(&self, e: usize, f: impl Fn(Elt) -> Elt) -> Result<SparseState, QStateError> {
        if !self.sectors.edge {
            return Err(QStateError::SectorMismatch);
        }
        let off = self.edge_offset();
        let mut out = self.clone_empty();
        for (k, &a) in &self.terms {
            let mut config = k.to_vec();
            config[off + e] = f(Elt(config[off + e])).0;
            out.insert_term(config.into_boxed_slice(), a);
        }
        Ok(out)
    }

    fn clone_empty(&self) -> SparseState {
        let mut out = SparseState::empty(self.group.clone(), self.lattice.clone(), self.sectors);
        out.tolerance = self.tolerance;
        out.budget = self.budget;
        out
    }

    /// Public zero state with the same shape (used by operator sums).
    pub fn clone_zeroed(&self) -> SparseState {
        self.clone_empty()
    }

    pub fn rescale(&mut self, s: f64) {
        for a in self.terms.values_mut() {
            *a *= s;
        }
    }

    /// Keeps the terms whose configuration satisfies the predicate.
    pub fn filter_terms(&self, keep: impl Fn(&SparseState, &[u8]) -> bool) -> SparseState {
        let mut out = self.clone_empty();
        for (k, &a) in &self.terms {
            if keep(self, k) {
                out.terms.insert(k.clone(), a);
            }
        }
        out
    }

    /// Permutes basis configurations (amplitudes merge on collisions).
    pub fn map_configs(&self, f: impl Fn(&SparseState, &[u8]) -> Box<[u8]>) -> SparseState {
        let mut out = self.clone_empty();
        for (k, &a) in &self.terms {
            let nk = f(self, k);
            out.insert_term(nk, a);
        }
        out
    }

    /// `‖self − other‖₂`.
    pub fn sub_norm(&self, other: &SparseState) -> f64 {
        let keys: std::collections::BTreeSet<&Box<[u8]>> =
            self.terms.keys().chain(other.terms.keys()).collect();
        let mut acc = 0.0f64;
        for k in keys {
            let va = self.terms.get(k).copied().unwrap_or(Complex64::ZERO);
            let vb = other.terms.get(k).copied().unwrap_or(Complex64::ZERO);
            acc += (va - vb).norm_sqr();
        }
        acc.sqrt()
    }

    /// Global symmetry action `U^x = prod_v L^x_{-v}`.
    pub fn apply_ux(&self, x: Elt) -> Result<SparseState, QStateError> {
        if !self.sectors.vertex {
            return Err(QStateError::SectorMismatch);
        }
        let gr = self.group.clone();
        let xinv = gr.inv(x);
        let mut out = self.clone_empty();
        for (k, &a) in &self.terms {
            let mut config = k.to_vec();
            for val in config[..self.lattice.vertex_count].iter_mut() {
                *val = gr.mul(Elt(*val), xinv).0;
            }
            out.insert_term(config.into_boxed_slice(), a);
        }
        Ok(out)
    }

    /// Edge conjugation `sigma^x = prod_e sigma^x_e`.
    pub fn apply_sigma_x(&self, x: Elt) -> Result<SparseState, QStateError> {
        if !self.sectors.edge {
            return Err(QStateError::SectorMismatch);
        }
        let gr = self.group.clone();
        let off = self.edge_offset();
        let mut out = self.clone_empty();
        for (k, &a) in &self.terms {
            let mut config = k.to_vec();
            for val in config[off..].iter_mut() {
                *val = gr.conj(x, Elt(*val)).0;
            }
            out.insert_term(config.into_boxed_slice(), a);
        }
        Ok(out)
    }

    /// Gauge transformation `G^x_v = L^x_{-v} · prod_{e ⊃ v} L^x_{±e}`:
    /// incoming edges are left-multiplied by x, outgoing right-multiplied by
    /// x⁻¹.
    pub fn apply_gauge_transform(&self, v: usize, x: Elt) -> Result<SparseState, QStateError> {
        if !self.sectors.vertex || !self.sectors.edge {
            return Err(QStateError::SectorMismatch);
        }
        let gr = self.group.clone();
        let off = self.edge_offset();
        let xinv = gr.inv(x);
        let mut out = self.clone_empty();
        for (k, &a) in &self.terms {
            let mut config = k.to_vec();
            config[v] = gr.mul(Elt(config[v]), xinv).0;
            for &(e, into_v) in self.lattice.incident_edges(v) {
                let h = Elt(config[off + e]);
                config[off + e] = if into_v {
                    gr.mul(x, h).0
                } else {
                    gr.mul(h, xinv).0
                };
            }
            out.insert_term(config.into_boxed_slice(), a);
        }
        Ok(out)
    }

    /// The diagonal cocycle phase `U_ω^{±1}`, evaluated on the decorated
    /// configuration (see [`omega_amplitude_dec`]).
    pub fn apply_u_omega(&self, omega: &Cocycle3, dagger: bool) -> SparseState {
        let tree = CorrectionTree::build(&self.lattice, 0);
        let mut out = self.clone_empty();
        for (k, &a) in &self.terms {
            let phase = self.term_omega_phase(omega, &tree, k);
            let factor = if dagger { phase.inv() } else { phase };
            out.terms.insert(k.clone(), a * factor.to_complex());
        }
        out
    }

    fn term_omega_phase(
        &self,
        omega: &Cocycle3,
        tree: &CorrectionTree,
        config: &[u8],
    ) -> PhaseExponent {
        let off = self.edge_offset();
        let v_of = |v: usize| -> Elt {
            if self.sectors.vertex {
                Elt(config[v])
            } else {
                IDENTITY
            }
        };
        let e_of = |e: usize| -> Elt {
            if self.sectors.edge {
                Elt(config[off + e])
            } else {
                IDENTITY
            }
        };
        omega_amplitude_dec(omega, &self.lattice, tree, &v_of, &e_of)
    }

    /// Entangler sweep: every edge value picks up
    /// `h -> c(g_head) · h · c(g_tail)⁻¹` where `c` extracts the controlled
    /// component of the endpoint vertex values.
    pub fn apply_entangler(
        &self,
        component: &dyn Fn(Elt) -> Elt,
        edge_subset: Option<&[usize]>,
    ) -> Result<SparseState, QStateError> {
        if !self.sectors.vertex || !self.sectors.edge {
            return Err(QStateError::SectorMismatch);
        }
        let gr = self.group.clone();
        let off = self.edge_offset();
        let all: Vec<usize>;
        let edges: &[usize] = match edge_subset {
            Some(e) => e,
            None => {
                all = (0..self.lattice.edge_count()).collect();
                &all
            }
        };
        let mut out = self.clone_empty();
        for (k, &a) in &self.terms {
            let mut config = k.to_vec();
            for &e in edges {
                let edge = self.lattice.edges[e];
                let ch = component(Elt(config[edge.head]));
                let ct = component(Elt(config[edge.tail]));
                let h = Elt(config[off + e]);
                config[off + e] = gr.mul(gr.mul(ch, h), gr.inv(ct)).0;
            }
            out.insert_term(config.into_boxed_slice(), a);
        }
        Ok(out)
    }

    /// Clock phase `Z^p` on the level-k component of a vertex value.
    pub fn apply_vertex_level_phase(
        &self,
        series: &NormalSeries,
        k: usize,
        v: usize,
        p: &[u8],
        inverse: bool,
    ) -> Result<SparseState, QStateError> {
        if !self.sectors.vertex {
            return Err(QStateError::SectorMismatch);
        }
        let mut out = self.clone_empty();
        for (key, &a) in &self.terms {
            let t = series.component(k, Elt(key[v]));
            let chi = level_character(series, k, t, p);
            let chi = if inverse { chi.inv() } else { chi };
            out.terms.insert(key.clone(), a * chi.to_complex());
        }
        Ok(out)
    }

    /// Shift `X` on the level-k component of a vertex value.
    pub fn apply_vertex_level_shift(
        &self,
        series: &NormalSeries,
        k: usize,
        v: usize,
        q_shift: Elt,
    ) -> Result<SparseState, QStateError> {
        if !self.sectors.vertex {
            return Err(QStateError::SectorMismatch);
        }
        let mut out = self.clone_empty();
        for (key, &a) in &self.terms {
            let mut config = key.to_vec();
            config[v] = series.shift_component(k, Elt(config[v]), q_shift).0;
            out.insert_term(config.into_boxed_slice(), a);
        }
        Ok(out)
    }

    /// Clock phase `Z^p` reading the level-k quotient component of an edge
    /// value; errors when the edge value is outside the level subgroup.
    pub fn apply_edge_level_phase(
        &self,
        series: &NormalSeries,
        k: usize,
        e: usize,
        p: &[u8],
        inverse: bool,
    ) -> Result<SparseState, QStateError> {
        if !self.sectors.edge {
            return Err(QStateError::SectorMismatch);
        }
        let off = self.edge_offset();
        let level = &series.levels[k - 1];
        let mut out = self.clone_empty();
        for (key, &a) in &self.terms {
            let w = Elt(key[off + e]);
            let q = level.project(w).ok_or(QStateError::EdgeOutsideSubgroup)?;
            let t = level.transversal[q.idx()];
            let chi = level_character(series, k, t, p);
            let chi = if inverse { chi.inv() } else { chi };
            out.terms.insert(key.clone(), a * chi.to_complex());
        }
        Ok(out)
    }

    /// Invariance under a global symmetry action: the right shift by `x` on
    /// all vertices, optionally combined with conjugation on all edges (the
    /// residual symmetry of a partially gauged state).
    pub fn check_global_symmetry(&self, x: Elt, with_edge_conj: bool) -> Result<bool, QStateError> {
        let mut moved = self.apply_ux(x)?;
        if with_edge_conj {
            moved = moved.apply_sigma_x(x)?;
        }
        Ok(self.equal_up_to_phase(&moved))
    }

    /// Norm-preserving comparison up to a global phase.
    pub fn equal_up_to_phase(&self, other: &SparseState) -> bool {
        let (na, nb) = (self.norm2().sqrt(), other.norm2().sqrt());
        if na == 0.0 || nb == 0.0 {
            return na == nb;
        }
        // align on the largest amplitude of self
        let (key, amp) = match self
            .terms
            .iter()
            .max_by(|a, b| a.1.norm().total_cmp(&b.1.norm()))
        {
            Some((k, a)) => (k, a),
            None => return other.terms.is_empty(),
        };
        let Some(b) = other.terms.get(key) else {
            return false;
        };
        if b.norm() / nb < self.tolerance {
            return false;
        }
        let lambda = (amp / na) / (b / nb);
        let keys: std::collections::BTreeSet<&Box<[u8]>> =
            self.terms.keys().chain(other.terms.keys()).collect();
        for k in keys {
            let va = self.terms.get(k).copied().unwrap_or(Complex64::ZERO) / na;
            let vb = other.terms.get(k).copied().unwrap_or(Complex64::ZERO) / nb;
            if (va - lambda * vb).norm() > self.tolerance {
                return false;
            }
        }
        true
    }

    /// Max-norm distance between normalized states without phase alignment.
    pub fn distance_normalized(&self, other: &SparseState) -> f64 {
        let (na, nb) = (self.norm2().sqrt(), other.norm2().sqrt());
        let keys: std::collections::BTreeSet<&Box<[u8]>> =
            self.terms.keys().chain(other.terms.keys()).collect();
        let mut worst = 0.0f64;
        for k in keys {
            let va = self.terms.get(k).copied().unwrap_or(Complex64::ZERO) / na;
            let vb = other.terms.get(k).copied().unwrap_or(Complex64::ZERO) / nb;
            worst = worst.max((va - vb).norm());
        }
        worst
    }

    /// The full gauging map: vertex values become edge differences
    /// `w_e = g_head · h_e · g_tail⁻¹` and the vertex register collapses to
    /// the identity configuration.
    pub fn apply_gauging_map(&self) -> Result<SparseState, QStateError> {
        if !self.sectors.vertex {
            return Err(QStateError::SectorMismatch);
        }
        let gr = self.group.clone();
        let vc = self.lattice.vertex_count;
        let ec = self.lattice.edge_count();
        let mut out = SparseState::empty(
            self.group.clone(),
            self.lattice.clone(),
            Sectors {
                vertex: true,
                edge: true,
            },
        );
        out.tolerance = self.tolerance;
        out.budget = self.budget;
        for (k, &a) in &self.terms {
            let mut config = vec![0u8; vc + ec];
            for (e, edge) in self.lattice.edges.iter().enumerate() {
                let h = if self.sectors.edge {
                    Elt(k[vc + e])
                } else {
                    IDENTITY
                };
                let w = gr.mul(gr.mul(Elt(k[edge.head]), h), gr.inv(Elt(k[edge.tail])));
                config[vc + e] = w.0;
            }
            out.insert_term(config.into_boxed_slice(), a);
        }
        out.prune();
        Ok(out)
    }

    /// The subgroup gauging map: vertex values keep their quotient
    /// representative, normal parts become edge differences.
    pub fn apply_partial_gauging_map(
        &self,
        qdata: &QuotientData,
    ) -> Result<SparseState, QStateError> {
        if !self.sectors.vertex {
            return Err(QStateError::SectorMismatch);
        }
        let gr = self.group.clone();
        let vc = self.lattice.vertex_count;
        let ec = self.lattice.edge_count();
        let mut out = SparseState::empty(
            self.group.clone(),
            self.lattice.clone(),
            Sectors {
                vertex: true,
                edge: true,
            },
        );
        out.tolerance = self.tolerance;
        out.budget = self.budget;
        for (k, &a) in &self.terms {
            let mut config = vec![0u8; vc + ec];
            let n_part = |g: Elt| gr.qn_split(qdata, g).1;
            for v in 0..vc {
                config[v] = qdata.rep_of(Elt(k[v])).0;
            }
            for (e, edge) in self.lattice.edges.iter().enumerate() {
                let h = if self.sectors.edge {
                    Elt(k[vc + e])
                } else {
                    IDENTITY
                };
                let w = gr.mul(
                    gr.mul(n_part(Elt(k[edge.head])), h),
                    gr.inv(n_part(Elt(k[edge.tail]))),
                );
                config[vc + e] = w.0;
            }
            out.insert_term(config.into_boxed_slice(), a);
        }
        out.prune();
        Ok(out)
    }

    /// True when every term has identity holonomy around every plaquette.
    pub fn all_plaquettes_flux_free(&self) -> bool {
        if !self.sectors.edge {
            return false;
        }
        let off = self.edge_offset();
        for k in self.terms.keys() {
            let evals: Vec<Elt> = k[off..].iter().map(|&x| Elt(x)).collect();
            for t in 0..self.lattice.triangle_count() {
                if self.lattice.plaquette_holonomy(&self.group, &evals, t) != IDENTITY {
                    return false;
                }
            }
        }
        true
    }

    pub fn to_json_lines(&self) -> String {
        let mut out = String::new();
        for (k, a) in &self.terms {
            out.push_str(&format!(
                "{}\n",
                serde_json::json!({"config": k.as_ref(), "re": a.re, "im": a.im})
            ));
        }
        out
    }

    /// Random sparse state for operator audits: up to `n_terms` basis
    /// configurations drawn from the given per-sector value pools.
    pub fn random_state(
        group: GroupRef,
        lattice: Arc<TriLattice>,
        sectors: Sectors,
        vertex_pool: &[Elt],
        edge_pool: &[Elt],
        n_terms: usize,
        rng: &mut impl RngExt,
    ) -> SparseState {
        let mut st = SparseState::empty(group, lattice, sectors);
        let len = st.config_len();
        let vc = if sectors.vertex {
            st.lattice.vertex_count
        } else {
            0
        };
        for _ in 0..n_terms {
            let mut config = vec![0u8; len];
            for (i, slot) in config.iter_mut().enumerate() {
                let pool = if i < vc { vertex_pool } else { edge_pool };
                *slot = pool[rng.random_range(0..pool.len())].0;
            }
            let amp = Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5);
            st.insert_term(config.into_boxed_slice(), amp);
        }
        st
    }
}

/// Character `χ_p(t)` of a level transversal element against an outcome
/// exponent tuple.
pub fn level_character(series: &NormalSeries, k: usize, t: Elt, p: &[u8]) -> PhaseExponent {
    let level = &series.levels[k - 1];
    let q = level.project(t).expect("transversal element projects");
    let coords = &level.basis.coords[q.idx()];
    let mut chi = PhaseExponent::ONE;
    for ((&pj, &ij), &dj) in p.iter().zip(coords).zip(&level.basis.orders) {
        chi *= PhaseExponent::new(pj as i64 * ij as i64, dj as i64);
    }
    chi
}

/// Product of simplex cocycles over the lattice for a pure vertex
/// configuration: `Ω({g_v}) = prod_Δ ω(g₃g₂⁻¹, g₂g₁⁻¹, g₁)^{s(Δ)}`.
pub fn omega_amplitude(omega: &Cocycle3, lattice: &TriLattice, vvals: &[Elt]) -> PhaseExponent {
    let gr = &omega.group;
    let mut acc = PhaseExponent::ONE;
    for tri in &lattice.triangles {
        let [v1, v2, v3] = tri.verts;
        let w23 = gr.mul(vvals[v3], gr.inv(vvals[v2]));
        let w12 = gr.mul(vvals[v2], gr.inv(vvals[v1]));
        let phase = omega.eval(w23, w12, vvals[v1]);
        acc *= if tri.sign > 0 { phase } else { phase.inv() };
    }
    acc
}

/// Decorated amplitude used by every `U_ω` application. Edge words are
/// `w_e = g_head · h_e · g_tail⁻¹`; the third cocycle argument is the
/// configuration lifted along the spanning tree (`lift_root = g_root`), which
/// reduces to the bare vertex values when the edge sector is trivial and to
/// the flux-free lift when the vertex sector is trivial.
pub fn omega_amplitude_dec(
    omega: &Cocycle3,
    lattice: &TriLattice,
    tree: &CorrectionTree,
    vval: &dyn Fn(usize) -> Elt,
    eval: &dyn Fn(usize) -> Elt,
) -> PhaseExponent {
    let gr = &omega.group;
    let word = |e: usize| -> Elt {
        let edge = lattice.edges[e];
        gr.mul(gr.mul(vval(edge.head), eval(e)), gr.inv(vval(edge.tail)))
    };
    let mut lift = vec![IDENTITY; lattice.vertex_count];
    lift[tree.root] = vval(tree.root);
    for &v in &tree.order {
        if let Some((parent, e, into_v)) = tree.parent[v] {
            let w = word(e);
            lift[v] = if into_v {
                gr.mul(w, lift[parent])
            } else {
                gr.mul(gr.inv(w), lift[parent])
            };
        }
    }
    let mut acc = PhaseExponent::ONE;
    for tri in &lattice.triangles {
        let [v1, _, _] = tri.verts;
        let w23 = word(tri.edges[1]);
        let w12 = word(tri.edges[0]);
        let phase = omega.eval(w23, w12, lift[v1]);
        acc *= if tri.sign > 0 { phase } else { phase.inv() };
    }
    acc
}

/// Builds the fixed-point SPT state: every vertex configuration weighted by
/// the simplex-cocycle product.
pub fn build_spt_state(
    omega: &Cocycle3,
    lattice: Arc<TriLattice>,
    budget: usize,
) -> Result<SparseState, QStateError> {
    let uniform = SparseState::uniform_vertex(omega.group.clone(), lattice, budget)?;
    Ok(uniform.apply_u_omega(omega, false))
}

/// Measurement outcome log for one protocol level.
#[derive(Clone, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct MeasurementRecord {
    pub level: usize,
    /// Per-vertex outcome exponent tuples, in vertex order.
    pub outcomes: Vec<Vec<u8>>,
}

impl MeasurementRecord {
    /// The symmetry constraint: outcome exponents sum to zero in every
    /// cyclic factor of the level quotient.
    pub fn satisfies_constraint(&self, series: &NormalSeries) -> bool {
        let basis = &series.levels[self.level - 1].basis;
        for (j, &d) in basis.orders.iter().enumerate() {
            let total: usize = self.outcomes.iter().map(|p| p[j] as usize).sum();
            if !total.is_multiple_of(d) {
                return false;
            }
        }
        true
    }
}

pub enum OutcomePlan<'a> {
    Sample(&'a mut dyn rand::Rng),
    Forced(&'a [Vec<u8>]),
}

/// Measures the level-k Fourier observables on all vertices (in vertex
/// order), collapsing the measured component to the identity and attaching
/// the outcome characters to the amplitudes.
pub fn measure_fourier(
    state: &SparseState,
    series: &NormalSeries,
    k: usize,
    plan: OutcomePlan<'_>,
) -> Result<(SparseState, MeasurementRecord), QStateError> {
    if !state.sectors.vertex {
        return Err(QStateError::SectorMismatch);
    }
    let basis = &series.levels[k - 1].basis;
    let n_out = basis.outcome_count();
    let mut current = state.clone();
    let mut outcomes = Vec::with_capacity(state.lattice.vertex_count);
    let (mut forced_iter, mut rng) = match plan {
        OutcomePlan::Forced(f) => {
            assert_eq!(
                f.len(),
                state.lattice.vertex_count,
                "one outcome tuple per vertex"
            );
            (Some(f.iter()), None)
        }
        OutcomePlan::Sample(r) => (None, Some(r)),
    };
    for v in 0..state.lattice.vertex_count {
        // group the terms by collapsed configuration
        let mut groups: BTreeMap<Box<[u8]>, Vec<(Elt, Complex64)>> = BTreeMap::new();
        for (key, &amp) in &current.terms {
            let g = Elt(key[v]);
            let t = series.component(k, g);
            let collapsed_val = series.erase_component(k, g);
            let mut config = key.to_vec();
            config[v] = collapsed_val.0;
            groups
                .entry(config.into_boxed_slice())
                .or_default()
                .push((t, amp));
        }
        // outcome amplitudes per group
        let mut weights = vec![0.0f64; n_out];
        let mut projected: Vec<BTreeMap<Box<[u8]>, Complex64>> = vec![BTreeMap::new(); n_out];
        for (config, members) in &groups {
            for p_flat in 0..n_out {
                let p = basis.unflatten(p_flat);
                let mut acc = Complex64::ZERO;
                for &(t, amp) in members {
                    let chi = level_character(series, k, t, &p);
                    acc += amp * chi.inv().to_complex();
                }
                if acc.norm_sqr() > 0.0 {
                    weights[p_flat] += acc.norm_sqr();
                    projected[p_flat].insert(config.clone(), acc);
                }
            }
        }
        let total: f64 = weights.iter().sum();
        let chosen = match (&mut forced_iter, &mut rng) {
            (Some(it), _) => {
                let p = it
                    .next()
                    .expect("forced outcomes cover all vertices")
                    .clone();
                let flat = flatten_outcome(basis, &p);
                if weights[flat] <= state.tolerance * state.tolerance * total {
                    return Err(QStateError::ZeroProbabilityForcedOutcome(v));
                }
                flat
            }
            (None, Some(r)) => {
                let mut draw = (r.next_u64() as f64 / u64::MAX as f64) * total;
                let mut flat = 0;
                for (i, &w) in weights.iter().enumerate() {
                    flat = i;
                    if draw < w {
                        break;
                    }
                    draw -= w;
                }
                flat
            }
            _ => unreachable!(),
        };
        outcomes.push(basis.unflatten(chosen));
        let mut next = current.clone_empty();
        next.terms = std::mem::take(&mut projected[chosen]);
        next.prune();
        current = next;
    }
    Ok((current, MeasurementRecord { level: k, outcomes }))
}

fn flatten_outcome(basis: &crate::series::AbelianBasis, p: &[u8]) -> usize {
    let mut flat = 0usize;
    for (j, &d) in basis.orders.iter().enumerate() {
        flat = flat * d + p[j] as usize;
    }
    flat
}
