//! Solvable-group decompositions used to schedule multi-step gauging.
//!
//! A [`NormalSeries`] is a chain `1 = H_0 < H_1 < ... < H_N = G` where each
//! `H_{k-1}` is normal in `H_k` with abelian quotient, together with one
//! transversal `T_k` of `H_{k-1}` in `H_k` per level. Every `g ∈ G` then
//! factors uniquely as `g = t_N t_{N-1} ... t_1` with `t_k ∈ T_k`, which is
//! the coordinate system the gauging protocol entangles and measures level by
//! level. Two constructions are provided: a chain of successive quotients of
//! `G` (smallest normal subgroup first) and a chain obtained from the derived
//! series with lifted embeddings of the sequential normal subgroups.

use crate::groups::{Elt, FiniteGroup, GroupError, Subgroup, IDENTITY};
use serde::{Deserialize, Serialize};
use std::sync::Arc;

pub type GroupRef = Arc<FiniteGroup>;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum SeriesStrategy {
    /// Chain of subgroups of G, each normal in G, gauged as successive
    /// abelian quotients.
    QuotientChain,
    /// Derived-series tower: gauge the last nontrivial commutator subgroup of
    /// the running quotient at each step, embedded back in G through the
    /// chosen sections.
    SequentialNormal,
}

/// Exponent coordinates for an abelian group: an independent generator tuple
/// with orders `d_j`, plus the coordinate vector of every element.
#[derive(Clone, Debug)]
pub struct AbelianBasis {
    pub gens: Vec<Elt>,
    pub orders: Vec<usize>,
    /// element index -> exponent tuple (length = gens.len())
    pub coords: Vec<Vec<u8>>,
}

impl AbelianBasis {
    pub fn outcome_count(&self) -> usize {
        self.orders.iter().product::<usize>().max(1)
    }

    /// Decodes a flat outcome index into an exponent tuple.
    pub fn unflatten(&self, mut i: usize) -> Vec<u8> {
        let mut out = vec![0u8; self.orders.len()];
        for (j, &d) in self.orders.iter().enumerate().rev() {
            out[j] = (i % d) as u8;
            i /= d;
        }
        out
    }
}

/// Computes a generator basis of an abelian group: greedily picks elements of
/// maximal order whose cyclic span meets the running span trivially, then
/// checks that products of generator powers enumerate the group bijectively.
pub fn abelian_basis(group: &FiniteGroup) -> Result<AbelianBasis, GroupError> {
    if !group.is_abelian() {
        return Err(GroupError::InvalidTable(format!(
            "{} is not abelian",
            group.name
        )));
    }
    let n = group.order();
    let mut gens: Vec<Elt> = Vec::new();
    let mut span = group.trivial_subgroup();
    while span.order() < n {
        let mut best: Option<(usize, Elt)> = None;
        for g in group.elements() {
            if span.contains(g) {
                continue;
            }
            let cyc = group.generated_subgroup(&[g]);
            let disjoint = cyc.iter().all(|c| c == IDENTITY || !span.contains(c));
            if disjoint {
                let ord = group.elt_order(g);
                if best.is_none_or(|(bo, bg)| ord > bo || (ord == bo && g < bg)) {
                    best = Some((ord, g));
                }
            }
        }
        let (_, g) = best.ok_or_else(|| {
            GroupError::InvalidTable(format!("no abelian basis found for {}", group.name))
        })?;
        gens.push(g);
        let mut all = span.sorted_members();
        all.push(g);
        span = group.generated_subgroup(&all);
    }
    let orders: Vec<usize> = gens.iter().map(|&g| group.elt_order(g)).collect();
    let total: usize = orders.iter().product::<usize>().max(1);
    if total != n {
        return Err(GroupError::InvalidTable(format!(
            "abelian basis of {} does not span: {total} != {n}",
            group.name
        )));
    }
    let mut coords = vec![Vec::new(); n];
    let mut seen = vec![false; n];
    for flat in 0..total {
        let mut i = flat;
        let mut tuple = vec![0u8; orders.len()];
        for (j, &d) in orders.iter().enumerate().rev() {
            tuple[j] = (i % d) as u8;
            i /= d;
        }
        let mut e = IDENTITY;
        for (j, &g) in gens.iter().enumerate() {
            for _ in 0..tuple[j] {
                e = group.mul(e, g);
            }
        }
        if seen[e.idx()] {
            return Err(GroupError::InvalidTable(
                "abelian basis is not independent".into(),
            ));
        }
        seen[e.idx()] = true;
        coords[e.idx()] = tuple;
    }
    Ok(AbelianBasis {
        gens,
        orders,
        coords,
    })
}

/// Builds the coordinate system for an explicitly chosen generator tuple
/// (used when a fixed factor labeling matters, e.g. for anyon names).
pub fn abelian_basis_from_gens(
    group: &FiniteGroup,
    gens: &[Elt],
) -> Result<AbelianBasis, GroupError> {
    let orders: Vec<usize> = gens.iter().map(|&g| group.elt_order(g)).collect();
    let total: usize = orders.iter().product::<usize>().max(1);
    if total != group.order() {
        return Err(GroupError::InvalidTable(
            "generators do not factor the group".into(),
        ));
    }
    let mut coords = vec![Vec::new(); group.order()];
    let mut seen = vec![false; group.order()];
    for flat in 0..total {
        let mut i = flat;
        let mut tuple = vec![0u8; orders.len()];
        for (j, &d) in orders.iter().enumerate().rev() {
            tuple[j] = (i % d) as u8;
            i /= d;
        }
        let mut e = IDENTITY;
        for (j, &g) in gens.iter().enumerate() {
            for _ in 0..tuple[j] {
                e = group.mul(e, g);
            }
        }
        if seen[e.idx()] {
            return Err(GroupError::InvalidTable(
                "generators are not independent".into(),
            ));
        }
        seen[e.idx()] = true;
        coords[e.idx()] = tuple;
    }
    Ok(AbelianBasis {
        gens: gens.to_vec(),
        orders,
        coords,
    })
}

/// One level of a normal series: the subgroup `H_k`, a transversal of
/// `H_{k-1}` inside it, and the abelian quotient with coordinates.
#[derive(Clone, Debug)]
pub struct SeriesLevel {
    pub subgroup: Subgroup,
    /// Transversal of the previous subgroup in this one; `transversal[0] = 1`
    /// and `transversal[q]` represents the quotient element with index `q`.
    pub transversal: Vec<Elt>,
    /// Quotient group `H_k / H_{k-1}`, abelian, indexed to match
    /// `transversal`.
    pub quotient: FiniteGroup,
    /// G-element index -> quotient index (`u8::MAX` outside `H_k`).
    proj: Vec<u8>,
    pub basis: AbelianBasis,
}

impl SeriesLevel {
    pub fn project(&self, g: Elt) -> Option<Elt> {
        match self.proj[g.idx()] {
            u8::MAX => None,
            q => Some(Elt(q)),
        }
    }

    /// Splits `g ∈ H_k` as `t · rest` with `t` in the transversal and `rest`
    /// in `H_{k-1}`.
    pub fn split(&self, group: &FiniteGroup, g: Elt) -> Option<(Elt, Elt)> {
        let q = self.project(g)?;
        let t = self.transversal[q.idx()];
        Some((t, group.mul(group.inv(t), g)))
    }
}

/// Builds a [`SeriesLevel`] from an explicit transversal of `prev` in `sub`.
fn level_from_transversal(
    group: &FiniteGroup,
    sub: &Subgroup,
    prev: &Subgroup,
    transversal: Vec<Elt>,
) -> Result<SeriesLevel, GroupError> {
    assert_eq!(
        transversal[0], IDENTITY,
        "transversal must start with the identity"
    );
    if transversal.len() * prev.order() != sub.order() {
        return Err(GroupError::InvalidTable(
            "chain subgroups are not nested with matching index".into(),
        ));
    }
    // check prev is normal in sub
    for h in sub.iter() {
        for n in prev.iter() {
            if !prev.contains(group.conj(h, n)) {
                return Err(GroupError::NotNormal);
            }
        }
    }
    let m = transversal.len();
    let mut proj = vec![u8::MAX; group.order()];
    for (qi, &t) in transversal.iter().enumerate() {
        for n in prev.iter() {
            let g = group.mul(t, n);
            if proj[g.idx()] != u8::MAX {
                return Err(GroupError::InvalidTable(
                    "transversal cosets overlap".into(),
                ));
            }
            proj[g.idx()] = qi as u8;
        }
    }
    for h in sub.iter() {
        if proj[h.idx()] == u8::MAX {
            return Err(GroupError::InvalidTable(
                "transversal does not cover subgroup".into(),
            ));
        }
    }
    let mut table = vec![0u8; m * m];
    for (i, &a) in transversal.iter().enumerate() {
        for (j, &b) in transversal.iter().enumerate() {
            table[i * m + j] = proj[group.mul(a, b).idx()];
        }
    }
    let quotient = FiniteGroup::from_table(format!("{}-quot", group.name), table)?;
    if !quotient.is_abelian() {
        return Err(GroupError::InvalidTable(
            "series quotient is not abelian".into(),
        ));
    }
    let basis = abelian_basis(&quotient)?;
    Ok(SeriesLevel {
        subgroup: sub.clone(),
        transversal,
        quotient,
        proj,
        basis,
    })
}

fn lex_least_transversal(group: &FiniteGroup, sub: &Subgroup, prev: &Subgroup) -> Vec<Elt> {
    let mut covered = vec![false; group.order()];
    let mut reps = Vec::new();
    for h in sub.sorted_members() {
        if !covered[h.idx()] {
            reps.push(h);
            for n in prev.iter() {
                covered[group.mul(h, n).idx()] = true;
            }
        }
    }
    reps
}

/// A full solvable decomposition of a group; level `k` (1-based in the
/// physics counting) is stored at `levels[k-1]`.
#[derive(Clone, Debug)]
pub struct NormalSeries {
    pub group: GroupRef,
    pub strategy: SeriesStrategy,
    pub levels: Vec<SeriesLevel>,
}

impl NormalSeries {
    pub fn depth(&self) -> usize {
        self.levels.len()
    }

    /// Builds a series from an explicit subgroup chain (trivial and full
    /// group may be omitted), using lexicographically-least transversals.
    pub fn from_chain(group: GroupRef, chain: &[Subgroup]) -> Result<Self, GroupError> {
        let mut full: Vec<Subgroup> = Vec::new();
        full.push(group.trivial_subgroup());
        for sub in chain {
            if sub.order() > full.last().unwrap().order() {
                full.push(sub.clone());
            }
        }
        if full.last().unwrap().order() != group.order() {
            full.push(group.full_subgroup());
        }
        let mut levels = Vec::new();
        for w in full.windows(2) {
            let t = lex_least_transversal(&group, &w[1], &w[0]);
            levels.push(level_from_transversal(&group, &w[1], &w[0], t)?);
        }
        let series = NormalSeries {
            group,
            strategy: SeriesStrategy::QuotientChain,
            levels,
        };
        series.validate()?;
        Ok(series)
    }

    /// Derives a series with the requested strategy. `QuotientChain` grows the
    /// chain with the smallest suitable normal subgroup of `G` at every step
    /// (ties broken by member-set order); `SequentialNormal` peels off the
    /// last nontrivial derived subgroup of the running quotient.
    pub fn derive(group: GroupRef, strategy: SeriesStrategy) -> Result<Self, GroupError> {
        if !is_solvable(&group) {
            return Err(GroupError::NotSolvable);
        }
        match strategy {
            SeriesStrategy::QuotientChain => Self::derive_quotient_chain(group),
            SeriesStrategy::SequentialNormal => Self::derive_sequential(group),
        }
    }

    fn derive_quotient_chain(group: GroupRef) -> Result<Self, GroupError> {
        let normals: Vec<Subgroup> = group
            .all_subgroups()
            .into_iter()
            .filter(|s| group.is_normal(s))
            .collect();
        let mut chain: Vec<Subgroup> = vec![group.trivial_subgroup()];
        while chain.last().unwrap().order() < group.order() {
            let current = chain.last().unwrap().clone();
            // candidates: normal subgroups of G strictly containing `current`
            // whose quotient over it is abelian, i.e. [H,H] ⊆ current.
            let mut best: Option<&Subgroup> = None;
            for h in &normals {
                if h.order() <= current.order()
                    || !current.iter().all(|c| h.contains(c))
                    || !group
                        .commutator_subgroup(h)
                        .iter()
                        .all(|c| current.contains(c))
                {
                    continue;
                }
                // `all_subgroups` returns member-set sorted order, so the
                // first hit of minimal order is the lexicographic choice.
                if best.is_none_or(|b| h.order() < b.order()) {
                    best = Some(h);
                }
            }
            chain.push(best.ok_or(GroupError::NotSolvable)?.clone());
        }
        let mut levels = Vec::new();
        for w in chain.windows(2) {
            let t = lex_least_transversal(&group, &w[1], &w[0]);
            levels.push(level_from_transversal(&group, &w[1], &w[0], t)?);
        }
        let series = NormalSeries {
            group,
            strategy: SeriesStrategy::QuotientChain,
            levels,
        };
        series.validate()?;
        Ok(series)
    }

    fn derive_sequential(group: GroupRef) -> Result<Self, GroupError> {
        // Tower state: the running quotient M with an embedding of its
        // elements back into G (composition of lex-least sections).
        let mut current: FiniteGroup = (*group).clone();
        let mut emb: Vec<Elt> = group.elements().collect();
        let mut transversals: Vec<Vec<Elt>> = Vec::new();
        while current.order() > 1 {
            let d = last_derived_subgroup(&current);
            let t_in_g: Vec<Elt> = d.sorted_members().iter().map(|e| emb[e.idx()]).collect();
            transversals.push(t_in_g);
            let qdata = current.quotient_with_section(&d)?;
            emb = qdata.section.iter().map(|rep| emb[rep.idx()]).collect();
            current = qdata.quotient;
        }
        let mut levels = Vec::new();
        let mut prev = group.trivial_subgroup();
        for t in transversals {
            let mut gens = prev.sorted_members();
            gens.extend_from_slice(&t);
            let sub = group.generated_subgroup(&gens);
            if sub.order() != prev.order() * t.len() {
                return Err(GroupError::InvalidTable(
                    "sequential-normal level does not extend cleanly".into(),
                ));
            }
            let mut t_sorted = t;
            t_sorted.sort();
            levels.push(level_from_transversal(&group, &sub, &prev, t_sorted)?);
            prev = sub;
        }
        let series = NormalSeries {
            group,
            strategy: SeriesStrategy::SequentialNormal,
            levels,
        };
        series.validate()?;
        Ok(series)
    }

    /// Unique factorization `g = t_N t_{N-1} ... t_1` with `t_k` in level k's
    /// transversal, extracted top-down through the chain.
    pub fn decompose(&self, g: Elt) -> Vec<Elt> {
        let mut out = Vec::with_capacity(self.levels.len());
        let mut rest = g;
        for level in self.levels.iter().rev() {
            let (t, r) = level
                .split(&self.group, rest)
                .expect("chain invariant: remainder lies in the next subgroup down");
            out.push(t);
            rest = r;
        }
        debug_assert_eq!(rest, IDENTITY);
        out
    }

    /// Inverse of [`NormalSeries::decompose`].
    pub fn recompose(&self, parts: &[Elt]) -> Elt {
        parts
            .iter()
            .fold(IDENTITY, |acc, &t| self.group.mul(acc, t))
    }

    /// The level-k component `t_k(g)` (k is 1-based).
    pub fn component(&self, k: usize, g: Elt) -> Elt {
        let parts = self.decompose(g);
        parts[self.levels.len() - k]
    }

    /// Replaces the level-k component of `g` by the identity.
    pub fn erase_component(&self, k: usize, g: Elt) -> Elt {
        let mut parts = self.decompose(g);
        parts[self.levels.len() - k] = IDENTITY;
        self.recompose(&parts)
    }

    /// Shifts the level-k component by the transversal representative of
    /// `q_shift` (a quotient element of level k), acting `t_k -> rep(q(t_k)·q_shift)`.
    pub fn shift_component(&self, k: usize, g: Elt, q_shift: Elt) -> Elt {
        let level = &self.levels[k - 1];
        let mut parts = self.decompose(g);
        let pos = self.levels.len() - k;
        let q = level
            .project(parts[pos])
            .expect("component is in the transversal");
        let q_new = level.quotient.mul(q, q_shift);
        parts[pos] = level.transversal[q_new.idx()];
        self.recompose(&parts)
    }

    fn validate(&self) -> Result<(), GroupError> {
        let g = &self.group;
        if self.levels.last().map(|l| l.subgroup.order()) != Some(g.order()) {
            return Err(GroupError::InvalidTable(
                "series does not reach the full group".into(),
            ));
        }
        for e in g.elements() {
            let parts = self.decompose(e);
            if self.recompose(&parts) != e {
                return Err(GroupError::InvalidTable(
                    "series decomposition not unique".into(),
                ));
            }
        }
        Ok(())
    }
}

/// Last nontrivial term of the derived series (the group itself when it is
/// abelian). Always abelian and characteristic.
fn last_derived_subgroup(group: &FiniteGroup) -> Subgroup {
    let mut prev = group.full_subgroup();
    loop {
        let next = group.commutator_subgroup(&prev);
        if next.is_trivial() {
            return prev;
        }
        if next.order() == prev.order() {
            // derived series stalled above the trivial group
            return prev;
        }
        prev = next;
    }
}

/// Solvability via termination of the derived series of commutator subgroups.
pub fn is_solvable(group: &FiniteGroup) -> bool {
    let mut current = group.full_subgroup();
    loop {
        let next = group.commutator_subgroup(&current);
        if next.is_trivial() {
            return true;
        }
        if next.order() == current.order() {
            return false;
        }
        current = next;
    }
}
