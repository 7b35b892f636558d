//! Finite groups as explicit multiplication tables.
//!
//! Groups are built from presentations of the supported families (cyclic
//! products, dihedral, quaternion) and carry dense index tables so that
//! multiplication, inversion and conjugation are O(1) lookups. Element 0 is
//! always the identity.

use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;
use std::fmt;
use thiserror::Error;

/// Index of a group element inside its owning [`FiniteGroup`].
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Elt(pub u8);

impl fmt::Debug for Elt {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "g{}", self.0)
    }
}

impl Elt {
    pub fn idx(self) -> usize {
        self.0 as usize
    }
}

pub const IDENTITY: Elt = Elt(0);

#[derive(Debug, Error, PartialEq, Eq)]
pub enum GroupError {
    #[error("unsupported group family: {0}")]
    UnsupportedFamily(String),
    #[error("invalid parameter for {family}: {reason}")]
    InvalidParameter { family: String, reason: String },
    #[error("member set is not closed under multiplication/inverse")]
    NotClosed,
    #[error("subgroup is not normal")]
    NotNormal,
    #[error("group is not solvable")]
    NotSolvable,
    #[error("multiplication table is not a valid group: {0}")]
    InvalidTable(String),
}

/// A finite group of order at most 64, stored as a full multiplication table.
#[derive(Clone, Serialize, Deserialize)]
pub struct FiniteGroup {
    pub name: String,
    order: usize,
    /// `mul[a * order + b]` is the index of `a·b`.
    mul_table: Vec<u8>,
    inv_table: Vec<u8>,
}

impl fmt::Debug for FiniteGroup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "FiniteGroup({}, order {})", self.name, self.order)
    }
}

impl FiniteGroup {
    /// Builds a group from a raw multiplication table, checking the group
    /// axioms exhaustively (identity at index 0, associativity, inverses).
    pub fn from_table(name: impl Into<String>, mul_table: Vec<u8>) -> Result<Self, GroupError> {
        let name = name.into();
        let order2 = mul_table.len();
        let order = (order2 as f64).sqrt() as usize;
        if order * order != order2 || order == 0 || order > 64 {
            return Err(GroupError::InvalidTable(format!(
                "table length {order2} is not a square of an order in 1..=64"
            )));
        }
        let at = |a: usize, b: usize| mul_table[a * order + b] as usize;
        for a in 0..order {
            if at(0, a) != a || at(a, 0) != a {
                return Err(GroupError::InvalidTable(
                    "element 0 is not the identity".into(),
                ));
            }
        }
        for a in 0..order {
            for b in 0..order {
                if at(a, b) >= order {
                    return Err(GroupError::InvalidTable("entry out of range".into()));
                }
                for c in 0..order {
                    if at(at(a, b), c) != at(a, at(b, c)) {
                        return Err(GroupError::InvalidTable("not associative".into()));
                    }
                }
            }
        }
        let mut inv_table = vec![u8::MAX; order];
        for a in 0..order {
            for b in 0..order {
                if at(a, b) == 0 && at(b, a) == 0 {
                    inv_table[a] = b as u8;
                }
            }
            if inv_table[a] == u8::MAX {
                return Err(GroupError::InvalidTable(format!(
                    "element {a} has no inverse"
                )));
            }
        }
        Ok(FiniteGroup {
            name,
            order,
            mul_table,
            inv_table,
        })
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn identity(&self) -> Elt {
        IDENTITY
    }

    pub fn elements(&self) -> impl Iterator<Item = Elt> + '_ {
        (0..self.order as u8).map(Elt)
    }

    #[inline]
    pub fn mul(&self, a: Elt, b: Elt) -> Elt {
        Elt(self.mul_table[a.idx() * self.order + b.idx()])
    }

    #[inline]
    pub fn inv(&self, a: Elt) -> Elt {
        Elt(self.inv_table[a.idx()])
    }

    /// Conjugation `x g x⁻¹`.
    #[inline]
    pub fn conj(&self, x: Elt, g: Elt) -> Elt {
        self.mul(self.mul(x, g), self.inv(x))
    }

    /// Ordered product of a slice of elements.
    pub fn prod(&self, elts: &[Elt]) -> Elt {
        elts.iter().fold(IDENTITY, |acc, &e| self.mul(acc, e))
    }

    pub fn elt_order(&self, g: Elt) -> usize {
        let mut k = 1;
        let mut acc = g;
        while acc != IDENTITY {
            acc = self.mul(acc, g);
            k += 1;
        }
        k
    }

    pub fn is_abelian(&self) -> bool {
        self.elements()
            .all(|a| self.elements().all(|b| self.mul(a, b) == self.mul(b, a)))
    }

    pub fn centralizer(&self, x: Elt) -> Subgroup {
        let members = self
            .elements()
            .filter(|&g| self.mul(g, x) == self.mul(x, g))
            .collect();
        Subgroup { members }
    }

    pub fn center(&self) -> Subgroup {
        let members = self
            .elements()
            .filter(|&g| self.elements().all(|h| self.mul(g, h) == self.mul(h, g)))
            .collect();
        Subgroup { members }
    }

    pub fn conjugacy_class(&self, x: Elt) -> Vec<Elt> {
        let set: BTreeSet<Elt> = self.elements().map(|g| self.conj(g, x)).collect();
        set.into_iter().collect()
    }

    pub fn conjugacy_classes(&self) -> Vec<Vec<Elt>> {
        let mut seen = vec![false; self.order];
        let mut classes = Vec::new();
        for g in self.elements() {
            if !seen[g.idx()] {
                let class = self.conjugacy_class(g);
                for &e in &class {
                    seen[e.idx()] = true;
                }
                classes.push(class);
            }
        }
        classes
    }

    /// Smallest subgroup containing `gens`.
    pub fn generated_subgroup(&self, gens: &[Elt]) -> Subgroup {
        let mut members: BTreeSet<Elt> = BTreeSet::new();
        members.insert(IDENTITY);
        let mut frontier: Vec<Elt> = vec![IDENTITY];
        while let Some(g) = frontier.pop() {
            for &s in gens {
                for next in [self.mul(g, s), self.mul(g, self.inv(s))] {
                    if members.insert(next) {
                        frontier.push(next);
                    }
                }
            }
        }
        Subgroup { members }
    }

    /// Commutator subgroup `[H, H]` of a subgroup of this group.
    pub fn commutator_subgroup(&self, h: &Subgroup) -> Subgroup {
        let mut gens = Vec::new();
        for &a in &h.members {
            for &b in &h.members {
                let c = self.mul(self.mul(a, b), self.inv(self.mul(b, a)));
                gens.push(c);
            }
        }
        self.generated_subgroup(&gens)
    }

    pub fn full_subgroup(&self) -> Subgroup {
        Subgroup {
            members: self.elements().collect(),
        }
    }

    pub fn trivial_subgroup(&self) -> Subgroup {
        Subgroup {
            members: std::iter::once(IDENTITY).collect(),
        }
    }

    /// Checks a candidate member set for closure; returns the analysis bundle.
    pub fn subgroup_analysis(&self, members: &[Elt]) -> Result<SubgroupInfo, GroupError> {
        let set: BTreeSet<Elt> = members.iter().copied().collect();
        if !set.contains(&IDENTITY) {
            return Err(GroupError::NotClosed);
        }
        for &a in &set {
            if !set.contains(&self.inv(a)) {
                return Err(GroupError::NotClosed);
            }
            for &b in &set {
                if !set.contains(&self.mul(a, b)) {
                    return Err(GroupError::NotClosed);
                }
            }
        }
        let sub = Subgroup { members: set };
        let is_normal = self.is_normal(&sub);
        Ok(SubgroupInfo {
            is_normal,
            subgroup: sub,
        })
    }

    pub fn is_normal(&self, sub: &Subgroup) -> bool {
        self.elements()
            .all(|g| sub.members.iter().all(|&n| sub.contains(self.conj(g, n))))
    }

    /// All subgroups, found by closing every subset of generators up to size 2
    /// and then saturating with one extra generator until a fixed point. For
    /// orders up to 64 this finds the complete subgroup lattice.
    pub fn all_subgroups(&self) -> Vec<Subgroup> {
        let mut found: BTreeSet<Vec<Elt>> = BTreeSet::new();
        found.insert(self.trivial_subgroup().sorted_members());
        let mut frontier: Vec<Subgroup> = vec![self.trivial_subgroup()];
        while let Some(h) = frontier.pop() {
            for g in self.elements() {
                if h.contains(g) {
                    continue;
                }
                let mut gens = h.sorted_members();
                gens.push(g);
                let bigger = self.generated_subgroup(&gens);
                if found.insert(bigger.sorted_members()) {
                    frontier.push(bigger);
                }
            }
        }
        found
            .into_iter()
            .map(|members| Subgroup {
                members: members.into_iter().collect(),
            })
            .collect()
    }

    /// Quotient by a normal subgroup, together with the projection map and
    /// the lexicographically-least section (so `s(1) = 1`).
    pub fn quotient_with_section(&self, normal: &Subgroup) -> Result<QuotientData, GroupError> {
        if !self.is_normal(normal) {
            return Err(GroupError::NotNormal);
        }
        let mut coset_of = vec![u8::MAX; self.order];
        let mut reps: Vec<Elt> = Vec::new();
        for g in self.elements() {
            if coset_of[g.idx()] == u8::MAX {
                let id = reps.len() as u8;
                // g is the least element of its coset because we scan in order.
                for &n in &normal.members {
                    coset_of[self.mul(g, n).idx()] = id;
                }
                reps.push(g);
            }
        }
        let m = reps.len();
        let mut table = vec![0u8; m * m];
        for (i, &a) in reps.iter().enumerate() {
            for (j, &b) in reps.iter().enumerate() {
                table[i * m + j] = coset_of[self.mul(a, b).idx()];
            }
        }
        let quotient =
            FiniteGroup::from_table(format!("{}/{}", self.name, normal.describe()), table)
                .expect("coset multiplication always yields a group");
        Ok(QuotientData {
            quotient,
            projection: coset_of,
            section: reps,
        })
    }

    /// Splits `g = s(q)·n` with `q` the coset of `g` and `n` in the normal
    /// subgroup: the quotient part and the normal part.
    pub fn qn_split(&self, data: &QuotientData, g: Elt) -> (Elt, Elt) {
        let q = data.section[data.projection[g.idx()] as usize];
        let n = self.mul(self.inv(q), g);
        (q, n)
    }

    pub fn mul_table_json(&self) -> serde_json::Value {
        let rows: Vec<Vec<u8>> = (0..self.order)
            .map(|a| self.mul_table[a * self.order..(a + 1) * self.order].to_vec())
            .collect();
        serde_json::json!({ "name": self.name, "order": self.order, "mul_table": rows })
    }
}

/// Result of [`FiniteGroup::quotient_with_section`].
#[derive(Clone, Debug)]
pub struct QuotientData {
    pub quotient: FiniteGroup,
    /// Element index in G -> element index in Q.
    pub projection: Vec<u8>,
    /// Element index in Q -> chosen representative in G (`section[0] = 1`).
    pub section: Vec<Elt>,
}

impl QuotientData {
    pub fn project(&self, g: Elt) -> Elt {
        Elt(self.projection[g.idx()])
    }

    pub fn section_of(&self, q: Elt) -> Elt {
        self.section[q.idx()]
    }

    /// Representative in G of the coset of `g`.
    pub fn rep_of(&self, g: Elt) -> Elt {
        self.section[self.projection[g.idx()] as usize]
    }
}

/// A subgroup given by its sorted member set.
#[derive(Clone, PartialEq, Eq, Debug, Serialize, Deserialize)]
pub struct Subgroup {
    members: BTreeSet<Elt>,
}

impl Subgroup {
    pub fn from_members(members: impl IntoIterator<Item = Elt>) -> Self {
        Subgroup {
            members: members.into_iter().collect(),
        }
    }

    pub fn order(&self) -> usize {
        self.members.len()
    }

    pub fn contains(&self, g: Elt) -> bool {
        self.members.contains(&g)
    }

    pub fn iter(&self) -> impl Iterator<Item = Elt> + '_ {
        self.members.iter().copied()
    }

    pub fn sorted_members(&self) -> Vec<Elt> {
        self.members.iter().copied().collect()
    }

    pub fn describe(&self) -> String {
        let idx: Vec<String> = self.members.iter().map(|e| e.0.to_string()).collect();
        format!("{{{}}}", idx.join(","))
    }

    pub fn is_trivial(&self) -> bool {
        self.members.len() == 1
    }
}

/// Bundle returned by subgroup analysis.
#[derive(Clone, Debug)]
pub struct SubgroupInfo {
    pub subgroup: Subgroup,
    pub is_normal: bool,
}

/// Descriptor of a builtin group family, parseable from strings such as
/// `"Z4"`, `"Z2xZ2xZ2"`, `"D4"`, `"Q8"`, `"S3"`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum GroupSpec {
    Cyclic(Vec<usize>),
    Dihedral(usize),
    Quaternion,
}

impl GroupSpec {
    pub fn parse(s: &str) -> Result<Self, GroupError> {
        let s = s.trim();
        if s.eq_ignore_ascii_case("q8") {
            return Ok(GroupSpec::Quaternion);
        }
        if s.eq_ignore_ascii_case("s3") {
            return Ok(GroupSpec::Dihedral(3));
        }
        if let Some(rest) = s.strip_prefix('D').or_else(|| s.strip_prefix('d')) {
            let n: usize = rest
                .parse()
                .map_err(|_| GroupError::UnsupportedFamily(s.to_string()))?;
            return Ok(GroupSpec::Dihedral(n));
        }
        // ZnxZmx... products of cyclic factors.
        let mut factors = Vec::new();
        for part in s.split(['x', 'X']) {
            let rest = part
                .strip_prefix('Z')
                .or_else(|| part.strip_prefix('z'))
                .ok_or_else(|| GroupError::UnsupportedFamily(s.to_string()))?;
            let n: usize = rest
                .parse()
                .map_err(|_| GroupError::UnsupportedFamily(s.to_string()))?;
            factors.push(n);
        }
        if factors.is_empty() {
            return Err(GroupError::UnsupportedFamily(s.to_string()));
        }
        Ok(GroupSpec::Cyclic(factors))
    }
}

/// Builds a builtin group from its descriptor.
pub fn build_group(spec: &GroupSpec) -> Result<FiniteGroup, GroupError> {
    match spec {
        GroupSpec::Cyclic(factors) => build_cyclic_product(factors),
        GroupSpec::Dihedral(n) => build_dihedral(*n),
        GroupSpec::Quaternion => build_quaternion(),
    }
}

pub fn build_group_str(s: &str) -> Result<FiniteGroup, GroupError> {
    build_group(&GroupSpec::parse(s)?)
}

/// Z_{n1} x Z_{n2} x ... with mixed-radix element encoding, first factor most
/// significant.
pub fn build_cyclic_product(factors: &[usize]) -> Result<FiniteGroup, GroupError> {
    let order: usize = factors.iter().product();
    if factors.iter().any(|&n| n < 1) || order == 0 || order > 64 {
        return Err(GroupError::InvalidParameter {
            family: "cyclic product".into(),
            reason: format!("factors {factors:?}"),
        });
    }
    let digits = |mut i: usize| -> Vec<usize> {
        let mut out = vec![0; factors.len()];
        for (k, &n) in factors.iter().enumerate().rev() {
            out[k] = i % n;
            i /= n;
        }
        out
    };
    let index =
        |ds: &[usize]| -> usize { ds.iter().zip(factors).fold(0, |acc, (&d, &n)| acc * n + d) };
    let mut table = vec![0u8; order * order];
    for a in 0..order {
        for b in 0..order {
            let da = digits(a);
            let db = digits(b);
            let sum: Vec<usize> = da
                .iter()
                .zip(&db)
                .zip(factors)
                .map(|((&x, &y), &n)| (x + y) % n)
                .collect();
            table[a * order + b] = index(&sum) as u8;
        }
    }
    let name = factors
        .iter()
        .map(|n| format!("Z{n}"))
        .collect::<Vec<_>>()
        .join("x");
    FiniteGroup::from_table(name, table)
}

/// Dihedral group of order 2n from the presentation `a^n = x^2 = 1`,
/// `x a x = a⁻¹`. Elements are `x^i a^j` encoded as `i·n + j`.
pub fn build_dihedral(n: usize) -> Result<FiniteGroup, GroupError> {
    if n < 1 || 2 * n > 64 {
        return Err(GroupError::InvalidParameter {
            family: "dihedral".into(),
            reason: format!("n = {n}"),
        });
    }
    let order = 2 * n;
    let mut table = vec![0u8; order * order];
    for i in 0..2usize {
        for j in 0..n {
            for i2 in 0..2usize {
                for j2 in 0..n {
                    // x^i a^j · x^i2 a^j2 = x^{i+i2} a^{(-1)^{i2} j + j2}
                    let ii = (i + i2) % 2;
                    let jj = ((if i2 == 1 { n - j } else { j }) + j2) % n;
                    table[(i * n + j) * order + (i2 * n + j2)] = (ii * n + jj) as u8;
                }
            }
        }
    }
    let name = if n == 3 {
        "S3".to_string()
    } else {
        format!("D{n}")
    };
    FiniteGroup::from_table(name, table)
}

/// Quaternion group `Q8` from the dihedral-like presentation with `x² = a²`:
/// elements `x^i a^j`, `i ∈ {0,1}`, `j ∈ {0..3}`, encoded `i·4 + j`.
pub fn build_quaternion() -> Result<FiniteGroup, GroupError> {
    let n = 4usize;
    let order = 8usize;
    let mut table = vec![0u8; order * order];
    for i in 0..2usize {
        for j in 0..n {
            for i2 in 0..2usize {
                for j2 in 0..n {
                    // x^i a^j · x^i2 a^j2 = x^{[i+i2]_2} a^{(-1)^{i2} j + j2 + 2·⌊(i+i2)/2⌋}
                    let carry = if i + i2 >= 2 { 2 } else { 0 };
                    let ii = (i + i2) % 2;
                    let jj = ((if i2 == 1 { n - j } else { j }) + j2 + carry) % n;
                    table[(i * n + j) * order + (i2 * n + j2)] = (ii * n + jj) as u8;
                }
            }
        }
    }
    FiniteGroup::from_table("Q8", table)
}
