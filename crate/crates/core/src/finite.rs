//! Exact computation in explicit finite groups given by multiplication
//! tables: centers, centralizers, normalizers, conjugacy of subgroups,
//! quotients by normal closures.
//!
//! Elements are canonical integer indices into the table; subgroups are
//! sorted index sets, so subgroup equality is syntactic.

use std::fmt;
use std::sync::Arc;

use thiserror::Error;

/// Default cap on group orders; every operation here is brute force over
/// the table, which stays tractable under this bound.
pub const DEFAULT_ORDER_CAP: usize = 512;

pub type Elt = u16;

#[derive(Debug, Error)]
pub enum GroupError {
    #[error("group order {0} exceeds cap {1}")]
    OrderTooLarge(usize, usize),
    #[error("multiplication table is not {0}x{0}")]
    BadTableShape(usize),
    #[error("table entry out of range")]
    EntryOutOfRange,
    #[error("no identity element")]
    NoIdentity,
    #[error("element {0} has no inverse")]
    NoInverse(Elt),
    #[error("table is not associative at ({0},{1},{2})")]
    NotAssociative(Elt, Elt, Elt),
    #[error("element set is not a subgroup of {0}")]
    NotASubgroup(String),
    #[error("{0}")]
    Other(String),
}

/// A finite group presented by its full multiplication table.
#[derive(Clone)]
pub struct FiniteGroup {
    name: String,
    order: usize,
    /// Row-major: `table[a*order+b]` is the product `a*b`.
    table: Vec<Elt>,
    identity: Elt,
    inverses: Vec<Elt>,
    /// Canonical printable names, one per element.
    elt_names: Vec<String>,
}

impl fmt::Debug for FiniteGroup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "FiniteGroup({}, order {})", self.name, self.order)
    }
}

impl PartialEq for FiniteGroup {
    fn eq(&self, other: &Self) -> bool {
        self.order == other.order && self.table == other.table
    }
}
impl Eq for FiniteGroup {}

impl FiniteGroup {
    /// Builds a group from a raw table, auditing the axioms.
    pub fn from_table(name: &str, table: Vec<Vec<Elt>>) -> Result<Arc<Self>, GroupError> {
        let order = table.len();
        Self::from_flat_table(name, order, table.into_iter().flatten().collect(), None)
    }

    pub fn from_flat_table(
        name: &str,
        order: usize,
        table: Vec<Elt>,
        elt_names: Option<Vec<String>>,
    ) -> Result<Arc<Self>, GroupError> {
        if order == 0 || table.len() != order * order {
            return Err(GroupError::BadTableShape(order));
        }
        if order > DEFAULT_ORDER_CAP {
            return Err(GroupError::OrderTooLarge(order, DEFAULT_ORDER_CAP));
        }
        if table.iter().any(|&x| (x as usize) >= order) {
            return Err(GroupError::EntryOutOfRange);
        }
        let mul = |a: usize, b: usize| table[a * order + b] as usize;
        let mut identity = None;
        for e in 0..order {
            if (0..order).all(|a| mul(e, a) == a && mul(a, e) == a) {
                identity = Some(e as Elt);
												break;
            }
        }
        let identity = identity.ok_or(GroupError::NoIdentity)?;
        let mut inverses = vec![0 as Elt; order];
        for a in 0..order {
            let inv = (0..order).find(|&b| mul(a, b) == identity as usize);
            match inv {
                Some(b) if mul(b, a) == identity as usize => inverses[a] = b as Elt,
                _ => return Err(GroupError::NoInverse(a as Elt)),
            }
        }
        for a in 0..order {
            for b in 0..order {
                for c in 0..order {
                    if mul(mul(a, b), c) != mul(a, mul(b, c)) {
                        return Err(GroupError::NotAssociative(a as Elt, b as Elt, c as Elt));
                    }
                }
            }
        }
        let elt_names = elt_names
            .unwrap_or_else(|| (0..order).map(|i| format!("e{i}")).collect());
        Ok(Arc::new(FiniteGroup {
            name: name.to_string(),
            order,
            table,
            identity,
            inverses,
            elt_names,
        }))
    }

    /// Trivial group.
    pub fn trivial(name: &str) -> Arc<Self> {
        FiniteGroup::from_flat_table(name, 1, vec![0], Some(vec!["1".into()])).unwrap()
    }

    /// Cyclic group of order n; generator is named `g`.
    pub fn cyclic(name: &str, n: usize) -> Result<Arc<Self>, GroupError> {
        if n == 0 {
            return Err(GroupError::Other("cyclic(0) is not a group".into()));
        }
        let mut table = vec![0 as Elt; n * n];
        for a in 0..n {
            for b in 0..n {
                table[a * n + b] = ((a + b) % n) as Elt;
            }
        }
        let names = (0..n)
            .map(|i| match i {
                0 => "1".to_string(),
                1 => "g".to_string(),
                _ => format!("g{i}"),
            })
            .collect();
        Self::from_flat_table(name, n, table, Some(names))
    }

    /// Dihedral group of order 2n with presentation `<r,s | r^n, s^2, (rs)^2>`.
    /// Elements 0..n are rotations `r^k`, elements n..2n are reflections `r^k s`.
    pub fn dihedral(name: &str, n: usize) -> Result<Arc<Self>, GroupError> {
        if n == 0 {
            return Err(GroupError::Other("dihedral(0) is not a group".into()));
        }
        let order = 2 * n;
        let mut table = vec![0 as Elt; order * order];
        // r^a s^e * r^b s^f = r^(a + b or a - b) s^(e xor f)
        for a in 0..n {
            for e in 0..2usize {
                for b in 0..n {
                    for f in 0..2usize {
                        let x = a + e * n;
                        let y = b + f * n;
                        let rot = if e == 0 { (a + b) % n } else { (a + n - b % n) % n };
                        let refl = e ^ f;
                        table[x * order + y] = (rot + refl * n) as Elt;
                    }
                }
            }
        }
        let mut names = Vec::with_capacity(order);
        for k in 0..n {
            names.push(match k {
                0 => "1".to_string(),
                1 => "r".to_string(),
                _ => format!("r{k}"),
            });
        }
        for k in 0..n {
            names.push(match k {
                0 => "s".to_string(),
                1 => "rs".to_string(),
                _ => format!("r{k}s"),
            });
        }
        Self::from_flat_table(name, order, table, Some(names))
    }

    /// Dihedral group presented by its order (must be even, at least 2);
    /// `dihedral_of_order(2n) == dihedral(n)`.
    pub fn dihedral_of_order(name: &str, order: usize) -> Result<Arc<Self>, GroupError> {
        if order < 2 || order % 2 != 0 {
            return Err(GroupError::Other(format!(
                "dihedral_of_order({order}): order must be even and >= 2"
            )));
        }
        Self::dihedral(name, order / 2)
    }

    /// Direct product; element (a,b) has index a*|B| + b.
    pub fn direct_product(name: &str, a: &FiniteGroup, b: &FiniteGroup) -> Result<Arc<Self>, GroupError> {
        let order = a.order * b.order;
        if order > DEFAULT_ORDER_CAP {
            return Err(GroupError::OrderTooLarge(order, DEFAULT_ORDER_CAP));
        }
        let mut table = vec![0 as Elt; order * order];
        for a1 in 0..a.order {
            for b1 in 0..b.order {
                for a2 in 0..a.order {
                    for b2 in 0..b.order {
                        let x = a1 * b.order + b1;
                        let y = a2 * b.order + b2;
                        let pa = a.mul(a1 as Elt, a2 as Elt) as usize;
                        let pb = b.mul(b1 as Elt, b2 as Elt) as usize;
                        table[x * order + y] = (pa * b.order + pb) as Elt;
                    }
                }
            }
        }
        let names = (0..a.order)
            .flat_map(|x| {
                (0..b.order).map(move |y| format!("({},{})", x, y))
            })
            .collect();
        Self::from_flat_table(name, order, table, Some(names))
    }

    pub fn name(&self) -> &str {
        &self.name
    }
    pub fn order(&self) -> usize {
        self.order
    }
    pub fn identity(&self) -> Elt {
        self.identity
    }
    #[inline]
    pub fn mul(&self, a: Elt, b: Elt) -> Elt {
        self.table[a as usize * self.order + b as usize]
    }
    #[inline]
    pub fn inv(&self, a: Elt) -> Elt {
        self.inverses[a as usize]
    }
    pub fn conj(&self, g: Elt, x: Elt) -> Elt {
        self.mul(self.mul(g, x), self.inv(g))
    }
    pub fn elements(&self) -> impl Iterator<Item = Elt> + '_ {
        (0..self.order as Elt).map(|i| i)
    }
    pub fn elt_name(&self, a: Elt) -> &str {
        &self.elt_names[a as usize]
    }
    pub fn elt_by_name(&self, name: &str) -> Option<Elt> {
        self.elt_names
            .iter()
            .position(|n| n == name)
            .map(|i| i as Elt)
    }

    pub fn elt_order(&self, a: Elt) -> usize {
        let mut x = a;
        let mut n = 1;
        while x != self.identity {
            x = self.mul(x, a);
            n += 1;
        }
        n
    }

    pub fn is_abelian(&self) -> bool {
        (0..self.order as Elt)
            .all(|a| (0..self.order as Elt).all(|b| self.mul(a, b) == self.mul(b, a)))
    }

    /// Multiset of element orders, an isomorphism invariant.
    pub fn order_profile(&self) -> Vec<usize> {
        let mut p: Vec<usize> = self.elements().map(|a| self.elt_order(a)).collect();
        p.sort_unstable();
        p
    }
}

/// A subgroup of a `FiniteGroup`, stored as a sorted element-index set.
#[derive(Clone)]
pub struct SubgroupHandle {
    pub parent: Arc<FiniteGroup>,
    pub elements: Vec<Elt>,
}

impl fmt::Debug for SubgroupHandle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "Subgroup(order {} of {})",
            self.elements.len(),
            self.parent.name()
        )
    }
}

impl PartialEq for SubgroupHandle {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.parent, &other.parent) && self.elements == other.elements
            || (self.parent.as_ref() == other.parent.as_ref() && self.elements == other.elements)
    }
}
impl Eq for SubgroupHandle {}

impl SubgroupHandle {
    pub fn new(parent: Arc<FiniteGroup>, mut elements: Vec<Elt>) -> Result<Self, GroupError> {
        elements.sort_unstable();
        elements.dedup();
        let h = SubgroupHandle { parent, elements };
        if !h.is_subgroup() {
            return Err(GroupError::NotASubgroup(h.parent.name().to_string()));
        }
        Ok(h)
    }

    pub fn full(parent: Arc<FiniteGroup>) -> Self {
        let elements = parent.elements().collect();
        SubgroupHandle { parent, elements }
    }

    pub fn trivial(parent: Arc<FiniteGroup>) -> Self {
        let e = parent.identity();
        SubgroupHandle {
            parent,
            elements: vec![e],
        }
    }

    /// Closure of a generating set.
    pub fn generated(parent: Arc<FiniteGroup>, gens: &[Elt]) -> Self {
        let mut seen = vec![false; parent.order()];
        seen[parent.identity() as usize] = true;
        let mut frontier = vec![parent.identity()];
        while let Some(x) = frontier.pop() {
            for &g in gens {
                for y in [parent.mul(x, g), parent.mul(x, parent.inv(g))] {
                    if !seen[y as usize] {
                        seen[y as usize] = true;
                        frontier.push(y);
                    }
                }
            }
        }
        let elements = (0..parent.order() as Elt)
            .filter(|&i| seen[i as usize])
            .collect();
        SubgroupHandle { parent, elements }
    }

    fn is_subgroup(&self) -> bool {
        let g = &self.parent;
        if !self.elements.contains(&g.identity()) {
            return false;
        }
        self.elements.iter().all(|&a| {
            self.contains(g.inv(a))
                && self.elements.iter().all(|&b| self.contains(g.mul(a, b)))
        })
    }

    pub fn order(&self) -> usize {
        self.elements.len()
    }

    pub fn contains(&self, x: Elt) -> bool {
        self.elements.binary_search(&x).is_ok()
    }

    pub fn is_full(&self) -> bool {
        self.order() == self.parent.order()
    }

    pub fn conjugate(&self, g: Elt) -> SubgroupHandle {
        let mut elements: Vec<Elt> = self
            .elements
            .iter()
            .map(|&x| self.parent.conj(g, x))
            .collect();
        elements.sort_unstable();
        SubgroupHandle {
            parent: Arc::clone(&self.parent),
            elements,
        }
    }

    /// Lexicographically minimal conjugate, with a witness conjugator;
    /// canonical representative of the conjugacy class in the parent.
    pub fn canonical_conjugate(&self) -> (SubgroupHandle, Elt) {
        let mut best = self.clone();
        let mut wit = self.parent.identity();
        for g in self.parent.elements() {
            let c = self.conjugate(g);
            if c.elements < best.elements {
                best = c;
                wit = g;
            }
        }
        (best, wit)
    }

    /// Materializes the subgroup as an abstract `FiniteGroup` plus the
    /// element map back into the parent.
    pub fn as_group(&self, name: &str) -> (Arc<FiniteGroup>, Vec<Elt>) {
        let n = self.elements.len();
        let index_of = |x: Elt| self.elements.binary_search(&x).unwrap() as Elt;
        let mut table = vec![0 as Elt; n * n];
        for (i, &a) in self.elements.iter().enumerate() {
            for (j, &b) in self.elements.iter().enumerate() {
                table[i * n + j] = index_of(self.parent.mul(a, b));
            }
        }
        let names = self
            .elements
            .iter()
            .map(|&x| self.parent.elt_name(x).to_string())
            .collect();
        let g = FiniteGroup::from_flat_table(name, n, table, Some(names)).expect("subgroup table");
        (g, self.elements.clone())
    }
}

/// A homomorphism between explicit finite groups, stored per-element.
#[derive(Clone)]
pub struct GroupHom {
    pub source: Arc<FiniteGroup>,
    pub target: Arc<FiniteGroup>,
    pub images: Vec<Elt>,
}

impl fmt::Debug for GroupHom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "GroupHom({} -> {})", self.source.name(), self.target.name())
    }
}

impl GroupHom {
    pub fn new(
        source: Arc<FiniteGroup>,
        target: Arc<FiniteGroup>,
        images: Vec<Elt>,
    ) -> Result<Self, GroupError> {
        if images.len() != source.order() {
            return Err(GroupError::Other("hom image list has wrong length".into()));
        }
        if images.iter().any(|&x| x as usize >= target.order()) {
            return Err(GroupError::EntryOutOfRange);
        }
        let h = GroupHom {
            source,
            target,
            images,
        };
        if !h.is_multiplicative() {
            return Err(GroupError::Other("map is not multiplicative".into()));
        }
        Ok(h)
    }

    /// Builds a hom from generator images by completing multiplicatively;
    /// errors when the assignment is inconsistent.
    pub fn from_generator_images(
        source: Arc<FiniteGroup>,
        target: Arc<FiniteGroup>,
        gens: &[(Elt, Elt)],
    ) -> Result<Self, GroupError> {
        let n = source.order();
        let mut images: Vec<Option<Elt>> = vec![None; n];
        images[source.identity() as usize] = Some(target.identity());
        let mut frontier = vec![source.identity()];
        // Also seed inverses of generators.
        let mut pairs: Vec<(Elt, Elt)> = gens.to_vec();
        for &(g, h) in gens {
            pairs.push((source.inv(g), target.inv(h)));
        }
        while let Some(x) = frontier.pop() {
            let ix = images[x as usize].unwrap();
            for &(g, h) in &pairs {
                let y = source.mul(x, g);
                let iy = target.mul(ix, h);
                match images[y as usize] {
                    None => {
                        images[y as usize] = Some(iy);
                        frontier.push(y);
                    }
                    Some(old) if old != iy => {
                        return Err(GroupError::Other(
                            "generator images are inconsistent".into(),
                        ));
                    }
                    _ => {}
                }
            }
        }
        if images.iter().any(|x| x.is_none()) {
            return Err(GroupError::Other(
                "generators do not generate the source group".into(),
            ));
        }
        Self::new(source, target, images.into_iter().map(|x| x.unwrap()).collect())
    }

    pub fn identity_of(g: Arc<FiniteGroup>) -> Self {
        let images = g.elements().collect();
        GroupHom {
            source: Arc::clone(&g),
            target: g,
            images,
        }
    }

    fn is_multiplicative(&self) -> bool {
        let s = &self.source;
        let t = &self.target;
        s.elements().all(|a| {
            s.elements()
                .all(|b| self.images[s.mul(a, b) as usize] == t.mul(self.apply(a), self.apply(b)))
        })
    }

    #[inline]
    pub fn apply(&self, a: Elt) -> Elt {
        self.images[a as usize]
    }

    pub fn is_injective(&self) -> bool {
        let mut seen = vec![false; self.target.order()];
        for &x in &self.images {
            if seen[x as usize] {
                return false;
            }
            seen[x as usize] = true;
        }
        true
    }

    pub fn image(&self) -> SubgroupHandle {
        let mut elements: Vec<Elt> = self.images.clone();
        elements.sort_unstable();
        elements.dedup();
        SubgroupHandle {
            parent: Arc::clone(&self.target),
            elements,
        }
    }

    /// Preimage of a target element under an injective hom.
    pub fn preimage(&self, y: Elt) -> Option<Elt> {
        self.images.iter().position(|&x| x == y).map(|i| i as Elt)
    }

    pub fn compose(&self, then: &GroupHom) -> GroupHom {
        debug_assert_eq!(self.target.order(), then.source.order());
        GroupHom {
            source: Arc::clone(&self.source),
            target: Arc::clone(&then.target),
            images: self.images.iter().map(|&x| then.apply(x)).collect(),
        }
    }

    /// Post-composes with conjugation by `g` in the target.
    pub fn then_conj(&self, g: Elt) -> GroupHom {
        GroupHom {
            source: Arc::clone(&self.source),
            target: Arc::clone(&self.target),
            images: self.images.iter().map(|&x| self.target.conj(g, x)).collect(),
        }
    }
}

/// Center of G.
pub fn center(g: &Arc<FiniteGroup>) -> SubgroupHandle {
    let elements = g
        .elements()
        .filter(|&a| g.elements().all(|b| g.mul(a, b) == g.mul(b, a)))
        .collect();
    SubgroupHandle {
        parent: Arc::clone(g),
        elements,
    }
}

/// Centralizer of H in G.
pub fn centralizer(g: &Arc<FiniteGroup>, h: &SubgroupHandle) -> SubgroupHandle {
    let elements = g
        .elements()
        .filter(|&a| h.elements.iter().all(|&x| g.mul(a, x) == g.mul(x, a)))
        .collect();
    SubgroupHandle {
        parent: Arc::clone(g),
        elements,
    }
}

/// Centralizer of a single element.
pub fn element_centralizer(g: &Arc<FiniteGroup>, x: Elt) -> SubgroupHandle {
    let elements = g
        .elements()
        .filter(|&a| g.mul(a, x) == g.mul(x, a))
        .collect();
    SubgroupHandle {
        parent: Arc::clone(g),
        elements,
    }
}

/// Normalizer of H in G.
pub fn normalizer(g: &Arc<FiniteGroup>, h: &SubgroupHandle) -> SubgroupHandle {
    let elements = g
        .elements()
        .filter(|&a| {
            h.elements
                .iter()
                .all(|&x| h.contains(g.conj(a, x)))
        })
        .collect();
    SubgroupHandle {
        parent: Arc::clone(g),
        elements,
    }
}

/// Some g with g H1 g^-1 = H2, if one exists.
pub fn conjugate_subgroups(
    g: &Arc<FiniteGroup>,
    h1: &SubgroupHandle,
    h2: &SubgroupHandle,
) -> Option<Elt> {
    if h1.order() != h2.order() {
        return None;
    }
    g.elements().find(|&a| h1.conjugate(a).elements == h2.elements)
}

/// Quotient of G by the normal closure of a set S, as an explicit group,
/// together with the projection hom.
pub fn quotient_by_normal_closure(
    g: &Arc<FiniteGroup>,
    s: &[Elt],
) -> Result<(Arc<FiniteGroup>, GroupHom), GroupError> {
    // Normal closure: close the generated subgroup under conjugation.
    let mut n = SubgroupHandle::generated(Arc::clone(g), s);
    loop {
        let mut gens: Vec<Elt> = n.elements.clone();
        let mut grew = false;
        for &x in &n.elements {
            for a in g.elements() {
                let c = g.conj(a, x);
                if !n.contains(c) {
                    gens.push(c);
                    grew = true;
                }
            }
            if grew {
                break;
            }
        }
        if !grew {
            break;
        }
        n = SubgroupHandle::generated(Arc::clone(g), &gens);
    }
    // Coset table.
    let order = g.order();
    let mut coset_of = vec![usize::MAX; order];
    let mut reps: Vec<Elt> = Vec::new();
    for a in g.elements() {
        if coset_of[a as usize] != usize::MAX {
            continue;
        }
        let idx = reps.len();
        reps.push(a);
        for &x in &n.elements {
            coset_of[g.mul(a, x) as usize] = idx;
        }
    }
    let q = reps.len();
    let mut table = vec![0 as Elt; q * q];
    for i in 0..q {
        for j in 0..q {
            table[i * q + j] = coset_of[g.mul(reps[i], reps[j]) as usize] as Elt;
        }
    }
    let names = reps.iter().map(|&r| format!("[{}]", g.elt_name(r))).collect();
    let quot = FiniteGroup::from_flat_table(&format!("{}/N", g.name()), q, table, Some(names))?;
    let images = (0..order).map(|a| coset_of[a] as Elt).collect();
    let proj = GroupHom::new(Arc::clone(g), Arc::clone(&quot), images)?;
    Ok((quot, proj))
}

/// All subgroups of G, each canonical (sorted element sets), deduplicated.
/// Brute-force closure growth; intended for small orders.
pub fn all_subgroups(g: &Arc<FiniteGroup>) -> Vec<SubgroupHandle> {
    use std::collections::BTreeSet;
    let mut seen: BTreeSet<Vec<Elt>> = BTreeSet::new();
    let triv = SubgroupHandle::trivial(Arc::clone(g));
    seen.insert(triv.elements.clone());
    let mut frontier = vec![triv];
    while let Some(h) = frontier.pop() {
        for x in g.elements() {
            if h.contains(x) {
                continue;
            }
            let mut gens = h.elements.clone();
            gens.push(x);
            let bigger = SubgroupHandle::generated(Arc::clone(g), &gens);
            if seen.insert(bigger.elements.clone()) {
                frontier.push(bigger);
            }
        }
    }
    seen.into_iter()
        .map(|elements| SubgroupHandle {
            parent: Arc::clone(g),
            elements,
        })
        .collect()
}

/// Abelianization of G: invariant factors of G/[G,G], smallest first,
/// unit factors dropped.
pub fn abelianization_factors(g: &Arc<FiniteGroup>) -> Vec<usize> {
    let mut comms = Vec::new();
    for a in g.elements() {
        for b in g.elements() {
            comms.push(g.mul(g.mul(a, b), g.mul(g.inv(a), g.inv(b))));
        }
    }
    let (q, _) = quotient_by_normal_closure(g, &comms).expect("abelianization quotient");
    // Decompose the finite abelian quotient into invariant factors by
    // repeatedly splitting off an element of maximal order.
    let mut factors = Vec::new();
    let mut current: Arc<FiniteGroup> = q;
    while current.order() > 1 {
        let max = current
            .elements()
            .max_by_key(|&a| current.elt_order(a))
            .unwrap();
        let d = current.elt_order(max);
        factors.push(d);
        let (next, _) = quotient_by_normal_closure(&current, &[max]).expect("abelian split");
        current = next;
    }
    factors.sort_unstable();
    factors
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constructor_audit() {
        for n in 1..=8 {
            FiniteGroup::cyclic("C", n).unwrap();
            FiniteGroup::dihedral("D", n).unwrap();
        }
        assert_eq!(FiniteGroup::dihedral_of_order("D6", 6).unwrap().order(), 6);
        assert_eq!(FiniteGroup::dihedral("D4", 4).unwrap().order(), 8);
    }

    #[test]
    fn center_examples() {
        let t = FiniteGroup::trivial("1");
        assert_eq!(center(&t).order(), 1);
        // D4 of order 8: center has order 2 (generated by r^2).
        let d4 = FiniteGroup::dihedral("D4", 4).unwrap();
        let z = center(&d4);
        assert_eq!(z.order(), 2);
        assert!(z.contains(d4.elt_by_name("r2").unwrap()));
        // D6 of order 6: trivial center.
        let d6 = FiniteGroup::dihedral_of_order("D6", 6).unwrap();
        assert_eq!(center(&d6).order(), 1);
    }

    #[test]
    fn centralizer_examples() {
        let d4 = FiniteGroup::dihedral("D4", 4).unwrap();
        let triv = SubgroupHandle::trivial(Arc::clone(&d4));
        assert!(centralizer(&d4, &triv).is_full());
        // C = center of D4: centralizer is all of D4.
        let c = center(&d4);
        assert!(centralizer(&d4, &c).is_full());
        // C = <s> in D6: self-centralizing.
        let d6 = FiniteGroup::dihedral_of_order("D6", 6).unwrap();
        let s = d6.elt_by_name("s").unwrap();
        let c = SubgroupHandle::generated(Arc::clone(&d6), &[s]);
        assert_eq!(centralizer(&d6, &c).elements, c.elements);
    }

    #[test]
    fn normalizer_examples() {
        let d4 = FiniteGroup::dihedral("D4", 4).unwrap();
        let full = SubgroupHandle::full(Arc::clone(&d4));
        assert!(normalizer(&d4, &full).is_full());
        assert!(normalizer(&d4, &center(&d4)).is_full());
        let d6 = FiniteGroup::dihedral_of_order("D6", 6).unwrap();
        let s = d6.elt_by_name("s").unwrap();
        let c = SubgroupHandle::generated(Arc::clone(&d6), &[s]);
        assert_eq!(normalizer(&d6, &c).elements, c.elements);
    }

    #[test]
    fn conjugate_subgroup_examples() {
        let d6 = FiniteGroup::dihedral_of_order("D6", 6).unwrap();
        let s = d6.elt_by_name("s").unwrap();
        let rs = d6.elt_by_name("rs").unwrap();
        let h1 = SubgroupHandle::generated(Arc::clone(&d6), &[s]);
        let h2 = SubgroupHandle::generated(Arc::clone(&d6), &[rs]);
        assert_eq!(conjugate_subgroups(&d6, &h1, &h1), Some(d6.identity()));
        let w = conjugate_subgroups(&d6, &h1, &h2).expect("reflections are conjugate");
        assert_eq!(h1.conjugate(w).elements, h2.elements);
        // Rotation subgroup vs reflection subgroup of D4: not conjugate.
        let d4 = FiniteGroup::dihedral("D4", 4).unwrap();
        let r = d4.elt_by_name("r2").unwrap();
        let s4 = d4.elt_by_name("s").unwrap();
        let rot = SubgroupHandle::generated(Arc::clone(&d4), &[r]);
        let refl = SubgroupHandle::generated(Arc::clone(&d4), &[s4]);
        assert!(conjugate_subgroups(&d4, &rot, &refl).is_none());
    }

    #[test]
    fn quotient_examples() {
        let d4 = FiniteGroup::dihedral("D4", 4).unwrap();
        let (q, proj) = quotient_by_normal_closure(&d4, &[]).unwrap();
        assert_eq!(q.order(), 8);
        assert!(proj.is_injective());
        let all: Vec<Elt> = d4.elements().collect();
        let (q, _) = quotient_by_normal_closure(&d4, &all).unwrap();
        assert_eq!(q.order(), 1);
        let z = center(&d4);
        let (q, proj) = quotient_by_normal_closure(&d4, &z.elements).unwrap();
        assert_eq!(q.order(), 4);
        // Kernel is exactly the closure.
        let ker: Vec<Elt> = d4
            .elements()
            .filter(|&a| proj.apply(a) == q.identity())
            .collect();
        assert_eq!(ker, z.elements);
    }

    #[test]
    fn subgroup_lattice_small() {
        let d4 = FiniteGroup::dihedral("D4", 4).unwrap();
        // D4 (order 8) has 10 subgroups.
        assert_eq!(all_subgroups(&d4).len(), 10);
        let d6 = FiniteGroup::dihedral_of_order("D6", 6).unwrap();
        // S3 has 6 subgroups.
        assert_eq!(all_subgroups(&d6).len(), 6);
    }

    #[test]
    fn abelianization_examples() {
        let d4 = FiniteGroup::dihedral("D4", 4).unwrap();
        assert_eq!(abelianization_factors(&d4), vec![2, 2]);
        let c6 = FiniteGroup::cyclic("C6", 6).unwrap();
        assert_eq!(abelianization_factors(&c6), vec![6]);
        let d6 = FiniteGroup::dihedral_of_order("D6", 6).unwrap();
        assert_eq!(abelianization_factors(&d6), vec![2]);
    }

    #[test]
    fn inclusion_chain_invariant() {
        // center <= centralizer <= normalizer for every subgroup of D4, D6.
        for g in [
            FiniteGroup::dihedral("D4", 4).unwrap(),
            FiniteGroup::dihedral_of_order("D6", 6).unwrap(),
        ] {
            let z = center(&g);
            for h in all_subgroups(&g) {
                let c = centralizer(&g, &h);
                let n = normalizer(&g, &h);
                assert!(z.elements.iter().all(|x| c.contains(*x)));
                assert!(c.elements.iter().all(|x| n.contains(*x)));
                assert!(h.elements.iter().all(|x| n.contains(*x)));
            }
        }
    }

    #[test]
    fn hom_from_generators() {
        let c2 = FiniteGroup::cyclic("C2", 2).unwrap();
        let d4 = FiniteGroup::dihedral("D4", 4).unwrap();
        let r2 = d4.elt_by_name("r2").unwrap();
        let h = GroupHom::from_generator_images(Arc::clone(&c2), Arc::clone(&d4), &[(1, r2)])
            .unwrap();
        assert!(h.is_injective());
        assert_eq!(h.apply(1), r2);
        // Non-multiplicative assignment rejected: send order-2 gen to r (order 4).
        let r = d4.elt_by_name("r").unwrap();
        assert!(GroupHom::from_generator_images(c2, d4, &[(1, r)]).is_err());
    }
}
