//! The graph-of-groups data model and structural operations: validation,
//! collapses, refinements, incident edge groups, induced structures, and
//! annotations carrying user-supplied JSJ data.
//!
//! Oriented edges come in reversal pairs (2p, 2p+1); the reversal is the
//! index xor 1, so it is a fixed-point-free involution by construction.

use std::collections::BTreeSet;
use std::fmt;
use std::sync::Arc;

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use thiserror::Error;

use crate::abelian::IntMatrix;
use crate::finite::{Elt, FiniteGroup, GroupHom, SubgroupHandle};

pub type VertexId = usize;
/// Oriented edge id; `e ^ 1` is the reversal, `e / 2` the underlying pair.
pub type OEdgeId = usize;
pub type PairId = usize;

#[derive(Debug, Error)]
pub enum GogError {
    #[error("no vertex named {0}")]
    NoSuchVertex(String),
    #[error("no edge named {0}")]
    NoSuchEdge(String),
    #[error("invalid graph of groups: {0}")]
    Invalid(String),
    #[error("edge set not closed under reversal")]
    EdgeSetNotClosed,
    #[error("attachment target does not contain the edge group: {0}")]
    BadAttachment(String),
    #[error("slide requires i_e(G_e) inside i_f(G_f) up to conjugacy")]
    SlideContainment,
    #[error("{0}")]
    Unsupported(String),
}

/// A vertex group: explicit finite, free abelian of known rank, a graph of
/// groups of its own, or an opaque annotated placeholder.
#[derive(Clone)]
pub enum VertexGroup {
    Finite(Arc<FiniteGroup>),
    /// Free abelian of the given rank (torsion-free; finite abelian groups
    /// are given by tables as `Finite`).
    Abelian(usize),
    Composite(Box<GraphOfGroups>),
    Opaque(OpaqueData),
}

impl fmt::Debug for VertexGroup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            VertexGroup::Finite(g) => write!(f, "Finite({}, {})", g.name(), g.order()),
            VertexGroup::Abelian(r) => write!(f, "Z^{r}"),
            VertexGroup::Composite(g) => write!(f, "Composite({} vertices)", g.vertices.len()),
            VertexGroup::Opaque(o) => write!(f, "Opaque({})", o.label),
        }
    }
}

/// Free-form annotation record for vertices the toolkit cannot compute with.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct OpaqueData {
    pub label: String,
    /// Flags such as `torsion_free`, `nonabelian`, `trivial_center`,
    /// `rigid`, `vc_infinite_center`, `edge_centralizer_is_edge`.
    pub flags: BTreeSet<String>,
}

impl OpaqueData {
    pub fn has(&self, flag: &str) -> bool {
        self.flags.contains(flag)
    }
}

/// Compact 2-orbifold with boundary: genus counts handles when orientable
/// and crosscaps otherwise.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OrbifoldDescriptor {
    pub orientable: bool,
    pub genus: usize,
    pub boundary_components: usize,
    pub cone_points: Vec<u64>,
}

impl OrbifoldDescriptor {
    /// Twice the orbifold Euler characteristic, as a fraction n/d with the
    /// common denominator of the cone orders; hyperbolic iff negative.
    pub fn euler_characteristic(&self) -> (BigInt, BigInt) {
        let chi_top: i64 = if self.orientable {
            2 - 2 * self.genus as i64 - self.boundary_components as i64
        } else {
            2 - self.genus as i64 - self.boundary_components as i64
        };
        let mut num = BigInt::from(chi_top);
        let mut den = BigInt::one();
        for &m in &self.cone_points {
            // subtract (1 - 1/m) = (m-1)/m
            let m = BigInt::from(m);
            num = num * &m - (&m - BigInt::one()) * &den;
            den *= m;
        }
        (num, den)
    }

    pub fn is_hyperbolic(&self) -> bool {
        let (num, _) = self.euler_characteristic();
        num.is_negative()
    }

    pub fn is_surface(&self) -> bool {
        self.cone_points.is_empty()
    }

    pub fn is_pair_of_pants(&self) -> bool {
        self.is_surface() && self.orientable && self.genus == 0 && self.boundary_components == 3
    }

    pub fn is_twice_punctured_projective_plane(&self) -> bool {
        self.is_surface() && !self.orientable && self.genus == 1 && self.boundary_components == 2
    }
}

/// User-supplied JSJ classification for a vertex.
#[derive(Clone, Debug)]
pub enum JsjAnnotation {
    Rigid,
    Qh {
        orbifold: OrbifoldDescriptor,
        fiber_order: u64,
        /// Boundary component index -> name of the incident edge or marked
        /// group using it; must be total on QH vertices.
        boundary_usage: Vec<(usize, String)>,
    },
    AbelianVertex {
        rank: usize,
        /// Sublattice of Z^rank spanned by incident edge groups, when the
        /// edges themselves are not concrete.
        incident_lattice: Option<IntMatrix>,
    },
    Parabolic {
        label: String,
    },
}

#[derive(Clone, Debug)]
pub struct VertexData {
    pub name: String,
    pub group: VertexGroup,
    pub annotation: Option<JsjAnnotation>,
}

/// An edge group: explicit finite or free abelian.
#[derive(Clone)]
pub enum EdgeGroup {
    Finite(Arc<FiniteGroup>),
    Abelian(usize),
}

impl fmt::Debug for EdgeGroup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EdgeGroup::Finite(g) => write!(f, "Finite({})", g.order()),
            EdgeGroup::Abelian(r) => write!(f, "Z^{r}"),
        }
    }
}

impl EdgeGroup {
    pub fn is_trivial(&self) -> bool {
        match self {
            EdgeGroup::Finite(g) => g.order() == 1,
            EdgeGroup::Abelian(r) => *r == 0,
        }
    }
    pub fn finite_order(&self) -> Option<usize> {
        match self {
            EdgeGroup::Finite(g) => Some(g.order()),
            EdgeGroup::Abelian(0) => Some(1),
            EdgeGroup::Abelian(_) => None,
        }
    }
}

/// Monomorphism from an edge group into an endpoint vertex group.
#[derive(Clone, Debug)]
pub enum Inclusion {
    /// Finite edge group into a finite vertex group.
    Finite(GroupHom),
    /// Z^k edge group into Z^r vertex group, as an r x k matrix.
    Abelian(IntMatrix),
    /// Trivial edge group into any vertex group.
    Trivial,
    /// Into a composite vertex: a designated vertex of the sub-graph plus
    /// the inclusion into that vertex's group.
    IntoComposite {
        designated: VertexId,
        inner: Box<Inclusion>,
    },
    /// Into an opaque vertex; carried as annotation only.
    Opaque,
}

#[derive(Clone, Debug)]
pub struct EdgePairData {
    pub name: String,
    pub group: EdgeGroup,
    pub ends: (VertexId, VertexId),
    /// Inclusions into `ends.0` and `ends.1` respectively.
    pub incl: (Inclusion, Inclusion),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum FamilyKind {
    Parabolic,
    Marked,
}

#[derive(Clone, Debug)]
pub enum MemberSubgroup {
    WholeVertexGroup,
    Elements(Vec<Elt>),
    Lattice(IntMatrix),
}

/// A subgroup reference used in parabolic / marked families: recorded as
/// elliptic at a designated vertex, optionally flagged as fixing no edge.
#[derive(Clone, Debug)]
pub struct FamilyMember {
    pub name: String,
    pub vertex: VertexId,
    pub subgroup: MemberSubgroup,
    pub edge_free: Option<bool>,
}

#[derive(Clone, Debug)]
pub struct Family {
    pub name: String,
    pub kind: FamilyKind,
    pub members: Vec<FamilyMember>,
}

/// Input class declared by a document; loosens or tightens validation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum GraphClass {
    #[default]
    Mixed,
    Finite,
    Toral,
}

/// A finite connected graph with a group on each vertex and edge and a
/// monomorphism of each edge group into its endpoints.
#[derive(Clone, Debug)]
pub struct GraphOfGroups {
    pub name: String,
    pub class: GraphClass,
    pub vertices: Vec<VertexData>,
    pub pairs: Vec<EdgePairData>,
    pub families: Vec<Family>,
}

impl GraphOfGroups {
    pub fn new(name: &str) -> Self {
        GraphOfGroups {
            name: name.to_string(),
            class: GraphClass::Mixed,
            vertices: Vec::new(),
            pairs: Vec::new(),
            families: Vec::new(),
        }
    }

    pub fn add_vertex(&mut self, name: &str, group: VertexGroup) -> VertexId {
        self.vertices.push(VertexData {
            name: name.to_string(),
            group,
            annotation: None,
        });
        self.vertices.len() - 1
    }

    pub fn add_edge(
        &mut self,
        name: &str,
        group: EdgeGroup,
        from: VertexId,
        to: VertexId,
        incl_from: Inclusion,
        incl_to: Inclusion,
    ) -> PairId {
        self.pairs.push(EdgePairData {
            name: name.to_string(),
            group,
            ends: (from, to),
            incl: (incl_from, incl_to),
        });
        self.pairs.len() - 1
    }

    pub fn vertex_by_name(&self, name: &str) -> Result<VertexId, GogError> {
        self.vertices
            .iter()
            .position(|v| v.name == name)
            .ok_or_else(|| GogError::NoSuchVertex(name.to_string()))
    }

    pub fn pair_by_name(&self, name: &str) -> Result<PairId, GogError> {
        self.pairs
            .iter()
            .position(|p| p.name == name)
            .ok_or_else(|| GogError::NoSuchEdge(name.to_string()))
    }

    pub fn oriented_edge_count(&self) -> usize {
        self.pairs.len() * 2
    }

    pub fn origin(&self, e: OEdgeId) -> VertexId {
        let p = &self.pairs[e / 2];
        if e % 2 == 0 {
            p.ends.0
        } else {
            p.ends.1
        }
    }

    pub fn terminus(&self, e: OEdgeId) -> VertexId {
        self.origin(e ^ 1)
    }

    pub fn edge_group(&self, e: OEdgeId) -> &EdgeGroup {
        &self.pairs[e / 2].group
    }

    /// Inclusion of the edge group into the origin vertex group of `e`.
    pub fn inclusion(&self, e: OEdgeId) -> &Inclusion {
        let p = &self.pairs[e / 2];
        if e % 2 == 0 {
            &p.incl.0
        } else {
            &p.incl.1
        }
    }

    pub fn oriented_edges(&self) -> impl Iterator<Item = OEdgeId> {
        0..self.oriented_edge_count()
    }

    pub fn edges_at(&self, v: VertexId) -> Vec<OEdgeId> {
        self.oriented_edges().filter(|&e| self.origin(e) == v).collect()
    }

    pub fn is_connected(&self) -> bool {
        if self.vertices.is_empty() {
            return false;
        }
        let mut seen = vec![false; self.vertices.len()];
        let mut stack = vec![0];
        seen[0] = true;
        while let Some(v) = stack.pop() {
            for e in self.edges_at(v) {
                let w = self.terminus(e);
                if !seen[w] {
                    seen[w] = true;
                    stack.push(w);
                }
            }
        }
        seen.into_iter().all(|x| x)
    }

    /// True when every vertex and edge group is an explicit finite group.
    pub fn is_graph_of_finite_groups(&self) -> bool {
        self.vertices.iter().all(|v| matches!(v.group, VertexGroup::Finite(_)))
            && self.pairs.iter().all(|p| matches!(p.group, EdgeGroup::Finite(_)))
    }

    /// True when the graph stays within the virtually free class: finite
    /// edge groups, vertex groups finite or composite over the same class.
    pub fn is_finite_class(&self) -> bool {
        self.vertices.iter().all(|v| match &v.group {
            VertexGroup::Finite(_) => true,
            VertexGroup::Composite(sub) => sub.is_finite_class(),
            _ => false,
        }) && self.pairs.iter().all(|p| matches!(p.group, EdgeGroup::Finite(_)))
    }

    pub fn has_composite_vertices(&self) -> bool {
        self.vertices
            .iter()
            .any(|v| matches!(v.group, VertexGroup::Composite(_)))
    }

    /// Image of the edge group of `e` in its origin vertex group.
    pub fn incident_image(&self, e: OEdgeId) -> IncidentImage {
        fn of_inclusion(incl: &Inclusion) -> IncidentImage {
            match incl {
                Inclusion::Finite(h) => IncidentImage::Finite(h.image()),
                Inclusion::Abelian(m) => IncidentImage::Lattice(m.clone()),
                Inclusion::Trivial => IncidentImage::Trivial,
                Inclusion::IntoComposite { designated, inner } => IncidentImage::Composite {
                    designated: *designated,
                    inner: Box::new(of_inclusion(inner)),
                },
                Inclusion::Opaque => IncidentImage::Opaque,
            }
        }
        of_inclusion(self.inclusion(e))
    }

    /// Incident edge groups Inc_v: one image per incident oriented edge,
    /// with multiplicity (loops contribute twice).
    pub fn incident_edge_groups(&self, v: VertexId) -> Vec<(OEdgeId, IncidentImage)> {
        self.edges_at(v)
            .into_iter()
            .map(|e| (e, self.incident_image(e)))
            .collect()
    }

    /// Rational Euler characteristic sum 1/|G_v| - sum 1/|G_e| over vertices
    /// and non-oriented edges, as a reduced fraction; `None` when a group is
    /// infinite or opaque.
    pub fn euler_characteristic(&self) -> Option<(BigInt, BigInt)> {
        let mut num = BigInt::zero();
        let mut den = BigInt::one();
        let mut add = |num: &mut BigInt, den: &mut BigInt, sign: i64, order: usize| {
            // num/den += sign / order
            let o = BigInt::from(order as i64);
            *num = &*num * &o + BigInt::from(sign) * &*den;
            *den = &*den * &o;
        };
        for v in &self.vertices {
            match &v.group {
                VertexGroup::Finite(g) => add(&mut num, &mut den, 1, g.order()),
                VertexGroup::Composite(sub) => {
                    let (n2, d2) = sub.euler_characteristic()?;
                    num = &num * &d2 + n2 * &den;
                    den *= d2;
                }
                _ => return None,
            }
        }
        for p in &self.pairs {
            match p.group.finite_order() {
                Some(o) => add(&mut num, &mut den, -1, o),
                None => return None,
            }
        }
        let g = gcd_big(&num, &den);
        if g.is_zero() {
            return Some((num, den));
        }
        Some((num / &g, den / &g))
    }

    /// Validates all structural invariants; returns the list of violations.
    pub fn validate(&self) -> Vec<String> {
        let mut diags = Vec::new();
        if self.vertices.is_empty() {
            diags.push("graph has no vertices".to_string());
            return diags;
        }
        if !self.is_connected() {
            diags.push("underlying graph is disconnected".to_string());
        }
        for (i, p) in self.pairs.iter().enumerate() {
            if p.ends.0 >= self.vertices.len() || p.ends.1 >= self.vertices.len() {
                diags.push(format!("edge {} has out-of-range endpoint", p.name));
                continue;
            }
            for (side, incl, end) in [(0, &p.incl.0, p.ends.0), (1, &p.incl.1, p.ends.1)] {
                let vg = &self.vertices[end].group;
                self.validate_inclusion(&mut diags, &p.name, side, &p.group, incl, vg);
            }
            let _ = i;
        }
        for v in &self.vertices {
            if let VertexGroup::Composite(sub) = &v.group {
                for d in sub.validate() {
                    diags.push(format!("composite vertex {}: {}", v.name, d));
                }
            }
            if let Some(JsjAnnotation::Qh {
                orbifold,
                fiber_order,
                boundary_usage,
            }) = &v.annotation
            {
                if *fiber_order < 1 {
                    diags.push(format!("vertex {}: QH fiber order must be >= 1", v.name));
                }
                let used: BTreeSet<usize> = boundary_usage.iter().map(|(b, _)| *b).collect();
                if used.len() < orbifold.boundary_components
                    || used.iter().any(|&b| b >= orbifold.boundary_components)
                {
                    diags.push(format!(
                        "vertex {}: boundary usage is not total on {} boundary components",
                        v.name, orbifold.boundary_components
                    ));
                }
            }
        }
        for f in &self.families {
            for m in &f.members {
                if m.vertex >= self.vertices.len() {
                    diags.push(format!(
                        "family {} member {} names a missing vertex",
                        f.name, m.name
                    ));
                }
            }
        }
        if self.class == GraphClass::Finite && !self.is_finite_class() {
            diags.push("class = finite but a group is outside the finite class".to_string());
        }
        diags
    }

    fn validate_inclusion(
        &self,
        diags: &mut Vec<String>,
        edge_name: &str,
        side: usize,
        group: &EdgeGroup,
        incl: &Inclusion,
        target: &VertexGroup,
    ) {
        match (incl, target) {
            (Inclusion::Trivial, _) => {
                if !group.is_trivial() {
                    diags.push(format!(
                        "edge {edge_name} side {side}: trivial inclusion on a nontrivial edge group"
                    ));
                }
            }
            (Inclusion::Finite(h), VertexGroup::Finite(vg)) => {
                let ok_src = match group {
                    EdgeGroup::Finite(eg) => eg.as_ref() == h.source.as_ref(),
                    _ => false,
                };
                if !ok_src {
                    diags.push(format!(
                        "edge {edge_name} side {side}: hom source is not the edge group"
                    ));
                }
                if h.target.as_ref() != vg.as_ref() {
                    diags.push(format!(
                        "edge {edge_name} side {side}: hom target is not the vertex group"
                    ));
                }
                if !h.is_injective() {
                    diags.push(format!("edge {edge_name} side {side}: inclusion not injective"));
                }
            }
            (Inclusion::Abelian(m), VertexGroup::Abelian(r)) => {
                let k = match group {
                    EdgeGroup::Abelian(k) => *k,
                    _ => {
                        diags.push(format!(
                            "edge {edge_name} side {side}: abelian inclusion on a finite edge group"
                        ));
                        return;
                    }
                };
                if m.rows != *r || m.cols != k {
                    diags.push(format!(
                        "edge {edge_name} side {side}: inclusion matrix is {}x{}, expected {}x{}",
                        m.rows, m.cols, r, k
                    ));
                } else if m.rank() < k {
                    diags.push(format!("edge {edge_name} side {side}: inclusion not injective"));
                }
            }
            (Inclusion::IntoComposite { designated, inner }, VertexGroup::Composite(sub)) => {
                if *designated >= sub.vertices.len() {
                    diags.push(format!(
                        "edge {edge_name} side {side}: designated vertex out of range"
                    ));
                } else {
                    self.validate_inclusion(
                        diags,
                        edge_name,
                        side,
                        group,
                        inner,
                        &sub.vertices[*designated].group,
                    );
                }
            }
            (Inclusion::Opaque, VertexGroup::Opaque(_)) => {}
            _ => diags.push(format!(
                "edge {edge_name} side {side}: inclusion kind does not match vertex group kind"
            )),
        }
    }

    /// Collapses the given edge pairs: each connected component of the
    /// collapsed sub-graph becomes one composite vertex carrying that
    /// sub-graph of groups; the remaining edges are re-attached.
    pub fn collapse(&self, collapse_pairs: &BTreeSet<PairId>) -> Result<GraphOfGroups, GogError> {
        if collapse_pairs.is_empty() {
            return Ok(self.clone());
        }
        // Components of (V, collapsed edges).
        let n = self.vertices.len();
        let mut comp = vec![usize::MAX; n];
        let mut next = 0;
        for start in 0..n {
            if comp[start] != usize::MAX {
                continue;
            }
            comp[start] = next;
            let mut stack = vec![start];
            while let Some(v) = stack.pop() {
                for e in self.edges_at(v) {
                    if collapse_pairs.contains(&(e / 2)) {
                        let w = self.terminus(e);
                        if comp[w] == usize::MAX {
                            comp[w] = next;
                            stack.push(w);
                        }
                    }
                }
            }
            next += 1;
        }
        let ncomp = next;

        // Does a component get any collapsed edge? If not it stays plain.
        let mut comp_has_edge = vec![false; ncomp];
        for &p in collapse_pairs {
            comp_has_edge[comp[self.pairs[p].ends.0]] = true;
        }

        let mut out = GraphOfGroups::new(&self.name);
        out.class = self.class;
        // Build one output vertex per component.
        let mut comp_vertex: Vec<VertexId> = vec![usize::MAX; ncomp];
        // For composite components: map of original vertex -> index in sub-graph.
        let mut sub_index: Vec<Option<Vec<usize>>> = vec![None; ncomp];
        for c in 0..ncomp {
            let members: Vec<usize> = (0..n).filter(|&v| comp[v] == c).collect();
            if !comp_has_edge[c] {
                let v = members[0];
                comp_vertex[c] = out.vertices.len();
                out.vertices.push(self.vertices[v].clone());
            } else {
                let mut sub = GraphOfGroups::new(&format!("{}_c{}", self.name, c));
                sub.class = self.class;
                let mut idx = vec![usize::MAX; n];
                for &v in &members {
                    idx[v] = sub.vertices.len();
                    sub.vertices.push(self.vertices[v].clone());
                }
                for &p in collapse_pairs {
                    let pd = &self.pairs[p];
                    if comp[pd.ends.0] == c {
                        sub.pairs.push(EdgePairData {
                            name: pd.name.clone(),
                            group: pd.group.clone(),
                            ends: (idx[pd.ends.0], idx[pd.ends.1]),
                            incl: pd.incl.clone(),
                        });
                    }
                }
                comp_vertex[c] = out.vertices.len();
                out.vertices.push(VertexData {
                    name: format!("c{}", c),
                    group: VertexGroup::Composite(Box::new(sub)),
                    annotation: None,
                });
                sub_index[c] = Some(idx);
            }
        }
        // Re-attach the remaining edges.
        for (pid, pd) in self.pairs.iter().enumerate() {
            if collapse_pairs.contains(&pid) {
                continue;
            }
            let attach = |v: VertexId, incl: &Inclusion| -> Inclusion {
                let c = comp[v];
                match &sub_index[c] {
                    None => incl.clone(),
                    Some(idx) => Inclusion::IntoComposite {
                        designated: idx[v],
                        inner: Box::new(incl.clone()),
                    },
                }
            };
            out.pairs.push(EdgePairData {
                name: pd.name.clone(),
                group: pd.group.clone(),
                ends: (comp_vertex[comp[pd.ends.0]], comp_vertex[comp[pd.ends.1]]),
                incl: (attach(pd.ends.0, &pd.incl.0), attach(pd.ends.1, &pd.incl.1)),
            });
        }
        out.families = Vec::new(); // families do not survive collapse
        Ok(out)
    }

    /// Collapses every edge except the given pair, yielding a one-edge graph.
    pub fn collapse_to_single_edge(&self, keep: PairId) -> Result<GraphOfGroups, GogError> {
        let set: BTreeSet<PairId> = (0..self.pairs.len()).filter(|&p| p != keep).collect();
        self.collapse(&set)
    }

    /// Refines at `v` using `inner`: `v` must be a composite vertex whose
    /// sub-graph equals `inner` structurally; incident edges re-attach via
    /// their recorded designated vertices. Returns the blown-up graph.
    pub fn refine_at_vertex(&self, v: VertexId) -> Result<GraphOfGroups, GogError> {
        let sub = match &self.vertices[v].group {
            VertexGroup::Composite(sub) => sub.as_ref().clone(),
            _ => {
                return Err(GogError::Unsupported(
                    "refine_at_vertex requires a composite vertex".into(),
                ))
            }
        };
        let mut out = GraphOfGroups::new(&self.name);
        out.class = self.class;
        let mut old_vertex: Vec<VertexId> = Vec::new();
        for (i, vd) in self.vertices.iter().enumerate() {
            if i == v {
                old_vertex.push(usize::MAX);
            } else {
                old_vertex.push(out.vertices.len());
                out.vertices.push(vd.clone());
            }
        }
        let base = out.vertices.len();
        for vd in &sub.vertices {
            out.vertices.push(vd.clone());
        }
        // Inner edges of the refinement.
        for pd in &sub.pairs {
            out.pairs.push(EdgePairData {
                name: pd.name.clone(),
                group: pd.group.clone(),
                ends: (base + pd.ends.0, base + pd.ends.1),
                incl: pd.incl.clone(),
            });
        }
        // Outer edges, re-attached.
        for pd in &self.pairs {
            let fix = |end: VertexId, incl: &Inclusion| -> Result<(VertexId, Inclusion), GogError> {
                if end != v {
                    return Ok((old_vertex[end], incl.clone()));
                }
                match incl {
                    Inclusion::IntoComposite { designated, inner } => {
                        Ok((base + designated, (**inner).clone()))
                    }
                    Inclusion::Trivial => Ok((base, Inclusion::Trivial)),
                    _ => Err(GogError::BadAttachment(format!(
                        "edge {} at composite vertex lacks a designated attachment",
                        pd.name
                    ))),
                }
            };
            let (e0, i0) = fix(pd.ends.0, &pd.incl.0)?;
            let (e1, i1) = fix(pd.ends.1, &pd.incl.1)?;
            out.pairs.push(EdgePairData {
                name: pd.name.clone(),
                group: pd.group.clone(),
                ends: (e0, e1),
                incl: (i0, i1),
            });
        }
        out.families = self
            .families
            .iter()
            .map(|f| Family {
                name: f.name.clone(),
                kind: f.kind.clone(),
                members: f
                    .members
                    .iter()
                    .filter(|m| m.vertex != v)
                    .map(|m| FamilyMember {
                        name: m.name.clone(),
                        vertex: old_vertex[m.vertex],
                        subgroup: m.subgroup.clone(),
                        edge_free: m.edge_free,
                    })
                    .collect(),
            })
            .collect();
        Ok(out)
    }

    /// Replaces every composite vertex by its sub-graph, recursively.
    pub fn flatten(&self) -> Result<GraphOfGroups, GogError> {
        let mut g = self.clone();
        loop {
            match g
                .vertices
                .iter()
                .position(|v| matches!(v.group, VertexGroup::Composite(_)))
            {
                None => return Ok(g),
                Some(v) => {
                    g = g.refine_at_vertex(v)?;
                }
            }
        }
    }

    /// The induced structure P|_{G_v}: members of the family recorded as
    /// elliptic at `v` and flagged edge-free; members at other vertices or
    /// fixing an edge are excluded.
    pub fn induced_structure(
        &self,
        v: VertexId,
        family: &Family,
    ) -> Result<Vec<FamilyMember>, GogError> {
        let mut out = Vec::new();
        for m in &family.members {
            let edge_free = m.edge_free.ok_or_else(|| {
                GogError::Invalid(format!(
                    "family member {} lacks ellipticity data (edge_free flag)",
                    m.name
                ))
            })?;
            if m.vertex == v && edge_free {
                out.push(m.clone());
            }
        }
        Ok(out)
    }

    /// Abelianization of the fundamental group, for graphs whose vertex
    /// groups are finite or free abelian (composites are flattened first).
    pub fn abelianization(&self) -> Result<crate::abelian::FgAbelianGroup, GogError> {
        let flat = self.flatten()?;
        // Generators: for each finite vertex group, its elements as symbols
        // with relations g+h-gh=0 (abelianized table); for each abelian
        // vertex, rank generators; plus one generator per non-tree pair.
        let mut offsets = Vec::new();
        let mut total = 0usize;
        for vd in &flat.vertices {
            offsets.push(total);
            total += match &vd.group {
                VertexGroup::Finite(g) => g.order(),
                VertexGroup::Abelian(r) => *r,
                _ => {
                    return Err(GogError::Unsupported(
                        "abelianization needs finite or abelian vertex groups".into(),
                    ))
                }
            };
        }
        // Spanning tree.
        let nv = flat.vertices.len();
        let mut in_tree = vec![false; flat.pairs.len()];
        let mut seen = vec![false; nv];
        if nv > 0 {
            seen[0] = true;
            let mut stack = vec![0usize];
            while let Some(v) = stack.pop() {
                for e in flat.edges_at(v) {
                    let w = flat.terminus(e);
                    if !seen[w] {
                        seen[w] = true;
                        in_tree[e / 2] = true;
                        stack.push(w);
                    }
                }
            }
        }
        let n_loops = in_tree.iter().filter(|&&t| !t).count();
        let ncols = total + n_loops;
        let mut rows: Vec<Vec<BigInt>> = Vec::new();
        let mut push_row = |r: Vec<(usize, BigInt)>| {
            let mut row = vec![BigInt::zero(); ncols];
            for (j, c) in r {
                row[j] += c;
            }
            rows.push(row);
        };
        // Vertex group relations.
        for (vi, vd) in flat.vertices.iter().enumerate() {
            if let VertexGroup::Finite(g) = &vd.group {
                let off = offsets[vi];
                push_row(vec![(off + g.identity() as usize, BigInt::one())]);
                for a in g.elements() {
                    for b in g.elements() {
                        push_row(vec![
                            (off + a as usize, BigInt::one()),
                            (off + b as usize, BigInt::one()),
                            (off + g.mul(a, b) as usize, BigInt::from(-1)),
                        ]);
                    }
                }
            }
        }
        // Edge relations: i_e(c) = i_ebar(c) in the abelianization (loop
        // letters commute away).
        for (pi, pd) in flat.pairs.iter().enumerate() {
            let (v0, v1) = pd.ends;
            match (&pd.group, &pd.incl.0, &pd.incl.1) {
                (_, Inclusion::Trivial, Inclusion::Trivial) => {}
                (EdgeGroup::Finite(eg), Inclusion::Finite(h0), Inclusion::Finite(h1)) => {
                    for c in eg.elements() {
                        push_row(vec![
                            (offsets[v0] + h0.apply(c) as usize, BigInt::one()),
                            (offsets[v1] + h1.apply(c) as usize, BigInt::from(-1)),
                        ]);
                    }
                }
                (EdgeGroup::Abelian(k), Inclusion::Abelian(m0), Inclusion::Abelian(m1)) => {
                    for c in 0..*k {
                        let mut r = Vec::new();
                        for i in 0..m0.rows {
                            r.push((offsets[v0] + i, m0.get(i, c).clone()));
                        }
                        for i in 0..m1.rows {
                            r.push((offsets[v1] + i, -m1.get(i, c).clone()));
                        }
                        push_row(r);
                    }
                }
                _ => {
                    return Err(GogError::Unsupported(
                        "abelianization: unsupported inclusion kind".into(),
                    ))
                }
            }
            let _ = pi;
        }
        let nrows = rows.len();
        let mut m = IntMatrix::zero(ncols, nrows);
        for (j, row) in rows.into_iter().enumerate() {
            for (i, val) in row.into_iter().enumerate() {
                m.set(i, j, val);
            }
        }
        Ok(crate::abelian::cokernel(&m))
    }
}

/// Image of an edge group inside the origin vertex group.
#[derive(Clone, Debug)]
pub enum IncidentImage {
    Finite(SubgroupHandle),
    Lattice(IntMatrix),
    Trivial,
    Composite {
        designated: VertexId,
        inner: Box<IncidentImage>,
    },
    Opaque,
}

impl IncidentImage {
    pub fn finite(&self) -> Option<&SubgroupHandle> {
        match self {
            IncidentImage::Finite(h) => Some(h),
            _ => None,
        }
    }
}

fn gcd_big(a: &BigInt, b: &BigInt) -> BigInt {
    use num_integer::Integer;
    a.gcd(b)
}

/// Builds the standard Pett-style fixture: dihedral groups glued along an
/// order-2 subgroup. Used pervasively in tests.
pub mod fixtures {
    use super::*;

    /// G = D4 *_C D6 *_C D4 with C of order 2, C central in each D4 (order
    /// 8) and a self-centralizing reflection in D6 (order 6).
    pub fn pett_gamma() -> GraphOfGroups {
        let d4a = FiniteGroup::dihedral("D4a", 4).unwrap();
        let d4b = FiniteGroup::dihedral("D4b", 4).unwrap();
        let d6 = FiniteGroup::dihedral_of_order("D6", 6).unwrap();
        let c2 = FiniteGroup::cyclic("C", 2).unwrap();
        let mut g = GraphOfGroups::new("pett_gamma");
        g.class = GraphClass::Finite;
        let x1 = g.add_vertex("x1", VertexGroup::Finite(Arc::clone(&d4a)));
        let x2 = g.add_vertex("x2", VertexGroup::Finite(Arc::clone(&d6)));
        let x3 = g.add_vertex("x3", VertexGroup::Finite(Arc::clone(&d4b)));
        let r2a = d4a.elt_by_name("r2").unwrap();
        let r2b = d4b.elt_by_name("r2").unwrap();
        let s = d6.elt_by_name("s").unwrap();
        let into_d4a =
            GroupHom::from_generator_images(Arc::clone(&c2), Arc::clone(&d4a), &[(1, r2a)]).unwrap();
        let into_d4b =
            GroupHom::from_generator_images(Arc::clone(&c2), Arc::clone(&d4b), &[(1, r2b)]).unwrap();
        let into_d6 =
            GroupHom::from_generator_images(Arc::clone(&c2), Arc::clone(&d6), &[(1, s)]).unwrap();
        g.add_edge(
            "e1",
            EdgeGroup::Finite(Arc::clone(&c2)),
            x1,
            x2,
            Inclusion::Finite(into_d4a),
            Inclusion::Finite(into_d6.clone()),
        );
        g.add_edge(
            "e2",
            EdgeGroup::Finite(Arc::clone(&c2)),
            x2,
            x3,
            Inclusion::Finite(into_d6),
            Inclusion::Finite(into_d4b),
        );
        g
    }

    /// Delta = D6 *_C (D4 *_C D4): the one-edge splitting whose Bass-Serre
    /// tree is the tree of cylinders of the Pett graph.
    pub fn pett_delta() -> GraphOfGroups {
        let d4a = FiniteGroup::dihedral("D4a", 4).unwrap();
        let d4b = FiniteGroup::dihedral("D4b", 4).unwrap();
        let d6 = FiniteGroup::dihedral_of_order("D6", 6).unwrap();
        let c2 = FiniteGroup::cyclic("C", 2).unwrap();
        let r2a = d4a.elt_by_name("r2").unwrap();
        let r2b = d4b.elt_by_name("r2").unwrap();
        let s = d6.elt_by_name("s").unwrap();

        let mut inner = GraphOfGroups::new("b_prime");
        inner.class = GraphClass::Finite;
        let y1 = inner.add_vertex("y1", VertexGroup::Finite(Arc::clone(&d4a)));
        let y2 = inner.add_vertex("y2", VertexGroup::Finite(Arc::clone(&d4b)));
        let ia =
            GroupHom::from_generator_images(Arc::clone(&c2), Arc::clone(&d4a), &[(1, r2a)]).unwrap();
        let ib =
            GroupHom::from_generator_images(Arc::clone(&c2), Arc::clone(&d4b), &[(1, r2b)]).unwrap();
        inner.add_edge(
            "f",
            EdgeGroup::Finite(Arc::clone(&c2)),
            y1,
            y2,
            Inclusion::Finite(ia.clone()),
            Inclusion::Finite(ib),
        );

        let mut g = GraphOfGroups::new("pett_delta");
        g.class = GraphClass::Finite;
        let a = g.add_vertex("a", VertexGroup::Finite(Arc::clone(&d6)));
        let b = g.add_vertex("b", VertexGroup::Composite(Box::new(inner)));
        let into_d6 =
            GroupHom::from_generator_images(Arc::clone(&c2), Arc::clone(&d6), &[(1, s)]).unwrap();
        g.add_edge(
            "e",
            EdgeGroup::Finite(Arc::clone(&c2)),
            a,
            b,
            Inclusion::Finite(into_d6),
            Inclusion::IntoComposite {
                designated: y1,
                inner: Box::new(Inclusion::Finite(ia)),
            },
        );
        g
    }

    /// BS(2,4), a single loop of infinite cyclic groups: vertex Z, edge Z,
    /// inclusions x -> 4x (origin side of orientation 0) and x -> 2x.
    pub fn bs_2_4() -> GraphOfGroups {
        let mut g = GraphOfGroups::new("bs24");
        g.class = GraphClass::Toral;
        let v = g.add_vertex("v", VertexGroup::Abelian(1));
        let m4 = IntMatrix::from_rows(vec![vec![4]]).unwrap();
        let m2 = IntMatrix::from_rows(vec![vec![2]]).unwrap();
        g.add_edge(
            "e",
            EdgeGroup::Abelian(1),
            v,
            v,
            Inclusion::Abelian(m4),
            Inclusion::Abelian(m2),
        );
        g
    }

    /// Free product Z/3 * Z/5 over the trivial edge group.
    pub fn z3_star_z5() -> GraphOfGroups {
        let c3 = FiniteGroup::cyclic("C3", 3).unwrap();
        let c5 = FiniteGroup::cyclic("C5", 5).unwrap();
        let mut g = GraphOfGroups::new("z3z5");
        g.class = GraphClass::Finite;
        let a = g.add_vertex("a", VertexGroup::Finite(Arc::clone(&c3)));
        let b = g.add_vertex("b", VertexGroup::Finite(Arc::clone(&c5)));
        let triv = FiniteGroup::trivial("T");
        g.add_edge(
            "e",
            EdgeGroup::Finite(triv),
            a,
            b,
            Inclusion::Trivial,
            Inclusion::Trivial,
        );
        g
    }
}

#[cfg(test)]
mod tests {
    use super::fixtures::*;
    use super::*;

    #[test]
    fn pett_validates() {
        let g = pett_gamma();
        assert!(g.validate().is_empty(), "{:?}", g.validate());
        assert!(g.is_graph_of_finite_groups());
        let d = pett_delta();
        assert!(d.validate().is_empty(), "{:?}", d.validate());
    }

    #[test]
    fn validate_flags_noninjective_inclusion() {
        let c2 = FiniteGroup::cyclic("C2", 2).unwrap();
        let c1 = FiniteGroup::trivial("T");
        let mut g = GraphOfGroups::new("bad");
        let a = g.add_vertex("a", VertexGroup::Finite(Arc::clone(&c1)));
        let b = g.add_vertex("b", VertexGroup::Finite(Arc::clone(&c2)));
        // Collapse C2 onto the trivial group: not injective.
        let h = GroupHom::new(Arc::clone(&c2), Arc::clone(&c1), vec![0, 0]).unwrap();
        let h2 = GroupHom::identity_of(Arc::clone(&c2));
        g.add_edge(
            "e",
            EdgeGroup::Finite(c2),
            a,
            b,
            Inclusion::Finite(h),
            Inclusion::Finite(h2),
        );
        let diags = g.validate();
        assert!(diags.iter().any(|d| d.contains("not injective")), "{diags:?}");
    }

    #[test]
    fn validate_flags_disconnected() {
        let c2 = FiniteGroup::cyclic("C2", 2).unwrap();
        let mut g = GraphOfGroups::new("disc");
        g.add_vertex("a", VertexGroup::Finite(Arc::clone(&c2)));
        g.add_vertex("b", VertexGroup::Finite(c2));
        let diags = g.validate();
        assert!(diags.iter().any(|d| d.contains("disconnected")));
    }

    #[test]
    fn collapse_examples() {
        let g = pett_gamma();
        // Empty collapse: unchanged.
        let same = g.collapse(&BTreeSet::new()).unwrap();
        assert_eq!(same.vertices.len(), 3);
        assert_eq!(same.pairs.len(), 2);
        // Collapse e2: two-vertex amalgam with D4 and Composite(D6 *_C D4).
        let e2 = g.pair_by_name("e2").unwrap();
        let c = g.collapse(&[e2].into_iter().collect()).unwrap();
        assert_eq!(c.vertices.len(), 2);
        assert_eq!(c.pairs.len(), 1);
        let comp = c
            .vertices
            .iter()
            .find(|v| matches!(v.group, VertexGroup::Composite(_)))
            .expect("one composite vertex");
        if let VertexGroup::Composite(sub) = &comp.group {
            assert_eq!(sub.vertices.len(), 2);
            assert_eq!(sub.pairs.len(), 1);
        }
        assert!(c.validate().is_empty(), "{:?}", c.validate());
        // Collapse everything: single composite vertex.
        let all: BTreeSet<PairId> = (0..g.pairs.len()).collect();
        let c = g.collapse(&all).unwrap();
        assert_eq!(c.vertices.len(), 1);
        assert!(c.pairs.is_empty());
        assert!(matches!(c.vertices[0].group, VertexGroup::Composite(_)));
    }

    #[test]
    fn collapse_then_refine_round_trip() {
        let g = pett_gamma();
        let e2 = g.pair_by_name("e2").unwrap();
        let c = g.collapse(&[e2].into_iter().collect()).unwrap();
        let comp_idx = c
            .vertices
            .iter()
            .position(|v| matches!(v.group, VertexGroup::Composite(_)))
            .unwrap();
        let back = c.refine_at_vertex(comp_idx).unwrap();
        assert_eq!(back.vertices.len(), 3);
        assert_eq!(back.pairs.len(), 2);
        assert!(back.validate().is_empty());
        // Euler characteristic is preserved through the round trip.
        assert_eq!(g.euler_characteristic(), back.euler_characteristic());
        assert_eq!(g.euler_characteristic(), c.euler_characteristic());
    }

    #[test]
    fn euler_characteristic_pett() {
        let g = pett_gamma();
        // 1/8 + 1/6 + 1/8 - 1/2 - 1/2 = -7/12
        let (num, den) = g.euler_characteristic().unwrap();
        assert_eq!((num, den), (BigInt::from(-7), BigInt::from(12)));
    }

    #[test]
    fn incident_edge_groups_examples() {
        let g = pett_gamma();
        let x2 = g.vertex_by_name("x2").unwrap();
        let inc = g.incident_edge_groups(x2);
        assert_eq!(inc.len(), 2);
        for (_, img) in &inc {
            let h = img.finite().expect("finite image");
            assert_eq!(h.order(), 2);
        }
        let x1 = g.vertex_by_name("x1").unwrap();
        assert_eq!(g.incident_edge_groups(x1).len(), 1);
        // Isolated single vertex: empty family.
        let c2 = FiniteGroup::cyclic("C2", 2).unwrap();
        let mut lone = GraphOfGroups::new("pt");
        let v = lone.add_vertex("v", VertexGroup::Finite(c2));
        assert!(lone.incident_edge_groups(v).is_empty());
    }

    #[test]
    fn induced_structure_examples() {
        let g = pett_gamma();
        let x2 = g.vertex_by_name("x2").unwrap();
        let fam_empty = Family {
            name: "P".into(),
            kind: FamilyKind::Parabolic,
            members: vec![],
        };
        assert!(g.induced_structure(x2, &fam_empty).unwrap().is_empty());
        let fam = Family {
            name: "P".into(),
            kind: FamilyKind::Parabolic,
            members: vec![
                FamilyMember {
                    name: "whole".into(),
                    vertex: x2,
                    subgroup: MemberSubgroup::WholeVertexGroup,
                    edge_free: Some(true),
                },
                FamilyMember {
                    name: "edge_fixer".into(),
                    vertex: x2,
                    subgroup: MemberSubgroup::Elements(vec![0, 3]),
                    edge_free: Some(false),
                },
            ],
        };
        let ind = g.induced_structure(x2, &fam).unwrap();
        assert_eq!(ind.len(), 1);
        assert_eq!(ind[0].name, "whole");
        // Missing flag errors.
        let fam_bad = Family {
            name: "P".into(),
            kind: FamilyKind::Parabolic,
            members: vec![FamilyMember {
                name: "m".into(),
                vertex: x2,
                subgroup: MemberSubgroup::WholeVertexGroup,
                edge_free: None,
            }],
        };
        assert!(g.induced_structure(x2, &fam_bad).is_err());
    }

    #[test]
    fn flatten_delta() {
        let d = pett_delta();
        let flat = d.flatten().unwrap();
        assert_eq!(flat.vertices.len(), 3);
        assert_eq!(flat.pairs.len(), 2);
        assert!(flat.validate().is_empty(), "{:?}", flat.validate());
        assert!(flat.is_graph_of_finite_groups());
    }

    #[test]
    fn orbifold_classification() {
        let pants = OrbifoldDescriptor {
            orientable: true,
            genus: 0,
            boundary_components: 3,
            cone_points: vec![],
        };
        assert!(pants.is_hyperbolic());
        assert!(pants.is_pair_of_pants());
        let tppp = OrbifoldDescriptor {
            orientable: false,
            genus: 1,
            boundary_components: 2,
            cone_points: vec![],
        };
        assert!(tppp.is_hyperbolic());
        assert!(tppp.is_twice_punctured_projective_plane());
        let torus1 = OrbifoldDescriptor {
            orientable: true,
            genus: 1,
            boundary_components: 1,
            cone_points: vec![],
        };
        assert!(torus1.is_hyperbolic());
        assert!(!torus1.is_pair_of_pants());
        let disk = OrbifoldDescriptor {
            orientable: true,
            genus: 0,
            boundary_components: 1,
            cone_points: vec![],
        };
        assert!(!disk.is_hyperbolic());
    }

    #[test]
    fn abelianization_of_fixtures() {
        // Pett: D4 ab = (2,2); amalgamating over C identifies one Z/2 from
        // each side; abelianization is computed exactly by the cokernel.
        let g = pett_gamma();
        let ab = g.abelianization().unwrap();
        assert!(ab.is_finite());
        // BS(2,4): ab = Z x Z/2.
        let b = bs_2_4();
        let ab = b.abelianization().unwrap();
        assert_eq!(ab.free_rank, 1);
        assert_eq!(ab.torsion, vec![BigInt::from(2)]);
        // Z/3 * Z/5: ab = Z/15.
        let f = z3_star_z5();
        let ab = f.abelianization().unwrap();
        assert_eq!(ab.order().unwrap(), BigInt::from(15));
    }
}
