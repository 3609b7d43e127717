//! Words in fundamental groups of graphs of groups: Britton reduction,
//! elliptic/hyperbolic classification, and canonical coset forms for
//! Bass-Serre tree vertices.
//!
//! Vertex and edge groups must be explicit finite groups or free abelian
//! lattices; composite vertices are handled by flattening beforehand.
//!
//! Convention: for an oriented edge e, the letter t_e satisfies
//! t_e i_ebar(c) t_e^-1 = i_e(c), with t_ebar = t_e^-1. A path word
//! g_0 t_{e_1} g_1 ... t_{e_n} g_n starts at o(e_1) and ends at t(e_n).

use num_bigint::BigInt;
use num_traits::Zero;
use thiserror::Error;

use crate::abelian::{smith_normal_form, IntMatrix};
use crate::finite::Elt;
use crate::gog::{EdgeGroup, GraphOfGroups, Inclusion, OEdgeId, VertexGroup, VertexId};

#[derive(Debug, Error)]
pub enum WordError {
    #[error("word is not a connected edge path")]
    Disconnected,
    #[error("group element does not live in the expected vertex group")]
    WrongGroup,
    #[error("operation requires a loop word")]
    NotALoop,
    #[error("vertex group is not finite or free abelian; flatten composites first")]
    UnsupportedVertexGroup,
    #[error("{0}")]
    Other(String),
}

/// Element of a finite-table group or a free abelian lattice.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum GElt {
    F(Elt),
    A(Vec<BigInt>),
}

impl GElt {
    pub fn zero_lattice(rank: usize) -> GElt {
        GElt::A(vec![BigInt::zero(); rank])
    }
}

/// A path word in the fundamental groupoid of a graph of groups.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GogWord {
    pub start: VertexId,
    /// Alternating (vertex element, oriented edge) pairs.
    pub syllables: Vec<(GElt, OEdgeId)>,
    pub tail: GElt,
}

impl GogWord {
    pub fn end(&self, g: &GraphOfGroups) -> VertexId {
        match self.syllables.last() {
            None => self.start,
            Some(&(_, e)) => g.terminus(e),
        }
    }

    pub fn is_loop(&self, g: &GraphOfGroups) -> bool {
        self.end(g) == self.start
    }

    pub fn syllable_len(&self) -> usize {
        self.syllables.len()
    }
}

/// Word arithmetic over a fixed graph of groups.
pub struct WordCtx<'a> {
    pub graph: &'a GraphOfGroups,
}

impl<'a> WordCtx<'a> {
    pub fn new(graph: &'a GraphOfGroups) -> Result<Self, WordError> {
        for v in &graph.vertices {
            match v.group {
                VertexGroup::Finite(_) | VertexGroup::Abelian(_) => {}
                _ => return Err(WordError::UnsupportedVertexGroup),
            }
        }
        Ok(WordCtx { graph })
    }

    pub fn identity(&self, v: VertexId) -> GElt {
        match &self.graph.vertices[v].group {
            VertexGroup::Finite(g) => GElt::F(g.identity()),
            VertexGroup::Abelian(r) => GElt::zero_lattice(*r),
            _ => unreachable!(),
        }
    }

    pub fn identity_word(&self, v: VertexId) -> GogWord {
        GogWord {
            start: v,
            syllables: vec![],
            tail: self.identity(v),
        }
    }

    pub fn vertex_element(&self, v: VertexId, x: GElt) -> GogWord {
        GogWord {
            start: v,
            syllables: vec![],
            tail: x,
        }
    }

    /// The stable letter alone: 1 . t_e . 1.
    pub fn edge_letter(&self, e: OEdgeId) -> GogWord {
        let o = self.graph.origin(e);
        let t = self.graph.terminus(e);
        GogWord {
            start: o,
            syllables: vec![(self.identity(o), e)],
            tail: self.identity(t),
        }
    }

    pub fn mul_elt(&self, v: VertexId, a: &GElt, b: &GElt) -> GElt {
        match (&self.graph.vertices[v].group, a, b) {
            (VertexGroup::Finite(g), GElt::F(x), GElt::F(y)) => GElt::F(g.mul(*x, *y)),
            (VertexGroup::Abelian(_), GElt::A(x), GElt::A(y)) => {
                GElt::A(x.iter().zip(y).map(|(p, q)| p + q).collect())
            }
            _ => panic!("element does not match vertex group"),
        }
    }

    pub fn inv_elt(&self, v: VertexId, a: &GElt) -> GElt {
        match (&self.graph.vertices[v].group, a) {
            (VertexGroup::Finite(g), GElt::F(x)) => GElt::F(g.inv(*x)),
            (VertexGroup::Abelian(_), GElt::A(x)) => GElt::A(x.iter().map(|p| -p).collect()),
            _ => panic!("element does not match vertex group"),
        }
    }

    pub fn is_identity_elt(&self, v: VertexId, a: &GElt) -> bool {
        match (&self.graph.vertices[v].group, a) {
            (VertexGroup::Finite(g), GElt::F(x)) => *x == g.identity(),
            (VertexGroup::Abelian(_), GElt::A(x)) => x.iter().all(|p| p.is_zero()),
            _ => false,
        }
    }

    fn check_elt(&self, v: VertexId, a: &GElt) -> Result<(), WordError> {
        match (&self.graph.vertices[v].group, a) {
            (VertexGroup::Finite(g), GElt::F(x)) if (*x as usize) < g.order() => Ok(()),
            (VertexGroup::Abelian(r), GElt::A(x)) if x.len() == *r => Ok(()),
            _ => Err(WordError::WrongGroup),
        }
    }

    /// Validates path-connectivity and element membership.
    pub fn check(&self, w: &GogWord) -> Result<(), WordError> {
        let mut at = w.start;
        for (g, e) in &w.syllables {
            self.check_elt(at, g)?;
            if self.graph.origin(*e) != at {
                return Err(WordError::Disconnected);
            }
            at = self.graph.terminus(*e);
        }
        self.check_elt(at, &w.tail)
    }

    /// Membership of a vertex element in the image of the inclusion of the
    /// edge group along `e`; returns the edge-group preimage if so.
    fn image_preimage(&self, e: OEdgeId, x: &GElt) -> Option<EdgeElt> {
        match (self.graph.inclusion(e), x) {
            (Inclusion::Trivial, _) => {
                if self.is_identity_elt(self.graph.origin(e), x) {
                    Some(EdgeElt::Trivial)
                } else {
                    None
                }
            }
            (Inclusion::Finite(h), GElt::F(v)) => h.preimage(*v).map(EdgeElt::F),
            (Inclusion::Abelian(m), GElt::A(v)) => solve_lattice(m, v).map(EdgeElt::A),
            _ => None,
        }
    }

    fn apply_inclusion(&self, e: OEdgeId, c: &EdgeElt) -> GElt {
        match (self.graph.inclusion(e), c) {
            (Inclusion::Trivial, EdgeElt::Trivial) => self.identity(self.graph.origin(e)),
            (Inclusion::Finite(h), EdgeElt::F(x)) => GElt::F(h.apply(*x)),
            (Inclusion::Abelian(m), EdgeElt::A(x)) => {
                let mut out = vec![BigInt::zero(); m.rows];
                for i in 0..m.rows {
                    for j in 0..m.cols {
                        out[i] += m.get(i, j) * &x[j];
                    }
                }
                GElt::A(out)
            }
            _ => panic!("edge element does not match inclusion"),
        }
    }

    /// Transfers x = i_rev(e)(c), an element of G_t(e) in the image of the
    /// terminus-side inclusion, to i_e(c) in G_o(e). This is the defining
    /// Britton move t_e x t_e^-1 = transfer(x).
    fn transfer(&self, e: OEdgeId, x: &GElt) -> Option<GElt> {
        let c = self.image_preimage(e ^ 1, x)?;
        Some(self.apply_inclusion(e, &c))
    }

    /// Britton reduction: removes every pinch t_e c t_ebar with c in the
    /// image of the terminus-side edge group. The result represents the same
    /// groupoid element; it is trivial iff the input is.
    pub fn normal_form(&self, w: &GogWord) -> Result<GogWord, WordError> {
        self.check(w)?;
        let mut stack: Vec<(GElt, OEdgeId)> = Vec::new();
        let mut current: GElt = {
            let mut at = w.start;
            let mut cur = self.identity(at);
            let mut iter = w.syllables.iter();
            // Process syllables with a running current element.
            loop {
                match iter.next() {
                    None => {
                        cur = self.mul_elt(at, &cur, &w.tail);
                        break cur;
                    }
                    Some((g, e)) => {
                        cur = self.mul_elt(at, &cur, g);
                        // Try to pinch with the top of the stack.
                        if let Some(&(_, top_e)) = stack.last() {
                            if top_e == (*e ^ 1) {
                                if let Some(tx) = self.transfer(top_e, &cur) {
                                    // t_{top} cur t_e = transfer: pop.
                                    let (prev, _) = stack.pop().unwrap();
                                    at = self.graph.origin(*e); // == terminus(top_e)
                                    let back = self.graph.origin(top_e);
                                    cur = self.mul_elt(back, &prev, &tx);
                                    at = back;
                                    continue;
                                }
                            }
                        }
                        stack.push((cur, *e));
                        at = self.graph.terminus(*e);
                        cur = self.identity(at);
                    }
                }
            }
        };
        // Rebuild.
        let end_tail = std::mem::replace(&mut current, self.identity(w.start));
        Ok(GogWord {
            start: w.start,
            syllables: stack,
            tail: end_tail,
        })
    }

    pub fn is_trivial(&self, w: &GogWord) -> Result<bool, WordError> {
        let n = self.normal_form(w)?;
        Ok(n.syllables.is_empty() && self.is_identity_elt(n.start, &n.tail))
    }

    pub fn concat(&self, a: &GogWord, b: &GogWord) -> Result<GogWord, WordError> {
        if self.graph.vertices.len() <= a.start {
            return Err(WordError::Disconnected);
        }
        if a.end(self.graph) != b.start {
            return Err(WordError::Disconnected);
        }
        let mut syllables = a.syllables.clone();
        let mut b_syll = b.syllables.clone().into_iter();
        match b_syll.next() {
            None => {
                let at = a.end(self.graph);
                let tail = self.mul_elt(at, &a.tail, &b.tail);
                Ok(GogWord {
                    start: a.start,
                    syllables,
                    tail,
                })
            }
            Some((g, e)) => {
                let at = a.end(self.graph);
                syllables.push((self.mul_elt(at, &a.tail, &g), e));
                syllables.extend(b_syll);
                Ok(GogWord {
                    start: a.start,
                    syllables,
                    tail: b.tail.clone(),
                })
            }
        }
    }

    pub fn inverse(&self, w: &GogWord) -> GogWord {
        let mut at = w.start;
        let mut items: Vec<(VertexId, GElt, OEdgeId)> = Vec::new();
        for (g, e) in &w.syllables {
            items.push((at, g.clone(), *e));
            at = self.graph.terminus(*e);
        }
        let mut syllables = Vec::new();
        let mut cur = self.inv_elt(at, &w.tail);
        for (v, g, e) in items.into_iter().rev() {
            syllables.push((cur, e ^ 1));
            cur = self.inv_elt(v, &g);
        }
        GogWord {
            start: at,
            syllables,
            tail: cur,
        }
    }

    pub fn conjugate(&self, w: &GogWord, by: &GogWord) -> Result<GogWord, WordError> {
        // by^-1 * w * by
        let inv = self.inverse(by);
        let t = self.concat(&inv, w)?;
        let t = self.concat(&t, by)?;
        self.normal_form(&t)
    }

    pub fn equal(&self, a: &GogWord, b: &GogWord) -> Result<bool, WordError> {
        if a.start != b.start || a.end(self.graph) != b.end(self.graph) {
            return Ok(false);
        }
        let prod = self.concat(a, &self.inverse(b))?;
        self.is_trivial(&prod)
    }

    /// Elliptic/hyperbolic classification of a loop word: elliptic iff the
    /// cyclically reduced form has length zero. Returns the fixed data on
    /// the elliptic branch: conjugator u, vertex v, and element x with
    /// w = u (x at v) u^-1.
    pub fn is_elliptic(&self, w: &GogWord) -> Result<Ellipticity, WordError> {
        if !w.is_loop(self.graph) {
            return Err(WordError::NotALoop);
        }
        let mut cur = self.normal_form(w)?;
        let mut conj = self.identity_word(w.start);
        loop {
            let n = cur.syllables.len();
            if n == 0 {
                let end = conj.end(self.graph);
                return Ok(Ellipticity::Elliptic {
                    conjugator: conj,
                    vertex: end,
                    element: cur.tail,
                });
            }
            let (_, e_first) = cur.syllables[0];
            let (_, e_last) = cur.syllables[n - 1];
            if e_first != (e_last ^ 1) {
                return Ok(Ellipticity::Hyperbolic);
            }
            // Wrap element g_n * g_0 at the start vertex.
            let wrap = self.mul_elt(cur.start, &cur.tail, &cur.syllables[0].0);
            match self.transfer(e_last, &wrap) {
                None => return Ok(Ellipticity::Hyperbolic),
                Some(tx) => {
                    // Conjugating by (g_0 t_{e_1}) drops the first and last
                    // edges and folds the transferred wrap into the new tail.
                    let g0 = cur.syllables[0].0.clone();
                    let mut piece = self.vertex_element(cur.start, g0);
                    piece = self.concat(&piece, &self.edge_letter(e_first))?;
                    conj = self.concat(&conj, &piece)?;
                    let new_start = self.graph.terminus(e_first);
                    let syl: Vec<(GElt, OEdgeId)> = cur.syllables[1..n - 1].to_vec();
                    // g_{n-1} lives at origin(e_last) = end of the kept path.
                    let tail_vertex = self.graph.origin(e_last);
                    let tail = self.mul_elt(tail_vertex, &cur.syllables[n - 1].0, &tx);
                    cur = self.normal_form(&GogWord {
                        start: new_start,
                        syllables: syl,
                        tail,
                    })?;
                }
            }
        }
    }

    /// Canonical coset form of the target vertex of a path word: the vertex
    /// g G_w of the Bass-Serre tree it reaches from the base vertex, as a
    /// transversal-normalized syllable string. Finite vertex groups only.
    pub fn coset_form(&self, w: &GogWord) -> Result<CosetForm, WordError> {
        let red = self.normal_form(w)?;
        let mut at = red.start;
        let mut carry: GElt = self.identity(at);
        let mut out: Vec<(Elt, OEdgeId)> = Vec::new();
        for (g, e) in &red.syllables {
            let full = self.mul_elt(at, &carry, g);
            let x = match full {
                GElt::F(x) => x,
                GElt::A(_) => return Err(WordError::UnsupportedVertexGroup),
            };
            // Transversal rep: minimal element of x * Im(i_e).
            let (rep, rem) = self.coset_rep(at, *e, x)?;
            out.push((rep, *e));
            // rem is in the image; transfer to the other side.
            let tx = self
                .transfer(*e ^ 1, &GElt::F(rem))
                .expect("remainder transfers");
            carry = tx;
            at = self.graph.terminus(*e);
        }
        Ok(CosetForm {
            start: red.start,
            syllables: out,
            end: at,
        })
    }

    fn coset_rep(&self, v: VertexId, e: OEdgeId, x: Elt) -> Result<(Elt, Elt), WordError> {
        let g = match &self.graph.vertices[v].group {
            VertexGroup::Finite(g) => g,
            _ => return Err(WordError::UnsupportedVertexGroup),
        };
        let image: Vec<Elt> = match self.graph.inclusion(e) {
            Inclusion::Trivial => vec![g.identity()],
            Inclusion::Finite(h) => h.image().elements,
            _ => return Err(WordError::UnsupportedVertexGroup),
        };
        let rep = image.iter().map(|&m| g.mul(x, m)).min().unwrap();
        let rem = g.mul(g.inv(rep), x);
        debug_assert!(image.contains(&rem));
        Ok((rep, rem))
    }

    /// Left action of a loop word on a tree vertex given in coset form:
    /// returns the coset form of w * p.
    pub fn act_on_coset(&self, w: &GogWord, p: &CosetForm) -> Result<CosetForm, WordError> {
        let mut path = GogWord {
            start: p.start,
            syllables: p
                .syllables
                .iter()
                .map(|&(g, e)| (GElt::F(g), e))
                .collect(),
            tail: self.identity(p.end),
        };
        path = self.concat(w, &path)?;
        self.coset_form(&path)
    }
}

/// Element of an edge group.
#[derive(Clone, Debug)]
enum EdgeElt {
    Trivial,
    F(Elt),
    A(Vec<BigInt>),
}

/// A Bass-Serre tree vertex relative to a base vertex: the canonical
/// transversal form of the coset it represents.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CosetForm {
    pub start: VertexId,
    pub syllables: Vec<(Elt, OEdgeId)>,
    pub end: VertexId,
}

impl CosetForm {
    pub fn depth(&self) -> usize {
        self.syllables.len()
    }

    /// Tree vertices on the geodesic from the base to this vertex.
    pub fn prefixes(&self, graph: &GraphOfGroups) -> Vec<CosetForm> {
        let mut out = Vec::with_capacity(self.syllables.len() + 1);
        for k in 0..=self.syllables.len() {
            let syl: Vec<(Elt, OEdgeId)> = self.syllables[..k].to_vec();
            let end = if k == 0 {
                self.start
            } else {
                graph.terminus(syl[k - 1].1)
            };
            out.push(CosetForm {
                start: self.start,
                syllables: syl,
                end,
            });
        }
        out
    }
}

/// Solves M x = c over the integers; returns x when a solution exists.
pub fn solve_lattice(m: &IntMatrix, c: &[BigInt]) -> Option<Vec<BigInt>> {
    if m.rows != c.len() {
        return None;
    }
    let snf = smith_normal_form(m);
    // U M V = D, so M x = c iff D (V^-1 x) = U c; set y = U c, z = D^+ y.
    let mut y = vec![BigInt::zero(); m.rows];
    for i in 0..m.rows {
        for j in 0..m.rows {
            y[i] += snf.u.get(i, j) * &c[j];
        }
    }
    let k = m.rows.min(m.cols);
    let mut z = vec![BigInt::zero(); m.cols];
    for i in 0..m.cols {
        if i < k && !snf.d.get(i, i).is_zero() {
            let d = snf.d.get(i, i);
            if !(&y[i] % d).is_zero() {
                return None;
            }
            z[i] = &y[i] / d;
        } else if i < m.rows && !y[i].is_zero() {
            return None;
        }
    }
    for i in m.cols..m.rows {
        if !y[i].is_zero() {
            return None;
        }
    }
    let mut x = vec![BigInt::zero(); m.cols];
    for i in 0..m.cols {
        for j in 0..m.cols {
            x[i] += snf.v.get(i, j) * &z[j];
        }
    }
    // Verify (guards against rank-deficient corner cases).
    for i in 0..m.rows {
        let mut acc = BigInt::zero();
        for j in 0..m.cols {
            acc += m.get(i, j) * &x[j];
        }
        if acc != c[i] {
            return None;
        }
    }
    Some(x)
}

#[derive(Clone, Debug)]
pub enum Ellipticity {
    Elliptic {
        conjugator: GogWord,
        vertex: VertexId,
        element: GElt,
    },
    Hyperbolic,
}

impl Ellipticity {
    pub fn is_elliptic(&self) -> bool {
        matches!(self, Ellipticity::Elliptic { .. })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gog::fixtures::*;

    #[test]
    fn empty_word_reduces_to_itself() {
        let g = pett_gamma();
        let ctx = WordCtx::new(&g).unwrap();
        let w = ctx.identity_word(0);
        let n = ctx.normal_form(&w).unwrap();
        assert!(n.syllables.is_empty());
        assert!(ctx.is_trivial(&w).unwrap());
    }

    #[test]
    fn britton_reduced_word_stays() {
        // d * d' with d in D4 \ C, d' in D6 \ C is already reduced and
        // nontrivial.
        let g = pett_gamma();
        let ctx = WordCtx::new(&g).unwrap();
        // e1 oriented from x1 to x2 is oriented edge 0.
        let w = GogWord {
            start: 0,
            syllables: vec![(GElt::F(1), 0)], // r in D4, not in C = {1, r2}
            tail: GElt::F(1),                 // r in D6, not in C = {1, s}
        };
        let n = ctx.normal_form(&w).unwrap();
        assert_eq!(n.syllable_len(), 1);
        assert!(!ctx.is_trivial(&w).unwrap());
    }

    #[test]
    fn pinch_reduces() {
        // t_e c t_ebar with c in the image reduces to a vertex element.
        let g = pett_gamma();
        let ctx = WordCtx::new(&g).unwrap();
        let d6 = match &g.vertices[1].group {
            VertexGroup::Finite(x) => x.clone(),
            _ => unreachable!(),
        };
        let s = d6.elt_by_name("s").unwrap();
        let w = GogWord {
            start: 0,
            syllables: vec![(GElt::F(0), 0), (GElt::F(s), 1)],
            tail: GElt::F(0),
        };
        let n = ctx.normal_form(&w).unwrap();
        assert_eq!(n.syllable_len(), 0);
        // The transferred element is r2 (the image of the C generator in D4).
        assert_eq!(n.tail, GElt::F(2));
        assert!(!ctx.is_trivial(&w).unwrap());
    }

    #[test]
    fn normal_form_idempotent_and_sound() {
        let g = pett_gamma();
        let ctx = WordCtx::new(&g).unwrap();
        let w = GogWord {
            start: 0,
            syllables: vec![
                (GElt::F(3), 0),
                (GElt::F(1), 1),
                (GElt::F(0), 0),
                (GElt::F(4), 1),
            ],
            tail: GElt::F(5),
        };
        let n1 = ctx.normal_form(&w).unwrap();
        let n2 = ctx.normal_form(&n1).unwrap();
        assert_eq!(n1, n2);
        // Same element: w * n^-1 trivial.
        assert!(ctx.equal(&w, &n1).unwrap());
    }

    #[test]
    fn elliptic_examples() {
        let g = pett_gamma();
        let ctx = WordCtx::new(&g).unwrap();
        // Vertex element: elliptic.
        let w = ctx.vertex_element(0, GElt::F(5));
        assert!(ctx.is_elliptic(&w).unwrap().is_elliptic());
        // Conjugated vertex element: t_{e1bar} r t_{e1} at x2 (r in D4, a
        // nontrivial loop) is elliptic with a depth-1 conjugator.
        let w = GogWord {
            start: 1,
            syllables: vec![(GElt::F(0), 1), (GElt::F(1), 0)],
            tail: GElt::F(0),
        };
        assert!(w.is_loop(&g));
        let e = ctx.is_elliptic(&w).unwrap();
        assert!(e.is_elliptic());
        // A genuinely mixed loop: (d t_{e1bar}) with d not in the image has
        // no chance to pinch; d1 t_e1bar d2 t_e1 with middle not in C stays
        // hyperbolic-free... instead check a reduced length-2 loop with
        // non-pinchable wrap is hyperbolic: t_{e1bar} r t_{e1} conjugates r
        // into x2, but r t_{e1bar} ... build w' = (r at x2 wrap): syllables
        // (1, e1bar), (r, e1) with tail r: wrap r*1 = r not in C.
        let w = GogWord {
            start: 1,
            syllables: vec![(GElt::F(0), 1), (GElt::F(1), 0)],
            tail: GElt::F(1),
        };
        assert!(!ctx.is_elliptic(&w).unwrap().is_elliptic());
    }

    #[test]
    fn hyperbolic_in_hnn() {
        // Stable letter of BS(2,4) is hyperbolic.
        let g = bs_2_4();
        let ctx = WordCtx::new(&g).unwrap();
        let t = ctx.edge_letter(0);
        assert!(t.is_loop(&g));
        assert!(!ctx.is_elliptic(&t).unwrap().is_elliptic());
        // A vertex element is elliptic.
        let a = ctx.vertex_element(0, GElt::A(vec![BigInt::from(3)]));
        assert!(ctx.is_elliptic(&a).unwrap().is_elliptic());
        // b a^2 b^-1 a^-4 is trivial in BS(2,4).
        let w = GogWord {
            start: 0,
            syllables: vec![
                (GElt::zero_lattice(1), 0),
                (GElt::A(vec![BigInt::from(2)]), 1),
            ],
            tail: GElt::A(vec![BigInt::from(-4)]),
        };
        assert!(ctx.is_trivial(&w).unwrap());
        // b a b^-1 a^-1 is not.
        let w = GogWord {
            start: 0,
            syllables: vec![
                (GElt::zero_lattice(1), 0),
                (GElt::A(vec![BigInt::from(1)]), 1),
            ],
            tail: GElt::A(vec![BigInt::from(-1)]),
        };
        assert!(!ctx.is_trivial(&w).unwrap());
    }

    #[test]
    fn coset_form_and_action() {
        let g = pett_gamma();
        let ctx = WordCtx::new(&g).unwrap();
        // Identity coset at base.
        let base = ctx.coset_form(&ctx.identity_word(0)).unwrap();
        assert_eq!(base.depth(), 0);
        // Crossing e1 gives a depth-1 vertex.
        let t = ctx.edge_letter(0);
        let p = ctx.coset_form(&t).unwrap();
        assert_eq!(p.depth(), 1);
        // A vertex-group element fixes the base vertex.
        let w = ctx.vertex_element(0, GElt::F(5));
        let moved = ctx.act_on_coset(&w, &base).unwrap();
        assert_eq!(moved, base);
        // Elements of the same coset give the same form.
        let w1 = GogWord {
            start: 0,
            syllables: vec![(GElt::F(2), 0)], // r2 in C: same coset as identity
            tail: GElt::F(1),
        };
        let p1 = ctx.coset_form(&w1).unwrap();
        assert_eq!(p1, p);
    }

    #[test]
    fn solve_lattice_works() {
        let m = IntMatrix::from_rows(vec![vec![2, 0], vec![0, 3]]).unwrap();
        let c = vec![BigInt::from(4), BigInt::from(9)];
        let x = solve_lattice(&m, &c).unwrap();
        assert_eq!(x, vec![BigInt::from(2), BigInt::from(3)]);
        let c = vec![BigInt::from(1), BigInt::from(0)];
        assert!(solve_lattice(&m, &c).is_none());
    }
}
