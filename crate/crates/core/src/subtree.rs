//! Fixed-subtree machinery for finite subgroups of fundamental groups of
//! graphs of finite groups.
//!
//! For a finite subgroup A situated in a vertex group, the fixed subtree
//! T^A of the Bass-Serre tree is acted on cocompactly by N_G(A). A breadth
//! first search over quotient states (vertex, conjugacy class of the
//! situated copy of A) assembles the quotient graph of groups of that
//! action: vertex groups N_{G_w}(B), edge groups N_{G_e}(B'). This
//! presents N_G(A); the centralizer Z_G(A) sits inside it with finite
//! index, so both finiteness questions reduce to the same fragment.

use std::collections::BTreeMap;
use std::sync::Arc;

use thiserror::Error;

use crate::finite::{centralizer, normalizer, Elt, FiniteGroup, GroupHom, SubgroupHandle};
use crate::gog::{EdgeGroup, GraphOfGroups, Inclusion, OEdgeId, PairId, VertexGroup, VertexId};
use crate::moves::{self, MoveError};
use crate::words::{CosetForm, Ellipticity, GElt, GogWord, WordCtx, WordError};

#[derive(Debug, Error)]
pub enum SubtreeError {
    #[error("subgroup must sit inside a finite vertex group of a graph of finite groups")]
    NotFinite,
    #[error("state explosion: more than {0} states")]
    TooManyStates(usize),
    #[error("word error: {0}")]
    Word(#[from] WordError),
    #[error("move error: {0}")]
    Move(#[from] MoveError),
    #[error("{0}")]
    Internal(String),
}

const STATE_CAP: usize = 10_000;

/// A finite subgroup situated inside a specific vertex group.
#[derive(Clone, Debug)]
pub struct SituatedSubgroup {
    pub vertex: VertexId,
    pub elements: Vec<Elt>,
}

impl SituatedSubgroup {
    pub fn whole_edge_group(g: &GraphOfGroups, e: OEdgeId) -> Result<Self, SubtreeError> {
        match g.inclusion(e) {
            Inclusion::Finite(h) => Ok(SituatedSubgroup {
                vertex: g.origin(e),
                elements: h.image().elements,
            }),
            Inclusion::Trivial => {
                let v = g.origin(e);
                let id = match &g.vertices[v].group {
                    VertexGroup::Finite(fg) => fg.identity(),
                    _ => return Err(SubtreeError::NotFinite),
                };
                Ok(SituatedSubgroup {
                    vertex: v,
                    elements: vec![id],
                })
            }
            _ => Err(SubtreeError::NotFinite),
        }
    }
}

/// One N-orbit of fixed-subtree vertices.
pub struct StateData {
    pub gamma_vertex: VertexId,
    /// Canonical conjugacy representative of the situated copy of A.
    pub subgroup: SubgroupHandle,
    /// Word u from the seed vertex with u^-1 A u = subgroup.
    pub witness: GogWord,
    /// N_{G_w}(subgroup).
    pub normalizer: SubgroupHandle,
}

/// One N-orbit of fixed-subtree edges over a quotient edge pair.
pub struct QPairData {
    pub gamma_pair: PairId,
    /// Canonical conjugacy representative of the situated copy inside the
    /// edge group.
    pub class: Vec<Elt>,
    /// Per gamma-orientation: (state, h) with h^-1 B_state h = i_e(class).
    pub sides: [Option<(usize, Elt)>; 2],
}

/// The quotient data of the fixed subtree T^A.
pub struct SubtreeAnalysis {
    pub graph: GraphOfGroups,
    pub seed: SituatedSubgroup,
    /// Conjugator c with c A c^-1 the canonical base subgroup.
    pub seed_conj: Elt,
    pub states: Vec<StateData>,
    pub qpairs: Vec<QPairData>,
    /// Graph-of-groups presentation of N_G(A); vertices and pairs are
    /// indexed exactly like `states` and `qpairs`.
    pub fragment: GraphOfGroups,
}

fn finite_vertex_group(g: &GraphOfGroups, v: VertexId) -> Result<Arc<FiniteGroup>, SubtreeError> {
    match &g.vertices[v].group {
        VertexGroup::Finite(fg) => Ok(Arc::clone(fg)),
        _ => Err(SubtreeError::NotFinite),
    }
}

fn finite_edge_group(g: &GraphOfGroups, p: PairId) -> Result<Arc<FiniteGroup>, SubtreeError> {
    match &g.pairs[p].group {
        EdgeGroup::Finite(fg) => Ok(Arc::clone(fg)),
        _ => Err(SubtreeError::NotFinite),
    }
}

/// Image subgroup of the inclusion along `e` inside the origin group, with
/// the inclusion hom itself (trivial inclusions are materialized).
fn edge_image(g: &GraphOfGroups, e: OEdgeId) -> Result<(SubgroupHandle, GroupHom), SubtreeError> {
    let v = g.origin(e);
    let vg = finite_vertex_group(g, v)?;
    let eg = finite_edge_group(g, e / 2)?;
    match g.inclusion(e) {
        Inclusion::Finite(h) => Ok((h.image(), h.clone())),
        Inclusion::Trivial => {
            let images = vec![vg.identity(); eg.order()];
            let h = GroupHom::new(Arc::clone(&eg), Arc::clone(&vg), images)
                .map_err(|e| SubtreeError::Internal(e.to_string()))?;
            Ok((h.image(), h))
        }
        _ => Err(SubtreeError::NotFinite),
    }
}

/// Analyzes the fixed subtree of the situated subgroup `seed`.
pub fn analyze(
    graph: &GraphOfGroups,
    seed: &SituatedSubgroup,
) -> Result<SubtreeAnalysis, SubtreeError> {
    let graph = if graph.has_composite_vertices() {
        graph
            .flatten()
            .map_err(|e| SubtreeError::Internal(e.to_string()))?
    } else {
        graph.clone()
    };
    if !graph.is_graph_of_finite_groups() {
        return Err(SubtreeError::NotFinite);
    }
    let ctx = WordCtx::new(&graph)?;
    let v0 = seed.vertex;
    let g0 = finite_vertex_group(&graph, v0)?;
    let a = SubgroupHandle::new(Arc::clone(&g0), seed.elements.clone())
        .map_err(|_| SubtreeError::NotFinite)?;

    // Canonical base state: B0 = wit0 A wit0^-1, and u0 = wit0^-1 has
    // u0^-1 A u0 = B0.
    let (b0, wit0) = a.canonical_conjugate();
    let u0 = ctx.vertex_element(v0, GElt::F(g0.inv(wit0)));

    let mut states: Vec<StateData> = Vec::new();
    let mut state_ix: BTreeMap<(VertexId, Vec<Elt>), usize> = BTreeMap::new();
    let mut qpairs: Vec<QPairData> = Vec::new();
    let mut qpair_ix: BTreeMap<(PairId, Vec<Elt>), usize> = BTreeMap::new();

    let norm0 = normalizer(&g0, &b0);
    state_ix.insert((v0, b0.elements.clone()), 0);
    states.push(StateData {
        gamma_vertex: v0,
        subgroup: b0,
        witness: u0,
        normalizer: norm0,
    });
    let mut queue = vec![0usize];

    while let Some(si) = queue.pop() {
        let w = states[si].gamma_vertex;
        let vg = finite_vertex_group(&graph, w)?;
        for e in graph.edges_at(w) {
            let (img, incl) = edge_image(&graph, e)?;
            let eg = finite_edge_group(&graph, e / 2)?;
            // Canonical coset representatives of img in G_w.
            let mut covered = vec![false; vg.order()];
            for h in vg.elements() {
                if covered[h as usize] {
                    continue;
                }
                for &m in &img.elements {
                    covered[vg.mul(h, m) as usize] = true;
                }
                // The tree edge is fixed iff h^-1 B h lies inside the image.
                let hinv = vg.inv(h);
                let conj: Vec<Elt> = states[si]
                    .subgroup
                    .elements
                    .iter()
                    .map(|&x| vg.conj(hinv, x))
                    .collect();
                if !conj.iter().all(|x| img.contains(*x)) {
                    continue;
                }
                // Situated copy inside the edge group, canonicalized.
                let mut pre: Vec<Elt> = conj
                    .iter()
                    .map(|&x| incl.preimage(x).expect("inside image"))
                    .collect();
                pre.sort_unstable();
                let bprime = SubgroupHandle::new(Arc::clone(&eg), pre)
                    .map_err(|e| SubtreeError::Internal(e.to_string()))?;
                let (bp_canon, d) = bprime.canonical_conjugate();
                // Adjust so that hstar^-1 B hstar = i_e(canonical class):
                // bp_canon = d bprime d^-1, so hstar = h i_e(d)^-1.
                let hstar = vg.mul(h, incl.apply(eg.inv(d)));
                let key = (e / 2, bp_canon.elements.clone());
                let qi = match qpair_ix.get(&key) {
                    Some(&qi) => qi,
                    None => {
                        qpairs.push(QPairData {
                            gamma_pair: e / 2,
                            class: bp_canon.elements.clone(),
                            sides: [None, None],
                        });
                        qpair_ix.insert(key, qpairs.len() - 1);
                        qpairs.len() - 1
                    }
                };
                if qpairs[qi].sides[e % 2].is_some() {
                    continue; // this N-orbit of oriented edges is known
                }
                qpairs[qi].sides[e % 2] = Some((si, hstar));

                // Target state across the edge.
                let t = graph.terminus(e);
                let tg = finite_vertex_group(&graph, t)?;
                let (_, incl_rev) = edge_image(&graph, e ^ 1)?;
                let mut image_other: Vec<Elt> = bp_canon
                    .elements
                    .iter()
                    .map(|&c| incl_rev.apply(c))
                    .collect();
                image_other.sort_unstable();
                let bsec = SubgroupHandle::new(Arc::clone(&tg), image_other)
                    .map_err(|e| SubtreeError::Internal(e.to_string()))?;
                let (bt, wt) = bsec.canonical_conjugate();
                let tkey = (t, bt.elements.clone());
                if !state_ix.contains_key(&tkey) {
                    if states.len() >= STATE_CAP {
                        return Err(SubtreeError::TooManyStates(STATE_CAP));
                    }
                    // Witness: u' = u . hstar . t_e . wt^-1.
                    let mut u = states[si].witness.clone();
                    u = ctx.concat(&u, &ctx.vertex_element(w, GElt::F(hstar)))?;
                    u = ctx.concat(&u, &ctx.edge_letter(e))?;
                    u = ctx.concat(&u, &ctx.vertex_element(t, GElt::F(tg.inv(wt))))?;
                    let u = ctx.normal_form(&u)?;
                    let norm = normalizer(&tg, &bt);
                    state_ix.insert(tkey, states.len());
                    states.push(StateData {
                        gamma_vertex: t,
                        subgroup: bt,
                        witness: u,
                        normalizer: norm,
                    });
                    queue.push(states.len() - 1);
                }
            }
        }
    }

    for (qi, qp) in qpairs.iter().enumerate() {
        if qp.sides[0].is_none() || qp.sides[1].is_none() {
            return Err(SubtreeError::Internal(format!(
                "quotient edge {qi} seen from one side only"
            )));
        }
    }

    let fragment = assemble_fragment(&graph, &states, &qpairs)?;
    Ok(SubtreeAnalysis {
        graph,
        seed: seed.clone(),
        seed_conj: wit0,
        states,
        qpairs,
        fragment,
    })
}

fn assemble_fragment(
    graph: &GraphOfGroups,
    states: &[StateData],
    qpairs: &[QPairData],
) -> Result<GraphOfGroups, SubtreeError> {
    let mut frag = GraphOfGroups::new("normalizer_fragment");
    frag.class = crate::gog::GraphClass::Finite;
    let mut state_groups: Vec<(Arc<FiniteGroup>, Vec<Elt>)> = Vec::new();
    for (i, s) in states.iter().enumerate() {
        let (ng, elems) = s.normalizer.as_group(&format!("N{}", i));
        frag.add_vertex(&format!("s{}", i), VertexGroup::Finite(Arc::clone(&ng)));
        state_groups.push((ng, elems));
    }
    for (qi, qp) in qpairs.iter().enumerate() {
        let eg = finite_edge_group(graph, qp.gamma_pair)?;
        let class = SubgroupHandle::new(Arc::clone(&eg), qp.class.clone())
            .map_err(|e| SubtreeError::Internal(e.to_string()))?;
        let ne = normalizer(&eg, &class);
        let (ne_abs, ne_elems) = ne.as_group(&format!("NE{}", qi));
        let mut side_incl = Vec::new();
        for orient in 0..2 {
            let (si, hstar) = qp.sides[orient].unwrap();
            let (vg_abs, vg_elems) = &state_groups[si];
            let w = states[si].gamma_vertex;
            let wg = finite_vertex_group(graph, w)?;
            let (_, incl) = edge_image(graph, 2 * qp.gamma_pair + orient)?;
            // c in NE -> hstar i_e(c) hstar^-1, located inside N_{G_w}(B).
            let images: Vec<Elt> = ne_elems
                .iter()
                .map(|&c| {
                    let x = wg.conj(hstar, incl.apply(c));
                    vg_elems
                        .iter()
                        .position(|&y| y == x)
                        .map(|i| i as Elt)
                        .ok_or_else(|| {
                            SubtreeError::Internal(
                                "edge normalizer does not land in vertex normalizer".into(),
                            )
                        })
                })
                .collect::<Result<_, _>>()?;
            let hom = GroupHom::new(Arc::clone(&ne_abs), Arc::clone(vg_abs), images)
                .map_err(|e| SubtreeError::Internal(e.to_string()))?;
            side_incl.push(Inclusion::Finite(hom));
        }
        let s1 = qp.sides[1].unwrap().0;
        let s0 = qp.sides[0].unwrap().0;
        let i1 = side_incl.pop().unwrap();
        let i0 = side_incl.pop().unwrap();
        frag.add_edge(&format!("q{}", qi), EdgeGroup::Finite(ne_abs), s0, s1, i0, i1);
    }
    Ok(frag)
}

impl SubtreeAnalysis {
    /// Is N_G(A) (equivalently Z_G(A)) infinite? Decided structurally on
    /// the reduced fragment.
    pub fn is_infinite(&self) -> Result<bool, SubtreeError> {
        Ok(!moves::pi1_is_finite(&self.fragment)?)
    }

    /// Word for an abstract element of a state's materialized normalizer.
    fn state_element_word(&self, si: usize, abstract_elt: Elt) -> GogWord {
        let x = self.states[si].normalizer.elements[abstract_elt as usize];
        GogWord {
            start: self.states[si].gamma_vertex,
            syllables: vec![],
            tail: GElt::F(x),
        }
    }

    /// Traversal word of a fragment edge in Gamma coordinates:
    /// (h*_src) t_e (h*_tgt)^-1, carrying the target state frame to the
    /// source state frame.
    fn piece(&self, ctx: &WordCtx, qi: usize, orient: usize) -> Result<GogWord, SubtreeError> {
        let qp = &self.qpairs[qi];
        let (src, h_src) = qp.sides[orient].unwrap();
        let (tgt, h_tgt) = qp.sides[1 - orient].unwrap();
        let e = 2 * qp.gamma_pair + orient;
        let w_src = self.states[src].gamma_vertex;
        let w_tgt = self.states[tgt].gamma_vertex;
        let tg = finite_vertex_group(&self.graph, w_tgt)?;
        let mut w = ctx.vertex_element(w_src, GElt::F(h_src));
        w = ctx.concat(&w, &ctx.edge_letter(e))?;
        w = ctx.concat(&w, &ctx.vertex_element(w_tgt, GElt::F(tg.inv(h_tgt))))?;
        Ok(w)
    }

    /// Generating loops of N_G(A) at the seed vertex: state vertex groups
    /// conjugated along spanning-tree paths, plus one loop per independent
    /// cycle of the fragment.
    pub fn normalizer_generators(&self) -> Result<Vec<GogWord>, SubtreeError> {
        let ctx = WordCtx::new(&self.graph)?;
        let n = self.states.len();
        let mut path: Vec<Option<GogWord>> = vec![None; n];
        path[0] = Some(ctx.identity_word(self.states[0].gamma_vertex));
        let mut in_tree = vec![false; self.qpairs.len()];
        let mut stack = vec![0usize];
        while let Some(s) = stack.pop() {
            for (qi, qp) in self.qpairs.iter().enumerate() {
                for orient in 0..2 {
                    let (from, _) = qp.sides[orient].unwrap();
                    let (to, _) = qp.sides[1 - orient].unwrap();
                    if from == s && path[to].is_none() {
                        in_tree[qi] = true;
                        let piece = self.piece(&ctx, qi, orient)?;
                        let w = ctx.concat(path[s].as_ref().unwrap(), &piece)?;
                        path[to] = Some(ctx.normal_form(&w)?);
                        stack.push(to);
                    }
                }
            }
        }
        let u0 = self.states[0].witness.clone();
        let u0_inv = ctx.inverse(&u0);
        let mut gens: Vec<GogWord> = Vec::new();
        let mut push_conj = |w: &GogWord, gens: &mut Vec<GogWord>| -> Result<(), SubtreeError> {
            let t = ctx.concat(&u0, w)?;
            let t = ctx.concat(&t, &u0_inv)?;
            gens.push(ctx.normal_form(&t)?);
            Ok(())
        };
        for (si, s) in self.states.iter().enumerate() {
            let pi = path[si]
                .as_ref()
                .ok_or_else(|| SubtreeError::Internal("fragment disconnected".into()))?;
            let pi_inv = ctx.inverse(pi);
            for &x in &s.normalizer.elements {
                if x == s.normalizer.parent.identity() {
                    continue;
                }
                let mid = ctx.vertex_element(s.gamma_vertex, GElt::F(x));
                let w = ctx.concat(pi, &mid)?;
                let w = ctx.concat(&w, &pi_inv)?;
                let w = ctx.normal_form(&w)?;
                push_conj(&w, &mut gens)?;
            }
        }
        for (qi, qp) in self.qpairs.iter().enumerate() {
            if in_tree[qi] {
                continue;
            }
            let (from, _) = qp.sides[0].unwrap();
            let (to, _) = qp.sides[1].unwrap();
            let piece = self.piece(&ctx, qi, 0)?;
            let w = ctx.concat(path[from].as_ref().unwrap(), &piece)?;
            let w = ctx.concat(&w, &ctx.inverse(path[to].as_ref().unwrap()))?;
            let w = ctx.normal_form(&w)?;
            push_conj(&w, &mut gens)?;
        }
        Ok(gens)
    }

    /// Finds a hyperbolic element of N_G(A) by Serre's lemma: if every
    /// generator and every pairwise product were elliptic, the group would
    /// fix a point; so when N is infinite, a hyperbolic element appears
    /// among these candidates.
    pub fn find_hyperbolic_normalizer(&self) -> Result<Option<GogWord>, SubtreeError> {
        let ctx = WordCtx::new(&self.graph)?;
        let gens = self.normalizer_generators()?;
        for g in &gens {
            if !matches!(ctx.is_elliptic(g)?, Ellipticity::Elliptic { .. }) {
                return Ok(Some(g.clone()));
            }
        }
        for g in &gens {
            for h in &gens {
                let prod = ctx.normal_form(&ctx.concat(g, h)?)?;
                if prod.is_loop(&self.graph)
                    && !matches!(ctx.is_elliptic(&prod)?, Ellipticity::Elliptic { .. })
                {
                    return Ok(Some(prod));
                }
            }
        }
        Ok(None)
    }

    /// Resolves an element of the materialized finite normalizer to a loop
    /// word at the seed vertex.
    pub fn resolve_ambient(
        &self,
        fin: &FiniteCentralizer,
        x: Elt,
    ) -> Result<GogWord, SubtreeError> {
        let ctx = WordCtx::new(&self.graph)?;
        let s = &self.states[fin.anchor_state];
        let word = self.state_element_word(fin.anchor_state, x);
        let u = &s.witness;
        let t = ctx.concat(u, &word)?;
        let t = ctx.concat(&t, &ctx.inverse(u))?;
        Ok(ctx.normal_form(&t)?)
    }
}

/// The finite-centralizer payload: the materialized N_G(A) with the image
/// of A and the centralizer Z_G(A) inside it.
pub struct FiniteCentralizer {
    pub ambient: Arc<FiniteGroup>,
    /// State whose normalizer survived the absorption; anchors the
    /// resolution of ambient elements back to words.
    pub anchor_state: usize,
    /// Image of each seed element in the ambient group.
    pub a_to_ambient: Vec<Elt>,
    /// Elements of Z_G(A) inside the ambient group.
    pub z_elements: Vec<Elt>,
}

pub enum CentralizerVerdict {
    Infinite {
        /// Hyperbolic (hence infinite-order) element centralizing A, as a
        /// loop word at the seed vertex.
        witness: GogWord,
        analysis: SubtreeAnalysis,
    },
    Finite {
        data: FiniteCentralizer,
        analysis: SubtreeAnalysis,
    },
}

impl CentralizerVerdict {
    pub fn is_infinite(&self) -> bool {
        matches!(self, CentralizerVerdict::Infinite { .. })
    }
}

/// Decides whether Z_G(A) is infinite, with an explicit witness word on the
/// infinite branch and the full finite centralizer otherwise.
pub fn centralizer_infinite(
    graph: &GraphOfGroups,
    seed: &SituatedSubgroup,
) -> Result<CentralizerVerdict, SubtreeError> {
    let analysis = analyze(graph, seed)?;
    let ctx = WordCtx::new(&analysis.graph)?;
    if analysis.is_infinite()? {
        let n = analysis.find_hyperbolic_normalizer()?.ok_or_else(|| {
            SubtreeError::Internal("infinite normalizer without hyperbolic element".into())
        })?;
        // Some power of n centralizes A (the conjugation action on the
        // finite set A has finite order); a positive power of a hyperbolic
        // element stays hyperbolic.
        let v0 = seed.vertex;
        let a_words: Vec<GogWord> = seed
            .elements
            .iter()
            .map(|&x| ctx.vertex_element(v0, GElt::F(x)))
            .collect();
        let mut power = n.clone();
        let mut k = 1usize;
        loop {
            let mut centralizes = true;
            for aw in &a_words {
                let conj = ctx.conjugate(aw, &power)?;
                if !ctx.equal(&conj, aw)? {
                    centralizes = false;
                    break;
                }
            }
            if centralizes {
                break;
            }
            power = ctx.normal_form(&ctx.concat(&power, &n)?)?;
            k += 1;
            if k > 10_000 {
                return Err(SubtreeError::Internal(
                    "no centralizing power found".into(),
                ));
            }
        }
        debug_assert!(!matches!(
            ctx.is_elliptic(&power)?,
            Ellipticity::Elliptic { .. }
        ));
        Ok(CentralizerVerdict::Infinite {
            witness: power,
            analysis,
        })
    } else {
        let data = materialize_finite(&analysis)?;
        Ok(CentralizerVerdict::Finite { data, analysis })
    }
}

fn materialize_finite(analysis: &SubtreeAnalysis) -> Result<FiniteCentralizer, SubtreeError> {
    let red = moves::reduce(&analysis.fragment)?;
    if !(red.graph.pairs.is_empty() && red.graph.vertices.len() == 1) {
        return Err(SubtreeError::Internal(
            "finite branch on a non-collapsible fragment".into(),
        ));
    }
    let ambient = match &red.graph.vertices[0].group {
        VertexGroup::Finite(fg) => Arc::clone(fg),
        _ => return Err(SubtreeError::NotFinite),
    };
    // Anchor: a state embedded by the identity (the final absorber).
    let anchor_state = red
        .vertex_map
        .iter()
        .position(|(_, emb)| {
            emb.as_ref().map_or(false, |h| {
                h.source.order() == h.target.order() && h.source.elements().all(|x| h.apply(x) == x)
            })
        })
        .ok_or_else(|| SubtreeError::Internal("no identity-embedded state".into()))?;
    // A-image in seed order: conjugate each seed element into the canonical
    // base frame, locate it inside the base normalizer, and push through
    // the absorption embedding.
    let base_emb = red.vertex_map[0]
        .1
        .as_ref()
        .ok_or_else(|| SubtreeError::Internal("missing base embedding".into()))?;
    let base_norm = &analysis.states[0].normalizer;
    let g0 = finite_vertex_group(&analysis.graph, analysis.seed.vertex)?;
    let a_to_ambient: Vec<Elt> = analysis
        .seed
        .elements
        .iter()
        .map(|&a| {
            let x = g0.conj(analysis.seed_conj, a);
            let pos = base_norm
                .elements
                .iter()
                .position(|&y| y == x)
                .ok_or_else(|| SubtreeError::Internal("B0 not inside its normalizer".into()))?;
            Ok(base_emb.apply(pos as Elt))
        })
        .collect::<Result<_, SubtreeError>>()?;
    let a_handle = SubgroupHandle::generated(Arc::clone(&ambient), &a_to_ambient);
    let z = centralizer(&ambient, &a_handle);
    Ok(FiniteCentralizer {
        ambient,
        anchor_state,
        a_to_ambient,
        z_elements: z.elements,
    })
}

/// Presentation fragment of the normalizer of a finite subgroup: quotient
/// graph of groups of the N_G(A)-action on the fixed subtree.
pub fn normalizer_subgraph(
    graph: &GraphOfGroups,
    seed: &SituatedSubgroup,
) -> Result<SubtreeAnalysis, SubtreeError> {
    analyze(graph, seed)
}

/// Raw breadth-first enumeration of the fixed subtree itself (tree
/// vertices, no orbit identification). The BFS terminates iff T^A is
/// finite, which happens iff N_G(A) is finite; it is the independent
/// oracle for the structural verdicts.
pub struct RawSubtree {
    pub terminated: bool,
    pub vertex_count: usize,
    pub max_depth: usize,
}

pub fn raw_subtree_bfs(
    graph: &GraphOfGroups,
    seed: &SituatedSubgroup,
    cap: usize,
) -> Result<RawSubtree, SubtreeError> {
    let graph = if graph.has_composite_vertices() {
        graph
            .flatten()
            .map_err(|e| SubtreeError::Internal(e.to_string()))?
    } else {
        graph.clone()
    };
    let ctx = WordCtx::new(&graph)?;
    let v0 = seed.vertex;
    let base = ctx.coset_form(&ctx.identity_word(v0))?;
    let mut seen: std::collections::BTreeSet<CosetForm> = std::collections::BTreeSet::new();
    seen.insert(base.clone());
    let mut queue: Vec<(CosetForm, Vec<Elt>, usize)> = vec![(base, seed.elements.clone(), 0)];
    let mut max_depth = 0;
    let mut head = 0;
    while head < queue.len() {
        let (form, situated, depth) = queue[head].clone();
        head += 1;
        max_depth = max_depth.max(depth);
        if queue.len() > cap {
            return Ok(RawSubtree {
                terminated: false,
                vertex_count: queue.len(),
                max_depth,
            });
        }
        let w = form.end;
        let vg = finite_vertex_group(&graph, w)?;
        for e in graph.edges_at(w) {
            let (img, incl) = edge_image(&graph, e)?;
            let (_, incl_rev) = edge_image(&graph, e ^ 1)?;
            let mut covered = vec![false; vg.order()];
            for h in vg.elements() {
                if covered[h as usize] {
                    continue;
                }
                for &m in &img.elements {
                    covered[vg.mul(h, m) as usize] = true;
                }
                let hinv = vg.inv(h);
                let conj: Vec<Elt> = situated.iter().map(|&x| vg.conj(hinv, x)).collect();
                if !conj.iter().all(|x| img.contains(*x)) {
                    continue;
                }
                let mut syl: Vec<(GElt, OEdgeId)> = form
                    .syllables
                    .iter()
                    .map(|&(g, e)| (GElt::F(g), e))
                    .collect();
                syl.push((GElt::F(h), e));
                let child_word = GogWord {
                    start: form.start,
                    syllables: syl,
                    tail: ctx.identity(graph.terminus(e)),
                };
                let child = ctx.coset_form(&child_word)?;
                if seen.contains(&child) {
                    continue;
                }
                seen.insert(child.clone());
                let mut next: Vec<Elt> = conj
                    .iter()
                    .map(|&x| incl_rev.apply(incl.preimage(x).unwrap()))
                    .collect();
                next.sort_unstable();
                queue.push((child, next, depth + 1));
            }
        }
    }
    Ok(RawSubtree {
        terminated: true,
        vertex_count: queue.len(),
        max_depth,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gog::fixtures::*;

    fn seed_edge_c_in_d6(g: &GraphOfGroups) -> SituatedSubgroup {
        // C = <s> inside D6 at vertex x2: elements {1, s} = {0, 3}.
        let x2 = g.vertex_by_name("x2").unwrap();
        SituatedSubgroup {
            vertex: x2,
            elements: vec![0, 3],
        }
    }

    #[test]
    fn pett_normalizer_of_c_is_d4_star_d4() {
        let g = pett_gamma();
        let seed = seed_edge_c_in_d6(&g);
        let analysis = analyze(&g, &seed).unwrap();
        // States: (x2, [C]), (x1, [C central]), (x3, [C central]).
        assert_eq!(analysis.states.len(), 3);
        assert_eq!(analysis.qpairs.len(), 2);
        let mut orders: Vec<usize> = analysis
            .states
            .iter()
            .map(|s| s.normalizer.order())
            .collect();
        orders.sort_unstable();
        assert_eq!(orders, vec![2, 8, 8]);
        assert!(analysis.is_infinite().unwrap());
        // Reduced fragment: D4 *_C D4.
        let red = moves::reduce(&analysis.fragment).unwrap().graph;
        assert_eq!(red.vertices.len(), 2);
        assert_eq!(red.pairs.len(), 1);
        let n = analysis.find_hyperbolic_normalizer().unwrap().unwrap();
        let ctx = WordCtx::new(&analysis.graph).unwrap();
        assert!(!matches!(
            ctx.is_elliptic(&n).unwrap(),
            Ellipticity::Elliptic { .. }
        ));
    }

    #[test]
    fn centralizer_of_c_in_d6_alone_is_finite() {
        let d6 = FiniteGroup::dihedral_of_order("D6", 6).unwrap();
        let mut g = GraphOfGroups::new("lone");
        g.add_vertex("v", VertexGroup::Finite(Arc::clone(&d6)));
        let seed = SituatedSubgroup {
            vertex: 0,
            elements: vec![0, 3],
        };
        match centralizer_infinite(&g, &seed).unwrap() {
            CentralizerVerdict::Finite { data, .. } => {
                assert_eq!(data.z_elements.len(), 2);
                assert_eq!(data.ambient.order(), 2);
            }
            _ => panic!("expected finite"),
        }
    }

    #[test]
    fn centralizer_of_trivial_in_infinite_group() {
        let g = z3_star_z5();
        let seed = SituatedSubgroup {
            vertex: 0,
            elements: vec![0],
        };
        let verdict = centralizer_infinite(&g, &seed).unwrap();
        assert!(verdict.is_infinite());
        if let CentralizerVerdict::Infinite { witness, analysis } = verdict {
            let ctx = WordCtx::new(&analysis.graph).unwrap();
            assert!(!matches!(
                ctx.is_elliptic(&witness).unwrap(),
                Ellipticity::Elliptic { .. }
            ));
        }
    }

    #[test]
    fn centralizer_of_central_c_in_d4_star_d4() {
        // Z_{D4 *_C D4}(C) is the whole amalgam: infinite.
        let d = pett_delta();
        let b = d.vertex_by_name("b").unwrap();
        let sub = match &d.vertices[b].group {
            VertexGroup::Composite(sub) => sub.as_ref().clone(),
            _ => panic!(),
        };
        // C = <r2> central in D4 at inner vertex y1: elements {0, 2}.
        let seed = SituatedSubgroup {
            vertex: 0,
            elements: vec![0, 2],
        };
        let verdict = centralizer_infinite(&sub, &seed).unwrap();
        assert!(verdict.is_infinite());
        if let CentralizerVerdict::Infinite { witness, analysis } = verdict {
            let ctx = WordCtx::new(&analysis.graph).unwrap();
            for &x in &[0 as Elt, 2] {
                let a = ctx.vertex_element(0, GElt::F(x));
                let conj = ctx.conjugate(&a, &witness).unwrap();
                assert!(ctx.equal(&conj, &a).unwrap());
            }
        }
    }

    #[test]
    fn self_normalizing_edge_group_fragment() {
        // A = G_e with N = A at both endpoints: fragment presents A itself.
        let d6a = FiniteGroup::dihedral_of_order("A", 6).unwrap();
        let d6b = FiniteGroup::dihedral_of_order("B", 6).unwrap();
        let c2 = FiniteGroup::cyclic("C", 2).unwrap();
        let mut g = GraphOfGroups::new("two");
        let a = g.add_vertex("a", VertexGroup::Finite(Arc::clone(&d6a)));
        let b = g.add_vertex("b", VertexGroup::Finite(Arc::clone(&d6b)));
        let ha = GroupHom::from_generator_images(
            Arc::clone(&c2),
            Arc::clone(&d6a),
            &[(1, d6a.elt_by_name("s").unwrap())],
        )
        .unwrap();
        let hb = GroupHom::from_generator_images(
            Arc::clone(&c2),
            Arc::clone(&d6b),
            &[(1, d6b.elt_by_name("s").unwrap())],
        )
        .unwrap();
        g.add_edge(
            "e",
            EdgeGroup::Finite(c2),
            a,
            b,
            Inclusion::Finite(ha),
            Inclusion::Finite(hb),
        );
        let seed = SituatedSubgroup {
            vertex: 0,
            elements: vec![0, 3],
        };
        let analysis = normalizer_subgraph(&g, &seed).unwrap();
        assert!(!analysis.is_infinite().unwrap());
        match centralizer_infinite(&g, &seed).unwrap() {
            CentralizerVerdict::Finite { data, .. } => {
                assert_eq!(data.ambient.order(), 2);
                assert_eq!(data.z_elements.len(), 2);
            }
            _ => panic!("expected finite"),
        }
    }

    #[test]
    fn normalizer_of_trivial_presents_whole_group() {
        let g = pett_gamma();
        let seed = SituatedSubgroup {
            vertex: 0,
            elements: vec![0],
        };
        let analysis = normalizer_subgraph(&g, &seed).unwrap();
        assert_eq!(analysis.states.len(), 3);
        assert_eq!(analysis.qpairs.len(), 2);
        assert!(crate::iso::gog_isomorphic(&analysis.fragment, &g));
    }

    #[test]
    fn raw_bfs_matches_structural_verdict() {
        let g = pett_gamma();
        let seed = seed_edge_c_in_d6(&g);
        let raw = raw_subtree_bfs(&g, &seed, 2_000).unwrap();
        assert!(!raw.terminated);
        let d6 = FiniteGroup::dihedral_of_order("D6", 6).unwrap();
        let mut lone = GraphOfGroups::new("lone");
        lone.add_vertex("v", VertexGroup::Finite(d6));
        let seed = SituatedSubgroup {
            vertex: 0,
            elements: vec![0, 3],
        };
        let raw = raw_subtree_bfs(&lone, &seed, 2_000).unwrap();
        assert!(raw.terminated);
        assert_eq!(raw.vertex_count, 1);
    }
}
