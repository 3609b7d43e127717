//! Deformation-space machinery over finite edge groups: reduced graphs,
//! slide moves, and enumeration of all reduced splittings in a deformation
//! space up to graph-of-groups isomorphism.

use std::collections::BTreeMap;
use std::sync::Arc;

use thiserror::Error;

use crate::abelian::cokernel;
use crate::finite::{Elt, FiniteGroup, GroupHom, SubgroupHandle};
use crate::gog::{EdgeGroup, GraphOfGroups, GogError, Inclusion, OEdgeId, VertexGroup, VertexId};
use crate::iso::{gog_fingerprint, gog_isomorphic};

#[derive(Debug, Error)]
pub enum MoveError {
    #[error("{0}")]
    Gog(#[from] GogError),
    #[error("slide requires distinct edge pairs with a common origin")]
    SlideShape,
    #[error("slide containment fails: i_e(G_e) is not inside i_f(G_f) up to conjugacy")]
    SlideContainment,
    #[error("operation requires a graph of finite groups")]
    NotFinite,
}

/// Is the inclusion along oriented edge `e` onto the full origin group?
fn inclusion_surjective(g: &GraphOfGroups, e: OEdgeId) -> bool {
    match (g.inclusion(e), &g.vertices[g.origin(e)].group) {
        (Inclusion::Trivial, VertexGroup::Finite(vg)) => vg.order() == 1,
        (Inclusion::Trivial, VertexGroup::Abelian(r)) => *r == 0,
        (Inclusion::Finite(h), VertexGroup::Finite(vg)) => h.image().order() == vg.order(),
        (Inclusion::Abelian(m), VertexGroup::Abelian(_)) => cokernel(m).is_trivial(),
        _ => false,
    }
}

/// Flags every edge whose group equals an endpoint group across distinct
/// endpoints; such an edge can be collapsed without changing the
/// deformation space.
pub fn is_reduced(g: &GraphOfGroups) -> (bool, Vec<usize>) {
    let mut offending = Vec::new();
    for p in 0..g.pairs.len() {
        let (v, w) = g.pairs[p].ends;
        if v == w {
            continue;
        }
        if inclusion_surjective(g, 2 * p) || inclusion_surjective(g, 2 * p + 1) {
            offending.push(p);
        }
    }
    (offending.is_empty(), offending)
}

/// Result of reduction: the reduced graph plus, when every vertex group is
/// an explicit finite group, an embedding of each original vertex group
/// into its absorbing vertex group.
pub struct Reduction {
    pub graph: GraphOfGroups,
    /// original vertex -> (vertex in reduced graph, embedding of the
    /// original group into the reduced vertex group; None for non-finite).
    pub vertex_map: Vec<(VertexId, Option<GroupHom>)>,
}

/// Collapses reducible edges one at a time until the graph is reduced. The
/// fundamental group and deformation space are unchanged.
pub fn reduce(g: &GraphOfGroups) -> Result<Reduction, MoveError> {
    let mut graph = g.clone();
    let mut vmap: Vec<(VertexId, Option<GroupHom>)> = (0..g.vertices.len())
        .map(|v| {
            let emb = match &g.vertices[v].group {
                VertexGroup::Finite(fg) => Some(GroupHom::identity_of(Arc::clone(fg))),
                _ => None,
            };
            (v, emb)
        })
        .collect();

    loop {
        let (_, offending) = is_reduced(&graph);
        let Some(&p) = offending.first() else {
            return Ok(Reduction { graph, vertex_map: vmap });
        };
        // Absorb the surjective side into the other endpoint.
        let e = if inclusion_surjective(&graph, 2 * p) {
            2 * p
        } else {
            2 * p + 1
        };
        let gone = graph.origin(e); // absorbed vertex
        let keep = graph.terminus(e);
        debug_assert_ne!(gone, keep);
        // Transfer map G_gone -> G_keep through the edge.
        let transfer: Option<GroupHom> = match (graph.inclusion(e), graph.inclusion(e ^ 1)) {
            (Inclusion::Finite(he), Inclusion::Finite(hebar)) => {
                let src = match &graph.vertices[gone].group {
                    VertexGroup::Finite(fg) => Arc::clone(fg),
                    _ => return Err(MoveError::NotFinite),
                };
                let images: Vec<Elt> = src
                    .elements()
                    .map(|x| hebar.apply(he.preimage(x).expect("surjective inclusion")))
                    .collect();
                Some(GroupHom::new(src, Arc::clone(&hebar.target), images).expect("transfer hom"))
            }
            (Inclusion::Trivial, _) => None, // trivial vertex group absorbed
            (Inclusion::Abelian(_), Inclusion::Abelian(_)) => None,
            _ => None,
        };

        let mut out = GraphOfGroups::new(&graph.name);
        out.class = graph.class;
        let mut newidx = vec![usize::MAX; graph.vertices.len()];
        for (i, vd) in graph.vertices.iter().enumerate() {
            if i == gone {
                continue;
            }
            newidx[i] = out.vertices.len();
            out.vertices.push(vd.clone());
        }
        // Re-route edges incident to `gone`.
        for (q, pd) in graph.pairs.iter().enumerate() {
            if q == p {
                continue;
            }
            let reroute = |end: VertexId, incl: &Inclusion| -> (VertexId, Inclusion) {
                if end != gone {
                    return (newidx[end], incl.clone());
                }
                let new_incl = match (incl, &transfer) {
                    (Inclusion::Trivial, _) => Inclusion::Trivial,
                    (Inclusion::Finite(h), Some(t)) => Inclusion::Finite(h.compose(t)),
                    (Inclusion::Abelian(m), None) => {
                        // Abelian absorption: the reduced edge inclusion into
                        // `gone` is bijective; compose matrices.
                        match (graph.inclusion(e), graph.inclusion(e ^ 1)) {
                            (Inclusion::Abelian(me), Inclusion::Abelian(mebar)) => {
                                // x in Z^{gone}: solve me * y = x, image mebar * y.
                                // As matrices: mebar * me^{-1} * m. me is
                                // square unimodular (surjective injective).
                                let me_inv = invert_unimodular(me);
                                Inclusion::Abelian(mebar.mul(&me_inv).mul(m))
                            }
                            _ => unreachable!(),
                        }
                    }
                    _ => incl.clone(),
                };
                (newidx[keep], new_incl)
            };
            let (e0, i0) = reroute(pd.ends.0, &pd.incl.0);
            let (e1, i1) = reroute(pd.ends.1, &pd.incl.1);
            out.pairs.push(crate::gog::EdgePairData {
                name: pd.name.clone(),
                group: pd.group.clone(),
                ends: (e0, e1),
                incl: (i0, i1),
            });
        }
        // Update vertex map.
        for entry in vmap.iter_mut() {
            let (cur, emb) = entry;
            if *cur == gone {
                *cur = newidx[keep];
                if let (Some(old), Some(t)) = (emb.as_ref(), transfer.as_ref()) {
                    *emb = Some(old.compose(t));
                } else if transfer.is_none() {
                    // Trivial or abelian absorption: no finite embedding.
                    if let Some(old) = emb.as_ref() {
                        // Absorbed trivial group embeds as the identity.
                        if old.source.order() == 1 {
                            if let VertexGroup::Finite(fg) = &graph.vertices[keep].group {
                                *emb = Some(
                                    GroupHom::new(
                                        Arc::clone(&old.source),
                                        Arc::clone(fg),
                                        vec![fg.identity()],
                                    )
                                    .unwrap(),
                                );
                            } else {
                                *emb = None;
                            }
                        } else {
                            *emb = None;
                        }
                    }
                }
            } else {
                *cur = newidx[*cur];
            }
        }
        graph = out;
    }
}

fn invert_unimodular(m: &crate::abelian::IntMatrix) -> crate::abelian::IntMatrix {
    // U M V = D = I (unimodular square), so M^{-1} = V U.
    let snf = crate::abelian::smith_normal_form(m);
    debug_assert!(snf
        .diagonal()
        .iter()
        .all(|d| *d == num_bigint::BigInt::from(1)));
    snf.v.mul(&snf.u)
}

/// Is the fundamental group finite? True iff the reduced graph is a single
/// vertex with a finite group and no edges.
pub fn pi1_is_finite(g: &GraphOfGroups) -> Result<bool, MoveError> {
    let red = reduce(g)?;
    Ok(red.graph.pairs.is_empty()
        && red.graph.vertices.len() == 1
        && matches!(red.graph.vertices[0].group, VertexGroup::Finite(_)))
}

/// Slides oriented edge `e` across oriented edge `f` (distinct pairs,
/// common origin v, i_e(G_e) inside h i_f(G_f) h^-1): `e` is re-attached at
/// the terminus of `f` with the inclusion pushed through `f`.
pub fn slide(
    g: &GraphOfGroups,
    e: OEdgeId,
    f: OEdgeId,
    conjugator: Option<Elt>,
) -> Result<GraphOfGroups, MoveError> {
    if e / 2 == f / 2 || g.origin(e) != g.origin(f) {
        return Err(MoveError::SlideShape);
    }
    let v = g.origin(e);
    let (vg, he, hf, hfbar) = match (
        &g.vertices[v].group,
        g.inclusion(e),
        g.inclusion(f),
        g.inclusion(f ^ 1),
    ) {
        (VertexGroup::Finite(vg), Inclusion::Finite(he), Inclusion::Finite(hf), Inclusion::Finite(hfbar)) => {
            (vg, he.clone(), hf.clone(), hfbar.clone())
        }
        (VertexGroup::Finite(vg), Inclusion::Trivial, _, _) => {
            // Trivial edge group slides freely through any edge.
            let (hf, hfbar) = match (g.inclusion(f), g.inclusion(f ^ 1)) {
                (Inclusion::Finite(a), Inclusion::Finite(b)) => (a.clone(), b.clone()),
                (Inclusion::Trivial, Inclusion::Trivial) => {
                    // Both trivial: re-attach with trivial inclusion.
                    return slide_reattach(g, e, f, Inclusion::Trivial);
                }
                _ => return Err(MoveError::NotFinite),
            };
            let _ = (vg, hf, hfbar);
            return slide_reattach(g, e, f, Inclusion::Trivial);
        }
        _ => return Err(MoveError::NotFinite),
    };
    // Find h with h i_e(G_e) h^-1 inside i_f(G_f).
    let img_e = he.image();
    let img_f = hf.image();
    let valid = |h: Elt| {
        img_e
            .elements
            .iter()
            .all(|&x| img_f.contains(vg.conj(h, x)))
    };
    let h = match conjugator {
        Some(h) => {
            if !valid(h) {
                return Err(MoveError::SlideContainment);
            }
            h
        }
        None => vg
            .elements()
            .find(|&h| valid(h))
            .ok_or(MoveError::SlideContainment)?,
    };
    // New inclusion of the edge group of e at the terminus of f:
    // c -> i_fbar(i_f^{-1}(h i_e(c) h^{-1})).
    let images: Vec<Elt> = he
        .source
        .elements()
        .map(|c| {
            let x = vg.conj(h, he.apply(c));
            hfbar.apply(hf.preimage(x).expect("containment checked"))
        })
        .collect();
    let new_incl = Inclusion::Finite(
        GroupHom::new(Arc::clone(&he.source), Arc::clone(&hfbar.target), images)
            .expect("slid inclusion"),
    );
    slide_reattach(g, e, f, new_incl)
}

fn slide_reattach(
    g: &GraphOfGroups,
    e: OEdgeId,
    f: OEdgeId,
    new_incl: Inclusion,
) -> Result<GraphOfGroups, MoveError> {
    let mut out = g.clone();
    let new_origin = g.terminus(f);
    let pd = &mut out.pairs[e / 2];
    if e % 2 == 0 {
        pd.ends.0 = new_origin;
        pd.incl.0 = new_incl;
    } else {
        pd.ends.1 = new_origin;
        pd.incl.1 = new_incl;
    }
    Ok(out)
}

/// Census of a deformation space: closure of the seed under all legal
/// slides, deduplicated by graph-of-groups isomorphism.
pub struct DeformationSpaceCensus {
    pub seed: GraphOfGroups,
    pub members: Vec<GraphOfGroups>,
    /// (from member, to member, slid edge pair, across edge pair)
    pub move_log: Vec<(usize, usize, usize, usize)>,
    /// False when the closure hit the bound and enumeration stopped early.
    pub exhaustive: bool,
}

pub const DEFAULT_CENSUS_BOUND: usize = 10_000;

/// Enumerates the slide closure of a reduced graph of finite groups.
pub fn enumerate_deformation_space(
    seed: &GraphOfGroups,
    bound: usize,
) -> Result<DeformationSpaceCensus, MoveError> {
    let seed = reduce(seed)?.graph;
    if !seed.is_graph_of_finite_groups() {
        return Err(MoveError::NotFinite);
    }
    let mut members: Vec<GraphOfGroups> = vec![seed.clone()];
    let mut prints: BTreeMap<Vec<usize>, Vec<usize>> = BTreeMap::new();
    prints.insert(gog_fingerprint(&seed), vec![0]);
    let mut move_log = Vec::new();
    let mut frontier = vec![0usize];
    let mut exhaustive = true;

    while let Some(m) = frontier.pop() {
        let current = members[m].clone();
        for e in current.oriented_edges() {
            for f in current.oriented_edges() {
                if e / 2 == f / 2 || current.origin(e) != current.origin(f) {
                    continue;
                }
                // All conjugators that make the slide legal, giving possibly
                // non-isomorphic results.
                let conjugators: Vec<Option<Elt>> = match &current.vertices[current.origin(e)].group
                {
                    VertexGroup::Finite(vg) => {
                        vg.elements().map(Some).collect()
                    }
                    _ => vec![None],
                };
                for h in conjugators {
                    let slid = match slide(&current, e, f, h) {
                        Ok(s) => s,
                        Err(MoveError::SlideContainment) => continue,
                        Err(MoveError::SlideShape) => continue,
                        Err(err) => return Err(err),
                    };
                    let fp = gog_fingerprint(&slid);
                    let bucket = prints.entry(fp).or_default();
                    let known = bucket.iter().any(|&i| gog_isomorphic(&members[i], &slid));
                    if !known {
                        if members.len() >= bound {
                            exhaustive = false;
                            continue;
                        }
                        let idx = members.len();
                        members.push(slid);
                        bucket.push(idx);
                        move_log.push((m, idx, e / 2, f / 2));
                        frontier.push(idx);
                    }
                }
            }
        }
    }
    Ok(DeformationSpaceCensus {
        seed,
        members,
        move_log,
        exhaustive,
    })
}

/// Multiset of vertex-group and edge-group profiles; identical across all
/// members of a deformation-space census.
pub fn group_type_multisets(g: &GraphOfGroups) -> (Vec<Vec<usize>>, Vec<Vec<usize>>) {
    let mut vprofiles: Vec<Vec<usize>> = g
        .vertices
        .iter()
        .map(|v| match &v.group {
            VertexGroup::Finite(fg) => crate::iso::group_profile(fg),
            VertexGroup::Abelian(r) => vec![usize::MAX, *r],
            _ => vec![usize::MAX - 1],
        })
        .collect();
    vprofiles.sort();
    let mut eprofiles: Vec<Vec<usize>> = g
        .pairs
        .iter()
        .map(|p| match &p.group {
            EdgeGroup::Finite(fg) => crate::iso::group_profile(fg),
            EdgeGroup::Abelian(r) => vec![usize::MAX, *r],
        })
        .collect();
    eprofiles.sort();
    (vprofiles, eprofiles)
}

/// Every finite subgroup (up to conjugacy) of every vertex group of `a` is
/// elliptic in `b`: it embeds into some vertex group of `b`. Brute-force
/// domination evidence over the subgroup lattice.
pub fn dominates_on_subgroup_lattice(a: &GraphOfGroups, b: &GraphOfGroups) -> bool {
    let b_groups: Vec<Arc<FiniteGroup>> = b
        .vertices
        .iter()
        .filter_map(|v| match &v.group {
            VertexGroup::Finite(fg) => Some(Arc::clone(fg)),
            _ => None,
        })
        .collect();
    for v in &a.vertices {
        let VertexGroup::Finite(fg) = &v.group else {
            return false;
        };
        for sub in crate::finite::all_subgroups(fg) {
            let (abstract_sub, _) = sub.as_group("H");
            let embeds = b_groups.iter().any(|bg| {
                crate::finite::all_subgroups(bg).iter().any(|bsub| {
                    let (bg_sub, _) = bsub.as_group("K");
                    crate::iso::finite_iso(&abstract_sub, &bg_sub).is_some()
                })
            });
            if !embeds {
                return false;
            }
        }
    }
    true
}

/// A single vertex with its group; used to express reduce results.
pub fn single_vertex_group(g: &GraphOfGroups) -> Option<&VertexGroup> {
    if g.pairs.is_empty() && g.vertices.len() == 1 {
        Some(&g.vertices[0].group)
    } else {
        None
    }
}

/// The absorbed finite fundamental group of a fully-collapsible graph,
/// together with embeddings of every original vertex group.
pub fn materialize_finite_pi1(
    g: &GraphOfGroups,
) -> Result<Option<(Arc<FiniteGroup>, Vec<GroupHom>)>, MoveError> {
    let red = reduce(g)?;
    if !(red.graph.pairs.is_empty() && red.graph.vertices.len() == 1) {
        return Ok(None);
    }
    let fg = match &red.graph.vertices[0].group {
        VertexGroup::Finite(fg) => Arc::clone(fg),
        _ => return Ok(None),
    };
    let mut homs = Vec::new();
    for (_, emb) in red.vertex_map {
        match emb {
            Some(h) => homs.push(h),
            None => return Ok(None),
        }
    }
    Ok(Some((fg, homs)))
}

/// The mapping-torus test: after reduction, is the graph a single vertex
/// with a single loop whose inclusions are both bijective? Such fundamental
/// groups F x| Z have infinite center (a power of the stable letter is
/// central); every other infinite graph of finite groups has finite center.
pub fn is_finite_by_finite_mapping_torus(g: &GraphOfGroups) -> Result<bool, MoveError> {
    let red = reduce(g)?.graph;
    Ok(red.vertices.len() == 1
        && red.pairs.len() == 1
        && red.pairs[0].ends.0 == red.pairs[0].ends.1
        && inclusion_surjective(&red, 0)
        && inclusion_surjective(&red, 1)
        && matches!(red.vertices[0].group, VertexGroup::Finite(_)))
}

/// Center of the fundamental group of a graph of finite groups: the set of
/// kernel elements (acting trivially on the tree) that are central in every
/// vertex group and transfer consistently around all edges. Returns `None`
/// when the group has infinite center (mapping-torus case).
pub fn center_of_pi1(g: &GraphOfGroups) -> Result<Option<CenterData>, MoveError> {
    if !g.is_graph_of_finite_groups() {
        return Err(MoveError::NotFinite);
    }
    let red = reduce(g)?.graph;
    if red.pairs.is_empty() {
        let elements = match &red.vertices[0].group {
            VertexGroup::Finite(fg) => crate::finite::center(fg).elements,
            _ => return Err(MoveError::NotFinite),
        };
        return Ok(Some(CenterData {
            vertex: 0,
            elements,
            graph: red,
        }));
    }
    if is_finite_by_finite_mapping_torus(&red)? {
        return Ok(None);
    }
    // Z(G) consists of elements in every edge group acting trivially and
    // centrally: test every element of the first edge group's image.
    let base_vertex = red.pairs[0].ends.0;
    let img0 = {
        let fg = match &red.vertices[base_vertex].group {
            VertexGroup::Finite(fg) => Arc::clone(fg),
            _ => return Err(MoveError::NotFinite),
        };
        match red.inclusion(0) {
            Inclusion::Finite(h) => h.image(),
            Inclusion::Trivial => SubgroupHandle::trivial(fg),
            _ => return Err(MoveError::NotFinite),
        }
    };
    let mut central = Vec::new();
    for &x in &img0.elements {
        if is_central_element(&red, base_vertex, x)? {
            central.push(x);
        }
    }
    Ok(Some(CenterData {
        vertex: base_vertex,
        elements: central,
        graph: red,
    }))
}

pub struct CenterData {
    pub graph: GraphOfGroups,
    pub vertex: VertexId,
    pub elements: Vec<Elt>,
}

/// Does the vertex element x at v lie in the center of pi_1? It must be
/// central in every vertex group and transfer consistently along every
/// edge path (so it commutes with all stable letters).
fn is_central_element(g: &GraphOfGroups, v: VertexId, x: Elt) -> Result<bool, MoveError> {
    // Propagate the element to every vertex; it must lie in every edge
    // image and be central everywhere; around cycles the transfers must
    // agree.
    let n = g.vertices.len();
    let mut value: Vec<Option<Elt>> = vec![None; n];
    value[v] = Some(x);
    let mut stack = vec![v];
    while let Some(w) = stack.pop() {
        let xw = value[w].unwrap();
        let VertexGroup::Finite(fg) = &g.vertices[w].group else {
            return Err(MoveError::NotFinite);
        };
        if !crate::finite::center(fg).contains(xw) {
            return Ok(false);
        }
        for e in g.edges_at(w) {
            let (he, hebar) = match (g.inclusion(e), g.inclusion(e ^ 1)) {
                (Inclusion::Finite(a), Inclusion::Finite(b)) => (a, b),
                (Inclusion::Trivial, Inclusion::Trivial) => {
                    if xw != fg.identity() {
                        return Ok(false);
                    }
                    continue;
                }
                _ => return Err(MoveError::NotFinite),
            };
            let Some(pre) = he.preimage(xw) else {
                return Ok(false);
            };
            let other = hebar.apply(pre);
            let t = g.terminus(e);
            match value[t] {
                None => {
                    value[t] = Some(other);
                    stack.push(t);
                }
                Some(old) if old != other => return Ok(false),
                _ => {}
            }
        }
    }
    Ok(value.iter().all(|x| x.is_some()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gog::fixtures::*;

    #[test]
    fn pett_is_reduced() {
        let g = pett_gamma();
        let (ok, bad) = is_reduced(&g);
        assert!(ok, "{bad:?}");
        // Single vertex, no edges: reduced.
        let c2 = FiniteGroup::cyclic("C2", 2).unwrap();
        let mut lone = GraphOfGroups::new("pt");
        lone.add_vertex("v", VertexGroup::Finite(c2));
        assert!(is_reduced(&lone).0);
    }

    fn amalgam_a_star_a_b() -> GraphOfGroups {
        // A *_A B with A = C2 inside B = D4: edge group equals the left
        // vertex group.
        let c2 = FiniteGroup::cyclic("C2", 2).unwrap();
        let d4 = FiniteGroup::dihedral("D4", 4).unwrap();
        let mut g = GraphOfGroups::new("red");
        let a = g.add_vertex("a", VertexGroup::Finite(Arc::clone(&c2)));
        let b = g.add_vertex("b", VertexGroup::Finite(Arc::clone(&d4)));
        let ha = GroupHom::identity_of(Arc::clone(&c2));
        let hb = GroupHom::from_generator_images(
            Arc::clone(&c2),
            Arc::clone(&d4),
            &[(1, d4.elt_by_name("r2").unwrap())],
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
        g
    }

    #[test]
    fn reduce_absorbs() {
        let g = amalgam_a_star_a_b();
        let (ok, bad) = is_reduced(&g);
        assert!(!ok);
        assert_eq!(bad, vec![0]);
        let red = reduce(&g).unwrap();
        assert_eq!(red.graph.vertices.len(), 1);
        assert!(red.graph.pairs.is_empty());
        // The C2 embeds into D4 as <r2>.
        let (_, emb) = &red.vertex_map[0];
        let emb = emb.as_ref().unwrap();
        assert_eq!(emb.apply(1), 2);
        // Reduced input is unchanged.
        let g = pett_gamma();
        let red = reduce(&g).unwrap();
        assert_eq!(red.graph.vertices.len(), 3);
        assert_eq!(red.graph.pairs.len(), 2);
    }

    #[test]
    fn pi1_finiteness() {
        assert!(pi1_is_finite(&amalgam_a_star_a_b()).unwrap());
        assert!(!pi1_is_finite(&pett_gamma()).unwrap());
        assert!(!pi1_is_finite(&z3_star_z5()).unwrap());
    }

    #[test]
    fn slide_examples() {
        let g = pett_gamma();
        // Slide e1 (oriented from x2) across e2 (oriented from x2): both
        // have image <s> in D6, so containment holds with h = 1.
        let e = 1; // e1 oriented x2 -> x1
        let f = 2; // e2 oriented x2 -> x3
        let slid = slide(&g, e, f, None).unwrap();
        assert!(slid.validate().is_empty(), "{:?}", slid.validate());
        // The result is the chain D6 - D4 - D4.
        let x2 = slid.vertex_by_name("x2").unwrap();
        assert_eq!(slid.edges_at(x2).len(), 1);
        // Not isomorphic to the seed (different shape).
        assert!(!gog_isomorphic(&g, &slid));
        // Slide back across f^1 restores a graph isomorphic to the seed.
        let back = slide(&slid, e, f ^ 1, None).unwrap();
        assert!(gog_isomorphic(&g, &back));
        // Containment violation: sliding e2 across e1 from x1 is shape-invalid.
        assert!(slide(&g, 0, 2, None).is_err());
    }

    #[test]
    fn census_examples() {
        // One-edge amalgam: census of size 1.
        let mut g = GraphOfGroups::new("am");
        let c3 = FiniteGroup::cyclic("C3", 3).unwrap();
        let c5 = FiniteGroup::cyclic("C5", 5).unwrap();
        let t = FiniteGroup::trivial("T");
        let a = g.add_vertex("a", VertexGroup::Finite(c3));
        let b = g.add_vertex("b", VertexGroup::Finite(c5));
        g.add_edge(
            "e",
            EdgeGroup::Finite(t),
            a,
            b,
            Inclusion::Trivial,
            Inclusion::Trivial,
        );
        let census = enumerate_deformation_space(&g, DEFAULT_CENSUS_BOUND).unwrap();
        assert_eq!(census.members.len(), 1);
        assert!(census.exhaustive);

        // Pett: finite census; all members share the edge-group multiset.
        let g = pett_gamma();
        let census = enumerate_deformation_space(&g, DEFAULT_CENSUS_BOUND).unwrap();
        assert!(census.exhaustive);
        assert!(census.members.len() >= 2, "slides produce the chain shape");
        let (vs, es) = group_type_multisets(&census.members[0]);
        for m in &census.members[1..] {
            let (vs2, es2) = group_type_multisets(m);
            assert_eq!(vs, vs2);
            assert_eq!(es, es2);
        }
        // Members are pairwise non-isomorphic.
        for i in 0..census.members.len() {
            for j in (i + 1)..census.members.len() {
                assert!(!gog_isomorphic(&census.members[i], &census.members[j]));
            }
        }
        // Abelianization is a slide invariant.
        let ab0 = census.members[0].abelianization().unwrap();
        for m in &census.members {
            assert_eq!(m.abelianization().unwrap(), ab0);
        }

        // Bound exceeded: partial flag.
        let census = enumerate_deformation_space(&g, 1).unwrap();
        assert!(!census.exhaustive);
    }

    #[test]
    fn census_euler_invariant() {
        let g = pett_gamma();
        let census = enumerate_deformation_space(&g, DEFAULT_CENSUS_BOUND).unwrap();
        let chi = g.euler_characteristic().unwrap();
        for m in &census.members {
            assert_eq!(m.euler_characteristic().unwrap(), chi);
        }
    }

    #[test]
    fn mapping_torus_detection() {
        // C2 x| Z as a loop with both inclusions the identity.
        let c2 = FiniteGroup::cyclic("C2", 2).unwrap();
        let mut g = GraphOfGroups::new("mt");
        let v = g.add_vertex("v", VertexGroup::Finite(Arc::clone(&c2)));
        g.add_edge(
            "t",
            EdgeGroup::Finite(Arc::clone(&c2)),
            v,
            v,
            Inclusion::Finite(GroupHom::identity_of(Arc::clone(&c2))),
            Inclusion::Finite(GroupHom::identity_of(Arc::clone(&c2))),
        );
        assert!(is_finite_by_finite_mapping_torus(&g).unwrap());
        assert!(center_of_pi1(&g).unwrap().is_none());
        // Pett: finite center (trivial, in fact).
        let g = pett_gamma();
        assert!(!is_finite_by_finite_mapping_torus(&g).unwrap());
        let c = center_of_pi1(&g).unwrap().unwrap();
        assert_eq!(c.elements.len(), 1);
    }

    #[test]
    fn domination_between_census_members() {
        let g = pett_gamma();
        let census = enumerate_deformation_space(&g, DEFAULT_CENSUS_BOUND).unwrap();
        for m in &census.members {
            assert!(dominates_on_subgroup_lattice(&census.seed, m));
            assert!(dominates_on_subgroup_lattice(m, &census.seed));
        }
    }
}
