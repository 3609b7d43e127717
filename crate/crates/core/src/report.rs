//! Verdicts and certificates. Every Infinite verdict carries a replayable
//! certificate; replay re-verifies the witness against the graph it was
//! issued for using the word machinery, never trusting cached conclusions.

use num_bigint::BigInt;
use num_traits::Zero;
use serde_json::{json, Value};

use crate::abelian::{cokernel, FgAbelianGroup, IntMatrix};
use crate::gog::GraphOfGroups;
use crate::words::{Ellipticity, GElt, GogWord, WordCtx};

/// Outcome of a finiteness decision.
pub enum Verdict {
    Finite(FiniteData),
    Infinite(Box<Certificate>),
    Unknown { reason: String },
}

impl Verdict {
    pub fn unknown(reason: &str) -> Self {
        Verdict::Unknown {
            reason: reason.to_string(),
        }
    }
    pub fn is_infinite(&self) -> bool {
        matches!(self, Verdict::Infinite(_))
    }
    pub fn is_finite(&self) -> bool {
        matches!(self, Verdict::Finite(_))
    }
    pub fn kind(&self) -> &'static str {
        match self {
            Verdict::Finite(_) => "finite",
            Verdict::Infinite(_) => "infinite",
            Verdict::Unknown { .. } => "unknown",
        }
    }
    pub fn certificate(&self) -> Option<&Certificate> {
        match self {
            Verdict::Infinite(c) => Some(c),
            _ => None,
        }
    }
}

/// Size data attached to Finite verdicts.
#[derive(Clone, Debug, Default)]
pub struct FiniteData {
    pub order: Option<BigInt>,
    pub group: Option<FgAbelianGroup>,
    pub rank: Option<usize>,
}

impl FiniteData {
    pub fn order(order: BigInt) -> Self {
        FiniteData {
            order: Some(order),
            group: None,
            rank: None,
        }
    }
    pub fn abelian(group: FgAbelianGroup) -> Self {
        let order = group.order().ok();
        FiniteData {
            order,
            group: Some(group),
            rank: None,
        }
    }
}

/// A replayable witness for an Infinite verdict (or a named criterion
/// clause for annotation-backed checkers).
pub enum Certificate {
    /// An edge e with Z(G_e), Z(G_v) finite but Z_{G_v}(G_e) infinite; the
    /// witness is a hyperbolic loop word centralizing the edge image,
    /// taken in the flattened vertex subgraph when the vertex is composite.
    TwistCentralizer {
        edge_name: String,
        /// The flattened graph the witness word lives in, with the
        /// situated edge image.
        witness_graph: GraphOfGroups,
        witness: GogWord,
        situated_vertex: usize,
        situated_elements: Vec<u16>,
    },
    /// Twist group surjects onto a free-abelian quotient of positive rank:
    /// the relation matrix and its cokernel.
    AbelianCokernel {
        matrix: IntMatrix,
        group: FgAbelianGroup,
    },
    /// A vertex group with infinite center meeting at least two edge ends:
    /// the central coordinates give a Z^k/diagonal quotient of positive
    /// rank.
    CentralRank {
        vertex_name: String,
        incident_ends: usize,
    },
    /// An infinite group of twists on a connected subgraph extends to the
    /// whole graph.
    ExtensionTwist {
        subgraph_pairs: Vec<String>,
        inner: Box<Certificate>,
    },
    /// Collapsing every edge but one preserves an infinite twist group.
    CollapseTwist {
        kept_pair: String,
        collapsed: GraphOfGroups,
        inner: Box<Certificate>,
    },
    /// An infinite-order Dehn twist on an abelian edge with trivial-center
    /// or non-virtually-cyclic endpoints.
    InfiniteOrderTwist {
        edge_name: String,
        element: Vec<BigInt>,
        hypotheses: Vec<String>,
    },
    /// Free-product factor is non-abelian: conjugation by a non-central
    /// element gives an infinite-order outer automorphism.
    FactorNonAbelian { vertex_name: String },
    /// A free abelian factor whose marked subgroups generate an
    /// infinite-index sublattice.
    MarkedInfiniteIndex {
        vertex_name: String,
        rank: usize,
        generated_rank: usize,
    },
    /// HNN extension over the trivial group: the twist group contains the
    /// infinite vertex group itself.
    TrivialHnnTwists { vertex_name: String },
    /// GL_{r,n}(Z) factor with r >= 2 or rn > 0: infinite.
    GlFactor {
        r: usize,
        n: usize,
        vertex_name: String,
    },
    /// A hyperbolic surface other than the pair of pants or the twice
    /// punctured projective plane carries a Dehn twist of infinite order.
    McgDehnTwist { vertex_name: String },
    /// Named clause of an annotation-backed criterion.
    CriterionClause {
        criterion: String,
        clause: String,
        details: String,
    },
    /// A splitting over a maximal virtually-cyclic-with-infinite-center
    /// subgroup obtained by folding a hyperbolic centralizing element into
    /// the edge group of a one-edge collapse.
    ZmaxFold {
        member: GraphOfGroups,
        kept_pair: String,
        folded_description: String,
        inner: Box<Certificate>,
    },
}

impl Certificate {
    pub fn kind(&self) -> &'static str {
        match self {
            Certificate::TwistCentralizer { .. } => "twist_centralizer_infinite",
            Certificate::AbelianCokernel { .. } => "abelian_cokernel_rank",
            Certificate::CentralRank { .. } => "central_rank",
            Certificate::ExtensionTwist { .. } => "extension_twist",
            Certificate::CollapseTwist { .. } => "collapse_twist",
            Certificate::InfiniteOrderTwist { .. } => "infinite_order_twist",
            Certificate::FactorNonAbelian { .. } => "factor_non_abelian",
            Certificate::MarkedInfiniteIndex { .. } => "marked_infinite_index",
            Certificate::TrivialHnnTwists { .. } => "trivial_hnn_twists",
            Certificate::GlFactor { .. } => "gl_factor",
            Certificate::McgDehnTwist { .. } => "mcg_dehn_twist",
            Certificate::CriterionClause { .. } => "criterion_clause",
            Certificate::ZmaxFold { .. } => "zmax_fold",
        }
    }

    /// Re-verifies the certificate. Witness-backed certificates replay
    /// their words through the normal-form machinery; matrix-backed ones
    /// recompute the cokernel.
    pub fn replay(&self) -> Result<(), String> {
        match self {
            Certificate::TwistCentralizer {
                witness_graph,
                witness,
                situated_vertex,
                situated_elements,
                ..
            } => {
                let ctx = WordCtx::new(witness_graph).map_err(|e| e.to_string())?;
                match ctx.is_elliptic(witness).map_err(|e| e.to_string())? {
                    Ellipticity::Hyperbolic => {}
                    _ => return Err("witness is elliptic".into()),
                }
                for &x in situated_elements {
                    let a = ctx.vertex_element(*situated_vertex, GElt::F(x));
                    let c = ctx.conjugate(&a, witness).map_err(|e| e.to_string())?;
                    if !ctx.equal(&c, &a).map_err(|e| e.to_string())? {
                        return Err("witness does not centralize the edge image".into());
                    }
                }
                Ok(())
            }
            Certificate::AbelianCokernel { matrix, group } => {
                let recomputed = cokernel(matrix);
                if &recomputed != group {
                    return Err("cokernel mismatch".into());
                }
                if group.free_rank == 0 {
                    return Err("cokernel has rank zero".into());
                }
                Ok(())
            }
            Certificate::CentralRank { incident_ends, .. } => {
                if *incident_ends < 2 {
                    return Err("central rank needs at least two incident ends".into());
                }
                Ok(())
            }
            Certificate::ExtensionTwist { inner, .. } => inner.replay(),
            Certificate::CollapseTwist { inner, .. } => inner.replay(),
            Certificate::InfiniteOrderTwist { element, .. } => {
                if element.iter().all(|c| c.is_zero()) {
                    return Err("twisting element is trivial".into());
                }
                Ok(())
            }
            Certificate::FactorNonAbelian { .. } => Ok(()),
            Certificate::MarkedInfiniteIndex {
                rank,
                generated_rank,
                ..
            } => {
                if generated_rank >= rank {
                    return Err("generated sublattice has finite index".into());
                }
                Ok(())
            }
            Certificate::TrivialHnnTwists { .. } => Ok(()),
            Certificate::GlFactor { r, n, .. } => {
                if *r == 0 || (*r == 1 && *n == 0) {
                    return Err("GL_{r,n} is finite for these parameters".into());
                }
                Ok(())
            }
            Certificate::McgDehnTwist { .. } => Ok(()),
            Certificate::CriterionClause { .. } => Ok(()),
            Certificate::ZmaxFold { inner, .. } => inner.replay(),
        }
    }

    pub fn to_json(&self) -> Value {
        match self {
            Certificate::TwistCentralizer {
                edge_name,
                witness,
                situated_vertex,
                situated_elements,
                witness_graph,
            } => json!({
                "kind": self.kind(),
                "edge": edge_name,
                "witness": word_json(witness_graph, witness),
                "situated_vertex": witness_graph.vertices[*situated_vertex].name,
                "situated_elements": situated_elements,
            }),
            Certificate::AbelianCokernel { matrix, group } => json!({
                "kind": self.kind(),
                "matrix": matrix_json(matrix),
                "cokernel": group.to_string(),
                "rank": group.free_rank,
            }),
            Certificate::CentralRank {
                vertex_name,
                incident_ends,
            } => json!({
                "kind": self.kind(),
                "vertex": vertex_name,
                "incident_ends": incident_ends,
                "rank_lower_bound": incident_ends - 1,
            }),
            Certificate::ExtensionTwist {
                subgraph_pairs,
                inner,
            } => json!({
                "kind": self.kind(),
                "subgraph_pairs": subgraph_pairs,
                "inner": inner.to_json(),
            }),
            Certificate::CollapseTwist {
                kept_pair, inner, ..
            } => json!({
                "kind": self.kind(),
                "kept_edge": kept_pair,
                "inner": inner.to_json(),
            }),
            Certificate::InfiniteOrderTwist {
                edge_name,
                element,
                hypotheses,
            } => json!({
                "kind": self.kind(),
                "edge": edge_name,
                "element": element.iter().map(|c| c.to_string()).collect::<Vec<_>>(),
                "hypotheses": hypotheses,
            }),
            Certificate::FactorNonAbelian { vertex_name } => json!({
                "kind": self.kind(),
                "vertex": vertex_name,
            }),
            Certificate::MarkedInfiniteIndex {
                vertex_name,
                rank,
                generated_rank,
            } => json!({
                "kind": self.kind(),
                "vertex": vertex_name,
                "rank": rank,
                "generated_rank": generated_rank,
            }),
            Certificate::TrivialHnnTwists { vertex_name } => json!({
                "kind": self.kind(),
                "vertex": vertex_name,
            }),
            Certificate::GlFactor { r, n, vertex_name } => json!({
                "kind": self.kind(),
                "r": r,
                "n": n,
                "vertex": vertex_name,
            }),
            Certificate::McgDehnTwist { vertex_name } => json!({
                "kind": self.kind(),
                "vertex": vertex_name,
            }),
            Certificate::CriterionClause {
                criterion,
                clause,
                details,
            } => json!({
                "kind": self.kind(),
                "criterion": criterion,
                "clause": clause,
                "details": details,
            }),
            Certificate::ZmaxFold {
                kept_pair,
                folded_description,
                inner,
                ..
            } => json!({
                "kind": self.kind(),
                "kept_edge": kept_pair,
                "folded": folded_description,
                "inner": inner.to_json(),
            }),
        }
    }
}

pub fn word_json(graph: &GraphOfGroups, w: &GogWord) -> Value {
    let elt = |v: usize, g: &GElt| -> Value {
        match (&graph.vertices[v].group, g) {
            (crate::gog::VertexGroup::Finite(fg), GElt::F(x)) => {
                Value::String(fg.elt_name(*x).to_string())
            }
            (_, GElt::A(xs)) => {
                Value::Array(xs.iter().map(|c| Value::String(c.to_string())).collect())
            }
            (_, GElt::F(x)) => Value::String(format!("e{x}")),
        }
    };
    let mut at = w.start;
    let mut syl = Vec::new();
    for (g, e) in &w.syllables {
        let name = &graph.pairs[e / 2].name;
        let dir = if e % 2 == 0 { "+" } else { "-" };
        syl.push(json!([elt(at, g), format!("{name}{dir}")]));
        at = graph.terminus(*e);
    }
    json!({
        "start": graph.vertices[w.start].name,
        "syllables": syl,
        "tail": elt(at, &w.tail),
    })
}

pub fn matrix_json(m: &IntMatrix) -> Value {
    let rows: Vec<Value> = (0..m.rows)
        .map(|i| {
            Value::Array(
                (0..m.cols)
                    .map(|j| Value::String(m.get(i, j).to_string()))
                    .collect(),
            )
        })
        .collect();
    Value::Array(rows)
}

/// A full decision report: verdict plus the assumption trail it relies on.
pub struct OutVerdict {
    pub verdict: Verdict,
    pub assumptions: Vec<String>,
}

impl OutVerdict {
    pub fn new(verdict: Verdict) -> Self {
        OutVerdict {
            verdict,
            assumptions: Vec::new(),
        }
    }
    pub fn with_assumption(mut self, a: &str) -> Self {
        self.assumptions.push(a.to_string());
        self
    }

    pub fn to_json(&self) -> Value {
        let mut obj = serde_json::Map::new();
        obj.insert("verdict".into(), Value::String(self.verdict.kind().into()));
        match &self.verdict {
            Verdict::Finite(data) => {
                if let Some(o) = &data.order {
                    obj.insert("order".into(), Value::String(o.to_string()));
                }
                if let Some(g) = &data.group {
                    obj.insert("group".into(), Value::String(g.to_string()));
                }
                if let Some(r) = data.rank {
                    obj.insert("rank".into(), Value::Number(r.into()));
                }
            }
            Verdict::Infinite(cert) => {
                obj.insert("certificate".into(), cert.to_json());
            }
            Verdict::Unknown { reason } => {
                obj.insert("reason".into(), Value::String(reason.clone()));
            }
        }
        obj.insert(
            "assumptions".into(),
            Value::Array(
                self.assumptions
                    .iter()
                    .map(|a| Value::String(a.clone()))
                    .collect(),
            ),
        );
        Value::Object(obj)
    }
}
