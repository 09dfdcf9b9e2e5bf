//! Folded subgroup graphs with provenance.
//!
//! The graph of a finitely generated subgroup H = ⟨g_1, ..., g_m⟩ of F_k
//! starts as a wedge of loops at a base vertex, one loop per generator, and
//! is folded until no vertex has two equal-labeled edges in the same
//! direction. A reduced word lies in H exactly when it traces a loop at the
//! base. Each edge carries an expression over the generator symbols chosen
//! so that concatenating (and freely reducing) the expressions along any
//! base loop rewrites the loop's label as a product of the g_i — this is
//! what lets callers recover preimages, not just a yes/no answer.
//!
//! The invariant maintained by folding: writing anchor(v) for a fixed word
//! reading from the base to v (anchor(base) empty), every edge u -x-> v has
//! an expression whose expansion equals anchor(u) · x · anchor(v)^-1 in F_k.
//! Along a base loop the anchors telescope away. Folding two edges with a
//! common endpoint merges their other endpoints and re-anchors every edge
//! incident to the losing vertex by the correction word delta computed from
//! the two expressions being merged.

use super::{reduce_letters, FreeGroupError, Word};

#[derive(Debug, Clone)]
struct BuildEdge {
    from: usize,
    to: usize,
    /// 1-based generator label; traversal against the arrow reads its inverse.
    label: usize,
    prov: Vec<i32>,
    alive: bool,
}

/// Folded core graph of a finitely generated subgroup of F_k.
#[derive(Debug, Clone)]
pub struct SubgroupGraph {
    ambient_rank: usize,
    gens: Vec<Word>,
    base: usize,
    /// out[v][label-1] = (head, edge id)
    out: Vec<Vec<Option<(usize, usize)>>>,
    /// inn[v][label-1] = (tail, edge id)
    inn: Vec<Vec<Option<(usize, usize)>>>,
    prov: Vec<Vec<i32>>,
    n_edges: usize,
}

fn sym_inv(expr: &[i32]) -> Vec<i32> {
    expr.iter().rev().map(|&x| -x).collect()
}

fn find(parent: &mut [usize], mut v: usize) -> usize {
    while parent[v] != v {
        parent[v] = parent[parent[v]];
        v = parent[v];
    }
    v
}

impl SubgroupGraph {
    pub fn new(gens: &[Word]) -> Result<SubgroupGraph, FreeGroupError> {
        let rank = gens.first().map(Word::rank).ok_or(FreeGroupError::EmptyRank)?;
        SubgroupGraph::with_rank(rank, gens)
    }

    pub fn with_rank(ambient_rank: usize, gens: &[Word]) -> Result<SubgroupGraph, FreeGroupError> {
        for g in gens {
            if g.rank() != ambient_rank {
                return Err(FreeGroupError::RankMismatch {
                    left: ambient_rank,
                    right: g.rank(),
                });
            }
        }

        // Wedge of subdivided loops at vertex 0.
        let mut n_vertices = 1usize;
        let mut edges: Vec<BuildEdge> = Vec::new();
        for (t, g) in gens.iter().enumerate() {
            let sym = (t + 1) as i32;
            let mut cur = 0usize;
            let len = g.len();
            for (j, &l) in g.letters().iter().enumerate() {
                let last = j + 1 == len;
                let next = if last {
                    0
                } else {
                    n_vertices += 1;
                    n_vertices - 1
                };
                let (from, to, prov) = if l > 0 {
                    (cur, next, if last { vec![sym] } else { vec![] })
                } else {
                    (next, cur, if last { vec![-sym] } else { vec![] })
                };
                edges.push(BuildEdge {
                    from,
                    to,
                    label: l.unsigned_abs() as usize,
                    prov,
                    alive: true,
                });
                cur = next;
            }
        }

        let mut parent: Vec<usize> = (0..n_vertices).collect();
        while let Some((surv, kill, merge)) = find_foldable(&mut parent, &edges) {
            apply_fold(&mut parent, &mut edges, surv, kill, merge);
        }

        prune_leaves(&mut parent, &mut edges);

        // Compact live roots into a dense vertex numbering.
        let base_root = find(&mut parent, 0);
        let mut roots: Vec<usize> = edges
            .iter()
            .filter(|e| e.alive)
            .flat_map(|e| [e.from, e.to])
            .map(|v| find(&mut parent, v))
            .chain(std::iter::once(base_root))
            .collect();
        roots.sort_unstable();
        roots.dedup();
        let index_of = |roots: &[usize], r: usize| roots.binary_search(&r).unwrap();

        let nv = roots.len();
        let mut out = vec![vec![None; ambient_rank]; nv];
        let mut inn = vec![vec![None; ambient_rank]; nv];
        let mut prov = Vec::new();
        let mut n_edges = 0;
        for e in &edges {
            if !e.alive {
                continue;
            }
            let f = index_of(&roots, find(&mut parent, e.from));
            let t = index_of(&roots, find(&mut parent, e.to));
            let id = prov.len();
            prov.push(e.prov.clone());
            debug_assert!(out[f][e.label - 1].is_none());
            debug_assert!(inn[t][e.label - 1].is_none());
            out[f][e.label - 1] = Some((t, id));
            inn[t][e.label - 1] = Some((f, id));
            n_edges += 1;
        }

        Ok(SubgroupGraph {
            ambient_rank,
            gens: gens.to_vec(),
            base: index_of(&roots, base_root),
            out,
            inn,
            prov,
            n_edges,
        })
    }

    pub fn ambient_rank(&self) -> usize {
        self.ambient_rank
    }

    pub fn gens(&self) -> &[Word] {
        &self.gens
    }

    pub fn vertex_count(&self) -> usize {
        self.out.len()
    }

    pub fn edge_count(&self) -> usize {
        self.n_edges
    }

    /// Cycle rank of the core graph = rank of the subgroup.
    pub fn subgroup_rank(&self) -> usize {
        self.n_edges + 1 - self.out.len()
    }

    /// Trace a reduced word from the base; a completed loop yields a reduced
    /// expression over the generator symbols whose expansion is the word.
    pub fn membership(&self, w: &Word) -> Option<Vec<i32>> {
        debug_assert_eq!(w.rank(), self.ambient_rank);
        let mut cur = self.base;
        let mut expr: Vec<i32> = Vec::new();
        for &l in w.letters() {
            let lab = l.unsigned_abs() as usize - 1;
            if l > 0 {
                let (next, e) = self.out[cur][lab]?;
                expr.extend_from_slice(&self.prov[e]);
                cur = next;
            } else {
                let (prev, e) = self.inn[cur][lab]?;
                expr.extend(sym_inv(&self.prov[e]));
                cur = prev;
            }
        }
        if cur == self.base {
            Some(reduce_letters(&expr))
        } else {
            None
        }
    }
}

enum Merge {
    /// Merge the head classes (two equal-labeled edges out of one vertex).
    Heads,
    /// Merge the tail classes (two equal-labeled edges into one vertex).
    Tails,
    /// Parallel edges between the same classes; drop the duplicate.
    DropOnly,
}

/// Find one foldable pair: returns (survivor edge, killed edge, merge kind).
/// The survivor is chosen so that the base class never loses its anchor.
fn find_foldable(
    parent: &mut [usize],
    edges: &[BuildEdge],
) -> Option<(usize, usize, Merge)> {
    use std::collections::HashMap;
    let base_root = find(parent, 0);
    let mut by_out: HashMap<(usize, usize), usize> = HashMap::new();
    let mut by_in: HashMap<(usize, usize), usize> = HashMap::new();
    for (i, e) in edges.iter().enumerate() {
        if !e.alive {
            continue;
        }
        let f = find(parent, e.from);
        let t = find(parent, e.to);
        if let Some(&j) = by_out.get(&(f, e.label)) {
            let tj = find(parent, edges[j].to);
            if tj == t {
                return Some((j, i, Merge::DropOnly));
            }
            // Keep the edge whose head is the base class, if either.
            return if t == base_root {
                Some((i, j, Merge::Heads))
            } else {
                Some((j, i, Merge::Heads))
            };
        }
        by_out.insert((f, e.label), i);
        if let Some(&j) = by_in.get(&(t, e.label)) {
            let fj = find(parent, edges[j].from);
            if fj == f {
                return Some((j, i, Merge::DropOnly));
            }
            return if f == base_root {
                Some((i, j, Merge::Tails))
            } else {
                Some((j, i, Merge::Tails))
            };
        }
        by_in.insert((t, e.label), i);
    }
    None
}

fn apply_fold(
    parent: &mut [usize],
    edges: &mut [BuildEdge],
    surv: usize,
    kill: usize,
    merge: Merge,
) {
    edges[kill].alive = false;
    let (vkeep, vlose, delta) = match merge {
        Merge::DropOnly => return,
        Merge::Heads => {
            let vkeep = find(parent, edges[surv].to);
            let vlose = find(parent, edges[kill].to);
            // delta expands to anchor(vkeep) anchor(vlose)^-1
            let mut d = sym_inv(&edges[surv].prov);
            d.extend_from_slice(&edges[kill].prov);
            (vkeep, vlose, reduce_letters(&d))
        }
        Merge::Tails => {
            let vkeep = find(parent, edges[surv].from);
            let vlose = find(parent, edges[kill].from);
            let mut d = edges[surv].prov.clone();
            d.extend(sym_inv(&edges[kill].prov));
            (vkeep, vlose, reduce_letters(&d))
        }
    };
    debug_assert_ne!(vkeep, vlose);
    let delta_inv = sym_inv(&delta);
    for e in edges.iter_mut() {
        if !e.alive {
            continue;
        }
        let from_lose = find(parent, e.from) == vlose;
        let to_lose = find(parent, e.to) == vlose;
        if from_lose {
            let mut p = delta.clone();
            p.extend_from_slice(&e.prov);
            e.prov = reduce_letters(&p);
        }
        if to_lose {
            let mut p = e.prov.clone();
            p.extend_from_slice(&delta_inv);
            e.prov = reduce_letters(&p);
        }
    }
    parent[vlose] = vkeep;
}

/// Remove vertices of degree <= 1 other than the base, so every remaining
/// vertex lies on a reduced loop through the base.
fn prune_leaves(parent: &mut [usize], edges: &mut [BuildEdge]) {
    loop {
        let base_root = find(parent, 0);
        use std::collections::HashMap;
        let mut degree: HashMap<usize, usize> = HashMap::new();
        for e in edges.iter() {
            if !e.alive {
                continue;
            }
            let f = find(parent, e.from);
            let t = find(parent, e.to);
            *degree.entry(f).or_insert(0) += 1;
            *degree.entry(t).or_insert(0) += 1;
        }
        let leaf = degree
            .iter()
            .filter(|&(&v, &d)| v != base_root && d <= 1)
            .map(|(&v, _)| v)
            .min();
        let Some(leaf) = leaf else { break };
        for e in edges.iter_mut() {
            if e.alive {
                let f = find(parent, e.from);
                let t = find(parent, e.to);
                if f == leaf || t == leaf {
                    e.alive = false;
                }
            }
        }
    }
}
