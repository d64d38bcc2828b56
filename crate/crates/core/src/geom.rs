//! Rank-3 coset geometries of triangles of involutions, the group-theoretic
//! hypertope criteria, and an incidence-graph oracle for the same verdicts.

use std::collections::VecDeque;
use std::fmt::Write as _;

use serde::Serialize;
use thiserror::Error;

use crate::gf::Field;
use crate::grp::{closure, intersect, set_product, ElementSet, DEFAULT_BUDGET};
use crate::perspectivity::{center_axis, product_order, Involution, Projectivity};
use crate::plane::{Plane, Point};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GeomError {
    #[error("subgroup {0} is not contained in the group")]
    SubgroupNotContained(usize),
}

/// The other two indices of {0,1,2}, in increasing order.
pub fn others(i: usize) -> (usize, usize) {
    match i {
        0 => (1, 2),
        1 => (0, 2),
        _ => (0, 1),
    }
}

const PERMUTATIONS: [[usize; 3]; 6] = [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];

/// Why a verdict came out false.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Witness {
    /// H_i and H_j meet in more than {e, a_k}; `centers` lists the centers
    /// of the involutions in the intersection.
    Thin { pair: [usize; 2], intersection_order: usize, centers: Vec<Point> },
    /// (H_i n H_j)(H_i n H_k) differs from H_i n H_j H_k.
    FlagTransitive { order: [usize; 3], lhs: usize, rhs: usize },
    /// H_i is not generated by its intersections with the other two.
    ResiduallyConnected { subgroup: usize, order: usize, generated: usize },
    /// A flag {(type, index), (type, index)} whose residue is not a pair.
    ThinResidue { flag: [[usize; 2]; 2], size: usize },
    /// The whole geometry (`element` absent) or an element's residue is
    /// disconnected.
    Disconnected { element: Option<[usize; 2]> },
    /// Chamber count differs from the base chamber orbit.
    Chambers { count: usize, orbit: usize },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CriteriaReport {
    pub thin: bool,
    pub residually_connected: bool,
    pub flag_transitive: bool,
    pub hypertope: bool,
    pub witnesses: Vec<Witness>,
}

impl CriteriaReport {
    fn new(thin: bool, rc: bool, ft: bool, witnesses: Vec<Witness>) -> CriteriaReport {
        CriteriaReport {
            thin,
            residually_connected: rc,
            flag_transitive: ft,
            hypertope: thin && rc && ft,
            witnesses,
        }
    }

    /// The three verdict bits (thin, residually connected, flag-transitive).
    pub fn verdicts(&self) -> (bool, bool, bool) {
        (self.thin, self.residually_connected, self.flag_transitive)
    }
}

/// H_i = <a_j, a_k> for i = 0, 1, 2.
pub fn maximal_parabolics(field: &Field, gens: [&Involution; 3]) -> [ElementSet; 3] {
    [0, 1, 2].map(|i| {
        let (j, k) = others(i);
        closure(field, &[*gens[j].map(), *gens[k].map()], DEFAULT_BUDGET)
            .expect("dihedral subgroups are small")
    })
}

fn involution_centers(plane: &Plane, h: &ElementSet) -> Vec<Point> {
    let f = plane.field();
    let mut out: Vec<Point> = h
        .iter()
        .filter(|x| !x.is_identity() && x.compose(f, x).is_identity())
        .filter_map(|x| center_axis(plane, x).ok().map(|(c, _)| c))
        .collect();
    out.sort();
    out
}

/// Thin, flag-transitive and residually connected verdicts from the
/// subgroups H_i alone; H itself is never built.
pub fn check_hypertope_criteria(plane: &Plane, a0: &Involution, a1: &Involution, a2: &Involution) -> CriteriaReport {
    let gens = [a0, a1, a2];
    let h = maximal_parabolics(plane.field(), gens);
    criteria_from_parabolics(plane, gens, &h)
}

pub fn criteria_from_parabolics(plane: &Plane, gens: [&Involution; 3], h: &[ElementSet; 3]) -> CriteriaReport {
    let f = plane.field();
    let mut witnesses = Vec::new();

    let mut thin = true;
    for (i, j) in [(0, 1), (0, 2), (1, 2)] {
        let k = 3 - i - j;
        let common = intersect(&h[i], &h[j]);
        let expected = ElementSet::from_elements([Projectivity::IDENTITY, *gens[k].map()], Vec::new());
        if common != expected {
            thin = false;
            witnesses.push(Witness::Thin {
                pair: [i, j],
                intersection_order: common.len(),
                centers: involution_centers(plane, &common),
            });
        }
    }

    let mut ft = true;
    for [i, j, k] in PERMUTATIONS {
        let hij = intersect(&h[i], &h[j]);
        let hik = intersect(&h[i], &h[k]);
        let lhs = set_product(f, &hij, &hik);
        let rhs = intersect(&h[i], &set_product(f, &h[j], &h[k]));
        if lhs != rhs {
            ft = false;
            witnesses.push(Witness::FlagTransitive { order: [i, j, k], lhs: lhs.len(), rhs: rhs.len() });
        }
    }

    // J = {} holds by construction since the H_i contain every generator;
    // J = {i} asks for H_i = <H_i n H_j, H_i n H_k>.
    let mut rc = true;
    for i in 0..3 {
        let (j, k) = others(i);
        let mut union: Vec<Projectivity> = intersect(&h[i], &h[j]).elements().to_vec();
        union.extend_from_slice(intersect(&h[i], &h[k]).elements());
        let generated = closure(f, &union, DEFAULT_BUDGET).expect("inside a dihedral subgroup");
        if generated.len() != h[i].len() {
            rc = false;
            witnesses.push(Witness::ResiduallyConnected {
                subgroup: i,
                order: h[i].len(),
                generated: generated.len(),
            });
        }
    }

    CriteriaReport::new(thin, rc, ft, witnesses)
}

/// Typed right cosets H_i g with incidence by nonempty intersection.
#[derive(Debug, Clone)]
pub struct CosetGeometry {
    group_order: usize,
    /// coset_of[t][g] is the type-t element containing the g-th element of H.
    coset_of: [Vec<u32>; 3],
    cosets: [Vec<Vec<u32>>; 3],
    /// neighbors[i][j][a]: sorted type-j elements incident to type-i element a.
    neighbors: [[Vec<Vec<u32>>; 3]; 3],
    /// Index in H of the identity.
    identity: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct CosetGeometryExport {
    pub types: [usize; 3],
    pub counts: [usize; 3],
    pub incidence: Vec<[usize; 4]>,
}

pub fn build_coset_geometry(field: &Field, h: &ElementSet, sub: [&ElementSet; 3]) -> Result<CosetGeometry, GeomError> {
    for (i, s) in sub.iter().enumerate() {
        if !s.is_subset(h) {
            return Err(GeomError::SubgroupNotContained(i));
        }
    }
    let n = h.len();
    let mut coset_of: [Vec<u32>; 3] = Default::default();
    let mut cosets: [Vec<Vec<u32>>; 3] = Default::default();
    for t in 0..3 {
        let mut assign = vec![u32::MAX; n];
        let mut list: Vec<Vec<u32>> = Vec::new();
        for (gi, g) in h.iter().enumerate() {
            if assign[gi] != u32::MAX {
                continue;
            }
            let id = list.len() as u32;
            let mut members: Vec<u32> = sub[t]
                .iter()
                .map(|x| h.index_of(&x.compose(field, g)).expect("closed group") as u32)
                .collect();
            members.sort_unstable();
            for &m in &members {
                assign[m as usize] = id;
            }
            list.push(members);
        }
        coset_of[t] = assign;
        cosets[t] = list;
    }
    let mut neighbors: [[Vec<Vec<u32>>; 3]; 3] = Default::default();
    for i in 0..3 {
        for j in 0..3 {
            if i == j {
                continue;
            }
            let mut adj = vec![Vec::new(); cosets[i].len()];
            for g in 0..n {
                adj[coset_of[i][g] as usize].push(coset_of[j][g]);
            }
            for v in adj.iter_mut() {
                v.sort_unstable();
                v.dedup();
            }
            neighbors[i][j] = adj;
        }
    }
    let identity = h.index_of(&Projectivity::IDENTITY).expect("group contains the identity");
    Ok(CosetGeometry { group_order: n, coset_of, cosets, neighbors, identity })
}

fn sorted_intersection_len(a: &[u32], b: &[u32]) -> usize {
    let (mut i, mut j, mut c) = (0, 0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                c += 1;
                i += 1;
                j += 1;
            }
        }
    }
    c
}

impl CosetGeometry {
    pub fn counts(&self) -> [usize; 3] {
        [self.cosets[0].len(), self.cosets[1].len(), self.cosets[2].len()]
    }

    pub fn group_order(&self) -> usize {
        self.group_order
    }

    /// Sorted indices (into H) of the elements of a coset.
    pub fn coset(&self, t: usize, a: usize) -> &[u32] {
        &self.cosets[t][a]
    }

    /// The coset of type t containing the g-th element of H.
    pub fn coset_containing(&self, t: usize, g: usize) -> usize {
        self.coset_of[t][g] as usize
    }

    pub fn base_element(&self, t: usize) -> usize {
        self.coset_of[t][self.identity] as usize
    }

    pub fn incident(&self, i: usize, a: usize, j: usize, b: usize) -> bool {
        i != j && self.neighbors[i][j][a].binary_search(&(b as u32)).is_ok()
    }

    pub fn neighbors(&self, i: usize, a: usize, j: usize) -> &[u32] {
        &self.neighbors[i][j][a]
    }

    /// Incident pairs [type, index, type, index] with the first type smaller.
    pub fn incidence(&self) -> Vec<[usize; 4]> {
        let mut out = Vec::new();
        for (i, j) in [(0, 1), (0, 2), (1, 2)] {
            for (a, nb) in self.neighbors[i][j].iter().enumerate() {
                out.extend(nb.iter().map(|&b| [i, a, j, b as usize]));
            }
        }
        out
    }

    pub fn export(&self) -> CosetGeometryExport {
        CosetGeometryExport { types: [0, 1, 2], counts: self.counts(), incidence: self.incidence() }
    }

    /// Undirected graph with one node per element; node shape marks type.
    pub fn to_dot(&self) -> String {
        const SHAPES: [&str; 3] = ["circle", "box", "triangle"];
        let mut s = String::from("graph coset_geometry {\n");
        for (t, shape) in SHAPES.iter().enumerate() {
            for a in 0..self.cosets[t].len() {
                let _ = writeln!(s, "  t{t}_{a} [shape={shape}, label=\"{t}:{a}\"];");
            }
        }
        for [i, a, j, b] in self.incidence() {
            let _ = writeln!(s, "  t{i}_{a} -- t{j}_{b};");
        }
        s.push_str("}\n");
        s
    }

    /// Number of chambers: pairwise incident triples of elements.
    pub fn chamber_count(&self) -> usize {
        let mut total = 0;
        for (a, nb1) in self.neighbors[0][1].iter().enumerate() {
            let n02 = &self.neighbors[0][2][a];
            for &b in nb1 {
                total += sorted_intersection_len(n02, &self.neighbors[1][2][b as usize]);
            }
        }
        total
    }

    /// Connected components of the subgraph induced on the given nodes.
    fn is_connected(&self, nodes: &[(usize, usize)]) -> bool {
        if nodes.is_empty() {
            return true;
        }
        let pos: std::collections::HashMap<(usize, usize), usize> =
            nodes.iter().enumerate().map(|(k, &v)| (v, k)).collect();
        let mut seen = vec![false; nodes.len()];
        let mut queue = VecDeque::from([0]);
        seen[0] = true;
        let mut reached = 1;
        while let Some(k) = queue.pop_front() {
            let (t, a) = nodes[k];
            for u in 0..3 {
                if u == t {
                    continue;
                }
                for &b in &self.neighbors[t][u][a] {
                    if let Some(&kb) = pos.get(&(u, b as usize)) {
                        if !seen[kb] {
                            seen[kb] = true;
                            reached += 1;
                            queue.push_back(kb);
                        }
                    }
                }
            }
        }
        reached == nodes.len()
    }

    /// Elements incident to the given element, across the other two types.
    pub fn residue(&self, t: usize, a: usize) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for u in 0..3 {
            if u != t {
                out.extend(self.neighbors[t][u][a].iter().map(|&b| (u, b as usize)));
            }
        }
        out
    }
}

/// Decides the three verdicts from the incidence structure alone.
pub fn graph_oracle(geometry: &CosetGeometry, h: &ElementSet) -> CriteriaReport {
    let g = geometry;
    let mut witnesses = Vec::new();

    let mut thin = true;
    'flags: for (j, k) in [(1, 2), (0, 2), (0, 1)] {
        let i = 3 - j - k;
        for (b, nb) in g.neighbors[j][k].iter().enumerate() {
            for &c in nb {
                let size = sorted_intersection_len(&g.neighbors[j][i][b], &g.neighbors[k][i][c as usize]);
                if size != 2 {
                    thin = false;
                    witnesses.push(Witness::ThinResidue { flag: [[j, b], [k, c as usize]], size });
                    break 'flags;
                }
            }
        }
    }

    let mut rc = true;
    let all: Vec<(usize, usize)> =
        (0..3).flat_map(|t| (0..g.cosets[t].len()).map(move |a| (t, a))).collect();
    if !g.is_connected(&all) {
        rc = false;
        witnesses.push(Witness::Disconnected { element: None });
    }
    'elements: for t in 0..3 {
        for a in 0..g.cosets[t].len() {
            if !g.is_connected(&g.residue(t, a)) {
                rc = false;
                witnesses.push(Witness::Disconnected { element: Some([t, a]) });
                break 'elements;
            }
        }
    }

    // The base chamber's stabilizer under right translation is H_0 n H_1 n H_2.
    let stab = (0..h.len())
        .filter(|&x| (0..3).all(|t| g.coset_of[t][x] == g.coset_of[t][g.identity]))
        .count();
    let orbit = h.len() / stab;
    let count = g.chamber_count();
    let ft = count == orbit;
    if !ft {
        witnesses.push(Witness::Chambers { count, orbit });
    }

    CriteriaReport::new(thin, rc, ft, witnesses)
}

/// Point diameter, gonality and line diameter of a rank-2 residue.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ResidueParams {
    pub d_p: Option<u32>,
    pub g: Option<u32>,
    pub d_l: Option<u32>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ResidueEntry {
    pub types: [usize; 2],
    pub params: ResidueParams,
    /// Whether every residue of this type has the same parameters.
    pub uniform: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DiagramReport {
    /// [i, j, order of a_i a_j].
    pub edge_labels: Vec<[u32; 3]>,
    pub residue_params: Vec<ResidueEntry>,
    pub linear: bool,
    pub element_counts: Option<[usize; 3]>,
}

/// BFS distances inside a bipartite residue graph given by adjacency lists.
fn bfs(adj: &[Vec<usize>], src: usize) -> Vec<Option<u32>> {
    let mut dist = vec![None; adj.len()];
    dist[src] = Some(0);
    let mut queue = VecDeque::from([src]);
    while let Some(u) = queue.pop_front() {
        let d = dist[u].unwrap();
        for &v in &adj[u] {
            if dist[v].is_none() {
                dist[v] = Some(d + 1);
                queue.push_back(v);
            }
        }
    }
    dist
}

/// Parameters of the bipartite graph with `left` "points" and the remaining
/// nodes "lines".
fn bipartite_params(adj: &[Vec<usize>], left: usize) -> ResidueParams {
    let n = adj.len();
    let mut girth: Option<u32> = None;
    let mut d_p: Option<u32> = Some(0);
    let mut d_l: Option<u32> = Some(0);
    for s in 0..n {
        let dist = bfs(adj, s);
        let ecc = dist.iter().try_fold(0u32, |m, d| d.map(|d| m.max(d)));
        let slot = if s < left { &mut d_p } else { &mut d_l };
        *slot = match (*slot, ecc) {
            (Some(a), Some(b)) => Some(a.max(b)),
            _ => None,
        };
        // Shortest cycle through s: a non-tree edge between BFS layers.
        let mut parent = vec![usize::MAX; n];
        let mut seen = vec![false; n];
        let mut queue = VecDeque::from([s]);
        seen[s] = true;
        let mut depth = vec![0u32; n];
        while let Some(u) = queue.pop_front() {
            for &v in &adj[u] {
                if !seen[v] {
                    seen[v] = true;
                    parent[v] = u;
                    depth[v] = depth[u] + 1;
                    queue.push_back(v);
                } else if parent[u] != v {
                    let len = depth[u] + depth[v] + 1;
                    girth = Some(girth.map_or(len, |g| g.min(len)));
                }
            }
        }
    }
    ResidueParams { d_p, g: girth.map(|g| g / 2), d_l }
}

impl CosetGeometry {
    /// Parameters of the residue of element (t, a); types i < j of the
    /// residue play the roles of points and lines.
    pub fn residue_params(&self, t: usize, a: usize) -> ResidueParams {
        let (i, j) = others(t);
        let pts = &self.neighbors[t][i][a];
        let lns = &self.neighbors[t][j][a];
        let mut adj = vec![Vec::new(); pts.len() + lns.len()];
        for (x, &p) in pts.iter().enumerate() {
            for (y, &l) in lns.iter().enumerate() {
                if self.incident(i, p as usize, j, l as usize) {
                    adj[x].push(pts.len() + y);
                    adj[pts.len() + y].push(x);
                }
            }
        }
        bipartite_params(&adj, pts.len())
    }
}

pub fn diagram(field: &Field, gens: [&Involution; 3], geometry: Option<&CosetGeometry>) -> DiagramReport {
    let mut edge_labels = Vec::new();
    for (i, j) in [(0, 1), (0, 2), (1, 2)] {
        edge_labels.push([i as u32, j as u32, product_order(field, gens[i], gens[j])]);
    }
    let linear = edge_labels.iter().any(|e| e[2] == 2);
    let mut residue_params = Vec::new();
    if let Some(g) = geometry {
        for t in [2, 1, 0] {
            let (i, j) = others(t);
            let base = g.residue_params(t, g.base_element(t));
            let uniform = (0..g.cosets[t].len()).all(|a| g.residue_params(t, a) == base);
            residue_params.push(ResidueEntry { types: [i, j], params: base, uniform });
        }
    }
    DiagramReport { edge_labels, residue_params, linear, element_counts: geometry.map(|g| g.counts()) }
}
