//! Stallings folding of wedges of loops.

use std::collections::{BTreeMap, HashMap, HashSet, VecDeque};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::words::Word;

/// An edge-labelled graph; an edge `(u, v, k)` with `k > 0` reads `g_k`
/// from `u` to `v` and `g_-k` from `v` to `u`.
#[derive(Clone, Debug)]
pub struct FoldingGraph {
    base: usize,
    vertex_count: usize,
    edges: Vec<(usize, usize, u32)>,
}

struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        Self {
            parent: (0..n).collect(),
        }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    /// Keeps the smaller id as representative so the base stays at 0.
    fn union(&mut self, a: usize, b: usize) -> bool {
        let (a, b) = (self.find(a), self.find(b));
        if a == b {
            return false;
        }
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        self.parent[hi] = lo;
        true
    }
}

impl FoldingGraph {
    /// Wedge of one loop per word at vertex 0, before folding.
    pub fn wedge(words: &[Word]) -> Self {
        let mut vertex_count = 1;
        let mut edges = Vec::new();
        for w in words {
            let letters = w.to_letters();
            let mut at = 0;
            for (i, &l) in letters.iter().enumerate() {
                let next = if i + 1 == letters.len() {
                    0
                } else {
                    vertex_count += 1;
                    vertex_count - 1
                };
                if l > 0 {
                    edges.push((at, next, l as u32));
                } else {
                    edges.push((next, at, l.unsigned_abs()));
                }
                at = next;
            }
        }
        Self {
            base: 0,
            vertex_count,
            edges,
        }
    }

    pub fn base(&self) -> usize {
        self.base
    }

    pub fn vertex_count(&self) -> usize {
        self.vertex_count
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[(usize, usize, u32)] {
        &self.edges
    }

    /// `E - V + 1`, the rank of the fundamental group of a connected graph.
    pub fn rank(&self) -> usize {
        (self.edges.len() + 1).saturating_sub(self.vertex_count)
    }

    fn outgoing(&self) -> HashMap<(usize, i32), Vec<usize>> {
        let mut out: HashMap<(usize, i32), Vec<usize>> = HashMap::new();
        for &(u, v, k) in &self.edges {
            out.entry((u, k as i32)).or_default().push(v);
            out.entry((v, -(k as i32))).or_default().push(u);
        }
        out
    }

    pub fn is_folded(&self) -> bool {
        let mut seen = HashSet::new();
        self.edges.iter().all(|e| seen.insert(*e))
            && self.outgoing().values().all(|targets| targets.len() == 1)
    }

    /// Identifies equally labelled edges leaving a common vertex until none remain.
    pub fn fold(mut self) -> Self {
        loop {
            let mut uf = UnionFind::new(self.vertex_count);
            let mut merged = false;
            for targets in self.outgoing().values() {
                for pair in targets.windows(2) {
                    merged |= uf.union(pair[0], pair[1]);
                }
            }
            let before = self.edges.len();
            self.relabel(&mut uf);
            if !merged && self.edges.len() == before {
                return self;
            }
        }
    }

    /// Applies the vertex identification, compacts ids and drops parallel copies.
    fn relabel(&mut self, uf: &mut UnionFind) {
        let mut ids: BTreeMap<usize, usize> = BTreeMap::new();
        for v in 0..self.vertex_count {
            let r = uf.find(v);
            let next = ids.len();
            ids.entry(r).or_insert(next);
        }
        let mut seen = HashSet::new();
        let mut edges = Vec::with_capacity(self.edges.len());
        for &(u, v, k) in &self.edges {
            let e = (ids[&uf.find(u)], ids[&uf.find(v)], k);
            if seen.insert(e) {
                edges.push(e);
            }
        }
        self.base = ids[&uf.find(self.base)];
        self.vertex_count = ids.len();
        self.edges = edges;
    }

    /// Repeatedly removes degree-1 vertices other than the base.
    pub fn core(mut self) -> Self {
        loop {
            let mut degree = vec![0usize; self.vertex_count];
            for &(u, v, _) in &self.edges {
                degree[u] += 1;
                degree[v] += 1;
            }
            let leaves: HashSet<usize> = (0..self.vertex_count)
                .filter(|&v| v != self.base && degree[v] <= 1)
                .collect();
            if leaves.is_empty() {
                return self;
            }
            self.edges
                .retain(|(u, v, _)| !leaves.contains(u) && !leaves.contains(v));
            let ids: HashMap<usize, usize> = (0..self.vertex_count)
                .filter(|v| !leaves.contains(v))
                .enumerate()
                .map(|(i, v)| (v, i))
                .collect();
            self.edges = self
                .edges
                .iter()
                .map(|&(u, v, k)| (ids[&u], ids[&v], k))
                .collect();
            self.base = ids[&self.base];
            self.vertex_count = ids.len();
        }
    }

    /// Follows `w` from the base; true when it is readable and ends at the base.
    pub fn reads_loop(&self, w: &Word) -> bool {
        let out = self.outgoing();
        let mut at = self.base;
        for l in w.letters() {
            match out.get(&(at, l)).and_then(|t| t.first()) {
                Some(&next) => at = next,
                None => return false,
            }
        }
        at == self.base
    }

    /// Edge list under breadth-first numbering from the base, visiting
    /// labels in canonical order. Equal for isomorphic folded graphs.
    pub fn canonical_form(&self) -> Vec<(usize, usize, u32)> {
        let out = self.outgoing();
        let mut labels: Vec<i32> = out.keys().map(|&(_, l)| l).collect();
        labels.sort_by_key(|&l| (l.unsigned_abs(), l > 0));
        labels.dedup();
        let mut number: HashMap<usize, usize> = HashMap::from([(self.base, 0)]);
        let mut queue = VecDeque::from([self.base]);
        while let Some(v) = queue.pop_front() {
            for &l in &labels {
                if let Some(targets) = out.get(&(v, l)) {
                    for &t in targets {
                        if !number.contains_key(&t) {
                            number.insert(t, number.len());
                            queue.push_back(t);
                        }
                    }
                }
            }
        }
        let mut edges: Vec<_> = self
            .edges
            .iter()
            .map(|&(u, v, k)| (number[&u], number[&v], k))
            .collect();
        edges.sort_unstable();
        edges
    }
}

/// Folded wedge of loops for `words`.
pub fn fold(words: &[Word]) -> Result<FoldingGraph> {
    if words.is_empty() {
        return Err(Error::TooFew { min: 1, got: 0 });
    }
    if words.iter().any(Word::is_identity) {
        return Err(Error::IdentityInSet);
    }
    Ok(FoldingGraph::wedge(words).fold())
}

#[derive(Clone, Debug, Serialize, PartialEq, Eq)]
pub struct FreenessReport {
    pub free: bool,
    /// Rank of the subgroup generated by the words.
    pub rank: usize,
    pub word_count: usize,
}

fn check_distinct(words: &[Word]) -> Result<()> {
    let mut seen = HashSet::new();
    for w in words {
        if w.is_identity() {
            return Err(Error::IdentityInSet);
        }
        if !seen.insert(w) {
            return Err(Error::DuplicateElement(w.clone()));
        }
    }
    Ok(())
}

/// Free basis test: the folded core has rank equal to the number of words.
pub fn is_free_basis(words: &[Word]) -> Result<FreenessReport> {
    check_distinct(words)?;
    let core = fold(words)?.core();
    let rank = core.rank();
    Ok(FreenessReport {
        free: rank == words.len(),
        rank,
        word_count: words.len(),
    })
}

#[derive(Clone, Debug, Serialize, PartialEq, Eq)]
pub struct FreeSetReport {
    /// The representatives form a free basis.
    pub free: bool,
    pub rank: usize,
    /// One word per `{w, w^-1}` class.
    pub representatives: usize,
    pub word_count: usize,
    pub closed_under_inverse: bool,
}

/// Free-set test in the symmetric sense: `S ⊆ B ∪ B^-1` for a free basis
/// `B` with one element per inverse pair of `S`.
pub fn is_free_set(words: &[Word]) -> Result<FreeSetReport> {
    check_distinct(words)?;
    let set: HashSet<&Word> = words.iter().collect();
    let mut reps = Vec::new();
    for w in words {
        let inv = w.inverse();
        if inv == *w {
            continue;
        }
        if !set.contains(&inv) || *w < inv {
            reps.push(w.clone());
        }
    }
    let closed_under_inverse = words.iter().all(|w| set.contains(&w.inverse()));
    let core = fold(&reps)?.core();
    let rank = core.rank();
    Ok(FreeSetReport {
        free: rank == reps.len(),
        rank,
        representatives: reps.len(),
        word_count: words.len(),
        closed_under_inverse,
    })
}
