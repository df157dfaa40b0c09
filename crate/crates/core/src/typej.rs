//! Recursive search for type-ℑ structures and the resolution trees recording
//! the iterated gluing of non-compact weighted projective spaces.

use std::collections::{BTreeMap, HashMap, HashSet};

use num_integer::Integer;
use serde::{Deserialize, Serialize};

use crate::weights::{chart_group, gamma_group, residues, WeightVector};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassifierConfig {
    /// Lifts `r_i + k·b_0` are searched for `0 ≤ k ≤ lift_bound`.
    pub lift_bound: u32,
    pub max_depth: usize,
    /// Allow a node to be realised by a lift congruent to `u·b` for a unit `u`.
    pub unit_canonicalization: bool,
    pub memoize: bool,
    /// Hard cap on the number of search nodes expanded per query.
    pub node_budget: usize,
}

impl Default for ClassifierConfig {
    fn default() -> Self {
        ClassifierConfig {
            lift_bound: 3,
            max_depth: 64,
            unit_canonicalization: false,
            memoize: true,
            node_budget: 200_000,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResolutionTree {
    pub weights: Vec<i64>,
    pub children: BTreeMap<usize, ResolutionTree>,
}

impl ResolutionTree {
    pub fn leaf(weights: Vec<i64>) -> Self {
        ResolutionTree { weights, children: BTreeMap::new() }
    }

    pub fn weight_vector(&self) -> WeightVector {
        WeightVector::from_slice(&self.weights).expect("tree nodes carry a0 and weights")
    }

    /// Number of levels (a single node has depth 1).
    pub fn depth(&self) -> usize {
        1 + self.children.values().map(|c| c.depth()).max().unwrap_or(0)
    }

    pub fn vertex_count(&self) -> usize {
        1 + self.children.values().map(|c| c.vertex_count()).sum::<usize>()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("tree serialises")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        serde_json::from_str(s).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn to_dot(&self) -> String {
        fn label(w: &[i64]) -> String {
            let rest: Vec<String> = w[1..].iter().map(|x| x.to_string()).collect();
            format!("({};{})", w[0], rest.join(","))
        }
        fn walk(t: &ResolutionTree, id: &mut usize, out: &mut String) -> usize {
            let me = *id;
            *id += 1;
            out.push_str(&format!("  n{me} [label=\"{}\"];\n", label(&t.weights)));
            for (slot, child) in &t.children {
                let c = walk(child, id, out);
                out.push_str(&format!("  n{me} -> n{c} [label=\"{slot}\"];\n"));
            }
            me
        }
        let mut out = String::from("digraph resolution {\n");
        walk(self, &mut 0, &mut out);
        out.push_str("}\n");
        out
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SearchStats {
    pub nodes_expanded: usize,
    pub lifts_tried: usize,
    pub depth_cutoffs: usize,
    pub cycle_cutoffs: usize,
    pub budget_exhausted: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "lowercase")]
pub enum TypeJVerdict {
    Yes { tree: ResolutionTree },
    Unknown { stats: SearchStats },
}

impl TypeJVerdict {
    pub fn is_yes(&self) -> bool {
        matches!(self, TypeJVerdict::Yes { .. })
    }

    pub fn tree(&self) -> Option<&ResolutionTree> {
        match self {
            TypeJVerdict::Yes { tree } => Some(tree),
            TypeJVerdict::Unknown { .. } => None,
        }
    }
}

fn pairwise_coprime(xs: &[i64]) -> bool {
    xs.iter()
        .enumerate()
        .all(|(i, a)| xs[i + 1..].iter().all(|b| a.gcd(b) == 1))
}

fn require_isolated(b: &WeightVector) -> Result<()> {
    if b.a0 < 1 {
        return Err(Error::InvalidWeights(format!("a0 must be positive in {b}")));
    }
    if !gamma_group(b).is_isolated() {
        return Err(Error::NotIsolated(format!("{b}: some weight shares a factor with a0")));
    }
    Ok(())
}

/// Lifts `a ≡ b (mod b_0)` with positive entries that are pairwise coprime
/// (or of the form `(b_0, 1, …, 1)`), ordered by largest entry, then
/// lexicographically.
pub fn candidate_lifts(b: &WeightVector, cfg: &ClassifierConfig) -> Result<Vec<WeightVector>> {
    if b.a0 <= 1 {
        return Err(Error::TrivialGroup);
    }
    require_isolated(b)?;
    let r = residues(b)?;
    let m = r.m();
    let k_max = cfg.lift_bound as i64;
    let mut out = Vec::new();
    let mut ks = vec![0i64; m];
    loop {
        let rest: Vec<i64> = r.rest.iter().zip(&ks).map(|(ri, k)| ri + k * r.a0).collect();
        let a = WeightVector::new(r.a0, rest);
        if a.is_basic() || pairwise_coprime(&a.to_vec()) {
            out.push(a);
        }
        // Odometer increment.
        let mut i = 0;
        while i < m && ks[i] == k_max {
            ks[i] = 0;
            i += 1;
        }
        if i == m {
            break;
        }
        ks[i] += 1;
    }
    out.sort_by(|x, y| {
        let mx = x.rest.iter().max();
        let my = y.rest.iter().max();
        mx.cmp(&my).then_with(|| x.rest.cmp(&y.rest))
    });
    Ok(out)
}

fn canonical(t: &WeightVector) -> WeightVector {
    let mut rest = t.rest.clone();
    rest.sort_unstable();
    WeightVector::new(t.a0, rest)
}

fn units(n: i64, enabled: bool) -> Vec<i64> {
    if enabled {
        (1..n.max(2)).filter(|u| u.gcd(&n) == 1).collect()
    } else {
        vec![1]
    }
}

fn scaled_residues(t: &WeightVector, u: i64) -> Result<WeightVector> {
    residues(&WeightVector::new(t.a0, t.rest.iter().map(|x| x * u).collect()))
}

/// Reorders the non-leading weights of `tree` (recursively) so the root is
/// congruent, slot by slot, to `target` (possibly after a unit when allowed).
fn realign(tree: &ResolutionTree, target: &WeightVector, allow_units: bool) -> Option<ResolutionTree> {
    let root = tree.weight_vector();
    if root.a0 != target.a0 {
        return None;
    }
    let root_res: Vec<i64> = if root.a0 == 1 {
        vec![1; root.m()]
    } else {
        residues(&root).ok()?.rest
    };
    for u in units(target.a0, allow_units) {
        let want = if target.a0 == 1 {
            vec![1; target.m()]
        } else {
            scaled_residues(target, u).ok()?.rest
        };
        let mut used = vec![false; root.m()];
        let mut perm = Vec::with_capacity(want.len());
        for w in &want {
            match (0..root.m()).find(|&k| !used[k] && root_res[k] == *w) {
                Some(k) => {
                    used[k] = true;
                    perm.push(k);
                }
                None => break,
            }
        }
        if perm.len() != want.len() {
            continue;
        }
        let new_rest: Vec<i64> = perm.iter().map(|&k| root.rest[k]).collect();
        let new_root = WeightVector::new(root.a0, new_rest);
        let mut children = BTreeMap::new();
        for (new_slot, &old) in perm.iter().enumerate() {
            if let Some(child) = tree.children.get(&(old + 1)) {
                let chart = chart_group(&new_root, new_slot + 1).ok()?;
                let child_target = residues(&chart).ok()?;
                children.insert(new_slot + 1, realign(child, &child_target, allow_units)?);
            }
        }
        return Some(ResolutionTree { weights: new_root.to_vec(), children });
    }
    None
}

struct Search<'a> {
    cfg: &'a ClassifierConfig,
    memo: HashMap<WeightVector, Option<ResolutionTree>>,
    path: HashSet<WeightVector>,
    stats: SearchStats,
}

impl Search<'_> {
    fn truncations(&self) -> usize {
        self.stats.depth_cutoffs + self.stats.cycle_cutoffs + self.stats.budget_exhausted as usize
    }

    /// Finds a tree whose root realises the residue tuple `target`.
    fn solve(&mut self, target: &WeightVector, depth: usize) -> Option<ResolutionTree> {
        let key = canonical(target);
        if self.cfg.memoize {
            if let Some(hit) = self.memo.get(&key) {
                return hit.as_ref().and_then(|t| realign(t, target, self.cfg.unit_canonicalization));
            }
        }
        if depth > self.cfg.max_depth {
            self.stats.depth_cutoffs += 1;
            return None;
        }
        if self.path.contains(&key) {
            self.stats.cycle_cutoffs += 1;
            return None;
        }
        if self.stats.nodes_expanded >= self.cfg.node_budget {
            self.stats.budget_exhausted = true;
            return None;
        }
        self.stats.nodes_expanded += 1;
        let before = self.truncations();
        self.path.insert(key.clone());
        let found = self.expand(&key, depth);
        self.path.remove(&key);
        if self.cfg.memoize && (found.is_some() || self.truncations() == before) {
            self.memo.insert(key, found.clone());
        }
        found.and_then(|t| realign(&t, target, self.cfg.unit_canonicalization))
    }

    fn expand(&mut self, key: &WeightVector, depth: usize) -> Option<ResolutionTree> {
        let reps: Vec<WeightVector> = units(key.a0, self.cfg.unit_canonicalization)
            .into_iter()
            .filter_map(|u| scaled_residues(key, u).ok())
            .collect();
        // The basic shape is preferred over any general lift.
        if let Some(basic) = reps.iter().find(|r| r.is_basic()) {
            return Some(ResolutionTree::leaf(basic.to_vec()));
        }
        for rep in &reps {
            let lifts = candidate_lifts(rep, self.cfg).ok()?;
            'lift: for a in lifts {
                self.stats.lifts_tried += 1;
                let mut children = BTreeMap::new();
                for i in (1..=a.m()).filter(|&i| a.rest[i - 1] > 1) {
                    let chart = chart_group(&a, i).ok()?;
                    let child_target = residues(&chart).ok()?;
                    match self.solve(&child_target, depth + 1) {
                        Some(t) => {
                            children.insert(i, t);
                        }
                        None => continue 'lift,
                    }
                }
                return Some(ResolutionTree { weights: a.to_vec(), children });
            }
        }
        None
    }
}

/// Decides (within the configured bounds) whether `Γ_b` is of type ℑ.
pub fn classify(b: &WeightVector, cfg: &ClassifierConfig) -> Result<TypeJVerdict> {
    require_isolated(b)?;
    if b.a0 == 1 {
        return Ok(TypeJVerdict::Yes {
            tree: ResolutionTree::leaf(WeightVector::new(1, vec![1; b.m()]).to_vec()),
        });
    }
    let mut search = Search {
        cfg,
        memo: HashMap::new(),
        path: HashSet::new(),
        stats: SearchStats::default(),
    };
    let target = residues(b)?;
    Ok(match search.solve(&target, 1) {
        Some(tree) => TypeJVerdict::Yes { tree },
        None => TypeJVerdict::Unknown { stats: search.stats },
    })
}

/// Checks the structural contract of a resolution tree: every node is a lift
/// satisfying the coprimality condition, its children sit exactly at its
/// singular slots, every edge is congruent to the chart group, and leaves are
/// smooth.
pub fn validate_tree(tree: &ResolutionTree, allow_units: bool) -> std::result::Result<(), String> {
    let node = tree.weight_vector();
    if !(node.is_basic() || pairwise_coprime(&node.to_vec())) {
        return Err(format!("{node} is neither basic nor pairwise coprime"));
    }
    let singular: Vec<usize> = (1..=node.m()).filter(|&i| node.rest[i - 1] > 1).collect();
    let slots: Vec<usize> = tree.children.keys().copied().collect();
    if singular != slots {
        return Err(format!("{node}: children at {slots:?}, singular slots {singular:?}"));
    }
    for (&i, child) in &tree.children {
        let cw = child.weight_vector();
        if cw.a0 != node.rest[i - 1] {
            return Err(format!("{node} slot {i}: child order {} mismatch", cw.a0));
        }
        let expected = residues(&chart_group(&node, i).map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
        let got = residues(&cw).map_err(|e| e.to_string())?;
        let congruent = if allow_units {
            units(expected.a0, true).into_iter().any(|u| {
                let mut a = scaled_residues(&expected, u).map(|r| r.rest).unwrap_or_default();
                let mut b = got.rest.clone();
                a.sort_unstable();
                b.sort_unstable();
                a == b
            })
        } else {
            expected == got
        };
        if !congruent {
            return Err(format!("{node} slot {i}: chart {expected} not congruent to child {cw}"));
        }
        validate_tree(child, allow_units)?;
    }
    Ok(())
}

/// Euclid's algorithm with overestimated remainder: `(q, p) ↦ (p, p − (q mod p))`.
pub fn euclid_overestimated(q: i64, p: i64) -> Result<Vec<(i64, i64)>> {
    if !(q > p && p >= 1) || q.gcd(&p) != 1 {
        return Err(Error::InvalidWeights(format!("need coprime q > p ≥ 1, got ({q}, {p})")));
    }
    let mut seq = vec![(q, p)];
    let (mut q, mut p) = (q, p);
    while p > 1 {
        let next = (p, p - q.mod_floor(&p));
        seq.push(next);
        (q, p) = next;
    }
    Ok(seq)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn w(all: &[i64]) -> WeightVector {
        WeightVector::from_slice(all).unwrap()
    }

    #[test]
    fn first_lifts_match_worked_example() {
        let cfg = ClassifierConfig::default();
        assert_eq!(candidate_lifts(&w(&[3, -5, 2, 1]), &cfg).unwrap()[0], w(&[3, 1, 2, 1]));
        assert_eq!(candidate_lifts(&w(&[2, -5, 3, 1]), &cfg).unwrap()[0], w(&[2, 1, 1, 1]));
    }

    #[test]
    fn non_isolated_six_has_no_lifts_but_is_rejected_by_classify() {
        let cfg = ClassifierConfig::default();
        assert!(candidate_lifts(&w(&[6, 1, 2, 3]), &cfg).is_err());
        assert!(classify(&w(&[6, 1, 2, 3]), &cfg).is_err());
    }

    #[test]
    fn worked_tree() {
        let v = classify(&w(&[5, 3, 2, 1]), &ClassifierConfig::default()).unwrap();
        let t = v.tree().unwrap();
        assert_eq!(t.weights, vec![5, 3, 2, 1]);
        assert_eq!(t.children[&1].weights, vec![3, 1, 2, 1]);
        assert_eq!(t.children[&1].children[&2].weights, vec![2, 1, 1, 1]);
        assert_eq!(t.children[&2].weights, vec![2, 1, 1, 1]);
        assert_eq!((t.vertex_count(), t.depth()), (4, 3));
        validate_tree(t, false).unwrap();
    }

    #[test]
    fn euclid_examples() {
        assert_eq!(euclid_overestimated(5, 3).unwrap(), vec![(5, 3), (3, 1)]);
        assert_eq!(euclid_overestimated(7, 5).unwrap(), vec![(7, 5), (5, 3), (3, 1)]);
        assert_eq!(euclid_overestimated(9, 1).unwrap(), vec![(9, 1)]);
        assert!(euclid_overestimated(6, 4).is_err());
    }

    #[test]
    fn dot_and_json() {
        let t = classify(&w(&[5, 3, 2, 1]), &ClassifierConfig::default()).unwrap();
        let t = t.tree().unwrap();
        assert_eq!(ResolutionTree::from_json(&t.to_json()).unwrap(), *t);
        let dot = t.to_dot();
        assert!(dot.contains("n0 [label=\"(5;3,2,1)\"]"));
        assert_eq!(dot.matches("->").count(), 3);
        let leaf = ResolutionTree::leaf(vec![4, 1, 1]);
        assert_eq!(leaf.to_dot().matches("label").count(), 1);
    }
}
