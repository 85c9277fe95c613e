//! Functional digraph of a preference sequence: vertex `i` points to `p_i`.
//!
//! Every component is a cycle with trees hanging off it. Tail lengths count
//! edges, so cycle vertices have tail length 0 and tree vertices at least 1.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::parking::{for_each_parking_function, PrefSeq};

const NONE: u32 = u32::MAX;

/// Cycle and tail classification of every vertex. Vertices are 1-based in
/// the public accessors.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FunctionalGraph {
    successor: Vec<u32>,
    cycle_id: Vec<u32>,
    tail_length: Vec<u32>,
    root: Vec<u32>,
    /// Position of a cycle vertex along its cycle; unused for tree vertices.
    cycle_pos: Vec<u32>,
    /// Vertices of each cycle in orbit order, starting anywhere.
    cycles: Vec<Vec<u32>>,
}

impl FunctionalGraph {
    /// Builds the graph from 0-based successors in linear time.
    pub(crate) fn from_successors(successor: Vec<u32>) -> Self {
        let n = successor.len();
        let mut cycle_id = vec![NONE; n];
        let mut tail_length = vec![0u32; n];
        let mut root = vec![NONE; n];
        let mut cycle_pos = vec![NONE; n];
        let mut cycles: Vec<Vec<u32>> = Vec::new();
        // 0 = unseen, 1 = on the current walk, 2 = finished
        let mut state = vec![0u8; n];
        let mut walk_index = vec![0u32; n];
        let mut path: Vec<u32> = Vec::new();

        for start in 0..n {
            if state[start] != 0 {
                continue;
            }
            path.clear();
            let mut v = start as u32;
            while state[v as usize] == 0 {
                state[v as usize] = 1;
                walk_index[v as usize] = path.len() as u32;
                path.push(v);
                v = successor[v as usize];
            }
            let mut tree_end = path.len();
            if state[v as usize] == 1 {
                let first = walk_index[v as usize] as usize;
                let id = cycles.len() as u32;
                let cycle: Vec<u32> = path[first..].to_vec();
                for (pos, &c) in cycle.iter().enumerate() {
                    cycle_id[c as usize] = id;
                    root[c as usize] = c;
                    cycle_pos[c as usize] = pos as u32;
                    state[c as usize] = 2;
                }
                cycles.push(cycle);
                tree_end = first;
            }
            for &u in path[..tree_end].iter().rev() {
                let next = successor[u as usize] as usize;
                tail_length[u as usize] = tail_length[next] + 1;
                root[u as usize] = root[next];
                state[u as usize] = 2;
            }
        }
        FunctionalGraph {
            successor,
            cycle_id,
            tail_length,
            root,
            cycle_pos,
            cycles,
        }
    }

    pub fn n(&self) -> usize {
        self.successor.len()
    }

    /// Successor of vertex `a` (1-based in, 1-based out).
    pub fn successor(&self, a: usize) -> usize {
        self.successor[a - 1] as usize + 1
    }

    pub fn on_cycle(&self, a: usize) -> bool {
        self.tail_length[a - 1] == 0
    }

    /// Index of the cycle containing `a`, if `a` is a cycle vertex.
    pub fn cycle_id(&self, a: usize) -> Option<usize> {
        let id = self.cycle_id[a - 1];
        (id != NONE).then_some(id as usize)
    }

    pub fn cycle_length(&self, a: usize) -> Option<usize> {
        self.cycle_id(a).map(|id| self.cycles[id].len())
    }

    pub fn tail_length(&self, a: usize) -> usize {
        self.tail_length[a - 1] as usize
    }

    /// First cycle vertex on the forward orbit of `a`.
    pub fn root(&self, a: usize) -> usize {
        self.root[a - 1] as usize + 1
    }

    /// Cycles as 1-based vertex lists in orbit order.
    pub fn cycles(&self) -> Vec<Vec<usize>> {
        self.cycles
            .iter()
            .map(|c| c.iter().map(|&v| v as usize + 1).collect())
            .collect()
    }

    pub fn cycle_count(&self) -> usize {
        self.cycles.len()
    }

    pub fn profile(&self) -> CycleProfile {
        let mut counts = vec![0u32; self.n()];
        for c in &self.cycles {
            counts[c.len() - 1] += 1;
        }
        CycleProfile::from_counts(counts)
    }

    // 0-based views for the pair-move machinery.
    pub(crate) fn succ0(&self) -> &[u32] {
        &self.successor
    }
    pub(crate) fn tail0(&self) -> &[u32] {
        &self.tail_length
    }
    pub(crate) fn root0(&self) -> &[u32] {
        &self.root
    }
    pub(crate) fn cycle_id0(&self) -> &[u32] {
        &self.cycle_id
    }
    pub(crate) fn cycle_pos0(&self) -> &[u32] {
        &self.cycle_pos
    }
    pub(crate) fn cycle_len_by_id(&self, id: u32) -> u32 {
        self.cycles[id as usize].len() as u32
    }
}

/// Cycle counts `(C_1, ..., C_n)` and their total.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CycleProfile {
    pub n: usize,
    /// `counts[k - 1] = C_k`.
    pub counts: Vec<u32>,
    pub total: u32,
}

impl CycleProfile {
    pub fn from_counts(counts: Vec<u32>) -> Self {
        let total = counts.iter().sum();
        CycleProfile {
            n: counts.len(),
            counts,
            total,
        }
    }

    /// `C_k`, zero for `k` outside `1..=n`.
    pub fn count(&self, k: usize) -> u32 {
        if k == 0 {
            return 0;
        }
        self.counts.get(k - 1).copied().unwrap_or(0)
    }

    /// `(C_1, ..., C_d)`, zero-padded past `n`.
    pub fn truncated(&self, d: usize) -> Vec<u32> {
        (1..=d).map(|k| self.count(k)).collect()
    }

    /// Number of vertices lying on cycles.
    pub fn cycle_vertices(&self) -> usize {
        self.counts
            .iter()
            .enumerate()
            .map(|(i, &c)| (i + 1) * c as usize)
            .sum()
    }
}

/// Reusable buffers for computing cycle counts in hot loops.
#[derive(Debug, Default, Clone)]
pub struct CycleCounter {
    stamp: Vec<u32>,
    step: Vec<u32>,
}

impl CycleCounter {
    /// Writes `C_1..C_n` of the 1-based sequence `prefs` into `counts`.
    pub fn count_into(&mut self, prefs: &[u32], counts: &mut Vec<u32>) {
        let n = prefs.len();
        counts.clear();
        counts.resize(n, 0);
        self.stamp.clear();
        self.stamp.resize(n, 0);
        self.step.resize(n, 0);
        for start in 0..n {
            if self.stamp[start] != 0 {
                continue;
            }
            let mark = start as u32 + 1;
            let mut v = start;
            let mut steps = 0u32;
            while self.stamp[v] == 0 {
                self.stamp[v] = mark;
                self.step[v] = steps;
                steps += 1;
                v = prefs[v] as usize - 1;
            }
            if self.stamp[v] == mark {
                counts[(steps - self.step[v]) as usize - 1] += 1;
            }
        }
    }

    pub fn profile(&mut self, prefs: &[u32]) -> CycleProfile {
        let mut counts = Vec::new();
        self.count_into(prefs, &mut counts);
        CycleProfile::from_counts(counts)
    }
}

pub fn functional_graph(seq: &PrefSeq) -> FunctionalGraph {
    FunctionalGraph::from_successors(seq.prefs().iter().map(|&p| p - 1).collect())
}

pub fn cycle_profile(seq: &PrefSeq) -> CycleProfile {
    CycleCounter::default().profile(seq.prefs())
}

fn check_vertex(seq: &PrefSeq, a: usize) -> Result<()> {
    if a == 0 || a > seq.len() {
        return Err(Error::invalid(format!(
            "vertex {a} outside [1, {}]",
            seq.len()
        )));
    }
    Ok(())
}

/// Length of the cycle through `a`, or `None` for a tree vertex.
pub fn cycle_length_at(seq: &PrefSeq, a: usize) -> Result<Option<usize>> {
    check_vertex(seq, a)?;
    Ok(functional_graph(seq).cycle_length(a))
}

/// Edges from `a` to the first cycle vertex on its orbit.
pub fn tail_length_at(seq: &PrefSeq, a: usize) -> Result<usize> {
    check_vertex(seq, a)?;
    Ok(functional_graph(seq).tail_length(a))
}

/// Per-vertex counts of cycle lengths and tail lengths over all of `PF_n`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VertexLengthTable {
    pub n: usize,
    pub population: u64,
    /// `on_cycle_of_length[a-1][k]`: parking functions where `a` lies on a
    /// `k`-cycle (index 0 unused).
    pub on_cycle_of_length: Vec<Vec<u64>>,
    /// `tail_of_length[a-1][k]`: parking functions where `a` has tail length `k`.
    pub tail_of_length: Vec<Vec<u64>>,
}

/// Tabulates cycle and tail lengths of every vertex by full enumeration.
pub fn vertex_length_table(n: usize, force: bool) -> Result<VertexLengthTable> {
    let mut table = VertexLengthTable {
        n,
        population: 0,
        on_cycle_of_length: vec![vec![0; n + 1]; n],
        tail_of_length: vec![vec![0; n + 1]; n],
    };
    for_each_parking_function(n, force, |prefs| {
        let g = FunctionalGraph::from_successors(prefs.iter().map(|&p| p - 1).collect());
        table.population += 1;
        for a in 1..=n {
            match g.cycle_length(a) {
                Some(len) => table.on_cycle_of_length[a - 1][len] += 1,
                None => table.tail_of_length[a - 1][g.tail_length(a)] += 1,
            }
        }
    })?;
    Ok(table)
}
