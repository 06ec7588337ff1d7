//! Size-indexed counting and unranking of derivation trees.
//!
//! Trees are counted by constructor count `k`, not by rendered byte size:
//! the count recurrence is exact and memoizable in `k`, while byte size is
//! not monotone in the enumeration index and is filtered later by the
//! sampler. The enumeration orders trees by `k` ascending, then within a
//! stratum by constructor ordinal, then by child-size composition in
//! lexicographic order, then by the children's local indices left to right.
//! That order is arbitrary but pinned: index-based sampling needs it to be
//! reproducible across runs and platforms.
//!
//! `card(nt, k)` is the number of trees rooted at `nt` with exactly `k`
//! constructors: the sum over constructors of `nt`, over all compositions
//! `k - 1 = k_1 + ... + k_a`, of the product of the children's counts. The
//! tables store, per rule and child position `j`, suffix convolutions
//! `suffix[j][m]` = number of ways to fill children `j..` with `m`
//! constructors total; they drive both counting and unranking. Counts are
//! arbitrary-precision: strata grow exponentially and useful indices
//! routinely exceed 64 bits.
//!
//! Chain-heavy grammars put interesting programs at enormous constructor
//! counts (a tree of `k` constructors may render to just a few bytes more
//! than one of `k - 2`), so nothing here may recurse over tree depth and
//! table levels must stay O(1)-ish per level: unranking is iterative, and
//! convolutions iterate over the nonzero support of the child counts.

use std::sync::{Arc, RwLock};

use num_bigint::BigUint;
use num_traits::{One, Zero};
use thiserror::Error;

use crate::treegrammar::{DerivationTree, RegularTreeGrammar, Slot};

/// Position in the enumeration; arbitrary-precision and non-negative.
pub type EnumIndex = BigUint;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum EnumError {
    #[error("index {index} out of range: the language has only {total} derivation trees")]
    IndexOutOfRange { index: BigUint, total: BigUint },
}

struct Tables {
    /// Largest constructor count with computed entries.
    max_k: usize,
    /// `card[nt][k]`: trees rooted at `nt` with exactly `k` constructors.
    card: Vec<Vec<BigUint>>,
    /// `cum[nt][k]` = sum of `card[nt][j]` for `j <= k`.
    cum: Vec<Vec<BigUint>>,
    /// Ascending `k` with `card[nt][k] != 0`.
    support: Vec<Vec<usize>>,
    /// `suffix[rule][j][m]`: ways to fill the rule's children `j..arity`
    /// with `m` constructors in total, for `j < arity`. The last column
    /// equals the last child's `card` and the (conceptual) column at
    /// `j = arity` is the delta at `m = 0`, so neither is materialized
    /// beyond what unranking needs.
    suffix: Vec<Vec<Vec<BigUint>>>,
}

/// Memoized enumeration of a regular tree grammar. Lookups and unranking
/// take `&self`; table extension is serialized internally, so a shared
/// `Enumeration` can be used from concurrent workers.
pub struct Enumeration {
    rtg: Arc<RegularTreeGrammar>,
    /// Child nonterminals per rule, in slot order.
    children: Vec<Vec<usize>>,
    /// Fixed-terminal bytes contributed by each rule itself.
    rule_token_bytes: Vec<u64>,
    /// Largest constructor count of any tree, when the tree language is finite.
    finite_max_k: Option<u64>,
    tables: RwLock<Tables>,
}

impl Enumeration {
    pub fn new(rtg: Arc<RegularTreeGrammar>) -> Enumeration {
        let children: Vec<Vec<usize>> = rtg
            .rules()
            .iter()
            .map(|r| r.child_nts().collect())
            .collect();
        let rule_token_bytes = rtg
            .rules()
            .iter()
            .map(|r| {
                r.template
                    .iter()
                    .map(|slot| match slot {
                        Slot::FixedTerminal(t) => t.len() as u64,
                        Slot::Child(_) => 0,
                    })
                    .sum()
            })
            .collect();
        let nt_count = rtg.nonterminals().len();

        let mut productive = vec![false; nt_count];
        loop {
            let mut changed = false;
            for (r, rule) in rtg.rules().iter().enumerate() {
                if !productive[rule.lhs] && children[r].iter().all(|&c| productive[c]) {
                    productive[rule.lhs] = true;
                    changed = true;
                }
            }
            if !changed {
                break;
            }
        }

        let finite_max_k = finite_bound(&rtg, &children, &productive);
        let tables = Tables {
            max_k: 0,
            card: vec![vec![BigUint::zero()]; nt_count],
            cum: vec![vec![BigUint::zero()]; nt_count],
            support: vec![Vec::new(); nt_count],
            suffix: children
                .iter()
                .map(|c| vec![vec![BigUint::zero()]; c.len()])
                .collect(),
        };
        Enumeration {
            rtg,
            children,
            rule_token_bytes,
            finite_max_k,
            tables: RwLock::new(tables),
        }
    }

    pub fn rtg(&self) -> &Arc<RegularTreeGrammar> {
        &self.rtg
    }

    /// Largest constructor count with precomputed tables.
    pub fn max_k(&self) -> u64 {
        self.tables.read().unwrap().max_k as u64
    }

    /// Total number of derivation trees, `None` for infinite tree languages.
    pub fn total_trees(&self) -> Option<BigUint> {
        let bound = self.finite_max_k?;
        self.ensure_levels(bound as usize);
        let tables = self.tables.read().unwrap();
        Some(tables.cum[self.rtg.start()][bound as usize].clone())
    }

    /// Exact number of trees rooted at `nt` with exactly `k` constructors.
    pub fn cardinality(&self, nt: usize, k: u64) -> BigUint {
        if k == 0 {
            return BigUint::zero();
        }
        if let Some(bound) = self.finite_max_k {
            if k > bound {
                return BigUint::zero();
            }
        }
        self.ensure_levels(k as usize);
        self.tables.read().unwrap().card[nt][k as usize].clone()
    }

    /// Number of trees rooted at the start symbol with at most `k`
    /// constructors.
    pub fn total_below(&self, k: u64) -> BigUint {
        let k = match self.finite_max_k {
            Some(bound) => k.min(bound),
            None => k,
        };
        self.ensure_levels(k as usize);
        self.tables.read().unwrap().cum[self.rtg.start()][k as usize].clone()
    }

    /// Unranks `index` to the derivation tree at that global position.
    pub fn index_to_tree(&self, index: &EnumIndex) -> Result<DerivationTree, EnumError> {
        self.index_to_tree_bounded(index, u64::MAX)
            .map(|tree| tree.expect("unbounded unranking always yields a tree"))
    }

    /// Like [`Enumeration::index_to_tree`], but gives up once the tree's
    /// accumulated fixed-terminal bytes exceed `max_token_bytes` and returns
    /// `Ok(None)`. The rendered size of a tree is at least its token bytes
    /// for any separator, so callers filtering by byte size can skip huge
    /// trees without materializing them.
    pub fn index_to_tree_bounded(
        &self,
        index: &EnumIndex,
        max_token_bytes: u64,
    ) -> Result<Option<DerivationTree>, EnumError> {
        let start = self.rtg.start();
        loop {
            {
                let tables = self.tables.read().unwrap();
                let cum = &tables.cum[start];
                if cum[tables.max_k] > *index {
                    // First k with cum[k] > index; cum is non-decreasing.
                    let k = cum.partition_point(|c| c <= index);
                    let local = index - &cum[k - 1];
                    return Ok(self.unrank(&tables, start, k, local, max_token_bytes));
                }
            }
            let mut tables = self.tables.write().unwrap();
            let built = tables.max_k;
            let want = (built * 2).max(16);
            let target = match self.finite_max_k {
                Some(bound) => {
                    let bound = bound as usize;
                    if built >= bound && tables.cum[start][bound] <= *index {
                        return Err(EnumError::IndexOutOfRange {
                            index: index.clone(),
                            total: tables.cum[start][bound].clone(),
                        });
                    }
                    want.min(bound)
                }
                None => want,
            };
            extend(&self.rtg, &self.children, &mut tables, target);
        }
    }

    fn ensure_levels(&self, k: usize) {
        let k = match self.finite_max_k {
            Some(bound) => k.min(bound as usize),
            None => k,
        };
        if self.tables.read().unwrap().max_k >= k {
            return;
        }
        let mut tables = self.tables.write().unwrap();
        if tables.max_k < k {
            extend(&self.rtg, &self.children, &mut tables, k);
        }
    }

    /// Weight of `rule` within the stratum of trees whose children hold `m`
    /// constructors in total.
    fn rule_weight<'t>(&self, tables: &'t Tables, rule: usize, m: usize) -> BigUint {
        if self.children[rule].is_empty() {
            if m == 0 {
                BigUint::one()
            } else {
                BigUint::zero()
            }
        } else {
            tables.suffix[rule][0][m].clone()
        }
    }

    /// Iterative unranking; tree depth can reach the constructor count, so
    /// no recursion. Returns `None` once accumulated token bytes exceed
    /// `max_token_bytes`.
    fn unrank(
        &self,
        tables: &Tables,
        nt: usize,
        k: usize,
        rank: BigUint,
        max_token_bytes: u64,
    ) -> Option<DerivationTree> {
        enum Frame {
            Expand { nt: usize, k: usize, rank: BigUint },
            Build { rule: usize, arity: usize },
        }
        let mut token_bytes = 0u64;
        let mut work = vec![Frame::Expand { nt, k, rank }];
        let mut done: Vec<DerivationTree> = Vec::new();
        while let Some(frame) = work.pop() {
            match frame {
                Frame::Build { rule, arity } => {
                    let children = done.split_off(done.len() - arity);
                    done.push(DerivationTree { rule, children });
                }
                Frame::Expand { nt, k, mut rank } => {
                    let m = k - 1;
                    let mut chosen = None;
                    for r in self.rtg.rules_of(nt) {
                        let weight = self.rule_weight(tables, r, m);
                        if rank < weight {
                            chosen = Some(r);
                            break;
                        }
                        rank -= weight;
                    }
                    let r = chosen.expect("rank exceeds stratum cardinality");
                    token_bytes += self.rule_token_bytes[r];
                    if token_bytes > max_token_bytes {
                        return None;
                    }
                    let child_nts = &self.children[r];
                    let arity = child_nts.len();
                    if arity == 0 {
                        done.push(DerivationTree::leaf(r));
                        continue;
                    }

                    // Fix the child-size composition in lexicographic order;
                    // each block aggregates the already-fixed children's
                    // tree choices.
                    let mut sizes: Vec<usize> = Vec::with_capacity(arity);
                    let mut prefix = BigUint::one();
                    let mut budget = m;
                    for j in 0..arity {
                        if j == arity - 1 {
                            // Only one size remains for the last child.
                            sizes.push(budget);
                            break;
                        }
                        let tail_min = arity - j - 1;
                        let mut found = false;
                        for &t in &tables.support[child_nts[j]] {
                            if t + tail_min > budget {
                                break;
                            }
                            let rest = &tables.suffix[r][j + 1][budget - t];
                            if rest.is_zero() {
                                continue;
                            }
                            let block = &prefix * &tables.card[child_nts[j]][t] * rest;
                            if rank < block {
                                sizes.push(t);
                                prefix *= &tables.card[child_nts[j]][t];
                                budget -= t;
                                found = true;
                                break;
                            }
                            rank -= block;
                        }
                        assert!(found, "rank exhausted composition space");
                    }

                    // The remaining rank splits over the children's local
                    // indices, leftmost child most significant.
                    let mut place = vec![BigUint::one(); arity];
                    for j in (0..arity - 1).rev() {
                        place[j] = &place[j + 1] * &tables.card[child_nts[j + 1]][sizes[j + 1]];
                    }
                    work.push(Frame::Build { rule: r, arity });
                    let mut specs = Vec::with_capacity(arity);
                    for j in 0..arity {
                        let child_rank = &rank / &place[j];
                        rank -= &child_rank * &place[j];
                        specs.push(Frame::Expand {
                            nt: child_nts[j],
                            k: sizes[j],
                            rank: child_rank,
                        });
                    }
                    work.extend(specs.into_iter().rev());
                }
            }
        }
        debug_assert_eq!(done.len(), 1);
        done.pop()
    }
}

/// Builds all levels up to `target` (inclusive). Existing entries are only
/// appended to, never rewritten.
fn extend(rtg: &RegularTreeGrammar, children: &[Vec<usize>], tables: &mut Tables, target: usize) {
    for m in (tables.max_k + 1)..=target {
        for nt in 0..rtg.nonterminals().len() {
            let mut total = BigUint::zero();
            for r in rtg.rules_of(nt) {
                if children[r].is_empty() {
                    if m == 1 {
                        total += 1u32;
                    }
                } else {
                    total += &tables.suffix[r][0][m - 1];
                }
            }
            if !total.is_zero() {
                tables.support[nt].push(m);
            }
            let running = &tables.cum[nt][m - 1] + &total;
            tables.card[nt].push(total);
            tables.cum[nt].push(running);
        }
        for (r, child_nts) in children.iter().enumerate() {
            let arity = child_nts.len();
            for j in (0..arity).rev() {
                let value = if j == arity - 1 {
                    tables.card[child_nts[j]][m].clone()
                } else {
                    let mut total = BigUint::zero();
                    for &t in &tables.support[child_nts[j]] {
                        if t > m {
                            break;
                        }
                        let rest = &tables.suffix[r][j + 1][m - t];
                        if !rest.is_zero() {
                            total += &tables.card[child_nts[j]][t] * rest;
                        }
                    }
                    total
                };
                tables.suffix[r][j].push(value);
            }
        }
        tables.max_k = m;
    }
}

fn finite_bound(
    rtg: &RegularTreeGrammar,
    children: &[Vec<usize>],
    productive: &[bool],
) -> Option<u64> {
    // The tree language is finite iff no cycle exists among nonterminals
    // reachable from the start through usable rules (rules whose children
    // are all productive). On the resulting DAG the largest tree size is a
    // simple maximum; values that overflow a sane bound are treated as
    // infinite.
    const CAP: u64 = 1 << 40;
    #[derive(Clone, Copy, PartialEq)]
    enum State {
        Unvisited,
        InProgress,
        Done(u64),
    }
    fn go(
        nt: usize,
        rtg: &RegularTreeGrammar,
        children: &[Vec<usize>],
        productive: &[bool],
        state: &mut [State],
    ) -> Option<u64> {
        match state[nt] {
            State::Done(v) => return Some(v),
            State::InProgress => return None,
            State::Unvisited => {}
        }
        state[nt] = State::InProgress;
        let mut best = 0u64;
        for r in rtg.rules_of(nt) {
            if !children[r].iter().all(|&c| productive[c]) {
                continue;
            }
            let mut total = 1u64;
            for &c in &children[r] {
                total = total.saturating_add(go(c, rtg, children, productive, state)?);
            }
            if total >= CAP {
                return None;
            }
            best = best.max(total);
        }
        state[nt] = State::Done(best);
        Some(best)
    }
    let mut state = vec![State::Unvisited; rtg.nonterminals().len()];
    go(rtg.start(), rtg, children, productive, &mut state)
}
