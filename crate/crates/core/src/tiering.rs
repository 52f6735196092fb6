//! Tier assignment by Elo and construction of equally competitive groups.
//!
//! A tier too large to play as one round robin is split by repeated
//! extraction: each step picks, from the players still unassigned, the
//! group whose mean rating is closest to the mean of the whole tier. The last
//! group is whatever remains.
//!
//! Because ratings are integers, `|mean(S) - target|` for a fixed group size
//! `k` is minimized exactly by minimizing `|q * sum(S) - k * p|` where
//! `target = p / q`. That is a subset-sum problem over at most `k * spread`
//! distinct sums, solved by counting DP. Small instances are enumerated
//! directly. Both routes list the optimal subsets in the same lexicographic
//! order, so the seeded choice among co-minimizers is identical.

use num_integer::Integer;
use num_traits::Signed;
use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{Player, PlayerId, TournamentConfig};
use crate::Ratio;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TieringError {
    #[error("cannot choose {k} players from a pool of {pool}")]
    PoolTooSmall { pool: usize, k: usize },
    #[error("{size} players cannot be split into groups of {group_size}")]
    IndivisibleTier { size: usize, group_size: usize },
    #[error("group size must be at least 1")]
    ZeroGroupSize,
}

/// Tier membership, tier 1 (lowest rated) first, each tier in ascending Elo.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TierAssignment {
    pub tiers: Vec<Vec<PlayerId>>,
    /// Equal-rating blocks that straddled a tier boundary and were ordered randomly.
    pub boundary_ties: Vec<Vec<PlayerId>>,
}

/// Seeds the base players of every tier: lowest ratings into tier 1.
pub fn assign_tiers<R: Rng + ?Sized>(roster: &[Player], config: &TournamentConfig, rng: &mut R) -> TierAssignment {
    let mut sorted: Vec<&Player> = roster.iter().collect();
    sorted.sort_by(|a, b| a.elo.cmp(&b.elo).then_with(|| a.id.cmp(&b.id)));

    let mut cuts = Vec::new();
    let mut acc = 0;
    for t in &config.tiers {
        acc += t.base_size;
        cuts.push(acc);
    }

    let mut boundary_ties = Vec::new();
    let mut start = 0;
    while start < sorted.len() {
        let mut end = start + 1;
        while end < sorted.len() && sorted[end].elo == sorted[start].elo {
            end += 1;
        }
        if cuts.iter().any(|&c| c > start && c < end) {
            sorted[start..end].shuffle(rng);
            boundary_ties.push(sorted[start..end].iter().map(|p| p.id.clone()).collect());
        }
        start = end;
    }

    let mut tiers = Vec::with_capacity(config.tiers.len());
    let mut from = 0;
    for &c in &cuts {
        let mut tier: Vec<&Player> = sorted[from..c.min(sorted.len())].to_vec();
        tier.sort_by(|a, b| a.elo.cmp(&b.elo).then_with(|| a.id.cmp(&b.id)));
        tiers.push(tier.into_iter().map(|p| p.id.clone()).collect());
        from = c.min(sorted.len());
    }
    TierAssignment { tiers, boundary_ties }
}

/// Binomial coefficient `C(n, k)`.
///
/// Panics if the result does not fit in `u128`.
pub fn count_subsets(n: u64, k: u64) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut c: u128 = 1;
    for i in 0..k {
        // c * (n - i) / (i + 1) is exact; divide by the gcd first to delay overflow
        let num = u128::from(n - i);
        let den = u128::from(i + 1);
        let g = c.gcd(&den);
        let (c_red, den_red) = (c / g, den / g);
        let num_red = num / den_red;
        debug_assert_eq!(num % den_red, 0);
        c = c_red.checked_mul(num_red).expect("binomial coefficient overflows u128");
    }
    c
}

/// Outcome of one closest-mean subset selection.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubsetChoice {
    /// Positions in the pool, ascending.
    pub indices: Vec<usize>,
    pub members: Vec<PlayerId>,
    pub mean: Ratio,
    /// `|mean - target|`.
    pub deviation: Ratio,
    /// Number of subsets attaining the same minimum deviation.
    pub co_minimizers: u128,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SubsetStrategy {
    /// Enumerate when `C(n, k)` is at most [`ENUMERATION_LIMIT`], otherwise DP.
    #[default]
    Auto,
    Enumerate,
    DynamicProgramming,
}

pub const ENUMERATION_LIMIT: u128 = 100_000;

/// Size-`k` subset of `pool` whose mean rating is closest to `target`, chosen
/// uniformly among all minimizers.
pub fn min_deviation_subset<R: Rng + ?Sized>(
    pool: &[Player],
    k: usize,
    target: Ratio,
    rng: &mut R,
) -> Result<SubsetChoice, TieringError> {
    min_deviation_subset_with(pool, k, target, SubsetStrategy::Auto, rng)
}

pub fn min_deviation_subset_with<R: Rng + ?Sized>(
    pool: &[Player],
    k: usize,
    target: Ratio,
    strategy: SubsetStrategy,
    rng: &mut R,
) -> Result<SubsetChoice, TieringError> {
    if k > pool.len() {
        return Err(TieringError::PoolTooSmall { pool: pool.len(), k });
    }
    let ratings: Vec<i64> = pool.iter().map(|p| i64::from(p.elo)).collect();
    let problem = Problem::new(&ratings, k, target);
    let strategy = match strategy {
        SubsetStrategy::Auto if count_subsets(pool.len() as u64, k as u64) <= ENUMERATION_LIMIT => SubsetStrategy::Enumerate,
        SubsetStrategy::Auto => SubsetStrategy::DynamicProgramming,
        s => s,
    };
    let (indices, co_minimizers) = match strategy {
        SubsetStrategy::Enumerate => problem.enumerate(rng),
        _ => problem.dynamic_programming(rng),
    };
    let sum: i64 = indices.iter().map(|&i| ratings[i]).sum();
    let mean = if k == 0 { target } else { Ratio::new(sum, k as i64) };
    Ok(SubsetChoice {
        members: indices.iter().map(|&i| pool[i].id.clone()).collect(),
        indices,
        mean,
        deviation: (mean - target).abs(),
        co_minimizers,
    })
}

/// Minimize `|q * offset_sum - c|` over size-`k` subsets, where offsets are
/// ratings minus the pool minimum.
struct Problem {
    offsets: Vec<i64>,
    k: usize,
    q: i128,
    c: i128,
}

impl Problem {
    fn new(ratings: &[i64], k: usize, target: Ratio) -> Self {
        let min = ratings.iter().copied().min().unwrap_or(0);
        let (p, q) = (i128::from(*target.numer()), i128::from(*target.denom()));
        Self {
            offsets: ratings.iter().map(|r| r - min).collect(),
            k,
            q,
            c: k as i128 * (p - q * i128::from(min)),
        }
    }

    fn objective(&self, offset_sum: i64) -> i128 {
        (self.q * i128::from(offset_sum) - self.c).abs()
    }

    /// Lexicographic enumeration of index combinations.
    fn enumerate<R: Rng + ?Sized>(&self, rng: &mut R) -> (Vec<usize>, u128) {
        let n = self.offsets.len();
        let k = self.k;
        let for_each = |f: &mut dyn FnMut(&[usize], i64)| {
            let mut idx: Vec<usize> = (0..k).collect();
            loop {
                let s: i64 = idx.iter().map(|&i| self.offsets[i]).sum();
                f(&idx, s);
                // advance to the next combination
                let mut i = k;
                while i > 0 && idx[i - 1] == i - 1 + n - k {
                    i -= 1;
                }
                if i == 0 {
                    return;
                }
                idx[i - 1] += 1;
                for j in i..k {
                    idx[j] = idx[j - 1] + 1;
                }
            }
        };
        if k == 0 {
            return (Vec::new(), 1);
        }
        let mut best = i128::MAX;
        let mut count: u128 = 0;
        for_each(&mut |_, s| {
            let o = self.objective(s);
            if o < best {
                best = o;
                count = 1;
            } else if o == best {
                count += 1;
            }
        });
        let mut pick = rng.random_range(0..count);
        let mut chosen = Vec::new();
        for_each(&mut |idx, s| {
            if chosen.is_empty() && self.objective(s) == best {
                if pick == 0 {
                    chosen = idx.to_vec();
                }
                pick = pick.wrapping_sub(1);
            }
        });
        (chosen, count)
    }

    /// Counting DP over (suffix, size, offset sum), then unranking.
    fn dynamic_programming<R: Rng + ?Sized>(&self, rng: &mut R) -> (Vec<usize>, u128) {
        let n = self.offsets.len();
        let k = self.k;
        let mut largest = self.offsets.clone();
        largest.sort_unstable_by(|a, b| b.cmp(a));
        let max_sum = largest.iter().take(k).sum::<i64>() as usize;
        let width = max_sum + 1;
        let layer = (k + 1) * width;
        // ways[i][j][s]: subsets of items i.. with j members and offset sum s
        let mut ways = vec![0u128; (n + 1) * layer];
        let at = |i: usize, j: usize, s: usize| i * layer + j * width + s;
        ways[at(n, 0, 0)] = 1;
        for i in (0..n).rev() {
            let o = self.offsets[i] as usize;
            for j in 0..=k {
                for s in 0..width {
                    let mut w = ways[at(i + 1, j, s)];
                    if j > 0 && s >= o {
                        w += ways[at(i + 1, j - 1, s - o)];
                    }
                    ways[at(i, j, s)] = w;
                }
            }
        }
        let mut best = i128::MAX;
        for s in 0..width {
            if ways[at(0, k, s)] > 0 {
                best = best.min(self.objective(s as i64));
            }
        }
        let optimal: Vec<usize> = (0..width)
            .filter(|&s| ways[at(0, k, s)] > 0 && self.objective(s as i64) == best)
            .collect();
        let total: u128 = optimal.iter().map(|&s| ways[at(0, k, s)]).sum();

        // completions of a partial choice (items before i fixed, acc sum, j left)
        let completions = |i: usize, j: usize, acc: usize| -> u128 {
            optimal.iter().filter(|&&s| s >= acc).map(|&s| ways[at(i, j, s - acc)]).sum()
        };
        let mut pick = rng.random_range(0..total);
        let mut chosen = Vec::with_capacity(k);
        let (mut j, mut acc) = (k, 0usize);
        for i in 0..n {
            if j == 0 {
                break;
            }
            let o = self.offsets[i] as usize;
            let with = completions(i + 1, j - 1, acc + o);
            if pick < with {
                chosen.push(i);
                j -= 1;
                acc += o;
            } else {
                pick -= with;
            }
        }
        (chosen, total)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Group {
    pub members: Vec<PlayerId>,
    pub mean_elo: Ratio,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroupSplit {
    pub groups: Vec<Group>,
    pub target_mean: Ratio,
    /// Co-minimizer count of each extraction step (empty without a split).
    pub co_minimizers: Vec<u128>,
}

pub fn mean_elo(players: &[&Player]) -> Ratio {
    let sum: i64 = players.iter().map(|p| i64::from(p.elo)).sum();
    Ratio::new(sum, players.len().max(1) as i64)
}

/// Splits a tier into groups of `group_size` with near-equal mean ratings.
/// A tier no larger than `group_size` is returned as a single group.
pub fn split_tier<R: Rng + ?Sized>(
    tier: &[Player],
    group_size: usize,
    rng: &mut R,
) -> Result<GroupSplit, TieringError> {
    if group_size == 0 {
        return Err(TieringError::ZeroGroupSize);
    }
    let all: Vec<&Player> = tier.iter().collect();
    let target = mean_elo(&all);
    if tier.len() <= group_size {
        return Ok(GroupSplit {
            groups: vec![Group { members: tier.iter().map(|p| p.id.clone()).collect(), mean_elo: target }],
            target_mean: target,
            co_minimizers: Vec::new(),
        });
    }
    if !tier.len().is_multiple_of(group_size) {
        return Err(TieringError::IndivisibleTier { size: tier.len(), group_size });
    }
    let mut remaining: Vec<Player> = tier.to_vec();
    let mut groups = Vec::new();
    let mut co_minimizers = Vec::new();
    while remaining.len() > group_size {
        let choice = min_deviation_subset(&remaining, group_size, target, rng)?;
        co_minimizers.push(choice.co_minimizers);
        groups.push(Group { members: choice.members.clone(), mean_elo: choice.mean });
        let mut keep = Vec::with_capacity(remaining.len() - group_size);
        for (i, p) in remaining.into_iter().enumerate() {
            if choice.indices.binary_search(&i).is_err() {
                keep.push(p);
            }
        }
        remaining = keep;
    }
    let rest: Vec<&Player> = remaining.iter().collect();
    groups.push(Group { mean_elo: mean_elo(&rest), members: remaining.iter().map(|p| p.id.clone()).collect() });
    Ok(GroupSplit { groups, target_mean: target, co_minimizers })
}
