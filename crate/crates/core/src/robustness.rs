//! First-order robustness of a draw against bounded perturbation of the
//! comparison matrix.
//!
//! For a fixed draw, `wp(i*)` is affine in every single pair variable `P_ij`
//! (with `P_ji = 1 - P_ij` tied to it): `wp = alpha * P_ij + beta`. The worst
//! eps-perturbation moves each pair against the sign of its alpha, so to first
//! order the worst drop is `S * eps` with `S` the sum of the admissible
//! `|alpha|`. Entries at 0 or 1 can only move inward, which clips their
//! contribution.

use serde::Serialize;

use crate::draw::Draw;
use crate::error::{Error, Result};
use crate::matrix::{ComparisonMatrix, PlayerId};
use crate::scalar::Scalar;
use crate::winprob::{check_dims, play_out, player_wp};

/// Slope and intercept of `wp(i*)` in one pair variable.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PairSensitivity<T> {
    /// Lower-numbered player; `alpha` is the slope in `P_ij`.
    pub i: PlayerId,
    pub j: PlayerId,
    pub alpha: T,
    pub beta: T,
    /// Current value of `P_ij`.
    pub p: T,
    /// What this pair adds to the drop coefficient.
    pub contribution: T,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SensitivityReport<T> {
    pub player: PlayerId,
    /// `wp(i*, P, d)` at the unperturbed matrix.
    pub wp: T,
    /// One entry per unordered pair, in lexicographic order of `(i, j)`.
    pub alphas: Vec<PairSensitivity<T>>,
    pub drop_coefficient: T,
    /// Largest eps for which the first-order expansion is claimed: xi(P).
    pub validity_bound: T,
}

impl<T: Scalar> SensitivityReport<T> {
    /// The sensitivity entry for the unordered pair `{a, b}`.
    pub fn pair(&self, a: PlayerId, b: PlayerId) -> Option<&PairSensitivity<T>> {
        let (i, j) = if a < b { (a, b) } else { (b, a) };
        self.alphas.iter().find(|s| s.i == i && s.j == j)
    }
}

/// Drop contribution of slope `alpha` for a pair currently at `p`.
pub fn clipped_contribution<T: Scalar>(alpha: T, p: T) -> T {
    if p == T::one() {
        alpha.max(T::zero())
    } else if p == T::zero() {
        (-alpha).max(T::zero())
    } else {
        alpha.abs()
    }
}

/// Per-pair slopes by two evaluations at `P_ij` in {0, 1}, which is exact
/// because `wp` is affine in each pair. O(N^2) pairs times O(N^2) each.
pub fn sensitivity<T: Scalar>(
    matrix: &ComparisonMatrix<T>,
    draw: &Draw,
    player: PlayerId,
) -> Result<SensitivityReport<T>> {
    check_dims(matrix, draw)?;
    let target = player.checked(matrix.size())?;
    let leaves = draw.zero_based();
    let wp = player_wp(matrix, &leaves, target);
    let mut scratch = matrix.clone();
    let size = matrix.size();
    let mut alphas = Vec::with_capacity(size * (size - 1) / 2);
    let mut drop = T::zero();
    for i in 0..size {
        for j in i + 1..size {
            let (pij, pji) = (matrix.at(i, j), matrix.at(j, i));
            scratch.set_pair(i, j, T::one());
            let high = player_wp(&scratch, &leaves, target);
            scratch.set_pair(i, j, T::zero());
            let low = player_wp(&scratch, &leaves, target);
            scratch.set_raw(i, j, pij, pji);
            let alpha = high - low;
            let contribution = clipped_contribution(alpha, pij);
            drop = drop + contribution;
            alphas.push(PairSensitivity {
                i: PlayerId::from_zero_based(i),
                j: PlayerId::from_zero_based(j),
                alpha,
                beta: low,
                p: pij,
                contribution,
            });
        }
    }
    Ok(SensitivityReport {
        player,
        wp,
        alphas,
        drop_coefficient: drop,
        validity_bound: matrix.xi(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DropEstimate<T> {
    pub epsilon: T,
    /// First-order drop `S * eps`.
    pub drop: T,
    pub wp: T,
    /// `wp - S * eps`, clamped to [0, 1].
    pub guaranteed: T,
    pub clamped: bool,
    /// Set when eps exceeds xi(P) and the expansion is not claimed to hold.
    pub exceeds_validity: bool,
}

pub fn drop_estimate<T: Scalar>(report: &SensitivityReport<T>, eps: T) -> Result<DropEstimate<T>> {
    if !(eps > T::zero()) {
        return Err(Error::NonpositiveEpsilon(eps.to_f64_lossy()));
    }
    let drop = report.drop_coefficient * eps;
    let raw = report.wp - drop;
    let guaranteed = raw.max(T::zero()).min(T::one());
    Ok(DropEstimate {
        epsilon: eps,
        drop,
        wp: report.wp,
        guaranteed,
        clamped: guaranteed != raw,
        exceeds_validity: eps > report.validity_bound,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Decrease,
    Increase,
    Hold,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct PairDirection {
    pub i: PlayerId,
    pub j: PlayerId,
    /// Movement of `P_ij`; `P_ji` moves the other way.
    pub direction: Direction,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(bound(serialize = "T: Scalar + Serialize"))]
pub struct WorstPerturbationWitness<T> {
    pub directions: Vec<PairDirection>,
    pub epsilon: T,
    pub matrix: ComparisonMatrix<T>,
}

/// Moves every pair by eps against the sign of its slope, where the boundary
/// allows it.
pub fn worst_perturbation_witness<T: Scalar>(
    report: &SensitivityReport<T>,
    matrix: &ComparisonMatrix<T>,
    eps: T,
) -> Result<WorstPerturbationWitness<T>> {
    if !(eps > T::zero()) {
        return Err(Error::NonpositiveEpsilon(eps.to_f64_lossy()));
    }
    let xi = matrix.xi();
    if eps > xi {
        return Err(Error::EpsilonTooLarge {
            eps: eps.to_f64_lossy(),
            xi: xi.to_f64_lossy(),
        });
    }
    let size = matrix.size();
    if report.alphas.len() != size * (size - 1) / 2 {
        return Err(Error::DimensionMismatch {
            matrix: size,
            draw: report.alphas.len(),
        });
    }
    let directions: Vec<PairDirection> = report
        .alphas
        .iter()
        .map(|s| {
            let p = matrix.prob(s.i, s.j);
            let direction = if s.alpha > T::zero() && p > T::zero() {
                Direction::Decrease
            } else if s.alpha < T::zero() && p < T::one() {
                Direction::Increase
            } else {
                Direction::Hold
            };
            PairDirection {
                i: s.i,
                j: s.j,
                direction,
            }
        })
        .collect();
    let mut out = matrix.clone();
    for d in &directions {
        let (i, j) = (d.i.zero_based(), d.j.zero_based());
        let p = matrix.at(i, j);
        match d.direction {
            Direction::Decrease => out.set_pair(i, j, (p - eps).max(T::zero())),
            Direction::Increase => out.set_pair(i, j, (p + eps).min(T::one())),
            Direction::Hold => {}
        }
    }
    Ok(WorstPerturbationWitness {
        directions,
        epsilon: eps,
        matrix: out,
    })
}

/// A played match, addressed by round (1 = first) and position from the left
/// within that round.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub struct MatchId {
    pub round: u32,
    pub index: usize,
}

impl MatchId {
    fn from_node(node: usize, rounds: u32) -> Self {
        let depth = usize::BITS - 1 - node.leading_zeros();
        MatchId {
            round: rounds - depth,
            index: node - (1 << depth),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct CrucialMatch {
    #[serde(flatten)]
    pub id: MatchId,
    pub winner: PlayerId,
    pub loser: PlayerId,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CrucialMatchReport {
    pub player: PlayerId,
    /// Sorted by round, then position.
    pub crucial: Vec<CrucialMatch>,
    pub count: usize,
}

fn checked_winner<T: Scalar>(
    matrix: &ComparisonMatrix<T>,
    draw: &Draw,
    player: PlayerId,
) -> Result<(usize, Vec<usize>, Vec<usize>)> {
    check_dims(matrix, draw)?;
    let target = player.checked(matrix.size())?;
    if !matrix.is_deterministic() {
        return Err(Error::NotDeterministic);
    }
    let leaves = draw.zero_based();
    let label = play_out(matrix, &leaves, None);
    if label[1] != target {
        return Err(Error::NotWinner {
            player: player.index(),
            winner: label[1] + 1,
        });
    }
    Ok((target, leaves, label))
}

fn build_report(player: PlayerId, rounds: u32, label: &[usize], nodes: Vec<usize>) -> CrucialMatchReport {
    let mut crucial: Vec<CrucialMatch> = nodes
        .into_iter()
        .map(|v| {
            let (a, b) = (label[2 * v], label[2 * v + 1]);
            let loser = if label[v] == a { b } else { a };
            CrucialMatch {
                id: MatchId::from_node(v, rounds),
                winner: PlayerId::from_zero_based(label[v]),
                loser: PlayerId::from_zero_based(loser),
            }
        })
        .collect();
    crucial.sort_by_key(|m| m.id);
    let count = crucial.len();
    CrucialMatchReport {
        player,
        crucial,
        count,
    }
}

/// Matches whose lone reversal dethrones the champion.
///
/// Stores every subtournament winner, then for each match re-plays only the
/// ancestors of the flipped node against the stored sibling winners:
/// O(N log N) in total.
pub fn crucial_matches<T: Scalar>(
    matrix: &ComparisonMatrix<T>,
    draw: &Draw,
    player: PlayerId,
) -> Result<CrucialMatchReport> {
    let (target, leaves, label) = checked_winner(matrix, draw, player)?;
    let size = leaves.len();
    let beats = |a: usize, b: usize| matrix.at(a, b) == T::one();
    let crucial = (1..size)
        .filter(|&v| {
            let (a, b) = (label[2 * v], label[2 * v + 1]);
            let mut current = if label[v] == a { b } else { a };
            let mut node = v;
            while node > 1 {
                let sibling = label[node ^ 1];
                if !beats(current, sibling) {
                    current = sibling;
                }
                node /= 2;
            }
            current != target
        })
        .collect();
    Ok(build_report(player, draw.rounds(), &label, crucial))
}

/// Naive counterpart of [`crucial_matches`]: replays the whole tournament
/// for every flipped match, O(N^2).
pub fn crucial_matches_oracle<T: Scalar>(
    matrix: &ComparisonMatrix<T>,
    draw: &Draw,
    player: PlayerId,
) -> Result<CrucialMatchReport> {
    if draw.size() > 64 {
        return Err(Error::Scale {
            what: "crucial-match oracle",
            limit: 64,
        });
    }
    let (target, leaves, label) = checked_winner(matrix, draw, player)?;
    let crucial = (1..leaves.len())
        .filter(|&v| play_out(matrix, &leaves, Some(v))[1] != target)
        .collect();
    Ok(build_report(player, draw.rounds(), &label, crucial))
}

/// Pairs `wp(player)` can depend on: those involving the player, and those
/// inside one of the sibling subtrees along its path to the root. Any other
/// pair only meets after one of its members has beaten the player.
pub fn relevant_pairs(draw: &Draw, player: PlayerId) -> Result<Vec<(PlayerId, PlayerId)>> {
    let target = player.checked(draw.size())?;
    let leaves = draw.zero_based();
    let pos = leaves.iter().position(|&p| p == target).expect("permutation");
    let mut pairs = Vec::new();
    for &other in &leaves {
        if other != target {
            pairs.push((target.min(other), target.max(other)));
        }
    }
    for k in 0..draw.rounds() {
        let start = ((pos >> k) ^ 1) << k;
        let block = &leaves[start..start + (1 << k)];
        for (x, &a) in block.iter().enumerate() {
            for &b in &block[x + 1..] {
                pairs.push((a.min(b), a.max(b)));
            }
        }
    }
    pairs.sort_unstable();
    Ok(pairs
        .into_iter()
        .map(|(a, b)| (PlayerId::from_zero_based(a), PlayerId::from_zero_based(b)))
        .collect())
}

/// Default cap on the number of searched pairs in the exact oracle.
pub const EXACT_PAIR_LIMIT: usize = 13;
/// Hard cap with the override.
pub const EXACT_PAIR_LIMIT_OVERRIDE: usize = 20;

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(bound(serialize = "T: Scalar + Serialize"))]
pub struct ExactWorstDrop<T> {
    pub wp: T,
    /// Minimum of `wp(i*, P', d)` over all eps-perturbations `P'`.
    pub worst_wp: T,
    pub drop: T,
    pub witness: ComparisonMatrix<T>,
    pub pairs_searched: usize,
    pub evaluations: u64,
}

/// Exact eps-worst drop by scanning every vertex of the perturbation box.
///
/// `wp` is multilinear in the pair variables, so its minimum over the box
/// `[max(0, P_ij - eps), min(1, P_ij + eps)]^pairs` sits at a vertex. Only
/// [`relevant_pairs`] are searched; the rest cannot change `wp`. That is 4
/// pairs for N = 4 and 14 for N = 8, which needs `allow_large`.
pub fn exact_worst_drop_oracle<T: Scalar>(
    matrix: &ComparisonMatrix<T>,
    draw: &Draw,
    player: PlayerId,
    eps: T,
    allow_large: bool,
) -> Result<ExactWorstDrop<T>> {
    check_dims(matrix, draw)?;
    if !(eps > T::zero()) {
        return Err(Error::NonpositiveEpsilon(eps.to_f64_lossy()));
    }
    let target = player.checked(matrix.size())?;
    let pairs = relevant_pairs(draw, player)?;
    let limit = if allow_large {
        EXACT_PAIR_LIMIT_OVERRIDE
    } else {
        EXACT_PAIR_LIMIT
    };
    if pairs.len() > limit {
        return Err(Error::Scale {
            what: "exact worst-drop search (relevant pairs)",
            limit,
        });
    }
    let leaves = draw.zero_based();
    let candidates: Vec<(usize, usize, [T; 2])> = pairs
        .iter()
        .map(|&(a, b)| {
            let (i, j) = (a.zero_based(), b.zero_based());
            let p = matrix.at(i, j);
            (i, j, [(p - eps).max(T::zero()), (p + eps).min(T::one())])
        })
        .collect();
    let mut scratch = matrix.clone();
    let mut best: Option<(T, u64)> = None;
    let total = 1u64 << candidates.len();
    for corner in 0..total {
        for (bit, &(i, j, values)) in candidates.iter().enumerate() {
            scratch.set_pair(i, j, values[(corner >> bit & 1) as usize]);
        }
        let value = player_wp(&scratch, &leaves, target);
        if best.is_none_or(|(b, _)| value < b) {
            best = Some((value, corner));
        }
    }
    let (worst_wp, corner) = best.expect("at least one corner");
    let mut witness = matrix.clone();
    for (bit, &(i, j, values)) in candidates.iter().enumerate() {
        witness.set_pair(i, j, values[(corner >> bit & 1) as usize]);
    }
    let wp = player_wp(matrix, &leaves, target);
    Ok(ExactWorstDrop {
        wp,
        worst_wp,
        drop: wp - worst_wp,
        witness,
        pairs_searched: candidates.len(),
        evaluations: total,
    })
}
