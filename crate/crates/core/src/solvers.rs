//! Tournament fixing: find a draw that makes a player win, optionally with a
//! bounded first-order drop.
//!
//! Exact answers come from scanning every canonical draw (N <= 8). Larger
//! fields use a seeded hill climb over subtree swaps, which can find a
//! witness but never certify that none exists.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::draw::{count_draws, enumerate_draws, Draw, ENUMERATION_LIMIT};
use crate::error::{Error, Result};
use crate::generators::uniform_perturbation;
use crate::matrix::{ComparisonMatrix, PlayerId};
use crate::robustness::{crucial_matches, sensitivity};
use crate::scalar::Scalar;
use crate::winprob::{player_wp, rounds_survived, win_probabilities, winner};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Problem {
    /// Some draw makes the player win a deterministic tournament.
    Tfp,
    /// Some draw gives the player winning probability at least q.
    Ptfp,
    /// Tfp with at most c crucial matches.
    Rtfp,
    /// Ptfp with drop coefficient at most s.
    Rptfp,
}

impl Problem {
    fn deterministic(self) -> bool {
        matches!(self, Problem::Tfp | Problem::Rtfp)
    }

    fn robust(self) -> bool {
        matches!(self, Problem::Rtfp | Problem::Rptfp)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct HeuristicConfig {
    pub restarts: u32,
    pub seed: u64,
    /// Improving moves allowed per restart.
    pub max_steps: u32,
}

impl Default for HeuristicConfig {
    fn default() -> Self {
        HeuristicConfig {
            restarts: 20,
            seed: 0,
            max_steps: 1000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SearchMode {
    Exact,
    Heuristic(HeuristicConfig),
}

#[derive(Debug, Clone)]
pub struct SolveRequest<'a, T> {
    pub problem: Problem,
    pub matrix: &'a ComparisonMatrix<T>,
    pub player: PlayerId,
    /// Target probability (Ptfp, Rptfp).
    pub q: Option<T>,
    /// Crucial-match bound (Rtfp).
    pub c: Option<u64>,
    /// Drop-coefficient bound (Rptfp).
    pub s: Option<T>,
    pub mode: SearchMode,
    /// Worker threads for the exact scan; 0 or 1 scans sequentially.
    pub jobs: usize,
}

impl<'a, T: Scalar> SolveRequest<'a, T> {
    pub fn new(problem: Problem, matrix: &'a ComparisonMatrix<T>, player: PlayerId) -> Self {
        SolveRequest {
            problem,
            matrix,
            player,
            q: None,
            c: None,
            s: None,
            mode: SearchMode::Exact,
            jobs: 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Answer {
    Yes,
    No,
    Found,
    NotFound,
}

impl Answer {
    pub fn is_positive(self) -> bool {
        matches!(self, Answer::Yes | Answer::Found)
    }
}

/// Independent re-check of a witness.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Verification<T> {
    pub wp: T,
    pub drop_coefficient: T,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolveResult<T> {
    pub problem: Problem,
    pub answer: Answer,
    pub witness: Option<Draw>,
    pub wp: Option<T>,
    pub drop_coefficient: Option<T>,
    pub draws_examined: u64,
    pub exact: bool,
    pub verification: Option<Verification<T>>,
}

/// Bounds of a request, checked once.
#[derive(Debug, Clone, Copy)]
struct Conditions<T> {
    problem: Problem,
    player: usize,
    q: T,
    c: u64,
    s: T,
}

impl<T: Scalar> Conditions<T> {
    fn from_request(req: &SolveRequest<'_, T>) -> Result<Self> {
        let player = req.player.checked(req.matrix.size())?;
        if req.problem.deterministic() && !req.matrix.is_deterministic() {
            return Err(Error::NotDeterministic);
        }
        let q = match req.problem {
            Problem::Ptfp | Problem::Rptfp => {
                let q = req.q.ok_or_else(|| Error::Parameter("q is required".into()))?;
                if !(q >= T::zero() && q <= T::one()) {
                    return Err(Error::Parameter(format!("q = {q} must lie in [0, 1]")));
                }
                q
            }
            _ => T::one(),
        };
        let c = match req.problem {
            Problem::Rtfp => req.c.ok_or_else(|| Error::Parameter("c is required".into()))?,
            _ => 0,
        };
        let s = match req.problem {
            Problem::Rptfp => {
                let s = req.s.ok_or_else(|| Error::Parameter("s is required".into()))?;
                if !(s >= T::zero()) {
                    return Err(Error::Parameter(format!("s = {s} must be >= 0")));
                }
                s
            }
            _ => T::zero(),
        };
        Ok(Conditions {
            problem: req.problem,
            player,
            q,
            c,
            s,
        })
    }

    /// Whether `draw` satisfies the request, with its wp and drop coefficient
    /// when they were needed to decide.
    fn passes(&self, matrix: &ComparisonMatrix<T>, draw: &Draw) -> Result<(bool, Option<T>, Option<T>)> {
        let tol = T::tolerance();
        let pid = PlayerId::from_zero_based(self.player);
        match self.problem {
            Problem::Tfp | Problem::Rtfp => {
                if winner(matrix, draw)? != pid {
                    return Ok((false, Some(T::zero()), None));
                }
                if self.problem == Problem::Tfp {
                    return Ok((true, Some(T::one()), None));
                }
                let count = crucial_matches(matrix, draw, pid)?.count as u64;
                Ok((count <= self.c, Some(T::one()), T::from_u64(count)))
            }
            Problem::Ptfp | Problem::Rptfp => {
                let wp = player_wp(matrix, &draw.zero_based(), self.player);
                if wp < self.q - tol {
                    return Ok((false, Some(wp), None));
                }
                if self.problem == Problem::Ptfp {
                    return Ok((true, Some(wp), None));
                }
                let s = sensitivity(matrix, draw, pid)?.drop_coefficient;
                Ok((s <= self.s + tol, Some(wp), Some(s)))
            }
        }
    }

    /// Re-derives the witness properties through the probability recursion
    /// and the sensitivity sweep, not through the search path.
    fn verify(&self, matrix: &ComparisonMatrix<T>, draw: &Draw) -> Result<Verification<T>> {
        let tol = T::tolerance();
        let pid = PlayerId::from_zero_based(self.player);
        let wp = win_probabilities(matrix, draw)?[self.player];
        let drop = sensitivity(matrix, draw, pid)?.drop_coefficient;
        let wins = match self.problem {
            Problem::Tfp | Problem::Rtfp => wp == T::one(),
            Problem::Ptfp | Problem::Rptfp => wp >= self.q - tol,
        };
        let robust = match self.problem {
            Problem::Rtfp => drop <= T::from_u64(self.c).unwrap_or_else(T::infinity) + tol,
            Problem::Rptfp => drop <= self.s + tol,
            _ => true,
        };
        Ok(Verification {
            wp,
            drop_coefficient: drop,
            passed: wins && robust,
        })
    }
}

fn with_pool<R: Send>(jobs: usize, f: impl FnOnce() -> R + Send) -> R {
    if jobs <= 1 {
        return f();
    }
    match rayon::ThreadPoolBuilder::new().num_threads(jobs).build() {
        Ok(pool) => pool.install(f),
        Err(_) => f(),
    }
}

fn all_draws(rounds: u32) -> Result<Vec<Draw>> {
    Ok(enumerate_draws(rounds, false)?.collect())
}

fn exact_guard(size: usize) -> Result<()> {
    if size > ENUMERATION_LIMIT {
        return Err(Error::Scale {
            what: "exact draw search",
            limit: ENUMERATION_LIMIT,
        });
    }
    Ok(())
}

pub fn solve<T: Scalar>(req: &SolveRequest<'_, T>) -> Result<SolveResult<T>> {
    let cond = Conditions::from_request(req)?;
    match req.mode {
        SearchMode::Exact => solve_exact(req, &cond),
        SearchMode::Heuristic(cfg) => solve_heuristic(req, &cond, &cfg),
    }
}

fn solve_exact<T: Scalar>(req: &SolveRequest<'_, T>, cond: &Conditions<T>) -> Result<SolveResult<T>> {
    let matrix = req.matrix;
    exact_guard(matrix.size())?;
    let rounds = matrix.rounds();
    let mut examined = 0u64;
    let mut hit: Option<(Draw, Option<T>, Option<T>)> = None;
    if req.jobs <= 1 {
        for draw in enumerate_draws(rounds, false)? {
            examined += 1;
            let (ok, wp, s) = cond.passes(matrix, &draw)?;
            if ok {
                hit = Some((draw, wp, s));
                break;
            }
        }
    } else {
        let draws = all_draws(rounds)?;
        let outcomes: Vec<_> = with_pool(req.jobs, || {
            draws
                .par_iter()
                .map(|d| cond.passes(matrix, d))
                .collect::<Result<Vec<_>>>()
        })?;
        examined = draws.len() as u64;
        // enumeration order is lexicographic, so the first pass is the smallest
        hit = draws
            .into_iter()
            .zip(outcomes)
            .find(|(_, o)| o.0)
            .map(|(d, (_, wp, s))| (d, wp, s));
    }
    finish(req, cond, hit, examined, true)
}

fn finish<T: Scalar>(
    req: &SolveRequest<'_, T>,
    cond: &Conditions<T>,
    hit: Option<(Draw, Option<T>, Option<T>)>,
    examined: u64,
    exact: bool,
) -> Result<SolveResult<T>> {
    let (pos, neg) = if exact {
        (Answer::Yes, Answer::No)
    } else {
        (Answer::Found, Answer::NotFound)
    };
    match hit {
        Some((draw, _, _)) => {
            let verification = cond.verify(req.matrix, &draw)?;
            debug_assert!(verification.passed);
            let answer = if verification.passed { pos } else { neg };
            Ok(SolveResult {
                problem: req.problem,
                answer,
                wp: Some(verification.wp),
                drop_coefficient: Some(verification.drop_coefficient),
                witness: Some(draw),
                draws_examined: examined,
                exact,
                verification: Some(verification),
            })
        }
        None => Ok(SolveResult {
            problem: req.problem,
            answer: neg,
            witness: None,
            wp: None,
            drop_coefficient: None,
            draws_examined: examined,
            exact,
            verification: None,
        }),
    }
}

/// Random canonical draw for `size` players.
fn random_draw(size: usize, rng: &mut impl Rng) -> Draw {
    let mut leaves: Vec<usize> = (0..size).collect();
    leaves.shuffle(rng);
    Draw::from_zero_based(&leaves).canonicalize()
}

/// Every swap of two disjoint aligned blocks of equal size that are not
/// siblings (sibling swaps give the same draw).
fn neighbour_moves(size: usize) -> Vec<(usize, usize, usize)> {
    let mut moves = Vec::new();
    let mut width = 1;
    while width < size {
        let blocks = size / width;
        for a in 0..blocks {
            for b in a + 1..blocks {
                if a ^ 1 != b {
                    moves.push((a * width, b * width, width));
                }
            }
        }
        width *= 2;
    }
    moves
}

fn apply_move(draw: &Draw, (a, b, width): (usize, usize, usize)) -> Draw {
    let mut leaves = draw.zero_based();
    for k in 0..width {
        leaves.swap(a + k, b + k);
    }
    Draw::from_zero_based(&leaves).canonicalize()
}

/// Hill-climbing score; larger is better, compared lexicographically.
fn score<T: Scalar>(
    cond: &Conditions<T>,
    matrix: &ComparisonMatrix<T>,
    softened: Option<&ComparisonMatrix<T>>,
    draw: &Draw,
) -> Result<(bool, f64, f64)> {
    let leaves = draw.zero_based();
    let (ok, wp, s) = cond.passes(matrix, draw)?;
    let progress = match cond.problem {
        Problem::Tfp | Problem::Rtfp => {
            // rounds survived, broken by the softened winning chance
            let rounds = rounds_survived(matrix, &leaves, cond.player) as f64;
            let soft = softened
                .map(|m| player_wp(m, &leaves, cond.player).to_f64_lossy())
                .unwrap_or(0.0);
            rounds + soft
        }
        Problem::Ptfp | Problem::Rptfp => {
            let wp = wp.unwrap_or_else(T::zero).to_f64_lossy();
            wp.min(cond.q.to_f64_lossy())
        }
    };
    let excess = match (cond.problem, s) {
        (Problem::Rtfp, Some(s)) => (s.to_f64_lossy() - cond.c as f64).max(0.0),
        (Problem::Rptfp, Some(s)) => (s - cond.s).max(T::zero()).to_f64_lossy(),
        _ if cond.problem.robust() => f64::INFINITY,
        _ => 0.0,
    };
    Ok((ok, progress, -excess))
}

fn better(a: (bool, f64, f64), b: (bool, f64, f64)) -> bool {
    (a.0, a.1, a.2) > (b.0, b.1, b.2)
}

fn solve_heuristic<T: Scalar>(
    req: &SolveRequest<'_, T>,
    cond: &Conditions<T>,
    cfg: &HeuristicConfig,
) -> Result<SolveResult<T>> {
    let matrix = req.matrix;
    let size = matrix.size();
    let softened = if cond.problem.deterministic() {
        Some(uniform_perturbation(matrix, T::lit(0.1))?)
    } else {
        None
    };
    let moves = neighbour_moves(size);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut examined = 0u64;
    for _ in 0..cfg.restarts.max(1) {
        let mut current = random_draw(size, &mut rng);
        let mut current_score = score(cond, matrix, softened.as_ref(), &current)?;
        examined += 1;
        for _ in 0..cfg.max_steps {
            if current_score.0 {
                break;
            }
            let mut order = moves.clone();
            order.shuffle(&mut rng);
            let mut improved = false;
            for mv in order {
                let candidate = apply_move(&current, mv);
                let s = score(cond, matrix, softened.as_ref(), &candidate)?;
                examined += 1;
                if better(s, current_score) {
                    current = candidate;
                    current_score = s;
                    improved = true;
                    break;
                }
            }
            if !improved {
                break;
            }
        }
        if current_score.0 {
            return finish(req, cond, Some((current, None, None)), examined, false);
        }
    }
    finish(req, cond, None, examined, false)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BestDraw<T> {
    pub draw: Draw,
    pub mwp: T,
    pub exact: bool,
}

/// `mwp(player, P)` and the lexicographically smallest draw attaining it.
/// Without `heuristic`, fields above 8 players are refused.
pub fn best_draw<T: Scalar>(
    matrix: &ComparisonMatrix<T>,
    player: PlayerId,
    heuristic: Option<HeuristicConfig>,
) -> Result<BestDraw<T>> {
    let target = player.checked(matrix.size())?;
    if matrix.size() <= ENUMERATION_LIMIT {
        let mut best: Option<(Draw, T)> = None;
        for draw in enumerate_draws(matrix.rounds(), false)? {
            let wp = player_wp(matrix, &draw.zero_based(), target);
            if best.as_ref().is_none_or(|(_, b)| wp > *b) {
                best = Some((draw, wp));
            }
        }
        let (draw, mwp) = best.expect("at least one draw");
        return Ok(BestDraw {
            draw,
            mwp,
            exact: true,
        });
    }
    let cfg = heuristic.ok_or(Error::Scale {
        what: "exact draw search",
        limit: ENUMERATION_LIMIT,
    })?;
    // climb on wp alone: a Ptfp request with an unreachable target
    let cond = Conditions {
        problem: Problem::Ptfp,
        player: target,
        q: T::one() + T::one(),
        c: 0,
        s: T::zero(),
    };
    let moves = neighbour_moves(matrix.size());
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut best: Option<(Draw, T)> = None;
    for _ in 0..cfg.restarts.max(1) {
        let mut current = random_draw(matrix.size(), &mut rng);
        let mut current_score = score(&cond, matrix, None, &current)?;
        for _ in 0..cfg.max_steps {
            let mut improved = false;
            let mut order = moves.clone();
            order.shuffle(&mut rng);
            for mv in order {
                let candidate = apply_move(&current, mv);
                let s = score(&cond, matrix, None, &candidate)?;
                if better(s, current_score) {
                    current = candidate;
                    current_score = s;
                    improved = true;
                    break;
                }
            }
            if !improved {
                break;
            }
        }
        let wp = player_wp(matrix, &current.zero_based(), target);
        let replace = match &best {
            None => true,
            Some((d, b)) => wp > *b || (wp == *b && current < *d),
        };
        if replace {
            best = Some((current, wp));
        }
    }
    let (draw, mwp) = best.expect("at least one restart");
    Ok(BestDraw {
        draw,
        mwp,
        exact: false,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RatedDraw<T> {
    pub draw: Draw,
    pub wp: T,
    pub drop_coefficient: T,
}

/// Quantized sort key so that values equal within tolerance tie exactly.
fn bucket<T: Scalar>(x: T) -> i64 {
    (x.to_f64_lossy() / T::tolerance().to_f64_lossy()).round() as i64
}

fn rate_all<T: Scalar>(matrix: &ComparisonMatrix<T>, player: PlayerId) -> Result<Vec<RatedDraw<T>>> {
    exact_guard(matrix.size())?;
    let target = player.checked(matrix.size())?;
    enumerate_draws(matrix.rounds(), false)?
        .map(|draw| {
            let wp = player_wp(matrix, &draw.zero_based(), target);
            let drop_coefficient = sensitivity(matrix, &draw, player)?.drop_coefficient;
            Ok(RatedDraw {
                draw,
                wp,
                drop_coefficient,
            })
        })
        .collect()
}

/// All draws within `delta` of `mwp(player)`, by ascending drop coefficient,
/// then descending wp, then canonical order.
pub fn enumerate_delta_optimal<T: Scalar>(
    matrix: &ComparisonMatrix<T>,
    player: PlayerId,
    delta: T,
) -> Result<Vec<RatedDraw<T>>> {
    if !(delta >= T::zero()) {
        return Err(Error::Parameter(format!("delta = {delta} must be >= 0")));
    }
    let rated = rate_all(matrix, player)?;
    let mwp = rated.iter().map(|r| r.wp).fold(T::neg_infinity(), T::max);
    let floor = mwp - delta - T::tolerance();
    let mut kept: Vec<_> = rated.into_iter().filter(|r| r.wp >= floor).collect();
    kept.sort_by(|a, b| {
        bucket(a.drop_coefficient)
            .cmp(&bucket(b.drop_coefficient))
            .then(bucket(b.wp).cmp(&bucket(a.wp)))
            .then(a.draw.cmp(&b.draw))
    });
    Ok(kept)
}

/// The delta-optimal draw with the smallest drop coefficient; ties go to the
/// canonically smallest draw.
pub fn most_robust_winning_draw<T: Scalar>(
    matrix: &ComparisonMatrix<T>,
    player: PlayerId,
    delta: T,
) -> Result<RatedDraw<T>> {
    let kept = enumerate_delta_optimal(matrix, player, delta)?;
    let min = kept
        .iter()
        .map(|r| bucket(r.drop_coefficient))
        .min()
        .expect("delta-optimal set is never empty");
    Ok(kept
        .into_iter()
        .filter(|r| bucket(r.drop_coefficient) == min)
        .min_by(|a, b| a.draw.cmp(&b.draw))
        .expect("non-empty"))
}

/// Like [`most_robust_winning_draw`] but only over draws the player wins
/// with certainty.
pub fn most_robust_sure_win<T: Scalar>(matrix: &ComparisonMatrix<T>, player: PlayerId) -> Result<RatedDraw<T>> {
    let best = best_draw(matrix, player, None)?;
    if best.mwp < T::one() {
        return Err(Error::NoWinningDraw(player.index()));
    }
    most_robust_winning_draw(matrix, player, T::zero())
}

/// Count of candidates an exact scan covers for `rounds` rounds.
pub fn exact_scan_size(rounds: u32) -> Result<u128> {
    count_draws(rounds)
}
