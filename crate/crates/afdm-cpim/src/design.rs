//! Max-min codebook design: pairwise distances between permuted DAFT
//! matrices, the exhaustive subset oracle, and the penalized binary-objective
//! formulation `E(b) = Σ_{i<j} b_i b_j (1/d_ij)^λ1 + λ2 (Σ b_i - K)²` solved
//! by the GAS engine.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::afdm::{ChirpParams, PermutationIndex};
use crate::error::{Error, Result};
use crate::gas::PolynomialBinaryObjective;
use crate::Bit;

/// Ceiling returned by the angular metric when `|tr(A_iᴴ A_j)|` vanishes.
pub const ANGULAR_CEILING: f64 = 1e12;

/// Default cap on the number of subsets the exhaustive oracle will visit.
pub const MAXMIN_DEFAULT_BUDGET: u128 = 10_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum DistanceMetric {
    /// `d = ‖A_i - A_j‖_F`
    Frobenius,
    /// `d = |tr(A_iᴴ A_j)|⁻¹`
    Angular,
}

impl std::fmt::Display for DistanceMetric {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            DistanceMetric::Frobenius => write!(f, "frobenius"),
            DistanceMetric::Angular => write!(f, "angular"),
        }
    }
}

impl std::str::FromStr for DistanceMetric {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "frobenius" => Ok(DistanceMetric::Frobenius),
            "angular" => Ok(DistanceMetric::Angular),
            other => Err(Error::Config(format!(
                "unknown distance metric `{other}` (expected frobenius|angular)"
            ))),
        }
    }
}

/// Symmetric pairwise distance matrix over a pool of permutation indices.
#[derive(Debug, Clone)]
pub struct DistanceMatrix {
    pool: Vec<PermutationIndex>,
    metric: DistanceMetric,
    /// Row-major `pool.len() × pool.len()` distances, zero diagonal.
    d: Vec<f64>,
}

impl DistanceMatrix {
    pub fn pool(&self) -> &[PermutationIndex] {
        &self.pool
    }

    pub fn len(&self) -> usize {
        self.pool.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pool.is_empty()
    }

    pub fn metric(&self) -> DistanceMetric {
        self.metric
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.d[i * self.pool.len() + j]
    }

    /// Minimum pairwise distance over a set of pool positions.
    pub fn min_distance(&self, positions: &[usize]) -> f64 {
        let mut dmin = f64::INFINITY;
        for (a, &i) in positions.iter().enumerate() {
            for &j in &positions[a + 1..] {
                dmin = dmin.min(self.get(i, j));
            }
        }
        dmin
    }

    /// CSV of the full grid: `row,col,distance` with 1-based permutation
    /// indices as labels, one line per ordered pair (including the diagonal).
    pub fn to_csv(&self) -> String {
        let mut out = String::from("row,col,distance\n");
        for (i, pi) in self.pool.iter().enumerate() {
            for (j, pj) in self.pool.iter().enumerate() {
                out.push_str(&format!(
                    "{},{},{}\n",
                    pi.index(),
                    pj.index(),
                    self.get(i, j)
                ));
            }
        }
        out
    }
}

fn invert_perm(s: &[usize]) -> Vec<usize> {
    let mut inv = vec![0usize; s.len()];
    for (pos, &v) in s.iter().enumerate() {
        inv[v] = pos;
    }
    inv
}

/// Fills the full symmetric distance matrix for a pool of permutations.
///
/// Both metrics collapse to O(N) sums over the second chirp sequence:
/// with `σ = π_j ∘ π_i⁻¹`, `‖A_i - A_j‖_F² = Σ_m |λ_c2[m] - λ_c2[σ(m)]|²`
/// and `tr(A_iᴴ A_j) = Σ_m conj(λ_c2[m])·λ_c2[σ(m)]` (the DFT and first
/// chirp cancel under the trace/Frobenius norm). The sum runs over the
/// lexicographically smaller of `σ` and `σ⁻¹`, so pairs sharing a relative
/// permutation produce bit-identical distances — exact ties stay exact ties
/// for the downstream max-min comparisons.
pub fn pairwise_distances(
    pool: &[PermutationIndex],
    params: &ChirpParams,
    metric: DistanceMetric,
) -> Result<DistanceMatrix> {
    if pool.is_empty() {
        return Err(Error::InvalidDimension("empty permutation pool".into()));
    }
    for (i, p) in pool.iter().enumerate() {
        if p.order() != params.n() {
            return Err(Error::dim(params.n(), p.order(), "pool entry order"));
        }
        if pool[..i].contains(p) {
            return Err(Error::InvalidPermutation(format!("pool entry {p} repeated")));
        }
    }
    let lambda2 = crate::afdm::chirp_vector(params.c2(), params.n())?;
    let perms: Vec<Vec<usize>> = pool.iter().map(|p| p.to_permutation()).collect();
    let inverses: Vec<Vec<usize>> = perms.iter().map(|p| invert_perm(p)).collect();

    let p = pool.len();
    let pairs: Vec<(usize, usize)> = (0..p)
        .flat_map(|i| (i + 1..p).map(move |j| (i, j)))
        .collect();
    let vals: Vec<f64> = pairs
        .par_iter()
        .map(|&(i, j)| {
            let sigma: Vec<usize> = inverses[i].iter().map(|&pos| perms[j][pos]).collect();
            let sigma_inv = invert_perm(&sigma);
            let s = if sigma <= sigma_inv { &sigma } else { &sigma_inv };
            match metric {
                DistanceMetric::Frobenius => s
                    .iter()
                    .enumerate()
                    .map(|(m, &sm)| (lambda2[m] - lambda2[sm]).norm_sqr())
                    .sum::<f64>()
                    .sqrt(),
                DistanceMetric::Angular => {
                    let tr: Complex64 = s
                        .iter()
                        .enumerate()
                        .map(|(m, &sm)| lambda2[m].conj() * lambda2[sm])
                        .sum();
                    let t = tr.norm();
                    if t < 1e-12 {
                        ANGULAR_CEILING
                    } else {
                        1.0 / t
                    }
                }
            }
        })
        .collect();

    let mut d = vec![0.0; p * p];
    for (&(i, j), &v) in pairs.iter().zip(&vals) {
        d[i * p + j] = v;
        d[j * p + i] = v;
    }
    Ok(DistanceMatrix {
        pool: pool.to_vec(),
        metric,
        d,
    })
}

/// Result of the exhaustive max-min search.
#[derive(Debug, Clone, PartialEq)]
pub struct MaxminResult {
    /// Positions into the pool, ascending.
    pub positions: Vec<usize>,
    /// The achieved minimum pairwise distance.
    pub d_min: f64,
}

impl MaxminResult {
    pub fn permutations(&self, distances: &DistanceMatrix) -> Vec<PermutationIndex> {
        self.positions
            .iter()
            .map(|&p| distances.pool()[p])
            .collect()
    }
}

fn binomial(n: u128, k: u128) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc.saturating_mul(n - i) / (i + 1);
    }
    acc
}

/// Iterates `k`-combinations of `0..p` in lexicographic order.
fn next_combination(comb: &mut [usize], p: usize) -> bool {
    let k = comb.len();
    let mut i = k;
    loop {
        if i == 0 {
            return false;
        }
        i -= 1;
        if comb[i] != i + p - k {
            break;
        }
    }
    comb[i] += 1;
    for j in i + 1..k {
        comb[j] = comb[j - 1] + 1;
    }
    true
}

/// Exact max-min dispersion by enumerating all `C(pool, K)` subsets in
/// lexicographic order (ties therefore resolve to the lexicographically
/// smallest index set). This is the oracle the GAS route is validated
/// against.
pub fn exhaustive_maxmin(
    distances: &DistanceMatrix,
    k: usize,
    budget: u128,
) -> Result<MaxminResult> {
    let p = distances.len();
    if k < 2 || k > p {
        return Err(Error::Config(format!(
            "codebook size K = {k} must be in [2, {p}]"
        )));
    }
    let subsets = binomial(p as u128, k as u128);
    if subsets > budget {
        return Err(Error::BudgetExceeded {
            context: "exhaustive max-min search",
            candidates: subsets,
            budget,
            hint: "reduce the pool size or K, or use the GAS solver",
        });
    }

    let mut comb: Vec<usize> = (0..k).collect();
    let mut best: Option<MaxminResult> = None;
    loop {
        // Evaluate the subset's min distance with early abandonment against
        // the incumbent.
        let bound = best.as_ref().map_or(-1.0, |b| b.d_min);
        let mut dmin = f64::INFINITY;
        'eval: for (a, &i) in comb.iter().enumerate() {
            for &j in &comb[a + 1..] {
                let d = distances.get(i, j);
                if d < dmin {
                    dmin = d;
                    if dmin <= bound {
                        break 'eval;
                    }
                }
            }
        }
        if best.as_ref().is_none_or(|b| dmin > b.d_min) {
            best = Some(MaxminResult {
                positions: comb.clone(),
                d_min: dmin,
            });
        }
        if !next_combination(&mut comb, p) {
            return Ok(best.expect("at least one subset"));
        }
    }
}

/// The penalized binary program over pool-membership bits, with distances
/// rescaled so that `d > 1` (the regime in which a large `λ1` makes the
/// argmin coincide with the max-min optimum).
#[derive(Debug, Clone)]
pub struct CodebookDesignProblem {
    distances: DistanceMatrix,
    /// Rescaled off-diagonal distances, row-major.
    rescaled: Vec<f64>,
    pub k: usize,
    pub lambda1: f64,
    pub lambda2: f64,
}

/// Affine rescale target interval for the off-diagonal distances.
const RESCALE_LO: f64 = 1.1;
const RESCALE_HI: f64 = 2.0;

impl CodebookDesignProblem {
    /// `lambda2 = None` selects `10 × max_(i<j) (1/d̃_ij)^λ1`, which dominates
    /// any first-term gain from violating the cardinality constraint.
    pub fn new(
        distances: DistanceMatrix,
        k: usize,
        lambda1: f64,
        lambda2: Option<f64>,
    ) -> Result<Self> {
        if lambda1 < 1.0 {
            return Err(Error::Config(format!(
                "lambda1 must be >= 1, got {lambda1}"
            )));
        }
        let p = distances.len();
        if k < 2 || k > p {
            return Err(Error::Config(format!(
                "codebook size K = {k} must be in [2, {p}]"
            )));
        }
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for i in 0..p {
            for j in 0..p {
                if i != j {
                    let d = distances.get(i, j);
                    lo = lo.min(d);
                    hi = hi.max(d);
                }
            }
        }
        let span = hi - lo;
        let mut rescaled = vec![0.0; p * p];
        for i in 0..p {
            for j in 0..p {
                if i != j {
                    let d = distances.get(i, j);
                    let t = if span > 0.0 { (d - lo) / span } else { 0.0 };
                    rescaled[i * p + j] = RESCALE_LO + t * (RESCALE_HI - RESCALE_LO);
                }
            }
        }
        let max_coeff = rescaled
            .iter()
            .filter(|&&d| d > 0.0)
            .map(|&d| d.recip().powf(lambda1))
            .fold(0.0f64, f64::max);
        let lambda2 = lambda2.unwrap_or(10.0 * max_coeff);
        if lambda2 <= 0.0 {
            return Err(Error::Config(format!(
                "lambda2 must be > 0, got {lambda2}"
            )));
        }
        Ok(CodebookDesignProblem {
            distances,
            rescaled,
            k,
            lambda1,
            lambda2,
        })
    }

    pub fn distances(&self) -> &DistanceMatrix {
        &self.distances
    }

    pub fn rescaled(&self, i: usize, j: usize) -> f64 {
        self.rescaled[i * self.distances.len() + j]
    }
}

/// Expands `Σ_{i<j} b_i b_j (1/d̃_ij)^λ1 + λ2 (Σ_i b_i - K)²` into a
/// multilinear objective over the pool-membership bits.
pub fn build_codebook_objective(problem: &CodebookDesignProblem) -> PolynomialBinaryObjective {
    let p = problem.distances.len();
    let l2 = problem.lambda2;
    let kf = problem.k as f64;
    let mut terms: Vec<(Vec<u32>, f64)> = Vec::with_capacity(p * (p + 1) / 2);
    // Penalty expansion with b² = b:
    // λ2[(1-2K) Σ_i b_i + 2 Σ_{i<j} b_i b_j + K²].
    for i in 0..p {
        terms.push((vec![i as u32], l2 * (1.0 - 2.0 * kf)));
    }
    for i in 0..p {
        for j in i + 1..p {
            let w = problem.rescaled(i, j).recip().powf(problem.lambda1);
            terms.push((vec![i as u32, j as u32], w + 2.0 * l2));
        }
    }
    PolynomialBinaryObjective::new(p, terms, l2 * kf * kf)
        .expect("codebook objective terms are well-formed")
}

/// Pool entries selected by a membership bit vector. The caller is
/// responsible for checking that the cardinality matches the intended `K`
/// (a penalty that was not binding is a reported condition, not an error).
pub fn decode_selection(b: &[Bit], pool: &[PermutationIndex]) -> Vec<PermutationIndex> {
    b.iter()
        .zip(pool)
        .filter(|(&bit, _)| bit == 1)
        .map(|(_, &p)| p)
        .collect()
}

/// All `N!` permutation indices when the order is small, otherwise a seeded
/// uniform sample of `pool_size` distinct indices.
pub fn permutation_pool<R: rand::Rng + ?Sized>(
    order: usize,
    pool_size: usize,
    rng: &mut R,
) -> Result<Vec<PermutationIndex>> {
    let total = crate::afdm::factorial(order).ok_or(Error::OrderTooLarge(order))?;
    if total <= pool_size as u128 {
        return (1..=total)
            .map(|i| PermutationIndex::new(i, order))
            .collect();
    }
    let mut seen = std::collections::HashSet::new();
    let mut pool = Vec::with_capacity(pool_size);
    while pool.len() < pool_size {
        let p = PermutationIndex::random(order, rng)?;
        if seen.insert(p.index()) {
            pool.push(p);
        }
    }
    pool.sort();
    Ok(pool)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::afdm::DaftMatrix;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn full_pool_n4() -> Vec<PermutationIndex> {
        (1..=24)
            .map(|i| PermutationIndex::new(i, 4).unwrap())
            .collect()
    }

    fn n4_distances(metric: DistanceMetric) -> DistanceMatrix {
        let params = ChirpParams::optimal(4, 1, 0).unwrap();
        pairwise_distances(&full_pool_n4(), &params, metric).unwrap()
    }

    /// Independent enumeration over all k-subsets.
    fn for_each_subset(p: usize, k: usize, mut f: impl FnMut(&[usize])) {
        let mut comb: Vec<usize> = (0..k).collect();
        loop {
            f(&comb);
            if !next_combination(&mut comb, p) {
                break;
            }
        }
    }

    #[test]
    fn distances_zero_diagonal_symmetric_positive() {
        for metric in [DistanceMetric::Frobenius, DistanceMetric::Angular] {
            let dm = n4_distances(metric);
            assert_eq!(dm.len(), 24);
            for i in 0..24 {
                assert_eq!(dm.get(i, i), 0.0);
                for j in 0..24 {
                    assert_eq!(dm.get(i, j), dm.get(j, i));
                    if i != j {
                        assert!(dm.get(i, j) > 0.0, "pair ({i},{j}) metric {metric}");
                    }
                }
            }
        }
    }

    #[test]
    fn distances_match_dense_matrix_definition() {
        // Independent route: build the full DAFT matrices and evaluate the
        // defining formulas directly.
        let params = ChirpParams::optimal(4, 1, 0).unwrap();
        let pool = full_pool_n4();
        let mats: Vec<_> = pool
            .iter()
            .map(|&p| DaftMatrix::new(&params, p).unwrap().forward_dense())
            .collect();
        for metric in [DistanceMetric::Frobenius, DistanceMetric::Angular] {
            let dm = pairwise_distances(&pool, &params, metric).unwrap();
            for i in 0..24 {
                for j in i + 1..24 {
                    let want = match metric {
                        DistanceMetric::Frobenius => (&mats[i] - &mats[j]).norm(),
                        DistanceMetric::Angular => {
                            let tr: Complex64 = mats[i]
                                .iter()
                                .zip(mats[j].iter())
                                .map(|(a, b)| a.conj() * b)
                                .sum();
                            1.0 / tr.norm()
                        }
                    };
                    let got = dm.get(i, j);
                    assert!(
                        (got - want).abs() <= 1e-10 * want.max(1.0),
                        "pair ({i},{j}) {metric}: {got} vs {want}"
                    );
                }
            }
        }
    }

    #[test]
    fn equivalent_pairs_have_bit_identical_distances() {
        // Pairs sharing a relative permutation class are exact ties.
        let dm = n4_distances(DistanceMetric::Angular);
        let perms: Vec<Vec<usize>> = full_pool_n4().iter().map(|p| p.to_permutation()).collect();
        let rel = |i: usize, j: usize| -> Vec<usize> {
            let inv = invert_perm(&perms[i]);
            let sigma: Vec<usize> = inv.iter().map(|&pos| perms[j][pos]).collect();
            let sigma_inv = invert_perm(&sigma);
            sigma.clone().min(sigma_inv)
        };
        let mut class_values: std::collections::HashMap<Vec<usize>, f64> =
            std::collections::HashMap::new();
        let mut classes = 0;
        for i in 0..24 {
            for j in i + 1..24 {
                let key = rel(i, j);
                match class_values.entry(key) {
                    std::collections::hash_map::Entry::Vacant(e) => {
                        e.insert(dm.get(i, j));
                        classes += 1;
                    }
                    std::collections::hash_map::Entry::Occupied(e) => {
                        assert_eq!(
                            dm.get(i, j).to_bits(),
                            e.get().to_bits(),
                            "pair ({i},{j}) not an exact tie within its class"
                        );
                    }
                }
            }
        }
        // 276 pairs collapse onto far fewer relative-permutation classes.
        assert!(classes < 24, "expected shared classes, got {classes}");
    }

    #[test]
    fn angular_distance_is_global_phase_invariant() {
        let params = ChirpParams::optimal(4, 1, 0).unwrap();
        let pool = full_pool_n4();
        let a = DaftMatrix::new(&params, pool[0]).unwrap().forward_dense();
        let b = DaftMatrix::new(&params, pool[7]).unwrap().forward_dense();
        let tr = |x: &crate::linalg::CMatrix, y: &crate::linalg::CMatrix| -> f64 {
            x.iter()
                .zip(y.iter())
                .map(|(p, q)| p.conj() * q)
                .sum::<Complex64>()
                .norm()
        };
        let phase = Complex64::cis(0.7321);
        let rotated = b.map(|v| v * phase);
        assert!((tr(&a, &b) - tr(&a, &rotated)).abs() < 1e-12);
    }

    #[test]
    fn maxmin_k2_is_argmax_pair() {
        let dm = n4_distances(DistanceMetric::Angular);
        let res = exhaustive_maxmin(&dm, 2, MAXMIN_DEFAULT_BUDGET).unwrap();
        let mut best = f64::NEG_INFINITY;
        for i in 0..24 {
            for j in i + 1..24 {
                best = best.max(dm.get(i, j));
            }
        }
        assert_eq!(res.d_min, best);
        assert_eq!(res.positions.len(), 2);
    }

    #[test]
    fn maxmin_full_pool_is_global_min_offdiag() {
        let dm = n4_distances(DistanceMetric::Frobenius);
        let res = exhaustive_maxmin(&dm, 24, MAXMIN_DEFAULT_BUDGET).unwrap();
        let mut worst = f64::INFINITY;
        for i in 0..24 {
            for j in i + 1..24 {
                worst = worst.min(dm.get(i, j));
            }
        }
        assert_eq!(res.d_min, worst);
    }

    #[test]
    fn maxmin_dominates_every_subset() {
        for metric in [DistanceMetric::Frobenius, DistanceMetric::Angular] {
            let dm = n4_distances(metric);
            for k in [2usize, 3] {
                let res = exhaustive_maxmin(&dm, k, MAXMIN_DEFAULT_BUDGET).unwrap();
                for_each_subset(24, k, |comb| {
                    assert!(dm.min_distance(comb) <= res.d_min);
                });
            }
        }
    }

    #[test]
    fn maxmin_budget_refusal() {
        let dm = n4_distances(DistanceMetric::Frobenius);
        match exhaustive_maxmin(&dm, 12, 1000) {
            Err(Error::BudgetExceeded { .. }) => {}
            other => panic!("expected budget refusal, got {other:?}"),
        }
    }

    #[test]
    fn objective_empty_selection_is_penalty_only() {
        let dm = n4_distances(DistanceMetric::Angular);
        let problem = CodebookDesignProblem::new(dm, 2, 20.0, None).unwrap();
        let l2 = problem.lambda2;
        let obj = build_codebook_objective(&problem);
        let b = vec![0u8; 24];
        assert!((obj.evaluate(&b).unwrap() - l2 * 4.0).abs() < 1e-12);
    }

    #[test]
    fn objective_evaluate_matches_direct_formula() {
        let dm = n4_distances(DistanceMetric::Frobenius);
        let problem = CodebookDesignProblem::new(dm, 2, 12.0, None).unwrap();
        let obj = build_codebook_objective(&problem);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..200 {
            let b: Vec<u8> = (0..24).map(|_| rng.random_range(0..=1u8)).collect();
            let mut direct = 0.0;
            for i in 0..24 {
                for j in i + 1..24 {
                    if b[i] == 1 && b[j] == 1 {
                        direct += problem.rescaled(i, j).recip().powf(problem.lambda1);
                    }
                }
            }
            let ones = b.iter().filter(|&&x| x == 1).count() as f64;
            direct += problem.lambda2 * (ones - 2.0).powi(2);
            let got = obj.evaluate(&b).unwrap();
            assert!(
                (got - direct).abs() <= 1e-12 * direct.abs().max(1.0),
                "{got} vs {direct}"
            );
        }
    }

    #[test]
    fn objective_exhaustive_on_small_pool() {
        // Full 2^8 sweep of the IR against the defining formula on an
        // 8-entry pool.
        let params = ChirpParams::optimal(4, 1, 0).unwrap();
        let pool: Vec<PermutationIndex> = (1..=8)
            .map(|i| PermutationIndex::new(i * 3 - 2, 4).unwrap())
            .collect();
        let dm = pairwise_distances(&pool, &params, DistanceMetric::Angular).unwrap();
        let problem = CodebookDesignProblem::new(dm, 3, 15.0, None).unwrap();
        let obj = build_codebook_objective(&problem);
        for v in 0u32..256 {
            let b: Vec<u8> = (0..8).map(|i| ((v >> i) & 1) as u8).collect();
            let mut direct = 0.0;
            for i in 0..8 {
                for j in i + 1..8 {
                    if b[i] == 1 && b[j] == 1 {
                        direct += problem.rescaled(i, j).recip().powf(problem.lambda1);
                    }
                }
            }
            let ones = b.iter().filter(|&&x| x == 1).count() as f64;
            direct += problem.lambda2 * (ones - 3.0).powi(2);
            let got = obj.evaluate(&b).unwrap();
            assert!(
                (got - direct).abs() <= 1e-12 * direct.abs().max(1.0),
                "assignment {v:#010b}: {got} vs {direct}"
            );
        }
    }

    #[test]
    fn objective_two_hot_minimum_matches_maxmin_pair() {
        for lambda1 in [10.0, 40.0] {
            let dm = n4_distances(DistanceMetric::Angular);
            let oracle = exhaustive_maxmin(&dm, 2, MAXMIN_DEFAULT_BUDGET).unwrap();
            let problem = CodebookDesignProblem::new(dm, 2, lambda1, None).unwrap();
            let obj = build_codebook_objective(&problem);
            let mut best_val = f64::INFINITY;
            let mut best_pair = (0usize, 0usize);
            for i in 0..24 {
                for j in i + 1..24 {
                    let mut b = vec![0u8; 24];
                    b[i] = 1;
                    b[j] = 1;
                    let v = obj.evaluate(&b).unwrap();
                    if v < best_val {
                        best_val = v;
                        best_pair = (i, j);
                    }
                }
            }
            let pair_dmin = problem
                .distances()
                .min_distance(&[best_pair.0, best_pair.1]);
            assert_eq!(
                pair_dmin, oracle.d_min,
                "lambda1 = {lambda1}: argmin pair must achieve the max-min distance"
            );
        }
    }

    #[test]
    fn objective_order_consistency_with_large_lambda1() {
        // With λ1 above the two-level bound, the K-hot argmin attains the
        // maximal d_min (checked by full enumeration at K = 3).
        let dm = n4_distances(DistanceMetric::Angular);
        let k = 3usize;
        let oracle = exhaustive_maxmin(&dm, k, MAXMIN_DEFAULT_BUDGET).unwrap();

        // Distinct candidate d_min values in rescaled space give the bound
        // λ1* = ln C(K,2) / ln(v1/v2).
        let probe = CodebookDesignProblem::new(dm.clone(), k, 1.0, None).unwrap();
        let mut dmins: Vec<f64> = Vec::new();
        for_each_subset(24, k, |comb| {
            let mut dmin = f64::INFINITY;
            for (a, &i) in comb.iter().enumerate() {
                for &j in &comb[a + 1..] {
                    dmin = dmin.min(probe.rescaled(i, j));
                }
            }
            dmins.push(dmin);
        });
        dmins.sort_by(f64::total_cmp);
        dmins.dedup();
        let v1 = dmins[dmins.len() - 1];
        let v2 = dmins[dmins.len() - 2];
        assert!(v1 > v2);
        let lambda1_star = (3.0f64).ln() / (v1 / v2).ln();
        let lambda1 = (1.5 * lambda1_star).max(20.0);

        let problem = CodebookDesignProblem::new(dm, k, lambda1, None).unwrap();
        let obj = build_codebook_objective(&problem);
        let mut best_val = f64::INFINITY;
        let mut best_set: Vec<usize> = Vec::new();
        for_each_subset(24, k, |comb| {
            let mut b = vec![0u8; 24];
            for &i in comb {
                b[i] = 1;
            }
            let v = obj.evaluate(&b).unwrap();
            if v < best_val {
                best_val = v;
                best_set = comb.to_vec();
            }
        });
        assert_eq!(
            problem.distances().min_distance(&best_set),
            oracle.d_min,
            "argmin of the penalized objective attains the max-min distance"
        );
    }

    #[test]
    fn rescaling_preserves_maxmin_argmax() {
        let dm = n4_distances(DistanceMetric::Angular);
        let oracle = exhaustive_maxmin(&dm, 2, MAXMIN_DEFAULT_BUDGET).unwrap();
        let problem = CodebookDesignProblem::new(dm, 2, 20.0, None).unwrap();
        // Max-min over rescaled distances picks positions with the same raw
        // min distance.
        let mut best = f64::NEG_INFINITY;
        let mut arg = (0usize, 0usize);
        for i in 0..24 {
            for j in i + 1..24 {
                let d = problem.rescaled(i, j);
                if d > best {
                    best = d;
                    arg = (i, j);
                }
            }
        }
        assert_eq!(
            problem.distances().min_distance(&[arg.0, arg.1]),
            oracle.d_min
        );
        // All rescaled off-diagonal distances exceed 1.
        for i in 0..24 {
            for j in 0..24 {
                if i != j {
                    assert!(problem.rescaled(i, j) > 1.0);
                }
            }
        }
    }

    #[test]
    fn decode_selection_cases() {
        let pool = full_pool_n4();
        let mut b = vec![0u8; 24];
        assert!(decode_selection(&b, &pool).is_empty());
        b[5] = 1;
        assert_eq!(decode_selection(&b, &pool), vec![pool[5]]);
        b[17] = 1;
        assert_eq!(decode_selection(&b, &pool).len(), 2);
    }

    #[test]
    fn pool_full_when_small_sampled_when_large() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let pool = permutation_pool(4, 256, &mut rng).unwrap();
        assert_eq!(pool.len(), 24);
        let pool = permutation_pool(8, 64, &mut rng).unwrap();
        assert_eq!(pool.len(), 64);
        let mut dedup = pool.clone();
        dedup.dedup();
        assert_eq!(dedup.len(), 64);
        // Deterministic under the same seed.
        let a = permutation_pool(8, 64, &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
        let b = permutation_pool(8, 64, &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
        assert_eq!(a, b);
    }
}
