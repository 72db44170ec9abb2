//! Central-cut ellipsoid method for finding a core point when the costs are
//! hidden behind a verification oracle.
//!
//! A violated constraint label identifies its normal `±1_S` but not its
//! right-hand side, which is exactly what a central cut needs. The core lies
//! in the hyperplane `Σ x = c(A)`, so the ellipsoid center itself is almost
//! never a core point. Each iteration therefore also proposes a rounded
//! point: the center projected onto the face fixed by the directions along
//! which the ellipsoid has become thin, with the fixed values recovered by
//! continued-fraction rounding.
//!
//! The shape matrix is kept in binary fixed point; trials are exact rationals.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::core_game::{separation_from_feedback, Allocation, CoreConstraint, MAX_AGENTS};
use crate::error::{Error, Result};
use crate::fixed::{log2_big, round_div, Fixed};
use crate::rational::best_approximation;
use crate::trial::{run_solver, OracleBudget, Run, Step, TrialSolver, VerificationOracle};

/// Bits of headroom kept below the thinnest direction of the ellipsoid.
const PRECISION_MARGIN: f64 = 96.0;
/// How far below the certified per-direction variance the geometric mean
/// may fall before giving up without the certificate.
const VOLUME_BACKSTOP_BITS: f64 = 64.0;

#[derive(Clone, Debug, Default)]
pub struct EllipsoidOptions {
    /// Side of the search box `[0, R]^n`; defaults to `2^N`.
    pub box_scale: Option<BigInt>,
    /// Denominator bound for rounding; defaults to `max((nN)^n, 2^N)`.
    pub denominator_bound: Option<BigInt>,
    /// Fixed-point fraction bits; defaults to a value derived from the bounds.
    pub precision_bits: Option<u32>,
}

/// Returned when the ellipsoid became too thin to hide a core point with
/// bounded denominators.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DegenerateOrEmpty {
    pub iterations: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Pending {
    Rounded,
    Center,
}

#[derive(Clone, Debug)]
pub struct EllipsoidSolver {
    n: usize,
    fixed: Fixed,
    box_scale: BigInt,
    denominator_bound: BigInt,
    /// `1 / (4 D^4)` in fixed point: once every coordinate and the total have
    /// variance below this, a bounded-denominator core point would have been
    /// recovered by rounding.
    stop_variance: BigInt,
    center: Vec<BigInt>,
    /// `center` as exact rationals.
    center_exact: Allocation,
    shape: Vec<Vec<BigInt>>,
    iterations: u64,
    log_det: Vec<f64>,
    pending: Option<Pending>,
    last_rounded: Option<Allocation>,
    rounded_this_iteration: bool,
    /// Unit vectors, the all-ones vector and every reported constraint normal.
    directions: Vec<Vec<i32>>,
}

impl EllipsoidSolver {
    pub fn new(n: usize, encoding_bits: u32) -> Result<Self> {
        EllipsoidSolver::with_options(n, encoding_bits, EllipsoidOptions::default())
    }

    pub fn with_options(n: usize, encoding_bits: u32, options: EllipsoidOptions) -> Result<Self> {
        if n == 0 || n > MAX_AGENTS {
            return Err(Error::Capacity {
                what: "ellipsoid solver",
                size: n,
                cap: MAX_AGENTS,
            });
        }
        if encoding_bits == 0 {
            return Err(Error::invalid("encoding length must be positive"));
        }
        let box_scale = options
            .box_scale
            .unwrap_or_else(|| BigInt::one() << encoding_bits);
        if !box_scale.is_positive() {
            return Err(Error::invalid("box scale must be positive"));
        }
        let denominator_bound = options.denominator_bound.unwrap_or_else(|| {
            num_traits::pow(BigInt::from(n as u64 * encoding_bits as u64), n)
                .max(BigInt::one() << encoding_bits)
        });
        if denominator_bound < BigInt::one() {
            return Err(Error::invalid("denominator bound must be positive"));
        }
        let d_bits = denominator_bound.bits() as u32;
        let r_bits = box_scale.bits() as u32;
        let bits = options
            .precision_bits
            .unwrap_or(8 * d_bits + 2 * r_bits + 128);
        let fixed = Fixed::new(bits);

        // Ball around the box: center R/2 · 1, radius R√n / 2.
        let half = fixed.from_rational(&BigRational::new(box_scale.clone(), 2.into()));
        let radius_sq = fixed.from_rational(&BigRational::new(
            &box_scale * &box_scale * BigInt::from(n),
            4.into(),
        ));
        let shape = (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| {
                        if i == j {
                            radius_sq.clone()
                        } else {
                            BigInt::zero()
                        }
                    })
                    .collect()
            })
            .collect();
        let d4 = num_traits::pow(denominator_bound.clone(), 4);
        let stop_variance = round_div(&fixed.one(), &(d4 * 4));
        let mut solver = EllipsoidSolver {
            n,
            fixed,
            box_scale,
            denominator_bound,
            stop_variance,
            center: vec![half; n],
            center_exact: Vec::new(),
            shape,
            iterations: 0,
            log_det: Vec::new(),
            pending: None,
            last_rounded: None,
            rounded_this_iteration: false,
            directions: Vec::new(),
        };
        solver.refresh_center();
        for i in 0..n {
            let mut unit = vec![0; n];
            unit[i] = 1;
            solver.note_direction(&unit);
        }
        solver.note_direction(&vec![1; n]);
        let (log_det, _) = solver.check_positive_definite()?;
        solver.log_det.push(log_det);
        Ok(solver)
    }

    pub fn iterations(&self) -> u64 {
        self.iterations
    }

    /// `log2 det` of the shape matrix after each cut, starting with the initial ball.
    pub fn log_det_history(&self) -> &[f64] {
        &self.log_det
    }

    pub fn denominator_bound(&self) -> &BigInt {
        &self.denominator_bound
    }

    pub fn precision_bits(&self) -> u32 {
        self.fixed.bits()
    }

    pub fn center(&self) -> Allocation {
        self.center_exact.clone()
    }

    fn refresh_center(&mut self) {
        self.center_exact = self
            .center
            .iter()
            .map(|c| self.fixed.to_rational(c))
            .collect();
    }

    /// Leading principal minors must all be positive. Returns `log2 det` and
    /// the smallest `log2` pivot of the LDLᵀ factorization.
    fn check_positive_definite(&self) -> Result<(f64, f64)> {
        let n = self.n;
        let bits = self.fixed.bits() as f64;
        // Fraction-free elimination: pivot k equals the k-th leading minor
        // (scaled by 2^(bits·k)).
        let mut m = self.shape.clone();
        let mut prev = BigInt::one();
        let mut min_pivot = f64::INFINITY;
        for k in 0..n {
            if !m[k][k].is_positive() {
                return Err(Error::Numerical(format!(
                    "shape matrix lost positive definiteness at iteration {} (minor {})",
                    self.iterations,
                    k + 1
                )));
            }
            for i in k + 1..n {
                for j in k + 1..n {
                    m[i][j] = (&m[i][j] * &m[k][k] - &m[i][k] * &m[k][j]) / &prev;
                }
            }
            let pivot = log2_big(&m[k][k]) - if k == 0 { 0.0 } else { log2_big(&prev) } - bits;
            min_pivot = min_pivot.min(pivot);
            prev = m[k][k].clone();
        }
        Ok((log2_big(&prev) - bits * n as f64, min_pivot))
    }

    /// Adds fraction bits once the thinnest direction comes within
    /// `PRECISION_MARGIN` bits of the resolution.
    fn maintain_precision(&mut self, min_pivot: f64) {
        let bits = self.fixed.bits();
        if min_pivot > PRECISION_MARGIN - bits as f64 {
            return;
        }
        let extra = bits / 2;
        self.fixed = Fixed::new(bits + extra);
        for c in &mut self.center {
            *c <<= extra;
        }
        for entry in self.shape.iter_mut().flatten() {
            *entry <<= extra;
        }
        self.stop_variance <<= extra;
    }

    /// Backstop for ellipsoids that stay wide in some direction: the volume
    /// is far below that of a ball at the rounding threshold.
    fn volume_exhausted(&self) -> bool {
        let per_direction = self.fixed.log2(&self.stop_variance) - VOLUME_BACKSTOP_BITS;
        *self.log_det.last().expect("initial entry") < per_direction * self.n as f64
    }

    /// Cut with `normal · x ≤ normal · center`.
    fn cut(&mut self, normal: &[i32]) -> Result<()> {
        let n = self.n;
        let f = self.fixed;
        let a_a: Vec<BigInt> = (0..n)
            .map(|i| {
                (0..n)
                    .filter(|&j| normal[j] != 0)
                    .map(|j| &self.shape[i][j] * normal[j])
                    .sum()
            })
            .collect();
        let a_a_a: BigInt = (0..n).map(|i| &a_a[i] * normal[i]).sum();
        if !a_a_a.is_positive() {
            return Err(Error::Numerical(format!(
                "degenerate cut direction at iteration {}",
                self.iterations
            )));
        }
        let root = f.sqrt(&a_a_a);
        let nn = BigInt::from(n as u64);
        for i in 0..n {
            let step = f.div(&a_a[i], &(&root * (&nn + 1u32)));
            self.center[i] -= step;
        }
        self.refresh_center();
        if n == 1 {
            self.shape[0][0] = round_div(&self.shape[0][0], &4.into());
        } else {
            // A' = n²/(n²−1) · (A − 2/(n+1) · (Aa)(Aa)ᵀ / aᵀAa)
            let n2 = &nn * &nn;
            let denom = (&n2 - 1u32) * (&nn + 1u32);
            for i in 0..n {
                for j in i..n {
                    let outer = round_div(&(&a_a[i] * &a_a[j]), &a_a_a);
                    let numer = (&self.shape[i][j] * (&nn + 1u32) - outer * 2) * &n2;
                    let value = round_div(&numer, &denom);
                    self.shape[i][j] = value.clone();
                    self.shape[j][i] = value;
                }
            }
        }
        self.iterations += 1;
        let (log_det, min_pivot) = self.check_positive_definite()?;
        let previous = *self.log_det.last().expect("initial entry");
        if log_det >= previous {
            return Err(Error::Numerical(format!(
                "ellipsoid volume did not shrink at iteration {}",
                self.iterations
            )));
        }
        self.log_det.push(log_det);
        self.maintain_precision(min_pivot);
        Ok(())
    }

    /// A box face the center lies beyond, as a cut normal.
    fn box_violation(&self) -> Option<Vec<i32>> {
        let upper = self.fixed.from_int(&self.box_scale);
        (0..self.n).find_map(|i| {
            let sign = if self.center[i].is_negative() {
                -1
            } else if self.center[i] > upper {
                1
            } else {
                return None;
            };
            let mut normal = vec![0; self.n];
            normal[i] = sign;
            Some(normal)
        })
    }

    fn thin_enough(&self) -> bool {
        let n = self.n;
        let total: BigInt = self.shape.iter().flatten().sum();
        total < self.stop_variance && (0..n).all(|i| self.shape[i][i] < self.stop_variance)
    }

    /// `vᵀ A v`: the squared half-width of the ellipsoid along `v`.
    fn width_sq(&self, v: &[i32]) -> BigInt {
        let n = self.n;
        let mut total = BigInt::zero();
        for i in (0..n).filter(|&i| v[i] != 0) {
            for j in (0..n).filter(|&j| v[j] != 0) {
                if v[i] == v[j] {
                    total += &self.shape[i][j];
                } else {
                    total -= &self.shape[i][j];
                }
            }
        }
        total
    }

    /// Projects the center onto the face where every sufficiently thin known
    /// direction `v` takes the bounded-denominator value nearest `v · center`.
    ///
    /// Along a direction thinner than `1 / (2D²)`, all core points with
    /// denominators at most `D` agree, so the rounded value is exact. With all
    /// coordinates thin this is coordinate-wise rounding.
    fn rounded_center(&self) -> Option<Allocation> {
        let n = self.n;
        let mut thin: Vec<(BigInt, &Vec<i32>)> = self
            .directions
            .iter()
            .map(|v| (self.width_sq(v), v))
            .filter(|(w, _)| *w < self.stop_variance)
            .collect();
        thin.sort();
        let mut echelon: Vec<(usize, Vec<BigRational>)> = Vec::new();
        let mut chosen: Vec<&Vec<i32>> = Vec::new();
        for (_, v) in thin {
            let mut row: Vec<BigRational> = v
                .iter()
                .map(|&x| BigRational::from_integer(x.into()))
                .collect();
            for (pivot, basis) in &echelon {
                if !row[*pivot].is_zero() {
                    let factor = &row[*pivot] / &basis[*pivot];
                    for (r, b) in row.iter_mut().zip(basis) {
                        *r -= &factor * b;
                    }
                }
            }
            if let Some(pivot) = row.iter().position(|x| !x.is_zero()) {
                echelon.push((pivot, row));
                chosen.push(v);
                if chosen.len() == n {
                    break;
                }
            }
        }
        if chosen.is_empty() {
            return None;
        }
        let center = self.center_exact.clone();
        let k = chosen.len();
        // Solve (V Vᵀ) y = β − V c, then x = c + Vᵀ y.
        let mut system: Vec<Vec<BigRational>> = (0..k)
            .map(|a| {
                let mut row: Vec<BigRational> = (0..k)
                    .map(|b| {
                        let g: i32 = chosen[a].iter().zip(chosen[b]).map(|(x, y)| x * y).sum();
                        BigRational::from_integer(g.into())
                    })
                    .collect();
                let value = self.center_dot(chosen[a]);
                row.push(best_approximation(&value, &self.denominator_bound) - value);
                row
            })
            .collect();
        for col in 0..k {
            let pivot = (col..k).find(|&r| !system[r][col].is_zero())?;
            system.swap(col, pivot);
            let lead = system[col][col].clone();
            for entry in system[col].iter_mut() {
                *entry /= &lead;
            }
            let pivot_row = system[col].clone();
            for (r, row) in system.iter_mut().enumerate() {
                if r != col && !row[col].is_zero() {
                    let factor = row[col].clone();
                    for (entry, p) in row.iter_mut().zip(&pivot_row) {
                        *entry -= &factor * p;
                    }
                }
            }
        }
        let mut point = center;
        for (a, v) in chosen.iter().enumerate() {
            let y = &system[a][k];
            for (x, &vi) in point.iter_mut().zip(v.iter()) {
                if vi != 0 {
                    *x += y * BigRational::from_integer(vi.into());
                }
            }
        }
        Some(point)
    }

    fn center_dot(&self, v: &[i32]) -> BigRational {
        let scaled: BigInt = v
            .iter()
            .zip(&self.center)
            .filter(|(&a, _)| a != 0)
            .map(|(&a, c)| if a > 0 { c.clone() } else { -c })
            .sum();
        self.fixed.to_rational(&scaled)
    }

    fn note_direction(&mut self, normal: &[i32]) {
        let mut v = normal.to_vec();
        if v.iter().find(|&&x| x != 0).is_some_and(|&x| x < 0) {
            v.iter_mut().for_each(|x| *x = -*x);
        }
        if !self.directions.contains(&v) {
            self.directions.push(v);
        }
    }

    fn in_box(&self, point: &[BigRational]) -> bool {
        let upper = BigRational::from_integer(self.box_scale.clone());
        point.iter().all(|c| !c.is_negative() && *c <= upper)
    }
}

impl TrialSolver for EllipsoidSolver {
    type Trial = Allocation;
    type Label = CoreConstraint;
    type Verdict = DegenerateOrEmpty;

    fn next_step(&mut self) -> Result<Step<Allocation, DegenerateOrEmpty>> {
        loop {
            if let Some(normal) = self.box_violation() {
                self.cut(&normal)?;
                self.rounded_this_iteration = false;
                continue;
            }
            if !self.rounded_this_iteration {
                self.rounded_this_iteration = true;
                let rounded = self.rounded_center();
                let fresh = rounded.is_some() && self.last_rounded != rounded;
                if let Some(rounded) =
                    rounded.filter(|r| fresh && self.in_box(r) && *r != self.center_exact)
                {
                    self.last_rounded = Some(rounded.clone());
                    self.pending = Some(Pending::Rounded);
                    return Ok(Step::Propose(rounded));
                }
            }
            if self.thin_enough() || self.volume_exhausted() {
                return Ok(Step::Conclude(DegenerateOrEmpty {
                    iterations: self.iterations,
                }));
            }
            self.pending = Some(Pending::Center);
            return Ok(Step::Propose(self.center_exact.clone()));
        }
    }

    fn observe(&mut self, trial: &Allocation, label: &CoreConstraint) -> Result<()> {
        let normal = separation_from_feedback(label, self.n);
        self.note_direction(&normal);
        match self.pending.take() {
            Some(Pending::Center) => {
                self.cut(&normal)?;
                self.rounded_this_iteration = false;
            }
            Some(Pending::Rounded) => {
                // The cut through the rounded point is valid; it is at least as
                // deep as a central cut when the center lies on its far side.
                if signed_sum(&normal, trial) <= self.center_dot(&normal) {
                    self.cut(&normal)?;
                    self.rounded_this_iteration = false;
                }
            }
            None => return Err(Error::Protocol("feedback without a pending trial".into())),
        }
        Ok(())
    }
}

/// `v · x` for a `0/±1` vector, reduced once at the end.
fn signed_sum(v: &[i32], x: &[BigRational]) -> BigRational {
    let (mut numer, mut denom) = (BigInt::zero(), BigInt::one());
    for (&a, value) in v.iter().zip(x) {
        if a == 0 {
            continue;
        }
        let term = value.numer() * &denom;
        numer = numer * value.denom() + if a > 0 { term } else { -term };
        denom *= value.denom();
    }
    BigRational::new(numer, denom)
}

pub fn solve_core<O>(
    oracle: &mut O,
    n: usize,
    encoding_bits: u32,
    budget: OracleBudget,
) -> Result<Run<Allocation, CoreConstraint, DegenerateOrEmpty>>
where
    O: VerificationOracle<Trial = Allocation, Label = CoreConstraint> + ?Sized,
{
    run_solver(&mut EllipsoidSolver::new(n, encoding_bits)?, oracle, budget)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::core_game::{explicit_core_lp, CoreLp, CoreOracle, CostGame};
    use crate::trial::Outcome;

    fn q(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    fn solve(game: &CostGame) -> Run<Allocation, CoreConstraint, DegenerateOrEmpty> {
        let mut oracle = CoreOracle::new(game.clone());
        solve_core(
            &mut oracle,
            game.len(),
            game.encoding_bits(),
            OracleBudget::unlimited(),
        )
        .unwrap()
    }

    #[test]
    fn additive_game_recovers_the_point() {
        let game = CostGame::new(2, 4, vec![q(0, 1), q(3, 2), q(5, 2), q(4, 1)]).unwrap();
        let run = solve(&game);
        assert_eq!(run.outcome.solution(), Some(&vec![q(3, 2), q(5, 2)]));
    }

    #[test]
    fn single_agent() {
        let game = CostGame::additive(&[q(7, 3)]).unwrap();
        let run = solve(&game);
        assert_eq!(run.outcome.solution(), Some(&vec![q(7, 3)]));
    }

    #[test]
    fn interior_core() {
        let game = CostGame::from_fn(3, |s| match s.count_ones() {
            3 => q(4, 1),
            k => q(2 * k as i64, 1),
        })
        .unwrap();
        let run = solve(&game);
        let Outcome::Solved(x) = &run.outcome else {
            panic!("{:?}", run.outcome.kind())
        };
        assert!(game.in_core(x));
    }

    #[test]
    fn empty_core_is_reported() {
        let game = CostGame::from_fn(3, |s| match s.count_ones() {
            0 => q(0, 1),
            3 => q(8, 5),
            _ => q(1, 1),
        })
        .unwrap();
        assert_eq!(explicit_core_lp(&game).unwrap(), CoreLp::Empty);
        let run = solve(&game);
        assert!(matches!(run.outcome, Outcome::Unsatisfiable(_)));
    }

    #[test]
    fn volume_shrinks_at_the_standard_rate() {
        let game = CostGame::from_fn(3, |s| match s.count_ones() {
            0 => q(0, 1),
            3 => q(8, 5),
            _ => q(1, 1),
        })
        .unwrap();
        let mut solver = EllipsoidSolver::new(3, game.encoding_bits()).unwrap();
        let mut oracle = CoreOracle::new(game);
        run_solver(&mut solver, &mut oracle, OracleBudget::trials(200)).unwrap();
        let n = 3.0f64;
        let bound = -1.0 / (2.0 * (n + 1.0)) / std::f64::consts::LN_2 * 2.0;
        for w in solver.log_det_history().windows(2) {
            assert!(w[1] - w[0] <= bound + 1e-9, "{} -> {}", w[0], w[1]);
        }
    }
}
