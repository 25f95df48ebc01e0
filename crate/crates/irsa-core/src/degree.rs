//! Degree distributions Λ and per-user degree vectors.
//!
//! A user's degree is how many replicas of its packet it transmits in a
//! frame. The distribution is held as exact rationals so that probability
//! products and the final loss-rate sums stay exact all the way to rendering.

use num_bigint::BigUint;
use num_traits::{One, Zero};

use crate::combin::factorial;
use crate::rational::{parse_rational, Rat};
use crate::{Error, Result};

/// Degree distribution Λ(x) = Σ_d Λ_d x^d with exact rational coefficients.
#[derive(Clone, Debug, PartialEq)]
pub struct DegreeDistribution {
    /// (degree, probability), sorted by degree, duplicates rejected.
    probs: Vec<(u32, Rat)>,
    d_max: u32,
}

impl DegreeDistribution {
    pub fn from_pairs(pairs: Vec<(u32, Rat)>) -> Result<Self> {
        if pairs.is_empty() {
            return Err(Error::Config("degree distribution has no entries".into()));
        }
        let mut probs = pairs;
        probs.sort_by_key(|&(d, _)| d);
        for window in probs.windows(2) {
            if window[0].0 == window[1].0 {
                return Err(Error::Config(format!("degree {} listed twice", window[0].0)));
            }
        }
        let mut sum = Rat::zero();
        for (d, p) in &probs {
            if *d == 0 {
                return Err(Error::Config("degree 0 is not allowed (every user transmits)".into()));
            }
            if p < &Rat::zero() {
                return Err(Error::Config(format!("negative probability for degree {d}")));
            }
            sum += p;
        }
        if sum != Rat::one() {
            return Err(Error::Config(format!(
                "degree probabilities sum to {sum}, expected exactly 1"
            )));
        }
        let d_max = probs.last().expect("nonempty").0;
        Ok(DegreeDistribution { probs, d_max })
    }

    /// Parse `"2:0.25,3:3/4"` — comma-separated `degree:probability` pairs
    /// where each probability accepts decimal, fraction, or scientific form.
    pub fn parse(s: &str) -> Result<Self> {
        let mut pairs = Vec::new();
        for item in s.split(',') {
            let (d, p) = item
                .split_once(':')
                .ok_or_else(|| Error::Config(format!("expected degree:probability, got `{item}`")))?;
            let degree: u32 = d
                .trim()
                .parse()
                .map_err(|_| Error::Config(format!("bad degree `{d}`")))?;
            pairs.push((degree, parse_rational(p)?));
        }
        Self::from_pairs(pairs)
    }

    /// Largest listed degree.
    pub fn d_max(&self) -> u32 {
        self.d_max
    }

    /// Λ_d; zero for degrees that were never listed.
    pub fn prob(&self, d: u32) -> Rat {
        self.probs
            .iter()
            .find(|&&(deg, _)| deg == d)
            .map(|(_, p)| p.clone())
            .unwrap_or_else(Rat::zero)
    }

    /// Degrees with Λ_d > 0, ascending.
    pub fn support(&self) -> Vec<u32> {
        self.probs
            .iter()
            .filter(|(_, p)| p > &Rat::zero())
            .map(|&(d, _)| d)
            .collect()
    }

    /// Check this distribution against a frame: no user may pick more
    /// distinct slots than the frame has.
    pub fn validate_for_slots(&self, t: u32) -> Result<()> {
        if self.d_max > t {
            return Err(Error::Config(format!(
                "maximum degree {} exceeds the {} available slots",
                self.d_max, t
            )));
        }
        Ok(())
    }

    /// Λ(y) in floats, for the asymptotic recursion.
    pub fn lambda_f64(&self, y: f64) -> f64 {
        self.probs
            .iter()
            .map(|(d, p)| crate::rational::to_f64(p) * y.powi(*d as i32))
            .sum()
    }

    /// Λ'(y) in floats.
    pub fn lambda_prime_f64(&self, y: f64) -> f64 {
        self.probs
            .iter()
            .map(|(d, p)| f64::from(*d) * crate::rational::to_f64(p) * y.powi(*d as i32 - 1))
            .sum()
    }
}

/// The degrees chosen by the k users of one frame.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct DegreeVector(Vec<u32>);

impl DegreeVector {
    pub fn new(degrees: Vec<u32>) -> Result<Self> {
        if degrees.is_empty() {
            return Err(Error::Config("degree vector is empty".into()));
        }
        if degrees.iter().any(|&d| d == 0) {
            return Err(Error::Config("degree vector entries must be at least 1".into()));
        }
        Ok(DegreeVector(degrees))
    }

    pub fn k(&self) -> u32 {
        self.0.len() as u32
    }

    pub fn degrees(&self) -> &[u32] {
        &self.0
    }

    /// Total replica count S = Σ d_i.
    pub fn total_replicas(&self) -> u64 {
        self.0.iter().map(|&d| u64::from(d)).sum()
    }
}

/// P_Λ(d) = Π Λ_{d_i}: the users draw their degrees independently.
pub fn degree_vector_probability(dist: &DegreeDistribution, d: &DegreeVector) -> Rat {
    d.degrees().iter().map(|&di| dist.prob(di)).product()
}

/// Every degree vector over the supported degrees (Λ_d > 0), with its
/// probability. Yields exactly D^k vectors whose probabilities sum to 1.
pub fn enumerate_degree_vectors(
    dist: &DegreeDistribution,
    k: u32,
) -> impl Iterator<Item = (DegreeVector, Rat)> + '_ {
    let support = dist.support();
    let k = k as usize;
    let mut odometer = vec![0usize; k];
    let mut done = support.is_empty() || k == 0;
    std::iter::from_fn(move || {
        if done {
            return None;
        }
        let degrees: Vec<u32> = odometer.iter().map(|&i| support[i]).collect();
        let vector = DegreeVector(degrees);
        let prob = degree_vector_probability(dist, &vector);
        // Advance the mixed-radix counter.
        let mut pos = k;
        loop {
            if pos == 0 {
                done = true;
                break;
            }
            pos -= 1;
            odometer[pos] += 1;
            if odometer[pos] < support.len() {
                break;
            }
            odometer[pos] = 0;
        }
        Some((vector, prob))
    })
}

/// One equivalence class of degree vectors under permutation: the residual
/// distribution only depends on the multiset of degrees, so the engine
/// evaluates each sorted representative once and weights it by the number of
/// orderings.
#[derive(Clone, Debug)]
pub(crate) struct DegreeClass {
    /// Sorted (non-decreasing) representative.
    pub degrees: Vec<u32>,
    /// Probability of any single ordering, Π Λ_{d_i}.
    pub vector_probability: Rat,
    /// Number of distinct orderings, k! / Π (multiplicity!).
    pub orderings: BigUint,
}

impl DegreeClass {
    /// Total probability mass of the class.
    pub fn mass(&self) -> Rat {
        Rat::from_integer(self.orderings.clone().into()) * &self.vector_probability
    }
}

/// All degree classes for k users, sorted-representative order.
pub(crate) fn degree_classes(dist: &DegreeDistribution, k: u32) -> Vec<DegreeClass> {
    let support = dist.support();
    let mut classes = Vec::new();
    let mut current = Vec::with_capacity(k as usize);
    fn recurse(
        support: &[u32],
        from: usize,
        left: u32,
        current: &mut Vec<u32>,
        dist: &DegreeDistribution,
        out: &mut Vec<DegreeClass>,
    ) {
        if left == 0 {
            let k = current.len() as u64;
            let mut orderings = factorial(k);
            let mut run = 1u64;
            for i in 1..=current.len() {
                if i < current.len() && current[i] == current[i - 1] {
                    run += 1;
                } else {
                    orderings /= factorial(run);
                    run = 1;
                }
            }
            let vector_probability: Rat = current.iter().map(|&d| dist.prob(d)).product();
            out.push(DegreeClass {
                degrees: current.clone(),
                vector_probability,
                orderings,
            });
            return;
        }
        for (i, &d) in support.iter().enumerate().skip(from) {
            current.push(d);
            recurse(support, i, left - 1, current, dist, out);
            current.pop();
        }
    }
    recurse(&support, 0, k, &mut current, dist, &mut classes);
    classes
}
