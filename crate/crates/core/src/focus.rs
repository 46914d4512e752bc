//! Optimal RIS configurations for a known channel.
//!
//! With `d = h1·1_M` and `a_n = h2_n·(H1·1_M)_n` the gain is
//! `|g|·√M = |d + Σ_n e^{jφ_n} a_n|`, maximized by rotating every reflected term
//! onto the direct term: `φ_n = arg d − arg a_n`.

use std::f64::consts::{PI, TAU};

use crate::channel::{ChannelSet, PhaseConfig};
use crate::error::{Error, Result};
use crate::numerics::{wrap_phase, Complex};

/// Largest `log2` of the configuration count exhaustive search will enumerate.
pub const EXHAUSTIVE_LOG2_LIMIT: u32 = 24;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct QuantizationSpec {
    bits: u32,
}

impl QuantizationSpec {
    pub fn new(bits: u32) -> Result<Self> {
        if bits == 0 || bits > EXHAUSTIVE_LOG2_LIMIT {
            return Err(Error::domain(format!(
                "quantization needs 1..={EXHAUSTIVE_LOG2_LIMIT} bits, got {bits}"
            )));
        }
        Ok(Self { bits })
    }

    pub fn bits(&self) -> u32 {
        self.bits
    }

    pub fn levels(&self) -> usize {
        1 << self.bits
    }

    /// `{2πi/2^B − π : i = 0..2^B}`, ascending, all in `[−π, π)`.
    pub fn codebook(&self) -> Vec<f64> {
        let levels = self.levels() as f64;
        (0..self.levels())
            .map(|i| TAU * i as f64 / levels - PI)
            .collect()
    }
}

/// Closed-form continuous-resolution optimum. Elements with a zero cascaded
/// coefficient get phase 0.
pub fn optimal_phases_continuous(ch: &ChannelSet) -> PhaseConfig {
    let reference = ch.direct_sum().arg();
    let phases = ch
        .cascaded()
        .iter()
        .map(|a| {
            if a.norm_sqr() == 0.0 {
                0.0
            } else {
                wrap_phase(reference - a.arg())
            }
        })
        .collect();
    PhaseConfig::new(phases).expect("finite phases")
}

/// `Σ_n |a_n| + |d|`, the value `|g|·√M` attains at the continuous optimum.
pub fn aligned_magnitude(ch: &ChannelSet) -> f64 {
    ch.cascaded().iter().map(|a| a.norm()).sum::<f64>() + ch.direct_sum().norm()
}

/// Best configuration over `codebook^N`. Ties go to the lexicographically
/// smallest codebook index vector.
pub fn optimal_phases_exhaustive(ch: &ChannelSet, q: &QuantizationSpec) -> Result<PhaseConfig> {
    let n = ch.elements();
    let log2_size = n as u64 * q.bits() as u64;
    if log2_size > EXHAUSTIVE_LOG2_LIMIT as u64 {
        return Err(Error::SearchSpaceTooLarge {
            log2_size: log2_size.min(u32::MAX as u64) as u32,
            limit: EXHAUSTIVE_LOG2_LIMIT,
        });
    }
    let codebook = q.codebook();
    let phasors: Vec<Complex> = codebook
        .iter()
        .map(|&t| Complex::from_polar(1.0, t))
        .collect();
    // terms[n][i] = a_n · e^{jθ_i}
    let terms: Vec<Vec<Complex>> = ch
        .cascaded()
        .iter()
        .map(|a| phasors.iter().map(|p| a * p).collect())
        .collect();

    let mut search = Search {
        terms: &terms,
        current: vec![0; n],
        best: vec![0; n],
        best_value: f64::NEG_INFINITY,
    };
    search.descend(0, ch.direct_sum());

    PhaseConfig::new(search.best.iter().map(|&i| codebook[i]).collect())
}

struct Search<'a> {
    terms: &'a [Vec<Complex>],
    current: Vec<usize>,
    best: Vec<usize>,
    best_value: f64,
}

impl Search<'_> {
    // Depth-first in lexicographic index order; only strict improvements replace
    // the incumbent, which yields the lexicographic tie-break.
    fn descend(&mut self, level: usize, acc: Complex) {
        if level == self.terms.len() {
            let value = acc.norm_sqr();
            if value > self.best_value {
                self.best_value = value;
                self.best.copy_from_slice(&self.current);
            }
            return;
        }
        for i in 0..self.terms[level].len() {
            self.current[level] = i;
            let next = acc + self.terms[level][i];
            self.descend(level + 1, next);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{effective_gain, snr, LinkBudget};
    use crate::numerics::{cgauss_sample, ComplexMatrix, ComplexVector, SimRng};

    fn c(re: f64, im: f64) -> Complex {
        Complex::new(re, im)
    }

    /// Single-antenna link with `d = h1` and `a_n = h2_n` (H1 = 1).
    fn link(direct: Complex, cascaded: &[Complex]) -> ChannelSet {
        let n = cascaded.len();
        ChannelSet::new(
            ComplexVector::new(vec![direct]).unwrap(),
            ComplexMatrix::from_fn(n, 1, |_, _| c(1.0, 0.0)),
            ComplexVector::new(cascaded.to_vec()).unwrap(),
        )
        .unwrap()
    }

    fn random_link(n: usize, m: usize, rng: &mut SimRng) -> ChannelSet {
        let mut g = || cgauss_sample(rng, 1.0).unwrap();
        let ap_ris = ComplexMatrix::from_fn(n, m, |_, _| g());
        let direct = ComplexVector::from_fn(m, |_| g());
        let ris_user = ComplexVector::from_fn(n, |_| g());
        ChannelSet::new(direct, ap_ris, ris_user).unwrap()
    }

    fn unit_budget() -> LinkBudget {
        LinkBudget::new(1.0, 1.0).unwrap()
    }

    #[test]
    fn quarter_turn_alignment() {
        let ch = link(c(1.0, 0.0), &[c(0.0, 1.0)]);
        let cfg = optimal_phases_continuous(&ch);
        assert!((cfg.phases()[0] + PI / 2.0).abs() < 1e-15);
        let g = effective_gain(&ch, &cfg).unwrap();
        assert!((g.norm() - 2.0).abs() < 1e-15);
    }

    #[test]
    fn already_aligned_gives_identity() {
        let ch = link(c(2.0, 0.0), &[c(1.0, 0.0), c(0.5, 0.0), c(3.0, 0.0)]);
        assert_eq!(optimal_phases_continuous(&ch), PhaseConfig::zeros(3));
    }

    #[test]
    fn zero_coefficient_gets_zero_phase() {
        let ch = link(c(0.0, 1.0), &[c(0.0, 0.0), c(1.0, 0.0)]);
        let cfg = optimal_phases_continuous(&ch);
        assert_eq!(cfg.phases()[0], 0.0);
        assert!((cfg.phases()[1] - PI / 2.0).abs() < 1e-15);
    }

    #[test]
    fn continuous_beats_random_search() {
        let mut rng = SimRng::new(404);
        let ch = random_link(4, 2, &mut rng);
        let best = snr(&ch, &optimal_phases_continuous(&ch), &unit_budget()).unwrap();
        for _ in 0..10_000 {
            let cfg = PhaseConfig::random(4, &mut rng);
            assert!(snr(&ch, &cfg, &unit_budget()).unwrap() <= best);
        }
    }

    #[test]
    fn alignment_identity_holds() {
        let mut rng = SimRng::new(405);
        for _ in 0..200 {
            let ch = random_link(5, 3, &mut rng);
            let g = effective_gain(&ch, &optimal_phases_continuous(&ch)).unwrap();
            let lhs = g.norm() * 3f64.sqrt();
            let rhs = aligned_magnitude(&ch);
            assert!((lhs - rhs).abs() / rhs < 1e-10);
        }
    }

    #[test]
    fn rotating_direct_path_shifts_phases() {
        let mut rng = SimRng::new(406);
        let ch = random_link(4, 2, &mut rng);
        let alpha = 0.83;
        let rot = Complex::from_polar(1.0, alpha);
        let rotated =
            ChannelSet::new(ch.direct.scale(rot), ch.ap_ris.clone(), ch.ris_user.clone()).unwrap();
        let (a, b) = (
            optimal_phases_continuous(&ch),
            optimal_phases_continuous(&rotated),
        );
        for (pa, pb) in a.phases().iter().zip(b.phases()) {
            assert!(wrap_phase(pb - pa - alpha).abs() < 1e-12);
        }
        let ga = effective_gain(&ch, &a).unwrap().norm();
        let gb = effective_gain(&rotated, &b).unwrap().norm();
        assert!((ga - gb).abs() < 1e-12);
    }

    #[test]
    fn ris_never_hurts() {
        let mut rng = SimRng::new(407);
        for _ in 0..500 {
            let ch = random_link(3, 2, &mut rng);
            let cfg = optimal_phases_continuous(&ch);
            let with = snr(&ch, &cfg, &unit_budget()).unwrap();
            let without = snr(&ch.without_ris(), &cfg, &unit_budget()).unwrap();
            assert!(with >= without);
        }
    }

    #[test]
    fn codebook_layout() {
        let q = QuantizationSpec::new(1).unwrap();
        assert_eq!(q.codebook(), vec![-PI, 0.0]);
        let q3 = QuantizationSpec::new(3).unwrap();
        let cb = q3.codebook();
        assert_eq!(cb.len(), 8);
        assert!(cb.iter().all(|p| (-PI..PI).contains(p)));
        assert!(QuantizationSpec::new(0).is_err());
    }

    #[test]
    fn one_bit_single_element_prefers_aligned() {
        let ch = link(c(1.0, 0.0), &[c(1.0, 0.0)]);
        let cfg = optimal_phases_exhaustive(&ch, &QuantizationSpec::new(1).unwrap()).unwrap();
        assert_eq!(cfg.phases(), &[0.0]);
    }

    #[test]
    fn exhaustive_matches_explicit_enumeration() {
        let ch = link(c(0.3, -1.1), &[c(0.7, 0.4), c(-0.2, 0.9)]);
        let q = QuantizationSpec::new(1).unwrap();
        let got = optimal_phases_exhaustive(&ch, &q).unwrap();

        let d = ch.direct_sum();
        let a = ch.cascaded();
        let mut best = (f64::NEG_INFINITY, [0.0, 0.0]);
        for p0 in [-PI, 0.0] {
            for p1 in [-PI, 0.0] {
                let v =
                    (d + a[0] * Complex::from_polar(1.0, p0) + a[1] * Complex::from_polar(1.0, p1))
                        .norm_sqr();
                if v > best.0 {
                    best = (v, [p0, p1]);
                }
            }
        }
        assert_eq!(got.phases(), &best.1);
    }

    #[test]
    fn exhaustive_ties_break_lexicographically() {
        // no RIS contribution: every configuration ties
        let ch = link(c(1.0, 0.0), &[c(0.0, 0.0), c(0.0, 0.0)]);
        let cfg = optimal_phases_exhaustive(&ch, &QuantizationSpec::new(2).unwrap()).unwrap();
        assert_eq!(cfg.phases(), &[-PI, -PI]);
    }

    #[test]
    fn exhaustive_guard() {
        let mut rng = SimRng::new(1);
        let ch = random_link(9, 1, &mut rng);
        let q = QuantizationSpec::new(3).unwrap();
        assert!(matches!(
            optimal_phases_exhaustive(&ch, &q),
            Err(Error::SearchSpaceTooLarge { log2_size: 27, .. })
        ));
        let ch = random_link(8, 1, &mut rng);
        assert!(optimal_phases_exhaustive(&ch, &q).is_ok());
    }

    #[test]
    fn exhaustive_bounded_by_continuous_and_monotone_in_bits() {
        let mut rng = SimRng::new(408);
        for _ in 0..100 {
            let n = 1 + (rng.uniform(0.0, 4.0) as usize);
            let ch = random_link(n, 2, &mut rng);
            let cont = snr(&ch, &optimal_phases_continuous(&ch), &unit_budget()).unwrap();
            let mut prev = 0.0;
            for bits in 1..=3 {
                let q = QuantizationSpec::new(bits).unwrap();
                let v = snr(
                    &ch,
                    &optimal_phases_exhaustive(&ch, &q).unwrap(),
                    &unit_budget(),
                )
                .unwrap();
                assert!(v <= cont * (1.0 + 1e-12));
                assert!(v >= prev);
                prev = v;
            }
        }
    }
}
