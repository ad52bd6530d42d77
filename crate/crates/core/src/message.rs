//! Sectioned messages: `L` sections of size `B`, each holding a single one.

use crate::error::{Error, Result};
use rand::Rng;
use serde::{Deserialize, Serialize};

/// Shape of a sparse superposition code.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CodeParams {
    sections: usize,
    section_size: usize,
    codeword_len: usize,
}

impl CodeParams {
    /// `sections` = L, `section_size` = B (a power of two, at least 2),
    /// `codeword_len` = M.
    pub fn new(sections: usize, section_size: usize, codeword_len: usize) -> Result<Self> {
        if sections == 0 {
            return Err(Error::InvalidParams("L must be positive".into()));
        }
        if section_size < 2 || !section_size.is_power_of_two() {
            return Err(Error::InvalidParams(format!(
                "B must be a power of two >= 2, got {section_size}"
            )));
        }
        if codeword_len == 0 {
            return Err(Error::InvalidParams("M must be positive".into()));
        }
        Ok(Self {
            sections,
            section_size,
            codeword_len,
        })
    }

    /// Parameters with `M = round(L log2(B) / R)`.
    pub fn from_rate(sections: usize, section_size: usize, rate: f64) -> Result<Self> {
        if !(rate > 0.0 && rate.is_finite()) {
            return Err(Error::InvalidParams(format!("rate must be positive, got {rate}")));
        }
        if section_size < 2 || !section_size.is_power_of_two() {
            return Err(Error::InvalidParams(format!(
                "B must be a power of two >= 2, got {section_size}"
            )));
        }
        let bits = sections as f64 * section_size.trailing_zeros() as f64;
        let m = (bits / rate).round() as usize;
        Self::new(sections, section_size, m.max(1))
    }

    pub fn sections(&self) -> usize {
        self.sections
    }

    pub fn section_size(&self) -> usize {
        self.section_size
    }

    pub fn codeword_len(&self) -> usize {
        self.codeword_len
    }

    /// N = L B.
    pub fn n(&self) -> usize {
        self.sections * self.section_size
    }

    /// log2(B), the squared effective-noise scale `b^2`.
    pub fn log2_b(&self) -> f64 {
        self.section_size.trailing_zeros() as f64
    }

    /// R = L log2(B) / M in bits per channel use.
    pub fn rate(&self) -> f64 {
        self.sections as f64 * self.log2_b() / self.codeword_len as f64
    }
}

/// A message: the position of the non-zero entry of each section.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SectionedMessage {
    params: CodeParams,
    positions: Vec<usize>,
}

impl SectionedMessage {
    pub fn new(params: CodeParams, positions: Vec<usize>) -> Result<Self> {
        if positions.len() != params.sections() {
            return Err(Error::DimensionMismatch {
                expected: params.sections(),
                got: positions.len(),
            });
        }
        if let Some(&bad) = positions.iter().find(|&&p| p >= params.section_size()) {
            return Err(Error::InvalidParams(format!(
                "position {bad} out of range for B = {}",
                params.section_size()
            )));
        }
        Ok(Self { params, positions })
    }

    pub fn params(&self) -> &CodeParams {
        &self.params
    }

    pub fn positions(&self) -> &[usize] {
        &self.positions
    }

    /// Positions as a JSON array.
    pub fn to_json(&self) -> String {
        serde_json::to_string(&self.positions).expect("positions serialize")
    }

    pub fn from_json(params: CodeParams, json: &str) -> Result<Self> {
        let positions: Vec<usize> =
            serde_json::from_str(json).map_err(|e| Error::InvalidArgument(format!("message JSON: {e}")))?;
        Self::new(params, positions)
    }
}

/// Draw each section position uniformly at random.
pub fn random_message<R: Rng + ?Sized>(params: CodeParams, rng: &mut R) -> SectionedMessage {
    let b = params.section_size();
    let positions = (0..params.sections()).map(|_| rng.gen_range(0..b)).collect();
    SectionedMessage { params, positions }
}

/// Dense `{0,1}^N` expansion of a message.
pub fn to_dense(msg: &SectionedMessage) -> Vec<f64> {
    let b = msg.params.section_size();
    let mut x = vec![0.0; msg.params.n()];
    for (l, &pos) in msg.positions.iter().enumerate() {
        x[l * b + pos] = 1.0;
    }
    x
}

/// Sectionwise argmax; ties go to the lowest index.
pub fn hard_decision(scores: &[f64], params: CodeParams) -> Result<SectionedMessage> {
    if scores.len() != params.n() {
        return Err(Error::DimensionMismatch {
            expected: params.n(),
            got: scores.len(),
        });
    }
    let b = params.section_size();
    let mut positions = Vec::with_capacity(params.sections());
    for (l, section) in scores.chunks_exact(b).enumerate() {
        let mut best = 0;
        for (i, &v) in section.iter().enumerate() {
            if v.is_nan() {
                return Err(Error::NanScore { section: l });
            }
            if v > section[best] {
                best = i;
            }
        }
        positions.push(best);
    }
    Ok(SectionedMessage { params, positions })
}

/// `||estimate - x||^2 / L`.
pub fn mse(estimate: &[f64], truth: &SectionedMessage) -> f64 {
    let b = truth.params.section_size();
    assert_eq!(estimate.len(), truth.params.n(), "estimate has wrong length");
    let mut acc = 0.0;
    for (section, &pos) in estimate.chunks_exact(b).zip(&truth.positions) {
        for (i, &v) in section.iter().enumerate() {
            let d = if i == pos { v - 1.0 } else { v };
            acc += d * d;
        }
    }
    acc / truth.params.sections() as f64
}

/// Fraction of sections whose positions differ.
pub fn ser(decoded: &SectionedMessage, truth: &SectionedMessage) -> Result<f64> {
    if decoded.params != truth.params {
        return Err(Error::ParamMismatch);
    }
    let wrong = decoded
        .positions
        .iter()
        .zip(&truth.positions)
        .filter(|(a, b)| a != b)
        .count();
    Ok(wrong as f64 / truth.params.sections() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;
    use proptest::prelude::*;

    fn params(l: usize, b: usize) -> CodeParams {
        CodeParams::new(l, b, l).unwrap()
    }

    #[test]
    fn derived_quantities() {
        let p = CodeParams::from_rate(2048, 4, 0.5).unwrap();
        assert_eq!(p.n(), 8192);
        assert_eq!(p.codeword_len(), 8192);
        assert_eq!(p.log2_b(), 2.0);
        assert!((p.rate() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_section_size() {
        assert!(CodeParams::new(4, 3, 4).is_err());
        assert!(CodeParams::new(4, 1, 4).is_err());
        assert!(CodeParams::new(0, 4, 4).is_err());
        assert!(CodeParams::new(4, 4, 0).is_err());
    }

    #[test]
    fn single_section_is_one_hot() {
        let p = params(1, 2);
        let m = random_message(p, &mut rng::stream(11, &[]));
        let x = to_dense(&m);
        assert_eq!(x.iter().sum::<f64>(), 1.0);
        assert!(m.positions()[0] < 2);
    }

    #[test]
    fn fixed_seed_is_deterministic() {
        let p = params(4, 4);
        let a = random_message(p, &mut rng::stream(3, &[9]));
        let b = random_message(p, &mut rng::stream(3, &[9]));
        assert_eq!(a, b);
    }

    #[test]
    fn symbol_frequencies_are_uniform() {
        // chi-square against the uniform law with 3 degrees of freedom;
        // 16.27 is the 0.999 quantile.
        let p = params(10_000, 4);
        let m = random_message(p, &mut rng::stream(5, &[1]));
        let mut counts = [0usize; 4];
        for &pos in m.positions() {
            counts[pos] += 1;
        }
        let expected = 2500.0;
        let chi2: f64 = counts.iter().map(|&c| (c as f64 - expected).powi(2) / expected).sum();
        assert!(chi2 < 16.27, "chi2 = {chi2}, counts = {counts:?}");
        for &c in &counts {
            // 3 sigma of a binomial(10^4, 1/4)
            assert!((c as f64 - expected).abs() < 3.0 * (10_000.0f64 * 0.25 * 0.75).sqrt());
        }
    }

    #[test]
    fn dense_expansion() {
        let m = SectionedMessage::new(params(1, 2), vec![1]).unwrap();
        assert_eq!(to_dense(&m), vec![0.0, 1.0]);
        let m = SectionedMessage::new(params(2, 4), vec![0, 3]).unwrap();
        assert_eq!(to_dense(&m), vec![1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0]);
    }

    #[test]
    fn hard_decision_cases() {
        let p = params(1, 4);
        let m = hard_decision(&[0.9, 0.05, 0.03, 0.02], p).unwrap();
        assert_eq!(m.positions(), &[0]);
        let m = hard_decision(&[0.5, 0.5], params(1, 2)).unwrap();
        assert_eq!(m.positions(), &[0]);
        assert_eq!(
            hard_decision(&[0.1, f64::NAN, 0.2, 0.3], p),
            Err(Error::NanScore { section: 0 })
        );
        assert!(hard_decision(&[0.1, 0.2], p).is_err());
    }

    #[test]
    fn mse_cases() {
        let p = params(3, 4);
        let m = SectionedMessage::new(p, vec![0, 1, 3]).unwrap();
        assert_eq!(mse(&to_dense(&m), &m), 0.0);
        assert_eq!(mse(&[0.0; 12], &m), 1.0);
        let uniform = vec![0.25; 12];
        // (1 - 1/B)^2 + (B - 1)/B^2 = 0.5625 + 0.1875
        assert!((mse(&uniform, &m) - 0.75).abs() < 1e-15);
    }

    #[test]
    fn ser_cases() {
        let p = params(8, 4);
        let a = SectionedMessage::new(p, vec![0; 8]).unwrap();
        let b = SectionedMessage::new(p, vec![1; 8]).unwrap();
        let mut one = vec![0; 8];
        one[5] = 2;
        let c = SectionedMessage::new(p, one).unwrap();
        assert_eq!(ser(&a, &a).unwrap(), 0.0);
        assert_eq!(ser(&a, &b).unwrap(), 1.0);
        assert_eq!(ser(&c, &a).unwrap(), 0.125);
        let other = SectionedMessage::new(params(8, 2), vec![0; 8]).unwrap();
        assert_eq!(ser(&a, &other), Err(Error::ParamMismatch));
    }

    #[test]
    fn json_round_trip() {
        let p = params(3, 8);
        let m = SectionedMessage::new(p, vec![7, 0, 2]).unwrap();
        assert_eq!(m.to_json(), "[7,0,2]");
        assert_eq!(SectionedMessage::from_json(p, "[7,0,2]").unwrap(), m);
        assert!(SectionedMessage::from_json(p, "[8,0,2]").is_err());
    }

    proptest! {
        #[test]
        fn dense_round_trip(l in 1usize..20, logb in 1u32..7, seed in any::<u64>()) {
            let p = params(l, 1 << logb);
            let m = random_message(p, &mut rng::stream(seed, &[]));
            let x = to_dense(&m);
            prop_assert_eq!(mse(&x, &m), 0.0);
            let back = hard_decision(&x, p).unwrap();
            prop_assert_eq!(ser(&back, &m).unwrap(), 0.0);
            prop_assert!((x.iter().map(|v| v * v).sum::<f64>() - l as f64).abs() < 1e-12);
        }

        #[test]
        fn hard_decision_follows_permutation(scores in proptest::collection::vec(0.0f64..1.0, 8), shift in 0usize..8) {
            let p = params(1, 8);
            let chosen = hard_decision(&scores, p).unwrap().positions()[0];
            let rotated: Vec<f64> = (0..8).map(|i| scores[(i + 8 - shift) % 8]).collect();
            let moved = hard_decision(&rotated, p).unwrap().positions()[0];
            // identical argmax value; index moves with the permutation unless tied
            prop_assert_eq!(rotated[moved], scores[chosen]);
            let ties = scores.iter().filter(|&&v| v == scores[chosen]).count();
            if ties == 1 {
                prop_assert_eq!(moved, (chosen + shift) % 8);
            }
        }

        #[test]
        fn mse_ignores_section_order(seed in any::<u64>(), swap in 0usize..5) {
            let p = params(5, 4);
            let mut r = rng::stream(seed, &[]);
            let m = random_message(p, &mut r);
            let est: Vec<f64> = (0..20).map(|_| rand::Rng::gen::<f64>(&mut r)).collect();
            let mut pos = m.positions().to_vec();
            pos.swap(0, swap);
            let mut est2 = est.clone();
            for i in 0..4 {
                est2.swap(i, swap * 4 + i);
            }
            let m2 = SectionedMessage::new(p, pos).unwrap();
            prop_assert!((mse(&est, &m) - mse(&est2, &m2)).abs() < 1e-12);
        }
    }
}
