//! Intrinsic peak characteristics of an ideal output distribution.

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::bits::BitString;
use crate::circuit::Circuit;
use crate::error::{Error, Result};
use crate::sim::{full_distribution, ProbabilityDistribution};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PeakProfile {
    /// Most likely outcome of the ideal distribution.
    pub target: BitString,
    pub p_peak: f64,
    pub p_second: f64,
    /// `p_peak / p_second`; infinite (stored as `null`) when `p_second = 0`.
    #[serde(serialize_with = "ser_ratio", deserialize_with = "de_ratio")]
    pub r_p: f64,
    pub c_max: f64,
    /// Set when the argmax differs from the circuit's intended target.
    #[serde(default)]
    pub target_mismatch: bool,
}

fn ser_ratio<S: Serializer>(v: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    if v.is_finite() {
        s.serialize_some(v)
    } else {
        s.serialize_none()
    }
}

fn de_ratio<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<f64, D::Error> {
    Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::INFINITY))
}

/// `(r − 1)/(r + 1)`, with the limit 1 for infinite `r`.
pub fn c_max_from_dominance(r_p: f64) -> f64 {
    if r_p.is_infinite() {
        1.0
    } else {
        (r_p - 1.0) / (r_p + 1.0)
    }
}

impl PeakProfile {
    /// Profile of `dist`, where `intended` is the target the circuit was built for.
    pub fn from_distribution(dist: &ProbabilityDistribution, intended: &BitString) -> Result<Self> {
        if intended.len() != dist.n() {
            return Err(Error::LengthMismatch {
                expected: dist.n(),
                found: intended.len(),
            });
        }
        let probs = dist.probs();
        let mut top = intended.index();
        for (i, &p) in probs.iter().enumerate() {
            if p > probs[top] {
                top = i;
            }
        }
        let p_peak = probs[top];
        let p_second = probs
            .iter()
            .enumerate()
            .filter(|&(i, _)| i != top)
            .map(|(_, &p)| p)
            .fold(0.0, f64::max);
        let (r_p, c_max) = if p_second <= 0.0 {
            (f64::INFINITY, 1.0)
        } else {
            (p_peak / p_second, (p_peak - p_second) / (p_peak + p_second))
        };
        Ok(Self {
            target: BitString::new(dist.n(), top as u64)?,
            p_peak,
            p_second,
            r_p,
            c_max,
            target_mismatch: top != intended.index(),
        })
    }
}

/// Scans the full ideal distribution of `circuit`.
pub fn peak_profile(circuit: &Circuit) -> Result<PeakProfile> {
    PeakProfile::from_distribution(&full_distribution(circuit)?, &circuit.target())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::{build_exact_inverse_peaking, build_reference_circuit};

    fn round4(x: f64) -> f64 {
        (x * 1e4).round() / 1e4
    }

    #[test]
    fn dominance_to_c_max() {
        assert_eq!(round4(c_max_from_dominance(3840.0)), 0.9995);
        assert_eq!(round4(c_max_from_dominance(9990.0)), 0.9998);
        assert_eq!(c_max_from_dominance(f64::INFINITY), 1.0);
    }

    #[test]
    fn point_mass() {
        let mut probs = vec![0.0; 8];
        probs[5] = 1.0;
        let dist = ProbabilityDistribution::new(3, probs).unwrap();
        let p = PeakProfile::from_distribution(&dist, &"101".parse().unwrap()).unwrap();
        assert_eq!(p.p_peak, 1.0);
        assert_eq!(p.c_max, 1.0);
        assert!(p.r_p.is_infinite());
        assert!(!p.target_mismatch);
        let json = serde_json::to_string(&p).unwrap();
        assert!(json.contains("\"r_p\":null"));
        assert_eq!(serde_json::from_str::<PeakProfile>(&json).unwrap(), p);
    }

    #[test]
    fn mismatch_is_flagged_not_fatal() {
        let dist = ProbabilityDistribution::new(2, vec![0.1, 0.6, 0.2, 0.1]).unwrap();
        let p = PeakProfile::from_distribution(&dist, &"00".parse().unwrap()).unwrap();
        assert!(p.target_mismatch);
        assert_eq!(p.target.to_string(), "01");
        assert_eq!(p.p_second, 0.2);
        assert!((p.c_max - (p.r_p - 1.0) / (p.r_p + 1.0)).abs() < 1e-15);
    }

    #[test]
    fn mirror_circuit_profile() {
        let c = build_exact_inverse_peaking(&build_reference_circuit(4, 6, 3).unwrap()).unwrap();
        let p = peak_profile(&c).unwrap();
        assert!(p.target.is_zero());
        assert!((p.p_peak - 1.0).abs() < 1e-12);
        assert!(p.c_max > 1.0 - 1e-12);
    }
}
