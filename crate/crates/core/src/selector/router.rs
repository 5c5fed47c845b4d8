//! The linear routing model.
//!
//! With two candidate threads the query-thread ranking problem collapses to a
//! binary margin problem: learn `w, b` minimizing the margin-weighted pairwise
//! hinge loss
//!
//! ```text
//! Σ_q |Δ_q| · max(0, 1 − sign(Δ_q)·(w·x_q + b)) + reg·‖w‖²
//! ```
//!
//! with `Δ_q = eff_c2(q) − eff_c1(q)`. Queries where the candidates tie
//! contribute nothing. Training standardizes features on the training fold
//! and then folds the scaler back into the weights, so the stored model
//! applies to raw feature vectors directly.

use std::io::{BufRead, BufReader, Read, Write};

use crate::evalkit::SplitMix64;
use crate::features::{CandidateLabels, QueryFeatures};
use crate::selector::{CandidatePair, SelectionMode};
use crate::{Error, Result};

const LEARNING_RATE: f64 = 0.5;
const LEARNING_RATE_DECAY: f64 = 0.02;

/// Linear scorer over raw query features. `score > 0` routes to the second
/// candidate, `score ≤ 0` to the first.
#[derive(Debug, Clone, PartialEq)]
pub struct RoutingModel {
    pub weights: Vec<f64>,
    pub bias: f64,
}

impl RoutingModel {
    /// The zero model: routes every query to the first candidate.
    pub fn zero(dim: usize) -> RoutingModel {
        RoutingModel {
            weights: vec![0.0; dim],
            bias: 0.0,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.bias == 0.0 && self.weights.iter().all(|&w| w == 0.0)
    }

    /// `w·x + b`; errors on dimension mismatch.
    pub fn score(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.weights.len() {
            return Err(Error::DimensionMismatch {
                expected: self.weights.len(),
                actual: x.len(),
            });
        }
        Ok(self.weights.iter().zip(x).map(|(w, v)| w * v).sum::<f64>() + self.bias)
    }
}

/// Which of the two candidate threads a query routes to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Candidate {
    First,
    Second,
}

/// Route one query. Ties (score exactly 0) favor the first candidate.
pub fn route(model: &RoutingModel, features: &QueryFeatures) -> Result<Candidate> {
    Ok(if model.score(&features.vector)? > 0.0 {
        Candidate::Second
    } else {
        Candidate::First
    })
}

/// Train the router by deterministic subgradient descent.
///
/// `labels[i].eff` must hold exactly the two candidate effectiveness values
/// for `features[i]`. If every `Δ_q` is zero the zero model is returned and
/// everything routes to the first candidate. The seed drives the per-epoch
/// sample shuffle; identical inputs and seed give an identical model.
pub fn train_router(
    features: &[QueryFeatures],
    labels: &[CandidateLabels],
    reg: f64,
    epochs: usize,
    seed: u64,
) -> Result<RoutingModel> {
    if features.len() != labels.len() {
        return Err(Error::LengthMismatch {
            left: features.len(),
            right: labels.len(),
        });
    }
    if features.is_empty() {
        return Err(Error::InvalidConfig("router needs training queries".into()));
    }
    let dim = features[0].vector.len();
    for f in features {
        if f.vector.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                actual: f.vector.len(),
            });
        }
    }
    for l in labels {
        if l.eff.len() != 2 {
            return Err(Error::InvalidConfig(format!(
                "expected 2 candidate labels for topic {}, got {}",
                l.topic_id,
                l.eff.len()
            )));
        }
    }

    // margin-weighted samples; ties contribute nothing
    let samples: Vec<(usize, f64, f64)> = labels
        .iter()
        .enumerate()
        .filter_map(|(i, l)| {
            let delta = l.eff[1] - l.eff[0];
            (delta != 0.0).then(|| (i, delta.signum(), delta.abs()))
        })
        .collect();
    if samples.is_empty() {
        return Ok(RoutingModel::zero(dim));
    }

    // standardize on the training fold
    let n = features.len() as f64;
    let mut mean = vec![0.0; dim];
    for f in features {
        for (m, v) in mean.iter_mut().zip(&f.vector) {
            *m += v;
        }
    }
    for m in &mut mean {
        *m /= n;
    }
    let mut std = vec![0.0; dim];
    for f in features {
        for (s, (v, m)) in std.iter_mut().zip(f.vector.iter().zip(&mean)) {
            *s += (v - m) * (v - m);
        }
    }
    for s in &mut std {
        *s = (*s / n).sqrt();
        if *s == 0.0 {
            *s = 1.0; // constant feature: standardized value is 0
        }
    }
    let standardized: Vec<Vec<f64>> = features
        .iter()
        .map(|f| {
            f.vector
                .iter()
                .zip(mean.iter().zip(&std))
                .map(|(v, (m, s))| (v - m) / s)
                .collect()
        })
        .collect();

    // subgradient descent with iterate averaging after a burn-in: the
    // average, not the last noisy iterate, is the returned model
    let mut w = vec![0.0; dim];
    let mut b = 0.0;
    let mut avg_w = vec![0.0; dim];
    let mut avg_b = 0.0;
    let mut averaged = 0u64;
    let burn_in = epochs / 5;
    let mut rng = SplitMix64::new(seed);
    let mut order: Vec<usize> = (0..samples.len()).collect();
    let reg_share = 2.0 * reg / samples.len() as f64;
    for epoch in 0..epochs {
        rng.shuffle(&mut order);
        let eta = LEARNING_RATE / (1.0 + LEARNING_RATE_DECAY * epoch as f64);
        for &si in &order {
            let (qi, sign, weight) = samples[si];
            let x = &standardized[qi];
            let margin = sign * (w.iter().zip(x).map(|(a, c)| a * c).sum::<f64>() + b);
            for wi in w.iter_mut() {
                *wi -= eta * reg_share * *wi;
            }
            if margin < 1.0 {
                for (wi, xi) in w.iter_mut().zip(x) {
                    *wi += eta * weight * sign * xi;
                }
                b += eta * weight * sign;
            }
        }
        if epoch >= burn_in {
            for (a, wi) in avg_w.iter_mut().zip(&w) {
                *a += wi;
            }
            avg_b += b;
            averaged += 1;
        }
    }
    let scale = 1.0 / averaged.max(1) as f64;
    for a in avg_w.iter_mut() {
        *a *= scale;
    }
    avg_b *= scale;

    // fold the scaler into the weights: the model applies to raw features
    let mut raw_w = vec![0.0; dim];
    let mut raw_b = avg_b;
    for i in 0..dim {
        raw_w[i] = avg_w[i] / std[i];
        raw_b -= avg_w[i] * mean[i] / std[i];
    }
    Ok(RoutingModel {
        weights: raw_w,
        bias: raw_b,
    })
}

/// Persist a router: plain-text header (feature configuration, mode,
/// candidate ids) followed by the weight vector.
pub fn write_model<W: Write>(
    mut w: W,
    model: &RoutingModel,
    feature_config: &str,
    pair: &CandidatePair,
) -> Result<()> {
    writeln!(w, "#sqp-router\t1")?;
    writeln!(w, "features\t{feature_config}")?;
    writeln!(w, "mode\t{}", pair.mode)?;
    writeln!(w, "c1\t{}", pair.c1.id())?;
    writeln!(w, "c2\t{}", pair.c2.id())?;
    writeln!(w, "dim\t{}", model.weights.len())?;
    writeln!(w, "bias\t{}", model.bias)?;
    for (i, v) in model.weights.iter().enumerate() {
        writeln!(w, "w\t{i}\t{v}")?;
    }
    Ok(())
}

/// Read a model written by [`write_model`].
pub fn read_model<R: Read>(r: R, path: &str) -> Result<(RoutingModel, String, CandidatePair)> {
    use crate::gridpoints::ProcessingThread;
    let err = |line: usize, message: String| Error::Parse {
        path: path.to_string(),
        line,
        message,
    };
    let mut feature_config = String::new();
    let mut mode: Option<SelectionMode> = None;
    let mut c1 = None;
    let mut c2 = None;
    let mut dim = 0usize;
    let mut bias = 0.0;
    let mut weights: Vec<f64> = Vec::new();
    for (idx, line) in BufReader::new(r).lines().enumerate() {
        let lineno = idx + 1;
        let line = line?;
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        match fields[0] {
            "features" if fields.len() == 2 => feature_config = fields[1].to_string(),
            "mode" if fields.len() == 2 => mode = Some(fields[1].parse()?),
            "c1" if fields.len() == 2 => c1 = Some(ProcessingThread::parse_id(fields[1])?),
            "c2" if fields.len() == 2 => c2 = Some(ProcessingThread::parse_id(fields[1])?),
            "dim" if fields.len() == 2 => {
                dim = fields[1]
                    .parse()
                    .map_err(|_| err(lineno, format!("bad dim {:?}", fields[1])))?;
                weights = vec![0.0; dim];
            }
            "bias" if fields.len() == 2 => {
                bias = fields[1]
                    .parse()
                    .map_err(|_| err(lineno, format!("bad bias {:?}", fields[1])))?
            }
            "w" if fields.len() == 3 => {
                let i: usize = fields[1]
                    .parse()
                    .map_err(|_| err(lineno, format!("bad weight index {:?}", fields[1])))?;
                if i >= dim {
                    return Err(err(lineno, format!("weight index {i} out of range {dim}")));
                }
                weights[i] = fields[2]
                    .parse()
                    .map_err(|_| err(lineno, format!("bad weight {:?}", fields[2])))?;
            }
            other => return Err(err(lineno, format!("unrecognized record {other:?}"))),
        }
    }
    let pair = CandidatePair::new(
        c1.ok_or_else(|| err(0, "model lacks c1".into()))?,
        c2.ok_or_else(|| err(0, "model lacks c2".into()))?,
        mode.ok_or_else(|| err(0, "model lacks mode".into()))?,
    )?;
    Ok((RoutingModel { weights, bias }, feature_config, pair))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expansion::{ExpansionKind, ExpansionModel};
    use crate::gridpoints::ProcessingThread;
    use crate::retrieval::WeightingModel;

    fn qf(id: usize, vector: Vec<f64>) -> QueryFeatures {
        QueryFeatures {
            topic_id: format!("q{id}"),
            vector,
        }
    }

    fn label(id: usize, c1: f64, c2: f64) -> CandidateLabels {
        CandidateLabels {
            topic_id: format!("q{id}"),
            eff: vec![c1, c2],
        }
    }

    /// Deterministic synthetic routing set: one informative dimension plus
    /// noise; `Δ > 0` exactly when the informative dimension is positive.
    fn synthetic(n: usize, seed: u64) -> (Vec<QueryFeatures>, Vec<CandidateLabels>) {
        let mut rng = SplitMix64::new(seed);
        let mut unit = || (rng.next_u64() as f64 / u64::MAX as f64) * 2.0 - 1.0;
        let mut features = Vec::new();
        let mut labels = Vec::new();
        for i in 0..n {
            let informative = loop {
                let v = unit();
                if v.abs() > 0.05 {
                    break v;
                }
            };
            let vector = vec![informative, unit() * 0.3, unit() * 0.3, 1.0 + unit() * 0.01];
            let magnitude = 0.1 + 0.4 * informative.abs();
            let (c1, c2) = if informative > 0.0 {
                (0.4, 0.4 + magnitude)
            } else {
                (0.4 + magnitude, 0.4)
            };
            features.push(qf(i, vector));
            labels.push(label(i, c1, c2));
        }
        (features, labels)
    }

    #[test]
    fn all_tied_labels_give_zero_model() {
        let features = vec![qf(0, vec![1.0, 2.0]), qf(1, vec![-1.0, 0.5])];
        let labels = vec![label(0, 0.5, 0.5), label(1, 0.2, 0.2)];
        let model = train_router(&features, &labels, 0.01, 50, 42).unwrap();
        assert!(model.is_zero());
        for f in &features {
            assert_eq!(route(&model, f).unwrap(), Candidate::First);
        }
    }

    #[test]
    fn zero_score_routes_to_first() {
        let model = RoutingModel {
            weights: vec![1.0, -2.0],
            bias: 0.0,
        };
        let f = qf(0, vec![2.0, 1.0]);
        // 1·2 − 2·1 = 0 exactly
        assert_eq!(model.score(&f.vector).unwrap(), 0.0);
        assert_eq!(route(&model, &f).unwrap(), Candidate::First);
    }

    #[test]
    fn score_is_the_dot_product_plus_bias() {
        let model = RoutingModel {
            weights: vec![1.0, -2.0],
            bias: 0.5,
        };
        assert_eq!(model.score(&[2.0, 1.0]).unwrap(), 0.5);
        assert_eq!(
            route(&model, &qf(0, vec![2.0, 1.0])).unwrap(),
            Candidate::Second
        );
    }

    #[test]
    fn dimension_mismatch_is_an_error() {
        let model = RoutingModel::zero(3);
        assert!(model.score(&[1.0]).is_err());
        let features = vec![qf(0, vec![1.0, 2.0]), qf(1, vec![1.0])];
        let labels = vec![label(0, 0.1, 0.2), label(1, 0.1, 0.2)];
        assert!(train_router(&features, &labels, 0.01, 10, 42).is_err());
    }

    #[test]
    fn separable_data_routes_accurately() {
        let (train_f, train_l) = synthetic(100, 7);
        let (test_f, test_l) = synthetic(100, 99);
        let model = train_router(&train_f, &train_l, 0.01, 200, 42).unwrap();
        let correct = test_f
            .iter()
            .zip(&test_l)
            .filter(|(f, l)| {
                let want = if l.eff[1] > l.eff[0] {
                    Candidate::Second
                } else {
                    Candidate::First
                };
                route(&model, f).unwrap() == want
            })
            .count();
        assert!(correct >= 95, "accuracy {correct}/100");
    }

    #[test]
    fn training_is_deterministic() {
        let (f, l) = synthetic(50, 3);
        let a = train_router(&f, &l, 0.01, 100, 42).unwrap();
        let b = train_router(&f, &l, 0.01, 100, 42).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn duplicated_training_set_routes_identically() {
        let (f, l) = synthetic(60, 11);
        let model = train_router(&f, &l, 0.01, 150, 42).unwrap();
        let mut f2 = f.clone();
        f2.extend(f.iter().cloned());
        let mut l2 = l.clone();
        l2.extend(l.iter().cloned());
        let doubled = train_router(&f2, &l2, 0.01, 150, 42).unwrap();
        for feat in &f {
            assert_eq!(
                route(&model, feat).unwrap(),
                route(&doubled, feat).unwrap(),
                "{}",
                feat.topic_id
            );
        }
    }

    #[test]
    fn model_file_round_trip() {
        let pair = CandidatePair::new(
            ProcessingThread::expanded(
                WeightingModel::bm25_default(),
                ExpansionModel::new(ExpansionKind::Bo1),
                10,
                5,
            ),
            ProcessingThread::unexpanded(WeightingModel::bm25_default()),
            SelectionMode::EriskSqe,
        )
        .unwrap();
        let model = RoutingModel {
            weights: vec![0.25, -1.5, 0.0],
            bias: 0.125,
        };
        let mut buf = Vec::new();
        write_model(&mut buf, &model, "letor8x5+pre4/k=20", &pair).unwrap();
        let (back, config, back_pair) = read_model(buf.as_slice(), "mem").unwrap();
        assert_eq!(back, model);
        assert_eq!(config, "letor8x5+pre4/k=20");
        assert_eq!(back_pair, pair);
    }
}
