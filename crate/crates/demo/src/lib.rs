//! Browser demo. A synthetic vocabulary with planted topics is decomposed
//! once; the page then asks for axis orders, projection weights and
//! semicircle scatterplots. Every call returns a JSON string.

use axistour::continuity::{adjacent_cosines, average_continuity, interval_continuity, scatter_quality};
use axistour::dimred::{make_intervals, Interval};
use axistour::linalg::random_orthogonal;
use axistour::pipeline::{ica, projection, run_method, whiten, Method, MethodOptions, MethodOutput};
use axistour::tour::{axis_embeddings, top_words, AxisEmbeddingSet};
use axistour::viz::project_2d;
use axistour::{EmbeddingMatrix, Vocabulary};
use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};
use serde_json::{json, Value};
use wasm_bindgen::prelude::*;

const TOPICS: [(&str, [&str; 3]); 12] = [
    ("ocean", ["wave", "reef", "tide"]),
    ("music", ["chord", "drum", "opera"]),
    ("sport", ["goal", "relay", "serve"]),
    ("food", ["bread", "spice", "broth"]),
    ("space", ["orbit", "comet", "rover"]),
    ("law", ["court", "appeal", "statute"]),
    ("health", ["clinic", "dose", "nurse"]),
    ("money", ["loan", "bond", "audit"]),
    ("travel", ["ferry", "hostel", "visa"]),
    ("weather", ["storm", "frost", "drizzle"]),
    ("garden", ["tulip", "hedge", "compost"]),
    ("code", ["compiler", "kernel", "parser"]),
];
const WORDS_PER_AXIS: usize = 150;
const K: usize = 50;
const MAX_POINTS: usize = 3000;
const METHODS: [Method; 4] = [Method::AxisTour, Method::SkewSort, Method::RandOrder, Method::Pca];

type Res<T> = std::result::Result<T, String>;

fn err(e: axistour::Error) -> String {
    e.to_string()
}

/// `3 · topics` sparse axes; axes `ℓ`, `ℓ + t`, `ℓ + 2t` are facets of topic
/// `ℓ`, so a word on one facet also loads on the other two. The result is
/// hidden under a random rotation.
fn planted(topics: usize, seed: u64) -> Res<(EmbeddingMatrix, Vec<usize>)> {
    let d = 3 * topics;
    let n = WORDS_PER_AXIS * d;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut s = Array2::from_shape_simple_fn((n, d), || 0.3 * rng.sample::<f64, _>(StandardNormal));
    let mut words = Vec::with_capacity(n);
    let mut topic_of = Vec::with_capacity(n);
    for (i, mut row) in s.outer_iter_mut().enumerate() {
        let axis = rng.random_range(0..d);
        let (topic, facet) = (axis % topics, axis / topics);
        let strength: f64 = Exp1.sample(&mut rng);
        for mate in (topic..d).step_by(topics) {
            row[mate] += if mate == axis { 2.0 } else { 0.8 } * strength;
        }
        words.push(format!("{}{i}", TOPICS[topic].1[facet]));
        topic_of.push(topic);
    }
    let rotation = random_orthogonal(d, &mut rng).map_err(err)?;
    let vocab = Vocabulary::new(words).map_err(err)?;
    Ok((EmbeddingMatrix::new(vocab, s.dot(&rotation)).map_err(err)?, topic_of))
}

struct Ordered {
    out: MethodOutput,
    v: AxisEmbeddingSet,
}

#[wasm_bindgen]
pub struct Demo {
    topics: usize,
    topic_of: Vec<usize>,
    converged: bool,
    methods: Vec<Ordered>,
}

#[wasm_bindgen]
impl Demo {
    /// Generates and decomposes a vocabulary with `topics` planted topics (2–12).
    #[wasm_bindgen(constructor)]
    pub fn new(topics: usize, seed: u32) -> Res<Demo> {
        if !(2..=TOPICS.len()).contains(&topics) {
            return Err(format!("topics must be in 2–{}", TOPICS.len()));
        }
        let seed = u64::from(seed);
        let (x, topic_of) = planted(topics, seed)?;
        let (z, _) = whiten(&x).map_err(err)?;
        let r = ica(&z, seed, 2000).map_err(err)?;
        let opts = MethodOptions { k: K, seed, ..MethodOptions::default() };
        let methods = METHODS
            .iter()
            .map(|&m| {
                let out = run_method(m, &z, Some(&r), &opts).map_err(err)?;
                let v = axis_embeddings(&out.matrix, K).map_err(err)?;
                Ok(Ordered { out, v })
            })
            .collect::<Res<_>>()?;
        Ok(Demo { topics, topic_of, converged: r.converged, methods })
    }

    fn method(&self, name: &str) -> Res<&Ordered> {
        let m: Method = name.parse().map_err(err)?;
        self.methods
            .iter()
            .find(|o| o.out.method == m)
            .ok_or_else(|| format!("{name} is not part of the demo"))
    }

    /// Majority topic among an axis's top words.
    fn axis_topic(&self, t: &EmbeddingMatrix, axis: usize) -> usize {
        let col = t.data().column(axis);
        let top = axistour::tour::top_k_indices(col, K).unwrap_or_default();
        let mut votes = vec![0usize; self.topics];
        for i in top {
            votes[self.topic_of[i]] += 1;
        }
        (0..self.topics).max_by_key(|&c| (votes[c], usize::MAX - c)).unwrap_or(0)
    }

    /// Every method's axis order: top words, topic and adjacent cosine per axis.
    pub fn orders(&self) -> Res<String> {
        let methods: Vec<Value> = self
            .methods
            .iter()
            .map(|o| {
                let t = &o.out.matrix;
                let identity: Vec<usize> = (0..t.ncols()).collect();
                let axes: Vec<Value> = (0..t.ncols())
                    .map(|l| {
                        let words = top_words(t, l, 3).map_err(err)?;
                        Ok(json!({ "words": words, "topic": self.axis_topic(t, l), "gamma": o.out.gamma[l] }))
                    })
                    .collect::<Res<_>>()?;
                Ok(json!({
                    "method": o.out.method.as_str(),
                    "axes": axes,
                    "adjacent": adjacent_cosines(&o.v, &identity).map_err(err)?,
                    "continuity": average_continuity(&o.v, &identity).map_err(err)?,
                }))
            })
            .collect::<Res<_>>()?;
        let topics: Vec<&str> = TOPICS[..self.topics].iter().map(|t| t.0).collect();
        Ok(json!({ "topics": topics, "converged": self.converged, "methods": methods }).to_string())
    }

    /// Weight of every axis in the `p`-dimensional projection, with the
    /// interval it belongs to (1-based, inclusive).
    pub fn weights(&self, method: &str, p: usize, alpha: f64) -> Res<String> {
        let o = self.method(method)?;
        let proj = projection(&o.out, p, alpha).map_err(err)?;
        let parts = make_intervals(o.out.matrix.ncols(), p).map_err(err)?;
        let intervals: Vec<Value> = parts
            .intervals
            .iter()
            .enumerate()
            .map(|(r, iv)| {
                let weights: Vec<f64> = (iv.start..iv.end).map(|l| proj.f[[l, r]]).collect();
                json!({ "from": iv.start + 1, "to": iv.end, "weights": weights })
            })
            .collect();
        Ok(json!({ "method": method, "p": p, "alpha": alpha, "gamma": o.out.gamma.to_vec(), "intervals": intervals })
            .to_string())
    }

    /// Semicircle projection of axes `from..=to` (1-based).
    pub fn scatter(&self, method: &str, from: usize, to: usize) -> Res<String> {
        let o = self.method(method)?;
        let t = &o.out.matrix;
        let interval = Interval::from_one_based(from, to).map_err(err)?;
        let frame = project_2d(t, interval).map_err(err)?;
        let n = t.nrows();
        let stride = n.div_ceil(MAX_POINTS);
        let points: Vec<Value> = (0..n)
            .step_by(stride)
            .filter(|&i| frame.coords[[i, 1]] >= 0.0)
            .map(|i| json!([frame.coords[[i, 0]], frame.coords[[i, 1]], frame.argmax[i]]))
            .collect();
        let labels: Vec<Value> = frame
            .show
            .iter()
            .map(|&i| json!({ "word": t.vocab().word(i), "x": frame.coords[[i, 0]], "y": frame.coords[[i, 1]] }))
            .collect();
        let directions: Vec<[f64; 2]> = frame.directions.outer_iter().map(|r| [r[0], r[1]]).collect();
        let continuity = if interval.len() >= 2 {
            let identity: Vec<usize> = (0..t.ncols()).collect();
            Some(interval_continuity(&o.v, &identity, interval).map_err(err)?)
        } else {
            None
        };
        Ok(json!({
            "directions": directions,
            "points": points,
            "labels": labels,
            "quality": scatter_quality(&frame).ok(),
            "continuity": continuity,
        })
        .to_string())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn demo() -> Demo {
        Demo::new(4, 7).unwrap()
    }

    #[test]
    fn tour_is_at_least_as_continuous_as_the_other_orders() {
        let v: Value = serde_json::from_str(&demo().orders().unwrap()).unwrap();
        let c: Vec<f64> = v["methods"].as_array().unwrap().iter().map(|m| m["continuity"].as_f64().unwrap()).collect();
        assert_eq!(c.len(), 4);
        assert!(c[0] >= c[1] && c[0] > c[2], "{c:?}");
        assert_eq!(v["methods"][0]["axes"].as_array().unwrap().len(), 12);
    }

    #[test]
    fn tour_neighbours_share_topics() {
        let v: Value = serde_json::from_str(&demo().orders().unwrap()).unwrap();
        let topics: Vec<u64> = v["methods"][0]["axes"]
            .as_array()
            .unwrap()
            .iter()
            .map(|a| a["topic"].as_u64().unwrap())
            .collect();
        let same = (0..topics.len()).filter(|&i| topics[i] == topics[(i + 1) % topics.len()]).count();
        // three facets per topic: a perfect tour has two same-topic steps per topic
        assert!(same >= 6, "{topics:?}");
    }

    #[test]
    fn weights_are_unit_per_interval() {
        let v: Value = serde_json::from_str(&demo().weights("axistour", 5, 1.0 / 3.0).unwrap()).unwrap();
        let intervals = v["intervals"].as_array().unwrap();
        assert_eq!(intervals.len(), 5);
        assert_eq!(intervals[4]["to"], 12);
        for iv in intervals {
            let norm: f64 = iv["weights"].as_array().unwrap().iter().map(|w| w.as_f64().unwrap().powi(2)).sum();
            assert!((norm - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn scatter_labels_sit_on_the_upper_half() {
        let v: Value = serde_json::from_str(&demo().scatter("axistour", 1, 3).unwrap()).unwrap();
        assert_eq!(v["directions"].as_array().unwrap().len(), 3);
        let labels = v["labels"].as_array().unwrap();
        assert!(!labels.is_empty());
        assert!(labels.iter().all(|l| l["y"].as_f64().unwrap() >= 0.0));
        assert!(v["quality"].as_f64().unwrap() > 0.0);
    }

    #[test]
    fn bad_requests_are_errors() {
        let d = demo();
        assert!(d.scatter("axistour", 3, 13).is_err());
        assert!(d.weights("tica9", 3, 0.5).is_err());
        assert!(d.weights("nope", 3, 0.5).is_err());
        assert!(Demo::new(1, 0).is_err());
    }
}
