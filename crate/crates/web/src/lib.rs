//! WebAssembly bindings for the browser demo. Every export returns a JSON
//! string; the page parses it.

use serde::Serialize;
use wasm_bindgen::prelude::*;

use leakscope::classify::{ProbeHyper, ProbeKind};
use leakscope::cohort::{build_cohort, CohortSpec};
use leakscope::corpus::{join_labeled, read_author_profiles, CommentReader, Trait};
use leakscope::embed::{features, HashedNgramEmbedder};
use leakscope::evaluate::{macro_f1, ConfusionMatrix};
use leakscope::evaluate_probes;
use leakscope::synth::{bayes_accuracy, generate, SynthConfig};

#[derive(Serialize)]
struct FeatureSlot {
    feature: String,
    index: usize,
    sign: f64,
}

#[derive(Serialize)]
struct EmbedView {
    dim: usize,
    features: Vec<FeatureSlot>,
    /// Non-zero coordinates as (index, value).
    nonzero: Vec<(usize, f32)>,
}

pub fn embed_view(text: &str, dim: usize) -> Result<String, String> {
    let embedder = HashedNgramEmbedder::new(dim).map_err(|e| e.to_string())?;
    let slots = features(text)
        .into_iter()
        .map(|feature| {
            let (index, sign) = embedder.slot(&feature);
            FeatureSlot { feature, index, sign }
        })
        .collect();
    let v = embedder.embed(text);
    let nonzero = v
        .values()
        .iter()
        .enumerate()
        .filter(|(_, x)| **x != 0.0)
        .map(|(i, x)| (i, *x))
        .collect();
    Ok(serde_json::to_string(&EmbedView {
        dim,
        features: slots,
        nonzero,
    })
    .expect("plain data serializes"))
}

#[derive(Serialize)]
struct Scores {
    accuracy: f64,
    f1_true: f64,
    f1_false: f64,
    macro_f1: f64,
    baseline_label: bool,
    baseline_macro_f1: f64,
    macro_f1_lift: f64,
}

/// Metrics for a probe's confusion counts, with the lift over a constant
/// predictor of the test set's majority label (ties predict `false`).
pub fn score_view(tp: u32, fp: u32, fn_: u32, tn: u32) -> Result<String, String> {
    let cm = ConfusionMatrix {
        tp: tp.into(),
        fp: fp.into(),
        fn_: fn_.into(),
        tn: tn.into(),
    };
    if cm.total() == 0 {
        return Err("all counts are zero".into());
    }
    let (actual_true, actual_false) = (cm.tp + cm.fn_, cm.fp + cm.tn);
    let baseline_label = actual_true > actual_false;
    let baseline = if baseline_label {
        ConfusionMatrix {
            tp: actual_true,
            fp: actual_false,
            ..Default::default()
        }
    } else {
        ConfusionMatrix {
            fn_: actual_true,
            tn: actual_false,
            ..Default::default()
        }
    };
    let probe = macro_f1(&cm);
    let base = macro_f1(&baseline);
    Ok(serde_json::to_string(&Scores {
        accuracy: cm.accuracy(),
        f1_true: cm.f1_true(),
        f1_false: cm.f1_false(),
        macro_f1: probe,
        baseline_label,
        baseline_macro_f1: base,
        macro_f1_lift: probe - base,
    })
    .expect("plain data serializes"))
}

#[derive(Serialize)]
struct CurvePoint {
    p: f64,
    bayes_accuracy: f64,
    logistic_lift: f64,
    tree_lift: f64,
    n_test: usize,
}

/// Plant an is_female marker at each rate in `ps`, then audit the pairing
/// with both probes.
pub fn curve_view(ps: &[f64], authors: usize, seed: u64) -> Result<String, String> {
    let err = |e: leakscope::Error| e.to_string();
    let embedder = HashedNgramEmbedder::new(256).map_err(|e| e.to_string())?;
    let mut points = Vec::new();
    for &p in ps {
        if !(0.0..=1.0).contains(&p) {
            return Err(format!("p = {p} is outside [0, 1]"));
        }
        let mut cfg = SynthConfig::planted(Trait::IsFemale, "demo", p);
        cfg.subreddits = vec!["demo".into()];
        cfg.n_authors = authors;
        cfg.comments_per_author = 6;
        cfg.seed = seed;
        let corpus = generate(&cfg).map_err(err)?;
        let profiles = read_author_profiles(corpus.profiles_csv.as_bytes()).map_err(|e| e.to_string())?;
        let comments = CommentReader::new(corpus.comments_csv.as_bytes(), None).map_err(|e| e.to_string())?;
        let (labeled, _) = join_labeled(comments, &profiles.profiles);
        let spec = CohortSpec {
            subreddit: "demo".into(),
            trait_: Trait::IsFemale,
            max_size: usize::MAX,
            min_per_class: 10,
            test_fraction: 0.25,
            seed,
        };
        let cohort = build_cohort(&labeled, &spec).map_err(|e| e.to_string())?;
        let results =
            evaluate_probes(&cohort, &embedder, &ProbeKind::ALL, &ProbeHyper::default(), seed).map_err(err)?;
        let lift = |k: ProbeKind| {
            results
                .iter()
                .find(|r| r.probe == k)
                .map_or(f64::NAN, |r| r.macro_f1_lift)
        };
        points.push(CurvePoint {
            p,
            bayes_accuracy: bayes_accuracy(p),
            logistic_lift: lift(ProbeKind::Logistic),
            tree_lift: lift(ProbeKind::Tree),
            n_test: results[0].n_test,
        });
    }
    Ok(serde_json::to_string(&points).expect("plain data serializes"))
}

fn js(r: Result<String, String>) -> Result<String, JsError> {
    r.map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn embed_text(text: &str, dim: usize) -> Result<String, JsError> {
    js(embed_view(text, dim))
}

#[wasm_bindgen]
pub fn score_confusion(tp: u32, fp: u32, fn_: u32, tn: u32) -> Result<String, JsError> {
    js(score_view(tp, fp, fn_, tn))
}

#[wasm_bindgen]
pub fn planted_curve(ps: &[f64], authors: usize, seed: u32) -> Result<String, JsError> {
    js(curve_view(ps, authors, seed.into()))
}
