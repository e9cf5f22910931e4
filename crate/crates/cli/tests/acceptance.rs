//! Acceptance criteria, one PASS/FAIL/SKIP line each. Runs without the test
//! harness so the lines always reach stdout; exits non-zero on any FAIL.

mod common;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use chrono::{TimeZone, Utc};
use crisisnews::manifest::Stage;
use crisisnews::{Overrides, PipelineConfig};
use crisisnews_core::annotation::{Sentiment, Sympathy};
use crisisnews_core::classifier::{cross_validate, softmax, train, CnnConfig, CnnModel, Example};
use crisisnews_core::corpus::{levenshtein, near_dedup, stratified_day_sample, CorpusSlice, Event, Region, TimeWindow, TweetRecord};
use crisisnews_core::embeddings::{sgns_gradients, sgns_loss, train_sgns, Embeddings, SgnsConfig, Vocabulary};
use crisisnews_core::rng::substream;
use crisisnews_core::stats::{
    chi_square_independence, chi_square_yates, cramers_v, fisher_combine, logistic_fit, mann_whitney, spearman,
    ContingencyTable, MannWhitneyOptions,
};
use rand::seq::SliceRandom;
use rand::Rng;
use tempfile::TempDir;

enum Outcome {
    Pass(String),
    Fail(String),
    Skip(String),
}

type Check = std::result::Result<String, String>;

type Criterion = Box<dyn Fn() -> Outcome>;

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> std::result::Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within_time(started: Instant, limit: Duration) -> std::result::Result<String, String> {
    let t = started.elapsed();
    ensure(t < limit, || format!("took {:.1}s, limit {}s", t.as_secs_f64(), limit.as_secs()))?;
    Ok(format!("{:.1}s", t.as_secs_f64()))
}

// ---------------------------------------------------------------- statistics

fn u_doubled(a: &[f64], b: &[f64]) -> i64 {
    a.iter().map(|p| b.iter().map(|q| if p > q { 2 } else if p == q { 1 } else { 0 }).sum::<i64>()).sum()
}

/// U, the continuity-corrected Z and the two-sided exact p, all by
/// enumerating every split of the pooled sample.
fn mann_whitney_oracle(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let observed = u_doubled(x, y);
    let pooled: Vec<f64> = x.iter().chain(y).copied().collect();
    let (n, nx) = (pooled.len(), x.len());
    let center = (nx * y.len()) as i64;
    let mut us = Vec::new();
    for mask in 0u32..(1 << n) {
        if mask.count_ones() as usize == nx {
            let a: Vec<f64> = (0..n).filter(|i| mask & (1 << i) != 0).map(|i| pooled[i]).collect();
            let b: Vec<f64> = (0..n).filter(|i| mask & (1 << i) == 0).map(|i| pooled[i]).collect();
            us.push(u_doubled(&a, &b));
        }
    }
    let extreme = us.iter().filter(|u| (**u - center).abs() >= (observed - center).abs()).count();
    let p = extreme as f64 / us.len() as f64;
    let mean = center as f64 / 2.0;
    let var = us.iter().map(|&u| (u as f64 / 2.0 - mean).powi(2)).sum::<f64>() / us.len() as f64;
    let diff = observed as f64 / 2.0 - mean;
    let z = if var <= 0.0 { 0.0 } else { diff.signum() * (diff.abs() - 0.5).max(0.0) / var.sqrt() };
    (observed as f64 / 2.0, z, p)
}

fn spearman_oracle(x: &[f64], y: &[f64]) -> f64 {
    let rank = |v: &[f64]| -> Vec<f64> {
        v.iter()
            .map(|a| {
                let less = v.iter().filter(|b| *b < a).count() as f64;
                let equal = v.iter().filter(|b| *b == a).count() as f64;
                less + (equal + 1.0) / 2.0
            })
            .collect()
    };
    let (rx, ry) = (rank(x), rank(y));
    let n = x.len() as f64;
    let (mx, my) = (rx.iter().sum::<f64>() / n, ry.iter().sum::<f64>() / n);
    let cov: f64 = rx.iter().zip(&ry).map(|(a, b)| (a - mx) * (b - my)).sum();
    let vx: f64 = rx.iter().map(|a| (a - mx).powi(2)).sum();
    let vy: f64 = ry.iter().map(|b| (b - my).powi(2)).sum();
    cov / (vx * vy).sqrt()
}

fn table(rows: &[&[u64]]) -> ContingencyTable {
    ContingencyTable::new(rows.iter().map(|r| r.to_vec()).collect()).unwrap()
}

fn hand_yates(a: f64, b: f64, c: f64, d: f64) -> f64 {
    let n = a + b + c + d;
    let shrunk = ((a * d - b * c).abs() - n / 2.0).max(0.0);
    n * shrunk * shrunk / ((a + b) * (c + d) * (a + c) * (b + d))
}

fn hand_cramers_v(rows: &[&[u64]]) -> f64 {
    let n: f64 = rows.iter().flat_map(|r| r.iter()).sum::<u64>() as f64;
    let rt: Vec<f64> = rows.iter().map(|r| r.iter().sum::<u64>() as f64).collect();
    let ct: Vec<f64> = (0..rows[0].len()).map(|j| rows.iter().map(|r| r[j]).sum::<u64>() as f64).collect();
    let mut chi2 = 0.0;
    for (i, r) in rows.iter().enumerate() {
        for (j, &o) in r.iter().enumerate() {
            let e = rt[i] * ct[j] / n;
            chi2 += (o as f64 - e).powi(2) / e;
        }
    }
    (chi2 / (n * (rt.len().min(ct.len()) - 1) as f64)).sqrt()
}

fn stats_oracles() -> Check {
    let started = Instant::now();
    let options = MannWhitneyOptions { continuity_correction: true, exact_max_n: 8 };
    let mut pairs = 0usize;
    let (mut worst_p, mut worst_z) = (0.0f64, 0.0f64);
    for n in 2..=8usize {
        for nx in 1..n {
            for code in 0..3usize.pow(n as u32) {
                let values: Vec<f64> = (0..n).map(|i| ((code / 3usize.pow(i as u32)) % 3) as f64).collect();
                let (x, y) = values.split_at(nx);
                let (u, z, p) = mann_whitney_oracle(x, y);
                let r = mann_whitney(x, y, &options).map_err(|e| e.to_string())?;
                ensure(r.u == u, || format!("U {} != {u} for {x:?} {y:?}", r.u))?;
                let exact = r.p_exact.ok_or("no exact p")?;
                worst_p = worst_p.max((exact - p).abs());
                worst_z = worst_z.max((r.z - z).abs());
                pairs += 1;
            }
        }
    }
    ensure(worst_p <= 1e-9, || format!("exact p off by {worst_p:e}"))?;
    ensure(worst_z <= 1e-9, || format!("Z off by {worst_z:e}"))?;

    let mut rng = substream(7, 0);
    let mut worst_rho = 0.0f64;
    for _ in 0..2000 {
        let n = rng.gen_range(3..40);
        let x: Vec<f64> = (0..n).map(|_| rng.gen_range(0..6) as f64).collect();
        let y: Vec<f64> = (0..n).map(|_| rng.gen_range(0..6) as f64).collect();
        let want = spearman_oracle(&x, &y);
        if let Ok(r) = spearman(&x, &y) {
            if want.is_finite() {
                worst_rho = worst_rho.max((r.statistic - want).abs());
            }
        }
    }
    ensure(worst_rho <= 1e-12, || format!("Spearman off by {worst_rho:e}"))?;

    for t in [[12u64, 5, 3, 9], [708, 338, 4270, 1100], [30, 10, 10, 30], [5, 6, 6, 5], [1, 0, 0, 1]] {
        let got = chi_square_yates(&table(&[&t[..2], &t[2..]])).map_err(|e| e.to_string())?.test.statistic;
        let want = hand_yates(t[0] as f64, t[1] as f64, t[2] as f64, t[3] as f64);
        ensure((got - want).abs() <= 1e-9 * want.max(1.0), || format!("Yates {t:?}: {got} vs {want}"))?;
    }
    let fixtures: [&[&[u64]]; 3] =
        [&[&[10, 20, 30], &[20, 20, 20]], &[&[5, 0, 3], &[2, 8, 1], &[4, 4, 9]], &[&[40, 10], &[15, 35], &[20, 20]]];
    for rows in fixtures {
        let got = cramers_v(&table(rows)).map_err(|e| e.to_string())?;
        let want = hand_cramers_v(rows);
        ensure((got - want).abs() <= 1e-9, || format!("Cramér's V {rows:?}: {got} vs {want}"))?;
        chi_square_independence(&table(rows)).map_err(|e| e.to_string())?;
    }
    let time = within_time(started, Duration::from_secs(60))?;
    Ok(format!(
        "{pairs} sample pairs, max |Δp| {worst_p:.1e}, max |ΔZ| {worst_z:.1e}, max |Δρ| {worst_rho:.1e}, {time}"
    ))
}

/// CDF of χ² with `2k` degrees of freedom, from the Poisson series.
fn chi2_cdf_even(x: f64, k: usize) -> f64 {
    let half = x / 2.0;
    let mut term = (-half).exp();
    let mut sum = term;
    for j in 1..k {
        term *= half / j as f64;
        sum += term;
    }
    1.0 - sum
}

fn fisher_calibration() -> Check {
    let zero = fisher_combine(&[1.0]).map_err(|e| e.to_string())?.chi2_statistic;
    ensure(zero == 0.0, || format!("fisher_combine([1]) statistic {zero}"))?;
    let mut rng = substream(2015, 0);
    let mut stats: Vec<f64> = (0..10_000)
        .map(|_| {
            let ps: Vec<f64> = (0..50).map(|_| 1.0 - rng.gen::<f64>()).collect();
            fisher_combine(&ps).map(|c| c.chi2_statistic)
        })
        .collect::<std::result::Result<_, _>>()
        .map_err(|e| e.to_string())?;
    stats.sort_by(f64::total_cmp);
    let n = stats.len() as f64;
    let ks = stats
        .iter()
        .enumerate()
        .map(|(i, &s)| {
            let f = chi2_cdf_even(s, 50);
            (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
        })
        .fold(0.0, f64::max);
    ensure(ks < 0.02, || format!("KS distance {ks:.4}"))?;
    Ok(format!("KS distance {ks:.4} against χ²(100); single p = 1 gives 0"))
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

const SENTIMENT_MIX: [(Sentiment, f64); 3] =
    [(Sentiment::Negative, 0.4), (Sentiment::Neutral, 0.4), (Sentiment::Positive, 0.2)];
const GENERATOR: [f64; 3] = [-0.79, -1.0, 2.38];

fn eta(s: Sentiment) -> f64 {
    GENERATOR[0]
        + match s {
            Sentiment::Negative => 0.0,
            Sentiment::Neutral => GENERATOR[1],
            Sentiment::Positive => GENERATOR[2],
        }
}

/// McFadden R² of the generating model in the infinite-sample limit.
fn analytic_r2() -> f64 {
    let bern = |p: f64| p * p.ln() + (1.0 - p) * (1.0 - p).ln();
    let model: f64 = SENTIMENT_MIX.iter().map(|&(s, w)| w * bern(sigmoid(eta(s)))).sum();
    let pbar: f64 = SENTIMENT_MIX.iter().map(|&(s, w)| w * sigmoid(eta(s))).sum();
    1.0 - model / bern(pbar)
}

fn logistic_recovery() -> Check {
    let started = Instant::now();
    let seeds = 20;
    let (mut sums, mut r2) = ([0.0; 3], 0.0);
    for seed in 0..seeds {
        let mut rng = substream(seed, 4);
        let mut sentiment = Vec::with_capacity(10_000);
        let mut sympathy = Vec::with_capacity(10_000);
        for _ in 0..10_000 {
            let u: f64 = rng.gen();
            let s = if u < 0.4 {
                Sentiment::Negative
            } else if u < 0.8 {
                Sentiment::Neutral
            } else {
                Sentiment::Positive
            };
            sentiment.push(s);
            sympathy.push(if rng.gen_bool(sigmoid(eta(s))) { Sympathy::Sympathetic } else { Sympathy::Unsympathetic });
        }
        let m = logistic_fit(&sentiment, &sympathy).map_err(|e| e.to_string())?;
        for (acc, c) in sums.iter_mut().zip([&m.intercept, &m.neutral, &m.positive]) {
            *acc += c.estimate;
        }
        r2 += m.mcfadden_r2;
    }
    let mean = sums.map(|s| s / seeds as f64);
    let r2 = r2 / seeds as f64;
    let want_r2 = analytic_r2();
    for ((got, want), name) in mean.iter().zip(GENERATOR).zip(["intercept", "neutral", "positive"]) {
        ensure((got - want).abs() <= 0.1, || format!("{name} {got:.3} vs {want}"))?;
    }
    ensure((r2 - want_r2).abs() <= 0.03, || format!("McFadden R² {r2:.4} vs {want_r2:.4}"))?;
    let time = within_time(started, Duration::from_secs(30))?;
    Ok(format!(
        "mean coefficients ({:.3}, {:.3}, {:.3}), R² {r2:.4} vs analytic {want_r2:.4}, {time}",
        mean[0], mean[1], mean[2]
    ))
}

const LABELED_ENV: &str = "CRISISNEWS_LABELED_DATASET";

fn conditional_reproduction() -> Outcome {
    let Some(path) = std::env::var_os(LABELED_ENV).map(PathBuf::from) else {
        return Outcome::Skip(format!("no labelled dataset; set {LABELED_ENV} to a labeled.csv to run"));
    };
    let check = || -> Check {
        let rows = crisisnews::pipeline::read_labeled(&path).map_err(|e| e.to_string())?;
        let sentiment: Vec<Sentiment> = rows.iter().map(|r| r.sentiment).collect();
        let sympathy: Vec<Sympathy> = rows.iter().map(|r| r.sympathy).collect();
        let m = logistic_fit(&sentiment, &sympathy).map_err(|e| e.to_string())?;
        for (c, want) in [(&m.intercept, -0.79), (&m.neutral, -1.0), (&m.positive, 2.38)] {
            ensure((c.estimate - want).abs() <= 0.05, || format!("{} {:.3} vs {want}", c.name, c.estimate))?;
        }
        ensure((m.mcfadden_r2 - 0.2).abs() <= 0.02, || format!("McFadden R² {:.3}", m.mcfadden_r2))?;
        for event in [Event::Beirut, Event::Paris] {
            let scores = |region: Region| -> Vec<f64> {
                rows.iter()
                    .filter(|r| r.event == event && r.region == region)
                    .map(|r| r.sympathy.score())
                    .collect()
            };
            let (w, a) = (scores(Region::Western), scores(Region::Arab));
            let r = mann_whitney(&w, &a, &MannWhitneyOptions::default()).map_err(|e| e.to_string())?;
            ensure(r.z < 0.0, || format!("{event}: Western is not below Arab (Z {:.3})", r.z))?;
        }
        Ok(format!("N {}, R² {:.3}", m.n, m.mcfadden_r2))
    };
    match check() {
        Ok(s) => Outcome::Pass(s),
        Err(s) => Outcome::Fail(s),
    }
}

// ---------------------------------------------------------------- CNN

fn random_embeddings(seed: u64, dim: usize, words: usize) -> Embeddings {
    let mut tokens = vec!["<pad>".to_string(), "<unk>".to_string()];
    tokens.extend((0..words).map(|i| format!("w{i}")));
    let vocab = Vocabulary::from_tokens(tokens).unwrap();
    let mut rng = substream(seed, 3);
    let mut data: Vec<f64> = (0..vocab.len() * dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
    data[..dim].fill(0.0);
    Embeddings::new(vocab, dim, data).unwrap()
}

/// Label `i % 2`, carried by one of two marker words at a random position.
fn separable(n: usize, vocab: usize, seed: u64) -> Vec<Example> {
    let mut rng = substream(seed, 9);
    (0..n)
        .map(|i| {
            let label = i % 2;
            let mut ids: Vec<usize> = (0..rng.gen_range(3..9)).map(|_| rng.gen_range(4..vocab)).collect();
            let at = rng.gen_range(0..ids.len());
            ids[at] = 2 + label;
            Example { ids, label }
        })
        .collect()
}

fn cnn_suite() -> Check {
    let started = Instant::now();
    let cfg = CnnConfig { embedding_dim: 8, filters_per_width: 4, seed: 3, ..CnnConfig::default() };
    let mut model = CnnModel::build(cfg, &random_embeddings(3, 8, 40)).map_err(|e| e.to_string())?;
    let data = separable(16, 42, 4);
    let batch: Vec<&Example> = data.iter().collect();
    let (_, grad) = model.loss_and_gradient(&batch, None);
    let mut rng = substream(3, 1);
    let mut worst = 0.0f64;
    let h = 1e-5;
    for _ in 0..200 {
        let i = rng.gen_range(0..model.param_count());
        let x = model.params()[i];
        model.params_mut()[i] = x + h;
        let up = model.loss(&batch);
        model.params_mut()[i] = x - h;
        let down = model.loss(&batch);
        model.params_mut()[i] = x;
        let numeric = (up - down) / (2.0 * h);
        let scale = grad[i].abs().max(numeric.abs());
        if scale > 1e-10 {
            worst = worst.max((grad[i] - numeric).abs() / scale);
        }
    }
    ensure(worst < 1e-4, || format!("gradient relative error {worst:e}"))?;

    let mut worst_sum = 0.0f64;
    for _ in 0..1000 {
        let k = rng.gen_range(2..6);
        let logits: Vec<f64> = (0..k).map(|_| rng.gen_range(-50.0..50.0)).collect();
        worst_sum = worst_sum.max((softmax(&logits).iter().sum::<f64>() - 1.0).abs());
    }
    ensure(worst_sum <= 1e-9, || format!("softmax sums off by {worst_sum:e}"))?;

    let cfg = CnnConfig { embedding_dim: 10, filters_per_width: 8, epochs: 100, batch_size: 8, seed: 5, ..CnnConfig::default() };
    let toy = CnnModel::build(cfg, &random_embeddings(5, 10, 30)).map_err(|e| e.to_string())?;
    let (_, report) = train(toy, &separable(32, 32, 1)).map_err(|e| e.to_string())?;
    ensure(report.final_train_accuracy == 1.0, || format!("toy train accuracy {}", report.final_train_accuracy))?;

    let cfg = CnnConfig { embedding_dim: 8, filters_per_width: 4, epochs: 3, batch_size: 50, seed: 6, ..CnnConfig::default() };
    let template = CnnModel::build(cfg, &random_embeddings(6, 8, 60)).map_err(|e| e.to_string())?;
    let mut shuffled = separable(1000, 62, 6);
    let mut labels: Vec<usize> = shuffled.iter().map(|e| e.label).collect();
    labels.shuffle(&mut substream(6, 2));
    for (e, l) in shuffled.iter_mut().zip(labels) {
        e.label = l;
    }
    let cv = cross_validate(&template, &shuffled, 10, 6).map_err(|e| e.to_string())?;
    let ba = cv.pooled.balanced_accuracy;
    ensure((ba - 0.5).abs() <= 0.05, || format!("shuffled-label balanced accuracy {ba:.3}"))?;
    let time = within_time(started, Duration::from_secs(300))?;
    Ok(format!(
        "gradient error {worst:.1e}, softmax {worst_sum:.1e}, toy accuracy 1.0 in ≤ 100 epochs, shuffled BA {ba:.3}, {time}"
    ))
}

// ---------------------------------------------------------------- SGNS

fn planted_corpus(seed: u64, sentences: usize) -> Vec<Vec<String>> {
    let mut rng = substream(seed, 0);
    let n = 120;
    let successors: Vec<Vec<usize>> = (0..n).map(|_| (0..6).map(|_| rng.gen_range(0..n)).collect()).collect();
    (0..sentences)
        .map(|_| {
            let mut w = rng.gen_range(0..n);
            (0..12)
                .map(|_| {
                    let token = match w {
                        0 if rng.gen_bool(0.5) => "blast".to_string(),
                        0 => "explosion".to_string(),
                        _ => format!("w{w}"),
                    };
                    w = if rng.gen_bool(0.1) { 0 } else { successors[w][rng.gen_range(0..6)] };
                    token
                })
                .collect()
        })
        .collect()
}

fn sgns_suite() -> Check {
    let started = Instant::now();
    let mut rng = substream(42, 0);
    let d = 50;
    let mut worst = 0.0f64;
    for _ in 0..20 {
        let mut rows: Vec<Vec<f64>> = (0..7).map(|_| (0..d).map(|_| rng.gen_range(-0.5..0.5)).collect()).collect();
        let (mut gi, mut gc, mut gn) = (vec![0.0; d], vec![0.0; d], vec![vec![0.0; d]; 5]);
        {
            let negs: Vec<&[f64]> = rows[2..].iter().map(Vec::as_slice).collect();
            sgns_gradients(&rows[0], &rows[1], &negs, &mut gi, &mut gc, &mut gn);
        }
        let analytic = [vec![gi, gc], gn].concat();
        for _ in 0..10 {
            let (r, c) = (rng.gen_range(0..7), rng.gen_range(0..d));
            let h = 1e-5;
            let x = rows[r][c];
            let mut eval = |v: f64| {
                rows[r][c] = v;
                let negs: Vec<&[f64]> = rows[2..].iter().map(Vec::as_slice).collect();
                sgns_loss(&rows[0], &rows[1], &negs)
            };
            let numeric = (eval(x + h) - eval(x - h)) / (2.0 * h);
            rows[r][c] = x;
            let a = analytic[r][c];
            worst = worst.max((a - numeric).abs() / a.abs().max(numeric.abs()).max(1e-12));
        }
    }
    ensure(worst < 1e-4, || format!("gradient relative error {worst:e}"))?;
    let mut hits = 0;
    for seed in 0..10u64 {
        let corpus = planted_corpus(1000 + seed, 2500);
        let cfg = SgnsConfig { dim: 50, seed, ..SgnsConfig::default() };
        let (emb, _) = train_sgns(&corpus, &cfg).map_err(|e| e.to_string())?;
        let nn = emb.nearest_neighbors("blast", 1).map_err(|e| e.to_string())?;
        if nn[0].0 == "explosion" {
            hits += 1;
        }
    }
    ensure(hits >= 9, || format!("planted synonym recovered for {hits} of 10 seeds"))?;
    let time = within_time(started, Duration::from_secs(120))?;
    Ok(format!("gradient error {worst:.1e}, synonym rank 1 for {hits}/10 seeds, {time}"))
}

// ---------------------------------------------------------------- preprocessing

fn tweet(id: usize, secs: i64, text: &str) -> TweetRecord {
    TweetRecord {
        id: format!("{id:04}"),
        created_at: Utc.timestamp_opt(1_447_300_000 + secs, 0).unwrap(),
        text: text.to_string(),
        user_id: format!("u{}", id % 7),
        user_followers: 10_000,
        retweet_count: 0,
        is_retweet: false,
        hashtags: Vec::new(),
        lang: None,
        lang_confidence: None,
    }
}

/// Earliest member of each connected component of the full pairwise
/// near-duplicate graph.
fn exhaustive_dedup(slice: &CorpusSlice, threshold: f64) -> Vec<String> {
    let n = slice.len();
    let texts: Vec<&str> = slice.tweets.iter().map(|t| t.text.as_str()).collect();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], i: usize) -> usize {
        if p[i] != i {
            let r = find(p, p[i]);
            p[i] = r;
        }
        p[i]
    }
    for i in 0..n {
        for j in i + 1..n {
            let longest = texts[i].chars().count().max(texts[j].chars().count());
            let ratio = if longest == 0 { 0.0 } else { levenshtein(texts[i], texts[j]) as f64 / longest as f64 };
            if ratio <= threshold {
                let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                parent[a.max(b)] = a.min(b);
            }
        }
    }
    (0..n).filter(|&i| find(&mut parent, i) == i).map(|i| slice.tweets[i].id.clone()).collect()
}

fn dedup_fixture(seed: u64) -> CorpusSlice {
    let mut rng = substream(seed, 5);
    let alphabet: Vec<char> = "abcdefghijklmnopqrstuvwxyz     éبير".chars().collect();
    let mut texts: Vec<String> = (0..150)
        .map(|_| (0..rng.gen_range(8..90)).map(|_| alphabet[rng.gen_range(0..alphabet.len())]).collect())
        .collect();
    for _ in 0..50 {
        let mut t: Vec<char> = texts[rng.gen_range(0..texts.len())].chars().collect();
        for _ in 0..rng.gen_range(0..=t.len() / 8) {
            let pos = rng.gen_range(0..t.len());
            match rng.gen_range(0..3) {
                0 if t.len() > 1 => {
                    t.remove(pos);
                }
                1 => t.insert(pos, 'x'),
                _ => t[pos] = 'q',
            }
        }
        texts.push(t.into_iter().collect());
    }
    CorpusSlice::from_tweets(texts.iter().enumerate().map(|(i, t)| tweet(i, rng.gen_range(0..500_000), t)).collect())
}

fn preprocessing() -> Check {
    let mut checked = 0;
    for seed in 0..5 {
        let slice = dedup_fixture(seed);
        ensure(slice.len() == 200, || format!("fixture has {} tweets", slice.len()))?;
        for threshold in [0.05, 0.1, 0.2] {
            let kept = near_dedup(&slice, threshold).map_err(|e| e.to_string())?;
            let got = kept.ids();
            let want = exhaustive_dedup(&slice, threshold);
            ensure(got == want, || format!("seed {seed} threshold {threshold}: {} kept vs {}", got.len(), want.len()))?;
            checked += 1;
        }
    }

    let day = 86_400;
    let mut tweets = Vec::new();
    for (d, size) in [600usize, 300, 100].into_iter().enumerate() {
        for i in 0..size {
            tweets.push(tweet(tweets.len(), d as i64 * day + (i as i64 * day) / size as i64, "x"));
        }
    }
    let corpus = CorpusSlice::from_tweets(tweets);
    let sample = stratified_day_sample(&corpus, 100, 9).map_err(|e| e.to_string())?;
    let start = corpus.tweets[0].created_at;
    let mut per_day = [0usize; 3];
    for t in &sample.tweets {
        per_day[((t.created_at - start).num_seconds() / day) as usize] += 1;
    }
    ensure(per_day == [60, 30, 10], || format!("day draws {per_day:?}"))?;

    let cfg = PipelineConfig::load(&common::synthetic_config(), &Overrides::default()).map_err(|e| e.to_string())?;
    let text = std::fs::read_to_string(common::synthetic_config()).map_err(|e| e.to_string())?;
    ensure(text.contains("duration_days = 3.3\n") && text.contains("duration_days = 3.22\n"), || {
        "bundled config does not spell out the 3.3 d and 3.22 d windows".into()
    })?;
    ensure(cfg.events.beirut.duration_days == 3.3 && cfg.events.paris.duration_days == 3.22, || {
        format!("windows {} d / {} d", cfg.events.beirut.duration_days, cfg.events.paris.duration_days)
    })?;
    ensure(
        cfg.events.beirut.window().duration_days == TimeWindow::beirut().duration_days
            && cfg.events.paris.window().duration_days == TimeWindow::paris().duration_days,
        || "bundled windows differ from the built-in constants".into(),
    )?;
    Ok(format!("{checked} dedup fixtures equal the oracle, day draws (60, 30, 10), windows 3.3 d / 3.22 d"))
}

// ---------------------------------------------------------------- end to end

fn determinism() -> Check {
    let started = Instant::now();
    let mut bundles = Vec::new();
    for _ in 0..2 {
        let dir = TempDir::new().map_err(|e| e.to_string())?;
        let p = common::pipeline(dir.path(), Overrides::default());
        p.run().map_err(|e| e.to_string())?;
        bundles.push(common::tree(&p.stage_dir(Stage::Report)));
    }
    let files = bundles[0].len();
    ensure(files > 0, || "empty report bundle".into())?;
    if bundles[0] != bundles[1] {
        let differing: Vec<&String> =
            bundles[0].iter().filter(|(k, v)| bundles[1].get(*k) != Some(v)).map(|(k, _)| k).collect();
        return Err(format!("report bundles differ: {differing:?}"));
    }
    let time = within_time(started, Duration::from_secs(300))?;
    Ok(format!("{files} report files byte-identical across two runs, {time} for both"))
}

fn informational_balanced_accuracy() -> Outcome {
    Outcome::Skip(format!("English classifier balanced accuracy needs the labelled dataset ({LABELED_ENV})"))
}

fn main() -> ExitCode {
    let wrap = |f: fn() -> Check| move || -> Outcome {
        match f() {
            Ok(s) => Outcome::Pass(s),
            Err(s) => Outcome::Fail(s),
        }
    };
    let criteria: Vec<(&str, Criterion)> = vec![
        ("statistical kernels match oracles", Box::new(wrap(stats_oracles))),
        ("Fisher combination is calibrated", Box::new(wrap(fisher_calibration))),
        ("logistic model recovers its generator", Box::new(wrap(logistic_recovery))),
        ("labelled-dataset reproduction", Box::new(conditional_reproduction)),
        ("CNN numerics", Box::new(wrap(cnn_suite))),
        ("SGNS embeddings", Box::new(wrap(sgns_suite))),
        ("preprocessing equivalence", Box::new(wrap(preprocessing))),
        ("end-to-end determinism", Box::new(wrap(determinism))),
    ];
    let mut failed = 0;
    for (name, run) in &criteria {
        match run() {
            Outcome::Pass(s) => println!("PASS  {name}: {s}"),
            Outcome::Fail(s) => {
                failed += 1;
                println!("FAIL  {name}: {s}");
            }
            Outcome::Skip(s) => println!("SKIP  {name}: {s}"),
        }
    }
    if let Outcome::Skip(s) = informational_balanced_accuracy() {
        println!("INFO  English balanced accuracy: {s}");
    }
    if failed > 0 {
        println!("{failed} of {} criteria failed", criteria.len());
        ExitCode::FAILURE
    } else {
        println!("all {} criteria passed or were skipped", criteria.len());
        ExitCode::SUCCESS
    }
}
