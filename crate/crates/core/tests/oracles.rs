mod common;

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use rand::Rng;
use tiaug::eval::{BaselineConfig, Weights};
use tiaug::ingest::{build_sequences, k_core_filter};
use tiaug::partition::{partition_i, partition_s};
use tiaug::rng::seeded;
use tiaug::similarity::SimilarityModel;
use tiaug::stats::rank_by_std;
use tiaug::synth::{generate, GapProfile, SynthConfig};
use tiaug::{Dataset, InteractionRecord, UserSequence};

use common::*;

fn rec(u: &str, i: &str, t: i64) -> InteractionRecord {
    InteractionRecord::new(u, i, t).unwrap()
}

/// Rescans all counts until nothing changes.
fn iterative_deletion(mut records: Vec<InteractionRecord>, k: usize) -> Vec<InteractionRecord> {
    loop {
        let mut users: BTreeMap<String, usize> = BTreeMap::new();
        let mut items: BTreeMap<String, usize> = BTreeMap::new();
        for r in &records {
            *users.entry(r.user_id.clone()).or_default() += 1;
            *items.entry(r.item_id.clone()).or_default() += 1;
        }
        let before = records.len();
        records.retain(|r| users[&r.user_id] >= k && items[&r.item_id] >= k);
        if records.len() == before {
            return records;
        }
    }
}

fn random_log(seed: u64, users: usize, items: usize, per_user: std::ops::RangeInclusive<usize>) -> Vec<InteractionRecord> {
    let mut rng = seeded(seed);
    let mut out = Vec::new();
    for u in 0..users {
        for t in 0..rng.random_range(per_user.clone()) {
            let i = rng.random_range(0..items);
            out.push(rec(&format!("u{u:02}"), &format!("i{i:02}"), t as i64));
        }
    }
    out
}

#[test]
fn k_core_cascade_matches_iterative_deletion() {
    // ua and ub have 3 interactions each, one of them on the 2-interaction item "rare"
    let mut log = random_log(7, 20, 20, 4..=9);
    for (u, other) in [("ua", "i00"), ("ub", "i01")] {
        log.push(rec(u, "rare", 100));
        log.push(rec(u, other, 101));
        log.push(rec(u, "i02", 102));
    }
    let got = k_core_filter(log.clone(), 3).unwrap();
    assert_eq!(got, iterative_deletion(log, 3));
    let users: BTreeSet<&str> = got.iter().map(|r| r.user_id.as_str()).collect();
    assert!(!users.contains("ua") && !users.contains("ub"));
    assert!(got.iter().all(|r| r.item_id != "rare"));
    assert!(users.len() >= 15);
}

#[test]
fn k_core_random_logs_match_oracle() {
    for seed in 0..30 {
        let log = random_log(seed, 20, 20, 1..=8);
        for k in 1..=5 {
            assert_eq!(
                k_core_filter(log.clone(), k).unwrap(),
                iterative_deletion(log.clone(), k),
                "seed {seed} k {k}"
            );
        }
    }
}

fn random_dataset(seed: u64, users: usize, items: usize) -> Dataset {
    let mut rng = seeded(seed);
    Dataset::from_sequences((0..users).map(|u| {
        let n = rng.random_range(1..=15);
        let seq: Vec<String> = (0..n).map(|_| format!("i{:02}", rng.random_range(0..items))).collect();
        UserSequence::new(format!("u{u:03}"), seq, (0..n as i64).collect()).unwrap()
    }))
    .unwrap()
}

#[test]
fn cooccurrence_counts_match_pair_enumeration() {
    let ds = random_dataset(11, 100, 25);
    for window in [1, 3, 5] {
        let model = SimilarityModel::fit(&ds, window).unwrap();
        let mut want: BTreeMap<(&str, &str), u64> = BTreeMap::new();
        let mut pop: BTreeMap<&str, u64> = BTreeMap::new();
        for seq in ds.sequences() {
            let items = seq.items();
            for p in 0..items.len() {
                *pop.entry(&items[p]).or_default() += 1;
                for q in p + 1..items.len() {
                    if q - p <= window && items[p] != items[q] {
                        *want.entry((&items[p], &items[q])).or_default() += 1;
                        *want.entry((&items[q], &items[p])).or_default() += 1;
                    }
                }
            }
        }
        for a in ds.item_catalog() {
            assert_eq!(model.popularity(a), pop.get(a.as_str()).copied().unwrap_or(0));
            for b in ds.item_catalog() {
                let c = want.get(&(a.as_str(), b.as_str())).copied().unwrap_or(0);
                assert_eq!(model.count(a, b), c, "window {window} pair {a} {b}");
                let cos = c as f64 / ((pop[a.as_str()] as f64).sqrt() * (pop[b.as_str()] as f64).sqrt());
                assert!((model.cosine(a, b) - cos).abs() < 1e-12);
            }
        }
    }
}

#[test]
fn baseline_counts_match_scan() {
    let ds = random_dataset(12, 100, 20);
    let model = BaselineConfig::default().fit(&ds).unwrap();
    let mut trans: BTreeMap<(&str, &str), u64> = BTreeMap::new();
    let mut pop: BTreeMap<&str, u64> = BTreeMap::new();
    for seq in ds.sequences() {
        for w in seq.items().windows(2) {
            *trans.entry((&w[0], &w[1])).or_default() += 1;
        }
        for i in seq.items() {
            *pop.entry(i).or_default() += 1;
        }
    }
    for a in ds.item_catalog() {
        assert_eq!(model.popularity(a), pop[a.as_str()]);
        for b in ds.item_catalog() {
            assert_eq!(
                model.transition(a, b),
                trans.get(&(a.as_str(), b.as_str())).copied().unwrap_or(0)
            );
        }
    }
}

#[test]
fn popularity_only_mixture_ranks_by_popularity() {
    let ds = random_dataset(13, 60, 15);
    let model = BaselineConfig {
        weights: Weights::new(0.0, 0.0, 1.0).unwrap(),
        ..BaselineConfig::default()
    }
    .fit(&ds)
    .unwrap();
    let scores = model.score_all(&["i03", "i07"]);
    let mut by_score: Vec<usize> = (0..scores.len()).collect();
    by_score.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    let mut by_pop: Vec<usize> = (0..scores.len()).collect();
    let items = model.items();
    by_pop.sort_by(|&a, &b| model.popularity(&items[b]).cmp(&model.popularity(&items[a])).then(a.cmp(&b)));
    assert_eq!(by_score, by_pop);
}

#[test]
fn std_ranking_matches_exact_rational_sort() {
    let ds = generate(&SynthConfig {
        n_users: 1000,
        seq_len: (3, 20),
        seed: 14,
        ..SynthConfig::default()
    })
    .unwrap();
    let mut oracle: Vec<(i128, i128, String)> = ds
        .sequences()
        .map(|s| {
            let g = gaps_of(s.timestamps());
            // variance = value / m^3
            (two_pass_scaled_variance(&g), (g.len() as i128).pow(3), s.user_id().to_string())
        })
        .collect();
    oracle.sort_by(|a, b| (a.0 * b.1).cmp(&(b.0 * a.1)).then_with(|| a.2.cmp(&b.2)));
    let ranking = rank_by_std(&ds);
    let got: Vec<&str> = ranking.users().collect();
    let want: Vec<&str> = oracle.iter().map(|o| o.2.as_str()).collect();
    assert_eq!(got, want);
}

#[test]
fn interval_std_matches_numpy_value() {
    let s = sequence("u", &[0, 1, 2, 10]);
    assert!((s.interval_std() - 3.2998316455372216).abs() < 1e-12);
}

#[test]
fn partitions_split_the_ranking() {
    let ds = generate(&SynthConfig {
        n_users: 1000,
        seq_len: (3, 30),
        seed: 15,
        ..SynthConfig::default()
    })
    .unwrap();
    let max_len = ds.sequences().map(UserSequence::len).max().unwrap();
    let total = ds.n_interactions();
    for (name, p) in [("S", partition_s(&ds)), ("I", partition_i(&ds))] {
        let u: BTreeSet<&str> = p.uniform.users().collect();
        let n: BTreeSet<&str> = p.non_uniform.users().collect();
        assert!(u.is_disjoint(&n), "{name}");
        assert_eq!(u.len() + n.len(), ds.len(), "{name}");
        let max_u = p.uniform.sequences().map(|s| s.interval_std()).fold(0.0, f64::max);
        let min_n = p.non_uniform.sequences().map(|s| s.interval_std()).fold(f64::INFINITY, f64::min);
        assert!(max_u <= min_n, "{name}");
        assert_eq!(p.uniform.item_catalog(), ds.item_catalog());
    }
    let i = partition_i(&ds);
    let diff = (2 * i.uniform.n_interactions()) as i64 - total as i64;
    assert!(diff.unsigned_abs() as usize <= 2 * max_len);
    assert!(2 * i.uniform.n_interactions() >= total);
    assert_eq!(partition_s(&ds).uniform.len(), 500);
}

#[test]
fn heavy_tail_is_less_uniform_than_fixed_gaps() {
    let mean_std = |gaps: GapProfile| {
        let ds = generate(&SynthConfig {
            n_users: 500,
            gaps,
            seed: 16,
            ..SynthConfig::default()
        })
        .unwrap();
        ds.sequences().map(|s| s.interval_std()).sum::<f64>() / ds.len() as f64
    };
    let heavy = mean_std(GapProfile::HeavyTail {
        log_mu: 86_400f64.ln(),
        log_sigma: 1.5,
    });
    let uniform = mean_std(GapProfile::Uniform {
        gap: 86_400,
        jitter: 3_600,
    });
    assert!(heavy > uniform, "{heavy} vs {uniform}");
}

#[test]
fn category_switches_grow_with_gap() {
    let cfg = SynthConfig {
        seed: 17,
        ..SynthConfig::default()
    };
    let ds = generate(&cfg).unwrap();
    let mut pairs: Vec<(i64, bool)> = Vec::new();
    for s in ds.sequences() {
        for (w, t) in s.items().windows(2).zip(s.timestamps().windows(2)) {
            let switched = cfg.category_of_item(&w[0]) != cfg.category_of_item(&w[1]);
            pairs.push((t[1] - t[0], switched));
        }
    }
    pairs.sort_by_key(|p| p.0);
    let buckets = 5;
    let size = pairs.len() / buckets;
    let rates: Vec<f64> = (0..buckets)
        .map(|b| {
            let chunk = &pairs[b * size..(b + 1) * size];
            chunk.iter().filter(|p| p.1).count() as f64 / chunk.len() as f64
        })
        .collect();
    assert!(rates.windows(2).all(|w| w[0] < w[1]), "{rates:?}");
}

#[test]
fn build_sequences_orders_by_time_then_input() {
    let mut log = vec![
        rec("u1", "c", 5),
        rec("u1", "a", 1),
        rec("u1", "b", 5),
        rec("u2", "a", 3),
    ];
    let ds = build_sequences(log.clone());
    assert_eq!(ds.get("u1").unwrap().items(), &["a", "c", "b"]);
    log.shuffle(&mut seeded(1));
    assert_eq!(build_sequences(log).get("u2").unwrap().timestamps(), &[3]);
}
