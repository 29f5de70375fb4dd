//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if a gating criterion fails.

use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use tpso::adt::train_adt;
use tpso::dataset::{self, Dataset};
use tpso::experiment::{self, ExperimentConfig, ExperimentReport, Method};
use tpso::fscore::feature_score;
use tpso::search::{pso_search, SwarmConfig};
use tpso::stats::wilcoxon_signed_rank;
use tpso::synth;
use tpso::tpso::{local_max_reached, run_tpso, FoldOutcome, TpsoConfig, TraceEntry, TuneTrace};
use tpso::FeatureMask;

const SCORE_REL_TOL: f64 = 1e-12;
const PSO_MIN_HITS: usize = 95;
const STUMP_MAX_ACC: f64 = 0.75;
const PLANTED_MIN_AM: f64 = 0.98;
const PLANTED_MIN_FOLDS: usize = 9;
const WDBC_MIN_AM: f64 = 93.0;
const WDBC_MAX_FM: f64 = 18.0;
const HEART_MIN_AM: f64 = 78.0;
const DOMINANCE_SLACK: f64 = 1.0;
const DOMINANCE_MIN_DATASETS: usize = 4;
const WILCOXON_P_TOL: f64 = 1e-12;
const BENCH_MIN_R2: f64 = 0.7;

struct Outcome {
    pass: bool,
    detail: String,
}

fn data_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data")
}

fn load(name: &str) -> Dataset {
    let path = data_dir().join(format!("{name}.csv"));
    let ds = dataset::load_csv(&path, "class", None)
        .unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    dataset::impute(&ds).unwrap()
}

fn direct_median(v: &[f64]) -> f64 {
    let mut s = v.to_vec();
    s.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = s.len();
    if n % 2 == 1 {
        s[n / 2]
    } else {
        (s[n / 2 - 1] + s[n / 2]) / 2.0
    }
}

fn direct_score(x: &[f64], y: &[bool]) -> f64 {
    let pos: Vec<f64> = x
        .iter()
        .zip(y)
        .filter(|(_, &l)| l)
        .map(|(&v, _)| v)
        .collect();
    let neg: Vec<f64> = x
        .iter()
        .zip(y)
        .filter(|(_, &l)| !l)
        .map(|(&v, _)| v)
        .collect();
    let (m, mp, mn) = (direct_median(x), direct_median(&pos), direct_median(&neg));
    let v1 = (mp - m).powi(2) + (mn - m).powi(2);
    let sp: f64 = pos.iter().map(|v| (v - mp).powi(2)).sum::<f64>() / (pos.len() as f64 - 1.0);
    let sn: f64 = neg.iter().map(|v| (v - mn).powi(2)).sum::<f64>() / (neg.len() as f64 - 1.0);
    let v2 = sp + sn;
    if v2 == 0.0 {
        0.0
    } else {
        v1 / v2
    }
}

fn criterion_1() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let mut worst = 0.0f64;
    let mut checked = 0;
    for _ in 0..50 {
        let n = rng.gen_range(4..=8);
        let d = rng.gen_range(1..=4);
        let n_pos = rng.gen_range(2..=n - 2);
        let labels: Vec<bool> = (0..n).map(|i| i < n_pos).collect();
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|_| {
                (0..d)
                    .map(|_| {
                        if rng.gen_bool(0.3) {
                            rng.gen_range(0..4) as f64
                        } else {
                            rng.gen_range(-10.0..10.0)
                        }
                    })
                    .collect()
            })
            .collect();
        let ds = Dataset::from_rows("r", &rows, labels.clone()).unwrap();
        for j in 0..d {
            let col: Vec<f64> = rows.iter().map(|r| r[j]).collect();
            let expect = direct_score(&col, &labels);
            let got = feature_score(&ds, j).unwrap();
            let rel = if expect == 0.0 {
                got.abs()
            } else {
                ((got - expect) / expect).abs()
            };
            worst = worst.max(rel);
            checked += 1;
        }
    }
    Outcome {
        pass: worst <= SCORE_REL_TOL,
        detail: format!("{checked} columns, worst relative error {worst:.2e}"),
    }
}

fn criterion_2() -> Outcome {
    let mut hits = 0;
    for seed in 0..100u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(1000 + seed);
        let table: Vec<f64> = (0..16).map(|_| rng.gen::<f64>()).collect();
        let optimum = (1..16usize)
            .max_by(|&a, &b| table[a].total_cmp(&table[b]))
            .unwrap();
        let index = |m: &FeatureMask| m.indices().iter().map(|&j| 1usize << j).sum::<usize>();
        let eval = |m: &FeatureMask| Ok(table[index(m)]);
        let cfg = SwarmConfig {
            n_particles: 20,
            iterations: 100,
            seed,
            ..SwarmConfig::default()
        };
        let res = pso_search(4, &cfg, &eval).unwrap();
        if index(&res.best_mask) == optimum {
            hits += 1;
        }
    }
    Outcome {
        pass: hits >= PSO_MIN_HITS,
        detail: format!("optimum found in {hits}/100 seeds"),
    }
}

fn best_stump_accuracy(ds: &Dataset) -> f64 {
    let labels = ds.labels();
    let n = ds.n_records() as f64;
    let mut best = 0.0f64;
    for col in ds.columns() {
        let mut values = col.values.clone();
        values.sort_by(|a, b| a.total_cmp(b));
        values.dedup();
        let mut cuts = vec![values[0] - 1.0];
        cuts.extend(values.windows(2).map(|w| (w[0] + w[1]) / 2.0));
        for t in cuts {
            let agree = col
                .values
                .iter()
                .zip(labels)
                .filter(|(&v, &l)| (v <= t) == l)
                .count() as f64;
            best = best.max(agree / n).max(1.0 - agree / n);
        }
    }
    best
}

fn criterion_3() -> Outcome {
    let rows: Vec<Vec<f64>> = (0..20).map(|i| vec![i as f64]).collect();
    let labels: Vec<bool> = (0..20).map(|i| i >= 9).collect();
    let line = Dataset::from_rows("line", &rows, labels).unwrap();
    let m = train_adt(&line, 1).unwrap();
    let line_acc = m.accuracy(&line).unwrap();

    let xor = synth::xor(5, 0.1).unwrap();
    let mx = train_adt(&xor, 10).unwrap();
    let xor_acc = mx.accuracy(&xor).unwrap();
    let stump = best_stump_accuracy(&xor);
    Outcome {
        pass: line_acc == 1.0 && xor_acc == 1.0 && stump <= STUMP_MAX_ACC,
        detail: format!(
            "separable 1 round acc {line_acc:.3}; xor {} rounds acc {xor_acc:.3}; best stump {stump:.3}",
            mx.boosting_rounds
        ),
    }
}

fn trace(values: &[f64]) -> TuneTrace {
    TuneTrace {
        entries: values
            .iter()
            .enumerate()
            .map(|(i, &v)| TraceEntry {
                swarm_size: 5 + i,
                fitness: v,
                mask: FeatureMask::full(1),
                test_accuracy: v,
                m1_over_m2: 0.5,
            })
            .collect(),
    }
}

fn criterion_4() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut agree = 0;
    let mut fired = 0;
    for _ in 0..1000 {
        // two-decimal values make equal differences common
        let v: Vec<f64> = (0..4)
            .map(|_| (rng.gen_range(0..100) as f64) / 100.0)
            .collect();
        let d1 = v[1] - v[0];
        let d2 = v[2] - v[1];
        let d3 = v[3] - v[2];
        let expect = d1 > d2 && d2 > d3 && d3 - d2 < 0.0;
        let got = local_max_reached(&trace(&v));
        if got == expect {
            agree += 1;
        }
        fired += got as usize;
    }
    let mut short_fires = 0;
    for len in 0..4 {
        for _ in 0..100 {
            let v: Vec<f64> = (0..len).map(|_| rng.gen::<f64>()).collect();
            short_fires += local_max_reached(&trace(&v)) as usize;
        }
    }
    Outcome {
        pass: agree == 1000 && short_fires == 0,
        detail: format!("{agree}/1000 agree ({fired} fired); {short_fires} fires on < 4 points"),
    }
}

fn criterion_5() -> Outcome {
    let mut worst_am = 1.0f64;
    let mut worst_hits = usize::MAX;
    for seed in 0..5u64 {
        let planted = (3 * seed as usize + 2) % 10;
        let ds = synth::planted(100, 10, planted, 500 + seed).unwrap();
        let cfg = TpsoConfig {
            seed,
            ..TpsoConfig::default()
        };
        let r = run_tpso(&ds, &cfg).unwrap();
        let hits = r
            .per_fold
            .iter()
            .filter(|f| matches!(&f.outcome, FoldOutcome::Ok(x) if x.mask.get(planted)))
            .count();
        worst_am = worst_am.min(r.accuracy_mean);
        worst_hits = worst_hits.min(hits);
    }
    Outcome {
        pass: worst_am >= PLANTED_MIN_AM && worst_hits >= PLANTED_MIN_FOLDS,
        detail: format!(
            "5 seeds: worst AM {worst_am:.4}, worst planted-feature folds {worst_hits}/10"
        ),
    }
}

fn criterion_6() -> Outcome {
    let seed = 2024;
    let cfg = ExperimentConfig {
        seed: Some(seed),
        ..ExperimentConfig::default()
    };
    let mut lines = Vec::new();
    let mut dominated = 0;
    let mut pass = true;
    let names = ["wdbc", "heart", "australian", "german", "ionosphere"];
    for name in names {
        let ds = load(name);
        let t = experiment::run_method(&ds, Method::Tpso, &cfg, seed).unwrap();
        let b = experiment::run_method(&ds, Method::AdtOnly, &cfg, seed).unwrap();
        let (am, fm, base) = (
            100.0 * t.accuracy_mean,
            t.feature_mean,
            100.0 * b.accuracy_mean,
        );
        if am >= base - DOMINANCE_SLACK {
            dominated += 1;
        }
        match name {
            "wdbc" => pass &= am >= WDBC_MIN_AM && fm <= WDBC_MAX_FM,
            "heart" => pass &= am >= HEART_MIN_AM,
            _ => {}
        }
        lines.push(format!("{name} AM {am:.2} FM {fm:.1} (adt_only {base:.2})"));
    }
    pass &= dominated >= DOMINANCE_MIN_DATASETS;
    Outcome {
        pass,
        detail: format!(
            "{}; TPSO within 1pt of adt_only on {dominated}/5",
            lines.join("; ")
        ),
    }
}

fn brute_force_wilcoxon(d: &[f64]) -> (f64, f64, f64) {
    let nz: Vec<f64> = d.iter().copied().filter(|&x| x != 0.0).collect();
    let n = nz.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| nz[a].abs().total_cmp(&nz[b].abs()));
    let mut ranks = vec![0.0; n];
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && nz[order[j + 1]].abs() == nz[order[i]].abs() {
            j += 1;
        }
        let r = (i + j) as f64 / 2.0 + 1.0;
        for k in i..=j {
            ranks[order[k]] = r;
        }
        i = j + 1;
    }
    let w_plus: f64 = (0..n).filter(|&k| nz[k] > 0.0).map(|k| ranks[k]).sum();
    let total: f64 = ranks.iter().sum();
    let stat = w_plus.min(total - w_plus);
    let mut extreme = 0u64;
    for signs in 0u64..(1 << n) {
        let s: f64 = (0..n)
            .filter(|&k| signs >> k & 1 == 1)
            .map(|k| ranks[k])
            .sum();
        if s.min(total - s) <= stat + 1e-9 {
            extreme += 1;
        }
    }
    (w_plus, stat, extreme as f64 / (1u64 << n) as f64)
}

fn criterion_7() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let (mut checked, mut mismatches) = (0, 0);
    let mut worst_p = 0.0f64;
    while checked < 200 {
        let n = rng.gen_range(5..=12);
        let pairs: Vec<(f64, f64)> = (0..n)
            .map(|_| {
                let a = rng.gen_range(0..12) as f64;
                let b = rng.gen_range(0..12) as f64;
                (a, b)
            })
            .collect();
        let d: Vec<f64> = pairs.iter().map(|(a, b)| a - b).collect();
        if d.iter().filter(|&&x| x != 0.0).count() < 1 {
            continue;
        }
        let (w_plus, stat, p) = brute_force_wilcoxon(&d);
        let r = wilcoxon_signed_rank(&pairs).unwrap();
        worst_p = worst_p.max((r.p_value - p).abs());
        if r.w_plus != w_plus || r.statistic != stat || (r.p_value - p).abs() > WILCOXON_P_TOL {
            mismatches += 1;
        }
        checked += 1;
    }
    let ten: Vec<(f64, f64)> = (0..10).map(|i| (0.9 + 0.01 * i as f64, 0.8)).collect();
    let r = wilcoxon_signed_rank(&ten).unwrap();
    let table_row = (r.w_plus, r.w_minus) == (55.0, 0.0);
    Outcome {
        pass: mismatches == 0 && table_row,
        detail: format!(
            "{checked} sets, {mismatches} mismatches, worst |dp| {worst_p:.1e}; all-positive n=10 rank sums ({}, {})",
            r.w_plus, r.w_minus
        ),
    }
}

fn criterion_8() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let data = data_dir().join("heart.csv");
    let mut reports = Vec::new();
    for (i, jobs) in ["1", "8", "1", "8"].iter().enumerate() {
        let out = dir.path().join(format!("run{i}"));
        let status = Command::new(env!("CARGO_BIN_EXE_tpso"))
            .args(["run", "--data"])
            .arg(&data)
            .args([
                "--methods",
                "tpso,adt_only",
                "--seed",
                "31",
                "--jobs",
                jobs,
                "--out",
            ])
            .arg(&out)
            .output()
            .unwrap();
        if !status.status.success() {
            return Outcome {
                pass: false,
                detail: format!(
                    "run {i} failed: {}",
                    String::from_utf8_lossy(&status.stderr)
                ),
            };
        }
        let report = ExperimentReport::load(&out.join("report.json")).unwrap();
        reports.push(report.without_timings().to_json().unwrap());
    }
    let identical = reports.iter().all(|r| r == &reports[0]);
    Outcome {
        pass: identical,
        detail: format!("heart tpso+adt_only at --jobs 1,8,1,8: reports identical = {identical}"),
    }
}

fn criterion_9() -> Outcome {
    let sizes = [500, 1000, 2000, 4000, 8000];
    let r = experiment::run_bench(&sizes, 15, 9, &experiment::bench_config(9)).unwrap();
    let points: Vec<String> = r
        .points
        .iter()
        .map(|p| format!("{}:{:.2}s", p.size, p.seconds))
        .collect();
    Outcome {
        pass: r.fit.r_squared >= BENCH_MIN_R2,
        detail: format!(
            "{}; slope {:.3e} s/record, r2 {:.3}",
            points.join(" "),
            r.fit.slope,
            r.fit.r_squared
        ),
    }
}

struct Criterion {
    id: u32,
    name: &'static str,
    budget: Duration,
    gating: bool,
    run: fn() -> Outcome,
}

fn main() {
    let criteria = [
        Criterion {
            id: 1,
            name: "feature score oracle",
            budget: Duration::from_secs(1),
            gating: true,
            run: criterion_1,
        },
        Criterion {
            id: 2,
            name: "PSO optimum recovery",
            budget: Duration::from_secs(10),
            gating: true,
            run: criterion_2,
        },
        Criterion {
            id: 3,
            name: "ADT correctness",
            budget: Duration::from_secs(5),
            gating: true,
            run: criterion_3,
        },
        Criterion {
            id: 4,
            name: "stopping rule",
            budget: Duration::from_secs(1),
            gating: true,
            run: criterion_4,
        },
        Criterion {
            id: 5,
            name: "planted feature",
            budget: Duration::from_secs(120),
            gating: true,
            run: criterion_5,
        },
        Criterion {
            id: 6,
            name: "real datasets",
            budget: Duration::from_secs(30 * 60),
            gating: true,
            run: criterion_6,
        },
        Criterion {
            id: 7,
            name: "Wilcoxon exactness",
            budget: Duration::from_secs(30),
            gating: true,
            run: criterion_7,
        },
        Criterion {
            id: 8,
            name: "determinism",
            budget: Duration::from_secs(5 * 60),
            gating: true,
            run: criterion_8,
        },
        Criterion {
            id: 9,
            name: "scalability (informational)",
            budget: Duration::from_secs(10 * 60),
            gating: false,
            run: criterion_9,
        },
    ];
    let filter: Vec<String> = std::env::args()
        .skip(1)
        .filter(|a| !a.starts_with('-'))
        .collect();
    let mut failed = 0;
    for c in &criteria {
        if !filter.is_empty()
            && !filter
                .iter()
                .any(|f| c.id.to_string() == *f || c.name.contains(f.as_str()))
        {
            continue;
        }
        let start = Instant::now();
        let outcome = (c.run)();
        let elapsed = start.elapsed();
        let in_time = elapsed <= c.budget;
        let pass = outcome.pass && in_time;
        let tag = if pass { "PASS" } else { "FAIL" };
        println!(
            "[{tag}] #{} {}: {} ({:.1}s, budget {}s{})",
            c.id,
            c.name,
            outcome.detail,
            elapsed.as_secs_f64(),
            c.budget.as_secs(),
            if in_time { "" } else { ", over budget" }
        );
        if !pass && c.gating {
            failed += 1;
        }
    }
    if failed > 0 {
        println!("{failed} gating criteria failed");
        std::process::exit(1);
    }
}
