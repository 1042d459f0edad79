//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

use std::path::{Path, PathBuf};
use std::process::Command;

use modclust::bench::{self, CaseSpec, ExperimentConfig, ExperimentReport, SearchDefaults};
use modclust::fuzzy::{load_fis_config, FuzzySystem, Trapezoid};
use modclust::mdg::{brute_force_optimum, modularization_factor, mq, ClusterLabels, IntraInterWeights, ModuleGraph};
use modclust::optimizer::{
    self, quality_measure, search, Algorithm, FuzzyPhaseSelector, Phase, Population, SearchConfig, SearchObserver,
    Selection,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

const CASES: [&str; 3] = ["printer_manager", "iot_controller", "layer_monitor"];

fn cases_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("cases")
}

fn random_graph(rng: &mut ChaCha8Rng, d: usize, density: f64) -> ModuleGraph {
    let mut g = ModuleGraph::new();
    for i in 0..d {
        g.add_module(&format!("m{i}")).unwrap();
    }
    for s in 0..d {
        for t in 0..d {
            if s != t && rng.random::<f64>() < density {
                g.add_edge(s, t, f64::from(rng.random_range(1u32..=3))).unwrap();
            }
        }
    }
    g
}

/// MQ by scanning every ordered module pair of a dense weight matrix, one
/// cluster at a time.
fn naive_mq(g: &ModuleGraph, labels: &[usize]) -> f64 {
    let d = g.module_count();
    let mut w = vec![vec![0.0; d]; d];
    for e in g.edges() {
        w[e.source][e.target] = e.weight;
    }
    let mut total = 0.0;
    for k in 1..=d {
        if !labels.contains(&k) {
            continue;
        }
        let (mut intra, mut inter) = (0.0, 0.0);
        for s in 0..d {
            for t in 0..d {
                let (ins, int) = (labels[s] == k, labels[t] == k);
                if ins && int {
                    intra += w[s][t];
                } else if ins != int {
                    inter += w[s][t];
                }
            }
        }
        if intra > 0.0 {
            total += intra / (intra + inter / 2.0);
        }
    }
    total
}

fn criterion_1() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0xAC1);
    let mut max_dev: f64 = 0.0;
    for gi in 0..50 {
        let d = rng.random_range(3..=7);
        let density = rng.random_range(0.1..0.6);
        let g = random_graph(&mut rng, d, density);
        let (best, best_mq) = brute_force_optimum(&g).map_err(|e| e.to_string())?;
        max_dev = max_dev.max((naive_mq(&g, best.as_slice()) - best_mq).abs());
        for _ in 0..1000 {
            let raw: Vec<usize> = (0..d).map(|_| rng.random_range(1..=d)).collect();
            let value = mq(&g, &ClusterLabels::new(raw.clone(), d).unwrap()).unwrap();
            max_dev = max_dev.max((naive_mq(&g, &raw) - value).abs());
            if value > best_mq + 1e-12 {
                return Err(format!("graph {gi}: labeling {raw:?} has MQ {value} > optimum {best_mq}"));
            }
        }
    }
    if max_dev > 1e-12 {
        return Err(format!("mq deviates from the naive oracle by {max_dev:e}"));
    }
    Ok(format!("50 graphs x 1000 labelings, max |mq - naive| = {max_dev:e}"))
}

fn criterion_2() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0xAC2);
    let fis = FuzzySystem::default_controller();
    let mut worst = usize::MAX;
    for gi in 0..10 {
        let d = rng.random_range(3..=6);
        let g = random_graph(&mut rng, d, 0.35);
        let (_, optimum) = brute_force_optimum(&g).unwrap();
        let hits = (0..20u64)
            .filter(|&seed| {
                let config = SearchConfig {
                    seed,
                    algorithm: Algorithm::Atlbo,
                    ..SearchConfig::default()
                };
                optimizer::run(&g, &config, Some(&fis)).unwrap().best_mq >= optimum - 1e-12
            })
            .count();
        worst = worst.min(hits);
        if hits < 18 {
            return Err(format!("graph {gi} (D={d}): optimum reached in {hits}/20 runs"));
        }
    }
    Ok(format!("10 graphs, D <= 6: worst graph reached the optimum in {worst}/20 runs"))
}

fn case_experiment() -> ExperimentConfig {
    ExperimentConfig {
        cases: CASES
            .iter()
            .map(|name| CaseSpec {
                name: name.to_string(),
                mdg: cases_dir().join(format!("{name}.mdg")),
                pop_size: None,
                max_evals: None,
            })
            .collect(),
        algorithms: vec![Algorithm::Tlbo, Algorithm::Atlbo],
        runs: 20,
        base_seed: 1,
        search: SearchDefaults {
            pop_size: 40,
            max_evals: 5000,
        },
        fis_path: None,
        output_dir: PathBuf::from("unused"),
    }
}

fn criterion_3(report: &ExperimentReport) -> Outcome {
    let mut wins = 0;
    let mut detail = Vec::new();
    for case in CASES {
        let mean = |a: Algorithm| {
            report
                .summaries
                .iter()
                .find(|s| s.case == case && s.algorithm == a)
                .map(|s| s.stats.mean)
                .unwrap()
        };
        let (tlbo, atlbo) = (mean(Algorithm::Tlbo), mean(Algorithm::Atlbo));
        if atlbo >= tlbo {
            wins += 1;
        }
        detail.push(format!("{case}: atlbo {atlbo:.6} vs tlbo {tlbo:.6}"));
    }
    let detail = detail.join("; ");
    if wins >= 2 {
        Ok(format!("ATLBO mean >= TLBO mean on {wins}/3 cases ({detail})"))
    } else {
        Err(format!("ATLBO mean >= TLBO mean on only {wins}/3 cases ({detail})"))
    }
}

fn criterion_4(report: &ExperimentReport) -> Outcome {
    for r in &report.runs {
        let res = &r.result;
        let tag = format!("{} {} run {}", r.case, r.algorithm, r.run);
        if res.evals_used != 5000 {
            return Err(format!("{tag}: evals_used = {}", res.evals_used));
        }
        if res.phase_trace.len() + 40 != res.evals_used {
            return Err(format!("{tag}: trace does not account for every evaluation"));
        }
        let per_sweep = match r.algorithm {
            Algorithm::Tlbo => 80,
            Algorithm::Atlbo => 40,
        };
        let full_sweeps = (5000 - 40) / per_sweep;
        for it in 0..full_sweeps {
            let count = res.phase_trace.iter().filter(|p| p.iteration == it).count();
            if count != per_sweep {
                return Err(format!("{tag}: sweep {it} used {count} evaluations, expected {per_sweep}"));
            }
        }
        if r.algorithm == Algorithm::Tlbo {
            let alternates = res
                .phase_trace
                .chunks(2)
                .all(|c| c[0].phase == Phase::Teacher && c.get(1).is_none_or(|p| p.phase == Phase::Learner));
            if !alternates {
                return Err(format!("{tag}: TLBO trace does not alternate teacher/learner"));
            }
        }
    }
    Ok(format!(
        "{} runs used exactly 5000 evaluations; TLBO sweeps 80, ATLBO sweeps 40",
        report.runs.len()
    ))
}

/// Centroid of the max of clipped shapes on a uniform midpoint grid.
fn fine_grid_cog(terms: &[(Trapezoid, f64)], step: f64) -> f64 {
    let cells = (100.0 / step).round() as usize;
    let (mut moment, mut area) = (0.0, 0.0);
    for i in 0..cells {
        let y = (i as f64 + 0.5) * step;
        let g = terms.iter().map(|(t, a)| a.min(t.membership(y))).fold(0.0, f64::max);
        moment += y * g;
        area += g;
    }
    moment / area
}

fn criterion_5() -> Outcome {
    let sym = load_fis_config(
        "[input x]\nall = 0 0 100 100\n[output y]\nmid = 40 45 55 60\nedge = 0 0 5 10\n[rules]\n\
         IF x IS all THEN y IS mid\nIF x IS all THEN y IS edge\n",
    )
    .map_err(|e| e.to_string())?;
    let axis = sym.defuzzify_cog(&[1.0, 0.0]).ok_or("symmetric COG undefined")?;
    if (axis - 50.0).abs() > 0.1 {
        return Err(format!("symmetric trapezoid COG = {axis}, expected 50 +- 0.1"));
    }

    let fis = FuzzySystem::default_controller();
    let global = *fis.output().term("global").unwrap();
    let local = *fis.output().term("local").unwrap();
    // R1 targets global, R2 targets local
    let mixed = fis.defuzzify_cog(&[0.5, 0.5, 0.0, 0.0]).ok_or("mixed COG undefined")?;
    let oracle = fine_grid_cog(&[(global, 0.5), (local, 0.5)], 0.001);
    if (mixed - oracle).abs() > 0.5 {
        return Err(format!("mixed COG {mixed} vs fine-grid oracle {oracle}"));
    }

    let mut shapes: Vec<Trapezoid> = fis
        .inputs()
        .iter()
        .chain(std::iter::once(fis.output()))
        .flat_map(|v| v.terms().iter().map(|(_, t)| *t))
        .collect();
    shapes.push(Trapezoid::new(40.0, 45.0, 55.0, 60.0).unwrap());
    shapes.push(Trapezoid::new(10.0, 10.0, 10.0, 10.0).unwrap());
    shapes.push(Trapezoid::new(0.0, 50.0, 50.0, 100.0).unwrap());
    for t in &shapes {
        for k in 0..=400 {
            let x = k as f64 * 0.25;
            let m = t.membership(x);
            if !(0.0..=1.0).contains(&m) {
                return Err(format!("membership {m} of {:?} at {x}", t.params()));
            }
        }
    }
    Ok(format!(
        "symmetric COG {axis:.4}; mixed COG {mixed:.4} vs oracle {oracle:.4}; {} shapes swept",
        shapes.len()
    ))
}

#[derive(Default)]
struct MeasureAudit {
    decisions: usize,
    violations: Vec<String>,
}

impl SearchObserver for MeasureAudit {
    fn on_selection(&mut self, population: &Population, index: usize, selection: &Selection) {
        self.decisions += 1;
        let Some(m) = selection.measures else {
            self.violations.push("ATLBO decision without measures".into());
            return;
        };
        for (name, v) in [("Qm", m.quality), ("Im", m.intensification), ("Dm", m.diversification)] {
            if !(0.0..=100.0).contains(&v) {
                self.violations.push(format!("{name} = {v}"));
            }
        }
        let (min, max) = (population.min_fitness(), population.max_fitness());
        if max > min {
            if quality_measure(population, population.best_index()) != 100.0 {
                self.violations.push("Qm at incumbent best != 100".into());
            }
            let worst = (0..population.len())
                .find(|&i| population.get(i).fitness() == min)
                .unwrap();
            if quality_measure(population, worst) != 0.0 {
                self.violations.push("Qm at incumbent worst != 0".into());
            }
            let f = population.get(index).fitness();
            if (f == max && m.quality != 100.0) || (f == min && m.quality != 0.0) {
                self.violations.push(format!("logged Qm {} inconsistent with fitness {f}", m.quality));
            }
        }
    }
}

fn criterion_6() -> Outcome {
    let fis = FuzzySystem::default_controller();
    let mut audit = MeasureAudit::default();
    for case in CASES {
        let text = std::fs::read_to_string(cases_dir().join(format!("{case}.mdg"))).unwrap();
        let g = modclust::parse_mdg(&text).unwrap();
        for seed in 1..=20u64 {
            let config = SearchConfig {
                seed,
                algorithm: Algorithm::Atlbo,
                ..SearchConfig::default()
            };
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut selector = FuzzyPhaseSelector::new(&fis).unwrap();
            search(&g, &config, &mut selector, &mut rng, &mut audit).map_err(|e| e.to_string())?;
        }
    }
    if let Some(v) = audit.violations.first() {
        return Err(format!("{} violations, first: {v}", audit.violations.len()));
    }
    Ok(format!("{} logged decisions within bounds", audit.decisions))
}

fn strip_last_column(csv: &str) -> String {
    csv.lines()
        .map(|l| l.rsplit_once(',').map_or(l, |(head, _)| head))
        .collect::<Vec<_>>()
        .join("\n")
}

fn criterion_7() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut config = String::from("runs = 20\nbase_seed = 1\nalgorithms = [\"tlbo\", \"atlbo\"]\noutput_dir = \"out\"\n");
    for case in CASES {
        let path = cases_dir().join(format!("{case}.mdg"));
        config.push_str(&format!("[[case]]\nname = \"{case}\"\nmdg = {:?}\n", path.display().to_string()));
    }
    let config_path = dir.path().join("experiment.toml");
    std::fs::write(&config_path, config).unwrap();

    let run_once = || -> Result<(String, String), String> {
        let status = Command::new(env!("CARGO_BIN_EXE_modclust"))
            .args(["bench", "--config"])
            .arg(&config_path)
            .output()
            .map_err(|e| e.to_string())?;
        if !status.status.success() {
            return Err(String::from_utf8_lossy(&status.stderr).into_owned());
        }
        let read = |f: &str| std::fs::read_to_string(dir.path().join("out").join(f)).map_err(|e| e.to_string());
        Ok((strip_last_column(&read("runs.csv")?), read("summary.csv")?))
    };
    let (runs_a, summary_a) = run_once()?;
    let (runs_b, summary_b) = run_once()?;
    if runs_a != runs_b {
        return Err("per-run CSVs differ".into());
    }
    if summary_a != summary_b {
        return Err("summary CSVs differ".into());
    }
    Ok(format!(
        "two bench invocations agree on {} per-run rows and the summary",
        runs_a.lines().count() - 1
    ))
}

fn criterion_8() -> Outcome {
    let mf = |intra, inter| modularization_factor(IntraInterWeights { intra, inter });
    for j in [0.0, 1.0, 5.0, 1e6] {
        if mf(0.0, j) != 0.0 {
            return Err(format!("MF(0, {j}) != 0"));
        }
    }
    let two_thirds = mf(2.0, 2.0);
    if (two_thirds - 2.0 / 3.0).abs() > 1e-15 {
        return Err(format!("MF(2, 2) = {two_thirds}"));
    }
    let g = modclust::parse_mdg("A B\nB A").unwrap();
    let (labels, value) = brute_force_optimum(&g).unwrap();
    if labels.as_slice() != [1, 1] || value != 1.0 {
        return Err(format!("two-module optimum {labels} with MQ {value}"));
    }
    Ok("MF(0, j) = 0, MF(2, 2) = 2/3, two-module optimum [1, 1] with MQ 1".into())
}

fn main() {
    let report = bench::execute(&case_experiment());
    let report_outcome = |f: fn(&ExperimentReport) -> Outcome| match &report {
        Ok(r) => f(r),
        Err(e) => Err(format!("experiment failed: {e}")),
    };

    let results: Vec<(&str, Outcome)> = vec![
        ("AC1 oracle equivalence", criterion_1()),
        ("AC2 search reaches the optimum at desk scale", criterion_2()),
        ("AC3 ATLBO mean >= TLBO mean on case graphs", report_outcome(criterion_3)),
        ("AC4 budget exactness", report_outcome(criterion_4)),
        ("AC5 fuzzy engine numerics", criterion_5()),
        ("AC6 measure bounds", criterion_6()),
        ("AC7 bench determinism", criterion_7()),
        ("AC8 MQ spot values", criterion_8()),
    ];

    let mut failed = 0;
    for (name, outcome) in &results {
        match outcome {
            Ok(detail) => println!("[PASS] {name}: {detail}"),
            Err(detail) => {
                failed += 1;
                println!("[FAIL] {name}: {detail}");
            }
        }
    }
    println!("{} passed, {failed} failed", results.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
