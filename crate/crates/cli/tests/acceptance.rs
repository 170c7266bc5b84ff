//! Acceptance criteria 1-10, one PASS/FAIL line each.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use std::time::Instant;

use lipext_cli::instance::load_instance;
use lipext_cli::{
    generate_instance, run_verification_suite, Family, Instance, SubspaceRule, SuiteConfig,
    SuiteOutcome,
};
use lipext_core::fields::derive_seed;
use lipext_core::lift::explicit_log_constant;
use lipext_core::{
    bound_constants, dilation_bound, dilation_estimate, doubling_constant, gen_lipschitz_field,
    lifted_ball_volume, ExtensionOperator, FieldFamily, FiniteMetricSpace, LiftConfig, Norm,
    Subspace, SubspaceMeasure, VectorField,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tempfile::TempDir;

const SEED: u64 = 20240601;

fn repo_root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn corpus_paths() -> Vec<PathBuf> {
    let mut paths: Vec<PathBuf> = std::fs::read_dir(repo_root().join("corpus"))
        .expect("corpus directory")
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|e| e == "json"))
        .collect();
    paths.sort();
    paths
}

struct Corpus {
    instances: Vec<Instance>,
    outcomes: Vec<SuiteOutcome>,
}

fn lift_for(inst: &Instance) -> LiftConfig {
    let d = doubling_constant(&inst.space, &inst.measure).value;
    LiftConfig::for_doubling(d).unwrap()
}

struct Verdict {
    passed: bool,
    summary: String,
}

fn verdict(passed: bool, summary: impl Into<String>) -> Verdict {
    Verdict {
        passed,
        summary: summary.into(),
    }
}

/// Aggregate one named suite check over the corpus.
fn suite_check(corpus: &Corpus, names: &[&str]) -> (bool, usize, f64, String) {
    let mut ok = true;
    let mut cases = 0;
    let mut worst = f64::INFINITY;
    let mut first_failure = String::new();
    for (inst, out) in corpus.instances.iter().zip(&corpus.outcomes) {
        for name in names {
            let c = out.check(name).unwrap_or_else(|| panic!("missing check {name}"));
            cases += c.cases;
            if let Some(s) = c.worst_slack {
                worst = worst.min(s);
            }
            if !c.passed {
                ok = false;
                if first_failure.is_empty() {
                    first_failure = format!(" first failure: {} {c}", inst.name);
                }
            }
        }
    }
    (ok, cases, worst, first_failure)
}

fn exactness(corpus: &Corpus) -> Verdict {
    let started = Instant::now();
    let mut fields = 0;
    let mut max_err: f64 = 0.0;
    for inst in &corpus.instances {
        let sub = inst.subspace();
        let op = ExtensionOperator::new(&inst.space, &inst.measure, &lift_for(inst)).unwrap();
        for t in 0..100 {
            let f = if sub.len() >= 2 {
                let family = FieldFamily::ALL[t % 4];
                gen_lipschitz_field(&inst.space, sub, family, 2, Norm::L2, derive_seed(SEED, t as u64))
                    .unwrap()
            } else {
                let mut rng = ChaCha8Rng::seed_from_u64(t as u64);
                VectorField::from_flat(2, vec![rng.random(), rng.random()], Norm::L2).unwrap()
            };
            let ef = op.apply(&f).unwrap();
            for (pos, &p) in sub.indices().iter().enumerate() {
                max_err = max_err.max(Norm::L2.distance(ef.value(p), f.value(pos)));
            }
            fields += 1;
        }
    }
    let secs = started.elapsed().as_secs_f64();
    verdict(
        max_err == 0.0 && secs < 10.0,
        format!(
            "{fields} fields on {} instances, max |Ef - f| on subspace = {max_err:e}, {secs:.2}s",
            corpus.instances.len()
        ),
    )
}

fn linearity(corpus: &Corpus) -> Verdict {
    let (ok, cases, worst, fail) = suite_check(corpus, &["linearity"]);
    verdict(ok, format!("{cases} combinations, worst relative slack {worst:.6}{fail}"))
}

fn norm_bound(corpus: &Corpus) -> Verdict {
    let mut ok = true;
    let mut lines = Vec::new();
    let c = explicit_log_constant();
    let mut max_lower: f64 = 0.0;
    for (inst, out) in corpus.instances.iter().zip(&corpus.outcomes) {
        let row = &out.row;
        let check = out.check("norm_bound").unwrap();
        ok &= check.passed;
        // the explicit bound grows at most affinely in log2 D
        ok &= row.prop_bound <= c * (row.doubling_constant.log2() + 2.0) * (1.0 + 1e-9);
        if let Some(lower) = row.norm_lower_bound {
            max_lower = max_lower.max(lower);
            if row.doubling_constant == 2.0 {
                let expected = bound_constants(&LiftConfig::with_dimension(9, 2.0).unwrap()).prop_bound;
                ok &= row.lift_dimension == 9 && (row.prop_bound - expected).abs() <= 1e-6 * expected;
                lines.push(format!(
                    "{}: D=2 lower {lower:.4} <= {:.4e} (gap {:.2e})",
                    inst.name,
                    row.prop_bound,
                    row.prop_bound / lower
                ));
            }
        }
    }
    verdict(
        ok,
        format!(
            "largest lower bound {max_lower:.4} over the corpus; {}",
            lines.join("; ")
        ),
    )
}

fn dilation(corpus: &Corpus) -> Verdict {
    let (mut ok, _, _, fail) = suite_check(corpus, &["dilation"]);
    let worst = corpus
        .outcomes
        .iter()
        .filter_map(|o| o.row.dilation_estimate)
        .fold(0.0, f64::max);
    ok &= worst <= dilation_bound();

    // singleton subspace: l^N at the subspace point, ((4l - 1)/3)^N just
    // outside the admissible boundary for the far point
    let mut analytic = Vec::new();
    for n in [6usize, 9, 12] {
        let l = 1.0 + 1.0 / n as f64;
        let cfg = LiftConfig::with_dimension(n, 1.0).unwrap();
        let one = FiniteMetricSpace::from_coordinates(&[vec![0.0]], Norm::L2).unwrap();
        let mu = SubspaceMeasure::counting(Subspace::full(&one));
        let inner = dilation_estimate(&one, &mu, &cfg, l, 8, SEED).unwrap().value;
        let two = FiniteMetricSpace::from_coordinates(&[vec![0.0], vec![3.0]], Norm::L2).unwrap();
        let mu2 = SubspaceMeasure::counting(Subspace::new(&two, vec![0]).unwrap());
        let far = dilation_estimate(&two, &mu2, &cfg, l, 8, SEED).unwrap().value;
        let (ei, ef) = (l.powi(n as i32), ((4.0 * l - 1.0) / 3.0).powi(n as i32));
        let good = (inner - ei).abs() <= 0.01 * ei && (far - ef).abs() <= 0.01 * ef;
        ok &= good;
        analytic.push(format!("N={n} {inner:.4}/{ei:.4} {far:.4}/{ef:.4}"));
    }

    let big = generate_instance(
        Family::RandomBall,
        &"n=1000,d=2".parse().unwrap(),
        SubspaceRule::RandomP,
        SEED,
    )
    .unwrap()
    .validate()
    .unwrap();
    let started = Instant::now();
    let cfg = lift_for(&big);
    let est = dilation_estimate(&big.space, &big.measure, &cfg, bound_constants(&cfg).l, 64, SEED)
        .unwrap();
    let secs = started.elapsed().as_secs_f64();
    ok &= secs < 60.0 && est.value <= dilation_bound();

    verdict(
        ok,
        format!(
            "corpus max {worst:.4} <= {:.3}; analytic {}; 1000-point instance {:.4} in {secs:.2}s ({} radii){fail}",
            dilation_bound(),
            analytic.join(", "),
            est.value,
            est.radii_evaluated
        ),
    )
}

fn layer(corpus: &Corpus) -> Verdict {
    let (ok, cases, worst, fail) = suite_check(corpus, &["layer"]);
    let enough = corpus
        .outcomes
        .iter()
        .all(|o| o.check("layer").unwrap().cases >= 1000);
    verdict(
        ok && enough && worst >= -1e-9,
        format!("{cases} triples, worst relative slack {worst:.6}{fail}"),
    )
}

fn monte_carlo() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let coords: Vec<Vec<f64>> = (0..15)
        .map(|_| vec![rng.random_range(0.0..5.0), rng.random_range(0.0..5.0)])
        .collect();
    let space = FiniteMetricSpace::from_coordinates(&coords, Norm::L1).unwrap();
    let idx: Vec<usize> = (0..15).step_by(2).collect();
    let masses = idx.iter().map(|_| rng.random_range(0.5..2.0)).collect();
    let mu = SubspaceMeasure::new(Subspace::new(&space, idx).unwrap(), masses).unwrap();

    let mut worst: f64 = 0.0;
    for trial in 0..20 {
        let n = 1 + trial % 4;
        let cfg = LiftConfig::with_dimension(n, 1.0).unwrap();
        let center = rng.random_range(0..space.len());
        let radius = mu.subspace().nearest(&space, center).1 + rng.random_range(0.5..4.0);
        let slices: Vec<(f64, f64)> = mu
            .subspace()
            .indices()
            .iter()
            .zip(mu.masses())
            .map(|(&j, &m)| (radius - space.dist(center, j), m))
            .collect();
        let side = slices.iter().map(|s| s.0).fold(0.0, f64::max);
        let samples = 1_000_000;
        let mut hits = 0.0;
        for _ in 0..samples {
            let l1: f64 = (0..n).map(|_| rng.random_range(-side..side).abs()).sum();
            hits += slices.iter().filter(|s| l1 < s.0).map(|s| s.1).sum::<f64>();
        }
        let sampled = (2.0 * side).powi(n as i32) * hits / samples as f64;
        let exact = lifted_ball_volume(&space, &mu, &cfg, center, radius).exp();
        worst = worst.max((sampled - exact).abs() / exact);
    }

    let one = FiniteMetricSpace::from_coordinates(&[vec![0.0]], Norm::L2).unwrap();
    let single = SubspaceMeasure::counting(Subspace::full(&one));
    let mut exact_err: f64 = 0.0;
    for (n, want) in [(1, 2f64.ln()), (2, 2f64.ln()), (3, (4.0f64 / 3.0).ln())] {
        let cfg = LiftConfig::with_dimension(n, 1.0).unwrap();
        exact_err = exact_err.max((lifted_ball_volume(&one, &single, &cfg, 0, 1.0) - want).abs());
    }
    verdict(
        worst < 0.02 && exact_err <= 1e-12,
        format!("20 pairs at 1e6 samples, worst relative error {worst:.4}; unit-radius exact error {exact_err:e}"),
    )
}

fn pair_lemmas(corpus: &Corpus) -> Verdict {
    let (ok, cases, worst, fail) = suite_check(corpus, &["pair_lemmas"]);
    verdict(
        ok && worst >= -1e-9,
        format!("{cases} inequalities, worst relative slack {worst:.6}{fail}"),
    )
}

fn invariance(corpus: &Corpus) -> Verdict {
    let names = ["scale_invariance", "monotonicity", "range", "affine", "permutation"];
    let (ok, cases, _, fail) = suite_check(corpus, &names);
    verdict(ok, format!("{cases} cases over {}{fail}", names.join(", ")))
}

fn lipext(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lipext"))
        .args(args)
        .output()
        .expect("run lipext")
}

fn determinism() -> Verdict {
    let tmp = TempDir::new().unwrap();
    let instance = repo_root().join("corpus/ball-64x2-random.json");
    let mut outputs = Vec::new();
    for run in 0..2 {
        let out_path = tmp.path().join(format!("run{run}.jsonl"));
        let out = lipext(&[
            "verify",
            "--instance",
            instance.to_str().unwrap(),
            "--samples",
            "300",
            "--seed",
            "7",
            "--out",
            out_path.to_str().unwrap(),
        ]);
        outputs.push((out.status.code(), out.stdout, std::fs::read(&out_path).unwrap_or_default()));
    }
    let same = outputs[0] == outputs[1];
    verdict(
        same && outputs[0].0 == Some(0) && !outputs[0].2.is_empty(),
        format!(
            "two verify runs: exit {:?}, report {} bytes, identical = {same}",
            outputs[0].0,
            outputs[0].2.len()
        ),
    )
}

fn negative_controls() -> Verdict {
    let mut ok = true;
    let mut parts = Vec::new();
    for (file, want) in [("tampered-dimension.json", 1), ("zero-mass.json", 2)] {
        let path = repo_root().join("corpus/negative").join(file);
        let out = lipext(&["verify", "--instance", path.to_str().unwrap(), "--samples", "200"]);
        let code = out.status.code();
        ok &= code == Some(want);
        parts.push(format!("{file} exit {code:?}"));
    }
    verdict(ok, parts.join(", "))
}

fn main() {
    let started = Instant::now();
    let instances: Vec<Instance> = corpus_paths()
        .iter()
        .map(|p| load_instance(p).unwrap_or_else(|e| panic!("{}: {e}", p.display())))
        .collect();
    let cfg = SuiteConfig::default();
    let outcomes = instances
        .iter()
        .map(|inst| run_verification_suite(inst, &cfg, SEED).unwrap())
        .collect();
    let corpus = Corpus {
        instances,
        outcomes,
    };

    let results = [
        ("extension exactness", exactness(&corpus)),
        ("linearity", linearity(&corpus)),
        ("explicit norm bound", norm_bound(&corpus)),
        ("dilation sweep", dilation(&corpus)),
        ("layer sweep", layer(&corpus)),
        ("Monte-Carlo volume oracle", monte_carlo()),
        ("pairwise difference bounds", pair_lemmas(&corpus)),
        ("invariance battery", invariance(&corpus)),
        ("determinism", determinism()),
        ("negative controls", negative_controls()),
    ];

    let mut failed = 0;
    for (i, (name, v)) in results.iter().enumerate() {
        println!(
            "criterion {:>2} {:<28} {}  {}",
            i + 1,
            name,
            if v.passed { "PASS" } else { "FAIL" },
            v.summary
        );
        failed += usize::from(!v.passed);
    }
    println!(
        "acceptance: {} passed, {failed} failed in {:.1}s",
        results.len() - failed,
        started.elapsed().as_secs_f64()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
