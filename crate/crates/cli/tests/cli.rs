use std::fs;
use std::path::Path;
use std::process::{Command, Output};
use std::sync::Arc;

use setgreedy_cli::artifacts::read_csv;
use setgreedy_cli::subset::{SummaryRow, TrialRow};
use setgreedy_cli::verify::VerifyRow;
use setgreedy_core::acquisition::AcquisitionContext;
use setgreedy_core::selection::{exact_greedy, SubsetProblem, TieBreak};
use setgreedy_core::surrogate::DeterministicSurrogate;
use setgreedy_core::{BigramTask, ReferencePoint, SequenceSpace};

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_setgreedy"));
    c.env_remove("SETGREEDY_OUT").env_remove("SETGREEDY_THREADS").env("RUST_LOG", "error");
    c
}

fn run(args: &[&str], cwd: &Path) -> Output {
    bin().args(args).current_dir(cwd).output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

const SMALL: &str = r#"
seed = 3
trials = 10
cardinalities = [2, 3]
strategies = ["exact-greedy", "greedy-rs"]
[task]
vocab = "AB"
min_len = 2
max_len = 4
targets = ["AB", "BA"]
[baseline]
budget = 30
"#;

#[test]
fn subset_rows_determinism_and_exact_greedy_agreement() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("c.toml"), SMALL).unwrap();
    for out in ["a", "b"] {
        let o = run(&["subset", "--config", "c.toml", "--out", out], dir.path());
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    }
    for f in ["subset_trials.csv", "subset_summary.csv", "traces/greedy-rs_n3_t7.csv"] {
        assert_eq!(fs::read(dir.path().join("a").join(f)).unwrap(), fs::read(dir.path().join("b").join(f)).unwrap(), "{f}");
    }
    let trials: Vec<TrialRow> = read_csv(&dir.path().join("a/subset_trials.csv")).unwrap();
    for n in [2, 3] {
        for s in ["exact-greedy", "greedy-rs"] {
            assert_eq!(trials.iter().filter(|r| r.n == n && r.strategy == s).count(), 10);
        }
    }
    let summary: Vec<SummaryRow> = read_csv(&dir.path().join("a/subset_summary.csv")).unwrap();
    assert_eq!(summary.len(), 4);

    let task = BigramTask::new(SequenceSpace::new("AB", 2, 4).unwrap(), &["AB", "BA"]).unwrap();
    let ctx = AcquisitionContext::new(Arc::new(DeterministicSurrogate(task.clone())), ReferencePoint::origin(2)).unwrap();
    for n in [2, 3] {
        let lib = exact_greedy(&SubsetProblem::new(ctx.clone(), task.space().clone(), n).unwrap(), TieBreak::Lexicographic, 1 << 20)
            .unwrap();
        let row = summary.iter().find(|r| r.n == n && r.strategy == "exact-greedy").unwrap();
        assert_eq!((row.mean, row.std, row.exact_greedy), (lib.value, 0.0, Some(lib.value)));
        let batch: Vec<String> = lib.subset.iter().map(|x| task.space().render(x)).collect();
        assert!(trials.iter().filter(|r| r.n == n && r.strategy == "exact-greedy").all(|r| r.batch == batch.join("|")));
    }
    let resolved = fs::read_to_string(dir.path().join("a/config.toml")).unwrap();
    assert!(resolved.contains("mode = \"subset\""));
    assert!(resolved.contains("[train]"));
    assert!(dir.path().join("a/schema.json").exists());
}

#[test]
fn rerunning_the_resolved_config_reproduces_outputs() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("c.toml"), SMALL).unwrap();
    assert_eq!(code(&run(&["subset", "--config", "c.toml", "--out", "a", "--trials", "2"], dir.path())), 0);
    assert_eq!(code(&run(&["subset", "--config", "a/config.toml", "--out", "b"], dir.path())), 0);
    assert_eq!(
        fs::read(dir.path().join("a/subset_trials.csv")).unwrap(),
        fs::read(dir.path().join("b/subset_trials.csv")).unwrap()
    );
}

#[test]
fn config_errors_exit_one_and_name_the_key() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("bad.toml"), "[al]\nroundz = 3\n").unwrap();
    let o = run(&["al", "--config", "bad.toml", "--out", "x"], dir.path());
    assert_eq!(code(&o), 1);
    assert!(String::from_utf8_lossy(&o.stderr).contains("al.roundz"));
    fs::write(dir.path().join("zero.toml"), "[al]\nbatch_size = 0\n").unwrap();
    let o = run(&["al", "--config", "zero.toml", "--out", "x"], dir.path());
    assert_eq!(code(&o), 1);
    assert!(String::from_utf8_lossy(&o.stderr).contains("al.batch_size"));
}

#[test]
fn environment_overrides_output_directory_but_flags_win() {
    let dir = tempfile::tempdir().unwrap();
    let o = bin().args(["verify", "--trials", "1"]).env("SETGREEDY_OUT", "from-env").current_dir(dir.path()).output().unwrap();
    assert_eq!(code(&o), 0);
    assert!(dir.path().join("from-env/verify.csv").exists());
    let o = bin()
        .args(["verify", "--out", "from-flag"])
        .env("SETGREEDY_OUT", "from-env-2")
        .current_dir(dir.path())
        .output()
        .unwrap();
    assert_eq!(code(&o), 0);
    assert!(dir.path().join("from-flag/verify.csv").exists());
    assert!(!dir.path().join("from-env-2").exists());
}

#[test]
fn verify_passes_and_hooks_behave() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["verify", "--out", "v"], dir.path());
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let rows: Vec<VerifyRow> = read_csv(&dir.path().join("v/verify.csv")).unwrap();
    assert_eq!(rows.iter().filter(|r| r.bound == "approx-greedy").count(), 100);
    assert_eq!(rows.iter().filter(|r| r.bound == "non-oblivious").count(), 100);
    assert!(rows.iter().all(|r| !r.violated));

    fs::write(dir.path().join("half.toml"), "[verify]\ngamma_scale = 0.5\n").unwrap();
    assert_eq!(code(&run(&["verify", "--config", "half.toml", "--out", "h"], dir.path())), 0);

    fs::write(dir.path().join("inflated.toml"), "[verify]\ninstances = 30\nalpha_override = 1.0\nbounds = [\"approx-greedy\"]\n")
        .unwrap();
    let o = run(&["verify", "--config", "inflated.toml", "--out", "i"], dir.path());
    assert_eq!(code(&o), 2);
    let dumped = fs::read_dir(dir.path().join("i/violations")).unwrap().count();
    assert!(dumped > 0);
    let rows: Vec<VerifyRow> = read_csv(&dir.path().join("i/verify.csv")).unwrap();
    assert_eq!(rows.iter().filter(|r| r.violated).count(), dumped);
}

#[test]
fn oracle_and_hv_report_known_values() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["hv", "3,1", "2,2", "1,3"], dir.path());
    assert_eq!(String::from_utf8_lossy(&o.stdout).trim(), "6");
    let o = run(&["hv", "--ref", "0,0", "1,1"], dir.path());
    assert_eq!(String::from_utf8_lossy(&o.stdout).trim(), "1");

    fs::write(
        dir.path().join("o.toml"),
        "[oracle]\nfront = [[3.0, 1.0], [2.0, 2.0], [1.0, 3.0]]\nmc_samples = 200000\nsubset_sizes = [4]\n\
         [task]\nvocab = \"AB\"\nmin_len = 2\nmax_len = 4\ntargets = [\"AB\", \"BA\"]\n",
    )
    .unwrap();
    let o = run(&["oracle", "--config", "o.toml", "--out", "o"], dir.path());
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let report: setgreedy_cli::oracle::OracleReport =
        serde_json::from_str(&fs::read_to_string(dir.path().join("o/oracle.json")).unwrap()).unwrap();
    let f = report.front.unwrap();
    assert_eq!(f.exact, 6.0);
    assert!(f.within_3_sigma);
    assert_eq!(report.optima[0].n, 4);
    assert!(report.optima[0].optimal >= report.optima[0].exact_greedy);

    fs::write(dir.path().join("cap.toml"), "[oracle]\nsubset_sizes = [2]\ncap = 100\n").unwrap();
    assert_eq!(code(&run(&["oracle", "--config", "cap.toml", "--out", "c"], dir.path())), 3);
}

const AL: &str = r#"
seed = 11
trials = 3
strategies = ["greedy-hc", "greedy-rs"]
[task]
vocab = "ABC"
min_len = 3
max_len = 4
targets = ["AB", "BC"]
[baseline]
budget = 40
[surrogate]
kind = "ensemble"
epochs = 30
hidden = 8
[al]
rounds = 3
batch_size = 2
initial = 4
"#;

#[test]
fn al_resume_matches_uninterrupted_run() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("al.toml"), AL).unwrap();
    assert_eq!(code(&run(&["al", "--config", "al.toml", "--out", "full", "--threads", "2"], dir.path())), 0);
    let o = run(&["al", "--config", "al.toml", "--out", "part", "--stop-after", "1"], dir.path());
    assert_eq!(code(&o), 0);
    assert!(!dir.path().join("part/al_curves.csv").exists());
    assert_eq!(code(&run(&["al", "--resume", "part"], dir.path())), 0);
    for f in [
        "al_curves.csv",
        "al_metrics.csv",
        "queries_to_target.csv",
        "trials/greedy-rs/t2/dataset.jsonl",
        "trials/greedy-hc/t0/metrics.csv",
        "trials/greedy-hc/t1/surrogate_r3.json",
    ] {
        assert_eq!(fs::read(dir.path().join("full").join(f)).unwrap(), fs::read(dir.path().join("part").join(f)).unwrap(), "{f}");
    }
    let curves = fs::read_to_string(dir.path().join("full/al_curves.csv")).unwrap();
    assert!(curves.starts_with("strategy,queries,total_queries,trials,hv_p30,hv_p50,hv_p70"));
    assert_eq!(curves.lines().count(), 1 + 2 * 4);
}

#[test]
fn saved_policy_can_be_sampled() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(
        dir.path().join("p.toml"),
        "strategies = [\"ours\"]\ncardinalities = [2]\n[task]\nvocab = \"AB\"\nmin_len = 2\nmax_len = 3\ntargets = [\"AB\", \"BA\"]\n\
         [train]\nupdates = 20\nepisodes = 8\neval_period = 10\n",
    )
    .unwrap();
    assert_eq!(code(&run(&["subset", "--config", "p.toml", "--out", "p"], dir.path())), 0);
    let ckpt = dir.path().join("p/policies/ours_n2_t0.json");
    assert!(ckpt.exists());
    assert!(dir.path().join("p/train/ours_n2_t0.csv").exists());
    let o = run(&["sample", "--config", "p.toml", "--policy", ckpt.to_str().unwrap(), "--n", "2"], dir.path());
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let out = String::from_utf8_lossy(&o.stdout);
    let value: f64 = out.split_whitespace().next().unwrap().parse().unwrap();
    assert!(value >= 0.0);
}
