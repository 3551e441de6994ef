use std::path::Path;
use std::process::{Command, Output};

fn phys_adjust(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_phys-adjust"))
        .args(args)
        .arg("--out")
        .arg(out)
        .output()
        .expect("binary runs")
}

#[test]
fn forrester_subset_writes_tables() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("f");
    let o = phys_adjust(&["forrester", "--models", "crude-only,rra", "--reps", "2", "--seed", "9"], &out);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = std::fs::read_to_string(out.join("results.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("experiment,model,seed,metric,value"));
    // 2 models x (2 reps + mean + std)
    assert_eq!(lines.count(), 8);
    assert!(csv.contains("forrester,rra,mean,rmse,"));
    let cfg = std::fs::read_to_string(out.join("config.toml")).unwrap();
    assert!(cfg.contains("root_seed = 9"));
    assert!(out.join("metadata.json").exists());
}

#[test]
fn pendulum_from_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("p.toml");
    std::fs::write(
        &cfg,
        "[pendulum]\nrepetitions = 1\nscenarios = [\"mf\", \"dyna-phy\"]\n\
         [pendulum.dyna]\ntrials = 2\nmodel_trials_per_real_trial = 1\n\
         [pendulum.dyna.sac]\nsteps_per_real_trial = 5\nsteps_per_model_trial = 2\nbatch_size = 16\n",
    )
    .unwrap();
    let out = dir.path().join("p");
    let o = phys_adjust(&["pendulum", "--config", cfg.to_str().unwrap()], &out);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let curves = std::fs::read_to_string(out.join("pendulum_curves.csv")).unwrap();
    assert!(curves.starts_with("trial,mf_mean,mf_std,dyna-phy_mean,dyna-phy_std\n"));
    assert_eq!(curves.lines().count(), 3);
    assert_eq!(std::fs::read_to_string(out.join("logs/dyna-phy_0.jsonl")).unwrap().lines().count(), 2);
    let results = std::fs::read_to_string(out.join("results.csv")).unwrap();
    assert!(results.contains("pendulum,mf,0,real_steps,50"));
}

#[test]
fn configuration_errors_exit_with_2() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.toml");
    std::fs::write(&bad, "[forrester]\nrepetitons = 3\n").unwrap();
    let o = phys_adjust(&["forrester", "--config", bad.to_str().unwrap()], &dir.path().join("x"));
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("repetitons"));

    let o = phys_adjust(&["forrester", "--models", "kriging"], &dir.path().join("y"));
    assert_eq!(o.status.code(), Some(2));

    let missing = dir.path().join("missing.toml");
    let o = phys_adjust(&["pendulum", "--config", missing.to_str().unwrap()], &dir.path().join("z"));
    assert_eq!(o.status.code(), Some(2));
    assert!(!dir.path().join("x").exists());
}
