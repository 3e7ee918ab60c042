use std::fs;
use std::path::Path;

use spgcop::harness::{archives_in, run_fit, summarize};
use spgcop::io::{
    load_csv, read_digest, read_replications, read_summary, write_csv, write_replications, ColumnSpec, DrawArchive,
    IoError, RunConfig, ScenarioFile,
};
use spgcop::mcmc::{run_chain, ChainConfig, PriorConfig, SamplerKind};
use spgcop::metrics::{ReplicationMetrics, SummaryTable};
use spgcop::rank::ColumnKind;
use spgcop::samplers::seeded_rng;
use spgcop::synthetic::{generate, ScenarioSpec};

fn col(name: &str, kind: ColumnKind) -> ColumnSpec {
    ColumnSpec {
        name: name.into(),
        kind,
    }
}

#[test]
fn empty_cell_is_the_only_missing_entry() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("d.csv");
    fs::write(&path, "a,b,x,y\n1,0.5,0.1,0.2\n2,,0.3,0.4\n3,1.5,0.5,0.6\n").unwrap();
    let d = load_csv(
        &path,
        &[col("a", ColumnKind::Count), col("b", ColumnKind::Continuous)],
        &["x".into(), "y".into()],
    )
    .unwrap();
    assert_eq!(d.rows, 3);
    assert_eq!(d.y.missing().iter().filter(|m| **m).count(), 1);
    assert!(d.y.is_missing(1, 1));
    assert_eq!(d.locations.unwrap().coords()[2], [0.5, 0.6]);
}

#[test]
fn binary_two_is_a_kind_mismatch() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("d.csv");
    fs::write(&path, "flag\n0\n1\n2\n").unwrap();
    match load_csv(&path, &[col("flag", ColumnKind::Binary)], &[]) {
        Err(IoError::KindMismatch { row, column, value, .. }) => {
            assert_eq!((row, column.as_str(), value), (3, "flag", 2.0));
        }
        other => panic!("expected KindMismatch, got {other:?}"),
    }
}

#[test]
fn parse_errors_name_row_and_column() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("d.csv");
    fs::write(&path, "a,b\n1,2\n3,abc\n").unwrap();
    let err = load_csv(
        &path,
        &[col("a", ColumnKind::Count), col("b", ColumnKind::Continuous)],
        &[],
    )
    .unwrap_err();
    assert!(
        matches!(err, IoError::Parse { row: 2, ref column, .. } if column == "b"),
        "{err:?}"
    );
    let err = load_csv(&path, &[col("c", ColumnKind::Count)], &[]).unwrap_err();
    assert!(matches!(err, IoError::MissingColumn(ref c) if c == "c"));
}

#[test]
fn generated_dataset_round_trips_bitwise() {
    let spec = ScenarioSpec::design(6, 40, 0.3);
    let d = generate(&spec, &mut seeded_rng(11)).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("gen.csv");
    write_csv(&path, &d.y, Some(&d.locations)).unwrap();
    let columns: Vec<ColumnSpec> = d.y.names().iter().zip(d.y.kinds()).map(|(n, k)| col(n, *k)).collect();
    let back = load_csv(&path, &columns, &["x".into(), "y".into()]).unwrap();
    assert_eq!(back.y, d.y);
    let (a, b) = (back.locations.unwrap(), d.locations);
    for (p, q) in a.coords().iter().zip(b.coords()) {
        assert_eq!(p[0].to_bits(), q[0].to_bits());
        assert_eq!(p[1].to_bits(), q[1].to_bits());
    }
}

fn short_draws(sampler: SamplerKind) -> spgcop::mcmc::PosteriorDraws {
    let spec = ScenarioSpec::design(4, 25, 0.4);
    let d = generate(&spec, &mut seeded_rng(3)).unwrap();
    let prior = PriorConfig::default_for(4, Some(&d.locations));
    let cfg = ChainConfig {
        iterations: 80,
        burn_in: 20,
        thin: 3,
        sampler,
        m: 6,
        ..ChainConfig::default()
    };
    run_chain(&d.y, Some(&d.locations), &prior, &cfg).unwrap()
}

#[test]
fn draw_archive_round_trips_bitwise() {
    let dir = tempfile::tempdir().unwrap();
    for sampler in [SamplerKind::Bgc, SamplerKind::SpbgcNngp] {
        let draws = short_draws(sampler);
        let path = dir.path().join(format!("{sampler}.csv"));
        let archive = DrawArchive::from_draws(&draws, "abc123");
        archive.write(&path).unwrap();
        let back = DrawArchive::read(&path).unwrap();
        assert_eq!(back.meta.config_digest, "abc123");
        let restored = back.to_draws();
        assert_eq!(restored.r.len(), draws.r.len());
        for (x, y) in restored.r.iter().zip(&draws.r) {
            for (a, b) in x.as_matrix().iter().zip(y.as_matrix().iter()) {
                assert_eq!(a.to_bits(), b.to_bits());
            }
        }
        for (a, b) in restored.phi.iter().zip(&draws.phi) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
        // NaN φ never compares equal; its bits were checked above
        let (mut restored, mut expected) = (restored, draws.clone());
        restored.phi.clear();
        expected.phi.clear();
        expected.timings = Default::default();
        assert_eq!(restored, expected);
    }
}

#[test]
fn summary_and_replication_tables_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let draws = short_draws(SamplerKind::Spbgc);
    let table = SummaryTable::from_draws(&draws).unwrap();
    let path = dir.path().join("summary.csv");
    spgcop::io::write_summary(&path, &table, "d1").unwrap();
    let (digest, back) = read_summary(&path).unwrap();
    assert_eq!(digest, "d1");
    assert_eq!(back, table);

    let rows = vec![ReplicationMetrics {
        scenario: "s".into(),
        method: "bgc".into(),
        replication: 2,
        seed: 9,
        log_mse: -3.25,
        cp: 0.8,
        al: 0.51,
        seconds: 1.5,
    }];
    let rpath = dir.path().join("reps.csv");
    write_replications(&rpath, &rows, "d2").unwrap();
    assert_eq!(read_replications(&rpath).unwrap(), ("d2".to_string(), rows));
    assert_eq!(read_digest(&rpath).unwrap(), "d2");
}

fn write_fit_config(dir: &Path, seed: u64) -> RunConfig {
    let scenario = ScenarioFile::from_toml_str("name = \"small\"\nn = 30\nphi = 0.3\ndesign = true\np = 4\n").unwrap();
    fs::write(dir.join("scenario.toml"), scenario.to_toml_string()).unwrap();
    let text = format!(
        "[input]\nscenario = \"scenario.toml\"\n\n[chain]\nsampler = \"spbgc\"\niterations = 120\nburn_in = 40\nchains = 2\nseed = {seed}\n"
    );
    let path = dir.join(format!("run{seed}.toml"));
    fs::write(&path, text).unwrap();
    RunConfig::load(&path).unwrap()
}

#[test]
fn fit_is_deterministic_and_summaries_refuse_mixed_digests() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_fit_config(dir.path(), 5);
    let (out_a, out_b) = (dir.path().join("a"), dir.path().join("b"));
    let a = run_fit(&cfg, &out_a).unwrap();
    run_fit(&cfg, &out_b).unwrap();
    assert!(a.aborted().is_empty());
    for name in ["draws_chain0.csv", "draws_chain1.csv", "summary.csv", "acf_chain0.csv"] {
        assert_eq!(
            fs::read(out_a.join(name)).unwrap(),
            fs::read(out_b.join(name)).unwrap(),
            "{name}"
        );
    }
    assert_eq!(read_digest(&out_a.join("summary.csv")).unwrap(), a.digest);
    assert!(out_a.join("run.json").exists() && out_a.join("timings.csv").exists());

    let archives = archives_in(&out_a).unwrap();
    assert_eq!(archives.len(), 2);
    let (digest, table) = summarize(&archives, None, &dir.path().join("pooled.csv")).unwrap();
    assert_eq!(digest, a.digest);
    assert_eq!(&table, a.summary.as_ref().unwrap());

    let other = write_fit_config(dir.path(), 6);
    let out_c = dir.path().join("c");
    run_fit(&other, &out_c).unwrap();
    let mixed = vec![archives[0].clone(), out_c.join("draws_chain0.csv")];
    assert!(matches!(
        summarize(&mixed, None, &dir.path().join("mixed.csv")),
        Err(IoError::DigestMismatch { .. })
    ));
    assert!(matches!(
        summarize(&archives, Some("not-the-digest"), &dir.path().join("x.csv")),
        Err(IoError::DigestMismatch { .. })
    ));
}
