use std::path::Path;

use forumscope::pipeline::{self, PipelineConfig, ARTIFACT_FAMILIES};
use forumscope::synth::{self, SynthSpec};
use forumscope::Error;

fn synth_dir(dir: &Path, seed: u64) -> PipelineConfig {
    let spec = SynthSpec {
        seed,
        authors: 400,
        innovators: 20,
        rare_vocabulary: 3000,
        ..Default::default()
    };
    synth::write_files(&synth::generate(&spec).unwrap(), dir).unwrap();
    let mut cfg = PipelineConfig::for_inputs(dir, Path::new("bundle"));
    cfg.seed = seed;
    cfg.etm.restarts = 3;
    cfg
}

#[test]
fn bundle_is_reproducible_and_complete() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = synth_dir(tmp.path(), 1);
    let first = pipeline::run_pipeline(&cfg).unwrap();
    let second = pipeline::run_pipeline(&cfg).unwrap();
    assert_eq!(first.files, second.files);

    let out = tmp.path().join("bundle");
    for (family, prefix) in ARTIFACT_FAMILIES {
        assert!(first.files.keys().any(|k| k.starts_with(prefix)), "family {family} missing");
    }
    for (rel, bytes) in &first.files {
        assert_eq!(&std::fs::read(out.join(rel)).unwrap(), bytes, "{rel} differs on disk");
    }
    let manifest = pipeline::verify_bundle(&out).unwrap();
    assert_eq!(manifest.seed, 1);
    assert_eq!(manifest.outputs.len() + 1, first.files.len());

    // the manifest's config reproduces the bundle
    let again = PipelineConfig::from_toml(&manifest.config, tmp.path()).unwrap();
    assert_eq!(pipeline::compute(&again).unwrap().files, first.files);
}

#[test]
fn every_csv_has_a_header_and_rectangular_rows() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = synth_dir(tmp.path(), 2);
    let bundle = pipeline::compute(&cfg).unwrap();
    for (rel, bytes) in bundle.files.iter().filter(|(k, _)| k.ends_with(".csv")) {
        let mut reader = csv::Reader::from_reader(bytes.as_slice());
        let width = reader.headers().unwrap().len();
        assert!(width >= 1, "{rel}");
        for rec in reader.records() {
            let rec = rec.unwrap_or_else(|e| panic!("{rel}: {e}"));
            assert_eq!(rec.len(), width, "{rel}");
            for cell in rec.iter() {
                assert!(!cell.contains(',') || rel.ends_with("validation.csv"), "{rel}: {cell}");
            }
        }
    }
}

#[test]
fn missing_lexicon_fails_before_compute() {
    let tmp = tempfile::tempdir().unwrap();
    let mut cfg = synth_dir(tmp.path(), 3);
    cfg.inputs.lexicon = "absent.tsv".into();
    let err = pipeline::run_pipeline(&cfg).unwrap_err();
    assert!(matches!(err, Error::Config(_)), "{err}");
    assert_eq!(err.exit_code(), 2);
    assert!(!tmp.path().join("bundle").exists());

    let text = std::fs::read_to_string(tmp.path().join("posts.jsonl")).unwrap();
    let toml = "output_dir = \"b\"\n[inputs]\nposts = \"posts.jsonl\"\nlabels = \"labels.csv\"\n";
    assert!(!text.is_empty());
    assert_eq!(PipelineConfig::from_toml(toml, tmp.path()).unwrap_err().exit_code(), 2);
}

#[test]
fn failed_run_leaves_no_partial_output() {
    let tmp = tempfile::tempdir().unwrap();
    let mut cfg = synth_dir(tmp.path(), 4);
    // nothing survives this floor
    cfg.etm.min_doc_freq = 1_000_000;
    let err = pipeline::run_pipeline(&cfg).unwrap_err();
    assert_eq!(err.exit_code(), 4);
    assert!(err.to_string().contains("etm"), "{err}");
    let leftovers: Vec<_> = std::fs::read_dir(tmp.path())
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .filter(|n| n.contains("bundle"))
        .collect();
    assert!(leftovers.is_empty(), "{leftovers:?}");
}

#[test]
fn refuses_to_overwrite_foreign_directory() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = synth_dir(tmp.path(), 5);
    let out = tmp.path().join("bundle");
    std::fs::create_dir_all(&out).unwrap();
    std::fs::write(out.join("notes.txt"), "keep me").unwrap();
    assert_eq!(pipeline::run_pipeline(&cfg).unwrap_err().exit_code(), 2);
    assert!(out.join("notes.txt").exists());
}

#[test]
fn thread_count_does_not_change_output() {
    let tmp = tempfile::tempdir().unwrap();
    let mut cfg = synth_dir(tmp.path(), 6);
    cfg.threads = 1;
    let one = pipeline::run_pipeline(&cfg).unwrap();
    cfg.threads = 4;
    let four = pipeline::run_pipeline(&cfg).unwrap();
    // only the manifest records the thread count
    let strip = |b: &pipeline::ReportBundle| {
        let mut f = b.files.clone();
        f.remove("manifest.json");
        f
    };
    assert_eq!(strip(&one), strip(&four));
}
