use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use relsvm_core::synth::{SynthConfig, SyntheticCorpus};
use relsvm_core::RelationInstance;

struct Fixture {
    dir: tempfile::TempDir,
}

impl Fixture {
    /// Writes a synthetic train/test split plus resources.
    fn new() -> Fixture {
        let dir = tempfile::tempdir().unwrap();
        let synth = SyntheticCorpus::generate(&SynthConfig {
            instances: 240,
            labels: 4,
            cues_per_label: 2,
            embed_dim: 6,
            num_clusters: 20,
            seed: 9,
            ..SynthConfig::default()
        });
        let vocab = synth.vocabulary();
        let (train, test) = synth.instances.split_at(200);
        let part = |instances: &[RelationInstance]| SyntheticCorpus {
            instances: instances.to_vec(),
            resources: synth.resources.clone(),
        };
        let (train, test) = (part(train), part(test));
        let write = |name: &str, text: String| std::fs::write(dir.path().join(name), text).unwrap();
        write("train.xml", train.abstracts_text());
        write("train.rel", train.relations_text());
        write("test.xml", test.abstracts_text());
        write("test.gold", test.relations_text());
        let pairs: String = test
            .instances
            .iter()
            .map(|i| format!("({},{})\n", i.e1_id, i.e2_id))
            .collect();
        write("test.pairs", pairs);
        write("emb.txt", synth.embeddings_text(&vocab));
        write("clusters.tsv", synth.clusters_text(&vocab));
        Fixture { dir }
    }

    fn path(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }

    fn arg(&self, name: &str) -> String {
        self.path(name).display().to_string()
    }

    fn train_args(&self, model: &str) -> Vec<String> {
        let mut args = vec!["train".to_string()];
        for (flag, file) in [
            ("--abstracts", "train.xml"),
            ("--relations", "train.rel"),
            ("--embeddings", "emb.txt"),
            ("--clusters", "clusters.tsv"),
            ("--model", model),
            ("--test-abstracts", "test.xml"),
            ("--test-relations", "test.pairs"),
        ] {
            args.push(flag.into());
            args.push(self.arg(file));
        }
        args
    }

    fn predict_args(&self, model: &str, pairs: &str, out: &str) -> Vec<String> {
        let mut args = vec!["predict".to_string()];
        for (flag, file) in [
            ("--abstracts", "test.xml"),
            ("--relations", pairs),
            ("--embeddings", "emb.txt"),
            ("--clusters", "clusters.tsv"),
            ("--model", model),
            ("--out", out),
        ] {
            args.push(flag.into());
            args.push(self.arg(file));
        }
        args
    }

    fn cv_args(&self, extra: &[&str]) -> Vec<String> {
        let mut args = vec!["cv".to_string()];
        for (flag, file) in [
            ("--abstracts", "train.xml"),
            ("--relations", "train.rel"),
            ("--embeddings", "emb.txt"),
            ("--clusters", "clusters.tsv"),
        ] {
            args.push(flag.into());
            args.push(self.arg(file));
        }
        args.extend(extra.iter().map(|s| s.to_string()));
        args
    }
}

fn relsvm<S: AsRef<std::ffi::OsStr>>(args: &[S]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_relsvm")).args(args).output().unwrap()
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn assert_exit(out: &Output, code: i32) {
    assert_eq!(
        out.status.code(),
        Some(code),
        "stdout: {}\nstderr: {}",
        stdout(out),
        String::from_utf8_lossy(&out.stderr)
    );
}

fn read(path: &Path) -> String {
    std::fs::read_to_string(path).unwrap()
}

#[test]
fn train_predict_score_round_trip() {
    let fx = Fixture::new();
    let out = relsvm(&fx.train_args("model.txt"));
    assert_exit(&out, 0);
    let summary = stdout(&out);
    assert!(summary.contains("trained on 200 instances (40 unlabeled"), "{summary}");
    for key in ["k=", "dim=", "classes=4", "featurize=", "train="] {
        assert!(summary.contains(key), "{summary}");
    }
    relsvm_core::load_model(std::fs::File::open(fx.path("model.txt")).unwrap()).unwrap();

    assert_exit(&relsvm(&fx.predict_args("model.txt", "test.pairs", "answers.txt")), 0);
    let answers = read(&fx.path("answers.txt"));
    let parsed = relsvm_core::corpus::parse_relations_str(&answers).unwrap();
    let pairs = relsvm_core::corpus::parse_pairs_str(&read(&fx.path("test.pairs"))).unwrap();
    assert_eq!(parsed.len(), pairs.len());
    for (answer, pair) in parsed.iter().zip(&pairs) {
        assert_eq!((&answer.e1, &answer.e2), (&pair.e1, &pair.e2));
    }

    let out = relsvm(&["score", "--gold", &fx.arg("test.gold"), "--pred", &fx.arg("answers.txt")]);
    assert_exit(&out, 0);
    let text = stdout(&out);
    let f1: f64 = text
        .lines()
        .find_map(|l| l.strip_prefix("macro_f1="))
        .unwrap()
        .parse()
        .unwrap();
    assert!(f1 > 0.9, "{text}");
}

#[test]
fn outputs_are_byte_identical_across_runs() {
    let fx = Fixture::new();
    for (model, answers) in [("m1.txt", "a1.txt"), ("m2.txt", "a2.txt")] {
        assert_exit(&relsvm(&fx.train_args(model)), 0);
        assert_exit(&relsvm(&fx.predict_args(model, "test.pairs", answers)), 0);
    }
    assert_eq!(read(&fx.path("m1.txt")), read(&fx.path("m2.txt")));
    assert_eq!(read(&fx.path("a1.txt")), read(&fx.path("a2.txt")));
}

#[test]
fn empty_pair_list_gives_empty_answer_file() {
    let fx = Fixture::new();
    assert_exit(&relsvm(&fx.train_args("model.txt")), 0);
    std::fs::write(fx.path("none.pairs"), "").unwrap();
    assert_exit(&relsvm(&fx.predict_args("model.txt", "none.pairs", "answers.txt")), 0);
    assert_eq!(read(&fx.path("answers.txt")), "");
}

#[test]
fn predict_rejects_mismatched_resources() {
    let fx = Fixture::new();
    assert_exit(&relsvm(&fx.train_args("model.txt")), 0);
    std::fs::write(fx.path("emb.txt"), "1 3\nw0 0.1 0.2 0.3\n").unwrap();
    let out = relsvm(&fx.predict_args("model.txt", "test.pairs", "answers.txt"));
    assert_exit(&out, 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("dimension"));
}

#[test]
fn missing_embeddings_is_an_error() {
    let fx = Fixture::new();
    let mut args = fx.train_args("model.txt");
    let pos = args.iter().position(|a| a == "--embeddings").unwrap();
    args.drain(pos..pos + 2);
    let out = relsvm(&args);
    assert_exit(&out, 1);
    assert!(String::from_utf8_lossy(&out.stderr).contains("--embeddings"));
    assert!(!fx.path("model.txt").exists());

    // Without the embedding family the file is not needed.
    args.extend(["--families".into(), "word,cluster,ctx1,ctx2".into()]);
    assert_exit(&relsvm(&args), 0);
}

#[test]
fn cv_is_deterministic_and_applies_ablations() {
    let fx = Fixture::new();
    let first = relsvm(&fx.cv_args(&["--folds", "5", "--seed", "7"]));
    let second = relsvm(&fx.cv_args(&["--folds", "5", "--seed", "7"]));
    assert_exit(&first, 0);
    assert_eq!(stdout(&first), stdout(&second));
    let text = stdout(&first);
    assert_eq!(text.lines().filter(|l| l.starts_with("fold")).count(), 10);
    assert!(text.contains("mean_macro_f1="));
    assert!(text.contains("families=word,cluster,embedding,ctx1,ctx2"), "{text}");

    let out = relsvm(&fx.cv_args(&["--ablate", "no-e2ctx", "--transductive=off"]));
    assert_exit(&out, 0);
    assert!(stdout(&out).contains("families=word,shape,cluster,embedding,ctx1\n"));

    assert_exit(&relsvm(&fx.cv_args(&["--folds", "1"])), 1);
    assert_exit(&relsvm(&fx.cv_args(&["--ablate", "no-words"])), 1);
    assert_exit(&relsvm(&fx.cv_args(&["--cost", "-1"])), 1);
}

#[test]
fn config_file_with_flag_overrides() {
    let fx = Fixture::new();
    std::fs::write(
        fx.path("run.conf"),
        "# relative paths resolve against this file\nabstracts = train.xml\nrelations = train.rel\nembeddings = emb.txt\nclusters = clusters.tsv\nablate = all\nfolds = 4\n",
    )
    .unwrap();
    let out = relsvm(&["cv", "--config", &fx.arg("run.conf"), "--folds", "3"]);
    assert_exit(&out, 0);
    let text = stdout(&out);
    assert!(text.starts_with("3-fold cross-validation on 200 instances, families=word,shape,cluster,embedding,ctx1,ctx2"), "{text}");

    std::fs::write(fx.path("bad.conf"), "abstracts: train.xml\n").unwrap();
    assert_exit(&relsvm(&["cv", "--config", &fx.arg("bad.conf")]), 1);
}

#[test]
fn score_fixtures() {
    let fx = Fixture::new();
    let write = |name: &str, text: &str| std::fs::write(fx.path(name), text).unwrap();
    write("gold.txt", "A(D.1,D.2)\nA(D.3,D.4)\nB(D.5,D.6)\nB(D.7,D.8)\n");
    write("pred.txt", "B(D.7,D.8)\nA(D.1,D.2)\nB(D.3,D.4)\nB(D.5,D.6)\n");
    write("other.txt", "A(E.1,E.2)\n");

    let out = relsvm(&["score", "--gold", &fx.arg("gold.txt"), "--pred", &fx.arg("gold.txt")]);
    assert_exit(&out, 0);
    assert!(stdout(&out).contains("macro_f1=1.000000"));

    let out = relsvm(&["score", "--gold", &fx.arg("gold.txt"), "--pred", &fx.arg("pred.txt")]);
    assert_exit(&out, 0);
    assert!(stdout(&out).contains("macro_f1=0.733333"), "{}", stdout(&out));

    let out = relsvm(&["score", "--gold", &fx.arg("gold.txt"), "--pred", &fx.arg("other.txt")]);
    assert_exit(&out, 2);
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("(D.1,D.2) only in") && err.contains("(E.1,E.2) only in"), "{err}");
}

#[test]
fn usage_and_data_exit_codes() {
    let fx = Fixture::new();
    assert_exit(&relsvm(&["--help"]), 0);
    assert_exit(&relsvm(&["--version"]), 0);
    assert_exit(&relsvm::<&str>(&[]), 1);
    assert_exit(&relsvm(&["train", "--bogus"]), 1);
    assert_exit(&relsvm(&["cv", "--transductive=sometimes"]), 1);
    assert_exit(&relsvm(&["cv"]), 1);

    std::fs::write(fx.path("broken.xml"), "<entity id=\"Q.1\">unclosed").unwrap();
    let mut args = fx.cv_args(&[]);
    let pos = args.iter().position(|a| a == "--abstracts").unwrap();
    args[pos + 1] = fx.arg("broken.xml");
    assert_exit(&relsvm(&args), 2);

    args[pos + 1] = fx.arg("does-not-exist.xml");
    assert_exit(&relsvm(&args), 2);
}
