use std::fs;

use tokstat::corpus_io::{
    load_benchmarks, load_codec_utterances, tokenize_text, write_benchmarks, write_manifest,
    write_utterance, CodecUtterance, ManifestEntry,
};
use tokstat::synth::{synth_utterances, write_corpus, CorpusLayout, GeneratorKind, GeneratorSpec};
use tokstat::{Error, ErrorKind};

fn utt(id: &str, config: &str, tokens: Vec<Vec<u32>>) -> CodecUtterance {
    CodecUtterance {
        utterance_id: id.into(),
        config_id: config.into(),
        codebook_size: 16,
        tokens,
    }
}

#[test]
fn manifest_round_trip_keeps_order() {
    let dir = tempfile::tempdir().unwrap();
    let utts = vec![
        utt("b", "X", vec![vec![1, 2, 3], vec![4, 5, 6]]),
        utt("a", "X", vec![vec![0, 0, 1], vec![2, 2, 2]]),
        utt("c", "Y", vec![vec![15]]),
    ];
    let mut entries = Vec::new();
    for u in &utts {
        let rel = format!("{}.json", u.utterance_id);
        write_utterance(dir.path().join(&rel), u).unwrap();
        entries.push(ManifestEntry {
            path: rel.into(),
            config_id: u.config_id.clone(),
        });
    }
    write_manifest(dir.path().join("manifest.jsonl"), &entries).unwrap();
    let corpus = load_codec_utterances(dir.path().join("manifest.jsonl")).unwrap();
    assert_eq!(corpus.utterances, utts);
    assert_eq!(corpus.configs.len(), 2);
    assert_eq!(corpus.configs["X"].n_dims, 2);
}

#[test]
fn bad_utterances_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cases = [
        (
            r#"{"utterance_id":"r","config_id":"X","codebook_size":16,"tokens":[[1,2],[3]]}"#,
            "ragged",
        ),
        (
            r#"{"utterance_id":"o","config_id":"X","codebook_size":16,"tokens":[[1,16]]}"#,
            "outside codebook",
        ),
    ];
    for (body, needle) in cases {
        fs::write(dir.path().join("u.json"), body).unwrap();
        fs::write(
            dir.path().join("m.jsonl"),
            "{\"path\":\"u.json\",\"config_id\":\"X\"}\n",
        )
        .unwrap();
        let err = load_codec_utterances(dir.path().join("m.jsonl")).unwrap_err();
        assert_eq!(err.kind(), ErrorKind::Input);
        assert!(err.to_string().contains(needle), "{err}");
    }
}

#[test]
fn empty_manifest_and_missing_file() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("m.jsonl"), "\n").unwrap();
    let err = load_codec_utterances(dir.path().join("m.jsonl")).unwrap_err();
    assert!(matches!(err, Error::NoUtterances { .. }));

    fs::write(
        dir.path().join("m.jsonl"),
        "{\"path\":\"gone.json\",\"config_id\":\"X\"}\n",
    )
    .unwrap();
    let err = load_codec_utterances(dir.path().join("m.jsonl")).unwrap_err();
    assert!(err.to_string().contains("gone.json"), "{err}");
}

#[test]
fn benchmarks_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bench.csv");
    fs::write(
        &path,
        "config_id,metric,value\nA,WER,0.125\nA, UTMOS ,3.5\nB,CER,0.03\n",
    )
    .unwrap();
    let first = load_benchmarks(&path).unwrap();
    assert_eq!(first.len(), 3);
    let mut buf = Vec::new();
    write_benchmarks(&mut buf, &first).unwrap();
    fs::write(&path, &buf).unwrap();
    assert_eq!(load_benchmarks(&path).unwrap(), first);
}

#[test]
fn benchmark_errors_name_the_problem() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bench.csv");
    fs::write(&path, "config_id,metric,value\nA,WER,0.1\nA,BLEU,3\n").unwrap();
    assert!(matches!(
        load_benchmarks(&path).unwrap_err(),
        Error::UnknownMetric { line: 3, .. }
    ));
    fs::write(&path, "config_id,metric,value\nA,UTMOS,7\n").unwrap();
    assert!(matches!(
        load_benchmarks(&path).unwrap_err(),
        Error::MetricOutOfRange { .. }
    ));
    fs::write(&path, "config_id,metric,value\nA,WER,0.1\nA,WER,0.2\n").unwrap();
    assert!(matches!(
        load_benchmarks(&path).unwrap_err(),
        Error::DuplicateBenchmark { .. }
    ));
    let missing = dir.path().join("nope.csv");
    assert!(load_benchmarks(&missing)
        .unwrap_err()
        .to_string()
        .contains("nope.csv"));
}

#[test]
fn text_tokenization_from_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("t.txt");
    fs::write(&path, "the cat\n saw  the\tdog\n").unwrap();
    let (seq, vocab) = tokenize_text(&path).unwrap();
    assert_eq!(seq.items(), &[0, 1, 2, 0, 3]);
    assert_eq!(vocab.len(), 4);
    assert_eq!(vocab.word(3), Some("dog"));
}

#[test]
fn synthetic_corpus_loads_back() {
    let dir = tempfile::tempdir().unwrap();
    let spec = GeneratorSpec {
        kind: GeneratorKind::Zipf { exponent: 1.0 },
        vocab: 64,
        count: 50,
        seed: 6,
    };
    let layout = CorpusLayout {
        config_id: "Z".into(),
        utterances: 4,
        n_dims: 3,
        codebook_size: None,
    };
    let utts = synth_utterances(&spec, &layout).unwrap();
    write_corpus(dir.path(), &utts).unwrap();
    let corpus = load_codec_utterances(dir.path().join("manifest.jsonl")).unwrap();
    assert_eq!(corpus.utterances, utts);
    assert_eq!(corpus.utterances[0].tokens.len(), 3);
    assert_eq!(corpus.utterances[0].tokens[0].len(), 50);
}
