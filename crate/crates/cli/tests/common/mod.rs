#![allow(dead_code)]

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use convstruct::corpus::records_to_json;
use convstruct::synth::random_clip;
use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const WORDS: [&str; 12] = [
    "hey", "you", "what", "i've", "know", "how's", "okay", "the", "thing", "no", "really", "go",
];

pub fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_convstruct"))
}

pub fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

pub fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

pub fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("tests/fixtures")
        .join(name)
}

/// Writes a random but valid corpus directory: transcripts, annotations,
/// cast lists and participant metadata spread over `shows`.
pub fn write_corpus(dir: &Path, n_clips: usize, shows: &[&str], seed: u64) {
    fs::create_dir_all(dir).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut meta = String::from("canonical_name\tgender\tshow_id\n");
    for s in shows {
        for i in 0..8 {
            let g = if i % 2 == 0 { "female" } else { "male" };
            meta.push_str(&format!("p{i}\t{g}\t{s}\n"));
        }
    }
    fs::write(dir.join("participants.tsv"), meta).unwrap();
    for k in 0..n_clips {
        let id = format!("clip{k:03}");
        let show = shows[k % shows.len()];
        let n = rng.random_range(2..=30);
        let people = rng.random_range(2..=8);
        let clip = random_clip(&mut rng, &id, n, people);
        let mut tsv = String::from("start\tend\tspeaker\ttext\n");
        for u in &clip.utterances {
            let len = rng.random_range(1..8);
            let text: Vec<&str> = (0..len).map(|_| *WORDS.choose(&mut rng).unwrap()).collect();
            tsv.push_str(&format!(
                "{}\t{}\tSPK\t{}\n",
                u.start,
                u.end,
                text.join(" ")
            ));
        }
        fs::write(dir.join(format!("{id}.tsv")), tsv).unwrap();
        fs::write(
            dir.join(format!("{id}.json")),
            records_to_json(clip.gold.as_ref().unwrap()),
        )
        .unwrap();
        let cast: Vec<String> = clip
            .cast
            .iter()
            .map(|c| format!("\"{}\"", c.participant.label()))
            .collect();
        fs::write(
            dir.join(format!("{id}.cast.json")),
            format!(
                "{{\"clip_id\": \"{id}\", \"show_id\": \"{show}\", \"cast\": [{}]}}",
                cast.join(", ")
            ),
        )
        .unwrap();
    }
}
