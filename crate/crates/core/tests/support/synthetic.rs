//! Random labeled threads for property tests.

use autocombat_core::post_model::{AnswerThread, AnswerVersion, Comment, ConcernLink, GoldLabel};
use chrono::{DateTime, TimeZone, Utc};
use rand::Rng;

fn at(minutes: i64) -> DateTime<Utc> {
    Utc.timestamp_opt(1_600_000_000 + minutes * 60, 0).unwrap()
}

/// Between 1 and 6 versions, 1 to 13 comments with random labels. Each IA
/// comment is linked, with probability one half, to a random version
/// posted after it (when there is one).
pub fn thread<R: Rng>(rng: &mut R, id: usize) -> AnswerThread {
    let n_versions = rng.random_range(1..=6);
    let mut t = 0i64;
    let mut versions = Vec::new();
    for ord in 1..=n_versions {
        t += rng.random_range(1..=50);
        versions.push(AnswerVersion::new(ord as u32, format!("answer {id} revision {ord}"), at(t)));
    }
    let horizon = t + 20;
    let n_comments = rng.random_range(1..=13);
    let mut stamps: Vec<i64> = (0..n_comments).map(|_| rng.random_range(0..=horizon)).collect();
    stamps.sort_unstable();
    let mut comments = Vec::new();
    let mut links = Vec::new();
    for (i, ts) in stamps.into_iter().enumerate() {
        let label = match rng.random_range(0..3) {
            0 => GoldLabel::IA,
            1 => GoldLabel::INA,
            _ => GoldLabel::GC,
        };
        let cid = format!("{id}-{i}");
        if label == GoldLabel::IA && rng.random_bool(0.5) {
            let later: Vec<u32> = versions.iter().filter(|v| v.timestamp > at(ts)).map(|v| v.revision_ordinal).collect();
            if !later.is_empty() {
                links.push(ConcernLink {
                    comment_id: cid.clone(),
                    revision_ordinal: later[rng.random_range(0..later.len())],
                });
            }
        }
        comments.push(Comment::new(cid, "u", format!("comment {i} on {id}"), at(ts), Some(label)).unwrap());
    }
    AnswerThread {
        question_id: format!("q{id}"),
        answer_id: format!("a{id}"),
        question_title: format!("question {id}"),
        question_body: String::new(),
        question_tags: vec![["python", "java", "c#", "javascript", "rust"][id % 5].to_string()],
        versions,
        comments,
        concern_links: links,
    }
}
