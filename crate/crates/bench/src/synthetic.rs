//! Deterministic synthetic corpora for desk-scale experiments.

use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const NAMES: [&str; 8] = ["total", "count", "items", "value", "index", "result", "buffer", "offset"];
const OPS: [&str; 4] = ["+", "-", "*", "//"];

const CODE_TEMPLATES: [&str; 6] = [
    "def get_{a} ( self ) : return self . {a}",
    "for {a} in range ( len ( {b} ) ) : {b} [ {a} ] = {b} [ {a} ] {op} 1",
    "if {a} is None : {a} = [ ] else : {a} . append ( {b} )",
    "{a} = sum ( x {op} {b} for x in {a} if x is not None )",
    "while {a} < len ( {b} ) : {a} = {a} + 1",
    "return sorted ( {a} , key = lambda x : x . {b} , reverse = True )",
];

fn fill(template: &str, rng: &mut ChaCha8Rng) -> String {
    let a = NAMES.choose(rng).expect("non-empty");
    let mut b = NAMES.choose(rng).expect("non-empty");
    while b == a {
        b = NAMES.choose(rng).expect("non-empty");
    }
    let op = OPS.choose(rng).expect("non-empty");
    template.replace("{a}", a).replace("{b}", b).replace("{op}", op)
}

/// Code-like lines built from a few templates with slot fillers. Each line
/// joins two or three template instances, so phrases recur within and across
/// lines.
pub fn reference_corpus(entries: usize, seed: u64) -> String {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = String::new();
    for _ in 0..entries {
        let parts = rng.random_range(2..=3);
        let line: Vec<String> = (0..parts)
            .map(|_| {
                let template = CODE_TEMPLATES.choose(&mut rng).expect("non-empty");
                fill(template, &mut rng)
            })
            .collect();
        out.push_str(&line.join(" ; "));
        out.push('\n');
    }
    out
}

const TASK_WORDS: [[&str; 6]; 4] = [
    ["alpha", "beta", "gamma", "delta", "eps", "zeta"],
    ["red", "green", "blue", "cyan", "pink", "gold"],
    ["one", "two", "three", "four", "five", "six"],
    ["cat", "dog", "cow", "pig", "hen", "fox"],
];

const SKELETONS: [&str; 3] = [
    "then {0} goes to {1} and {2} , so {3} is {4} with {5}",
    "if {1} is {2} then {0} goes to {3} and {4} , {5}",
    "we take {3} and {0} , then {5} goes to {2} with {1} and {4}",
];

fn fill_skeleton(skeleton: &str, words: &[&str]) -> String {
    words.iter().enumerate().fold(skeleton.to_string(), |s, (i, w)| s.replace(&format!("{{{i}}}"), w))
}

/// `tasks` tagged tasks (at most four) with `per_task` entries each, listed
/// task by task. Every task fills the same sentence skeletons with its own
/// words, so the tasks share keys like `goes` or `and` but continue them
/// differently.
pub fn locality_corpus(tasks: usize, per_task: usize, seed: u64) -> String {
    let tasks = tasks.min(TASK_WORDS.len());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = String::new();
    for (t, words) in TASK_WORDS.iter().enumerate().take(tasks) {
        for _ in 0..per_task {
            let mut shuffled = words.to_vec();
            shuffled.shuffle(&mut rng);
            let parts: Vec<String> = [&shuffled[..], &words[..], &shuffled[..]]
                .iter()
                .map(|w| fill_skeleton(SKELETONS.choose(&mut rng).expect("non-empty"), w))
                .collect();
            out.push_str(&format!("task:t{t}|{}\n", parts.join(" . ")));
        }
    }
    out
}

/// The same sentence repeated `count` times.
pub fn repetitive_corpus(count: usize) -> String {
    "the quick brown fox jumps over the lazy dog and runs back home again\n".repeat(count)
}
