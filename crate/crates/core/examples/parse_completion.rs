//! Parses raw completions given on stdin, or a built-in set of samples.
//!
//! echo "1. 4 2. 5 ..." | cargo run --example parse_completion -- -

use std::io::Read;

use value_probe::parser::{format_scores, parse_scores, parse_single_score, OutputFormat, ParseOptions};

fn report(label: &str, raw: &str) {
    match parse_scores(raw, ParseOptions::default()) {
        Ok(v) => println!("{label}: ok, first five {:?}", &v.scores()[..5]),
        Err(e) => println!("{label}: {} ({e})", e.kind()),
    }
}

fn main() {
    if std::env::args().nth(1).as_deref() == Some("-") {
        let mut raw = String::new();
        std::io::stdin().read_to_string(&mut raw).unwrap();
        report("stdin", &raw);
        return;
    }

    let scores: Vec<u8> = (0..57).map(|i| (i % 6 + 1) as u8).collect();
    for format in OutputFormat::ALL {
        report(&format!("{format:?}"), &format_scores(&scores, format));
    }

    let mut missing = format_scores(&scores, OutputFormat::NumberedDot);
    missing = missing.lines().skip(1).collect::<Vec<_>>().join("\n");
    report("missing item", &missing);
    report("refusal", "I'm sorry, but as an AI I don't have personal values.");
    report("out of range", &format_scores(&scores, OutputFormat::NumberedDot).replace("1. 1", "1. 7"));

    for raw in ["5", "My answer is 3.", "4 or 5"] {
        println!("serial {raw:?}: {:?}", parse_single_score(raw, 1).map_err(|e| e.kind()));
    }
}
