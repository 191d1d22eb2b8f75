//! Segment raw articles, consolidate ratings and apply the temporal filter.

use tracer::corpus::{
    consolidate_label, split_article, temporal_filter, Corpus, RawRating, Split, DEFAULT_RULING_CUES, RATINGS,
};
use tracer::fixtures::generate_synthetic_corpus;

fn main() {
    for rating in RATINGS {
        let label = consolidate_label(&RawRating::new(rating)).unwrap();
        println!("{rating:>14} -> {label}");
    }

    let paragraphs = vec![
        "The senator said the bill passed unanimously.".to_string(),
        "Records show two members abstained.".to_string(),
        "Our ruling: The vote had no opposition, but it was not unanimous.".to_string(),
    ];
    let split = split_article(&paragraphs, &DEFAULT_RULING_CUES);
    println!("\nevidence: {:?}\nruling: {:?}", split.evidence, split.ruling);

    let train = Corpus::new(Split::Train, generate_synthetic_corpus(1, 40)).unwrap();
    let test = Corpus::new(Split::Test, generate_synthetic_corpus(2, 10)).unwrap();
    let (kept, report) = temporal_filter(&train, &test).unwrap();
    println!(
        "\ntrain {} -> {} after removing {} records dated {}..={}",
        train.records.len(),
        kept.records.len(),
        report.removed,
        report.test_range.0,
        report.test_range.1
    );
    println!("{}", kept.counts());
}
