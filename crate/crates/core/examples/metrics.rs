//! Accuracy, per-class P/R/F1 and macro-F1 over seeded labels.

use tracer::eval::{confusion_matrix, format_table, summarize};
use tracer::fixtures::{generate_random_fixture, FixtureSizes};

fn main() {
    let rows: Vec<(String, _)> = (0..3)
        .map(|seed| {
            let f = generate_random_fixture(seed, FixtureSizes { labels: 200, pool: 0 });
            (format!("seed{seed}"), summarize(&confusion_matrix(&f.gold, &f.pred).unwrap()))
        })
        .collect();
    let table: Vec<(String, &_)> = rows.iter().map(|(n, m)| (n.clone(), m)).collect();
    print!("{}", format_table(&table));
    println!("\n{}", rows[0].1);
}
