//! Prints the value circle, circle distances from one value, and the human
//! reference profile with its ranks.

use value_probe::analysis::rank_profile;
use value_probe::model::{circle_distance, human_benchmark_profile, Questionnaire, ValueCircle, ValueId};

fn main() {
    let circle = ValueCircle;
    println!("{:<5} {:>7}  neighbours", "value", "angle");
    for v in circle.ordering() {
        let [a, b] = circle.neighbors(*v);
        println!("{:<5} {:>7.3}  {a} {b}", v.code(), v.angle());
    }

    let from = ValueId::Achievement;
    let distances: Vec<String> = ValueId::ALL
        .iter()
        .map(|v| format!("{}={}", v.code(), circle_distance(from, *v)))
        .collect();
    println!("\ndistance from {from}: {}", distances.join(" "));

    let h = human_benchmark_profile();
    let ranks = rank_profile(&h.means());
    println!("\nhuman reference (rank order)");
    for v in h.rank_order() {
        let e = h.get(v);
        println!("{:>2}. {:<28} {:+.2}  recomputed rank {}", e.rank, v.display_name(), e.mean_centered_score, ranks[v.position()]);
    }

    let q = Questionnaire::synthetic();
    println!("\nquestionnaire: {} items, e.g. item 1 -> {}", q.items().len(), q.items()[0].value);
}
