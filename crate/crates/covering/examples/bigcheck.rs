use covering::families::FamilySet;
use covering::verifier::VerifyConfig;
use std::time::Instant;

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let which = args.get(1).map(|s| s.as_str()).unwrap_or("seven11");
    let (tree, q, designated) = match which {
        "four7" => (covering::constructions::four_sevens_tree(23).unwrap(), 23u64, 7u64),
        "seven11" => (covering::constructions::seven_elevens_tree(23).unwrap(), 23, 11),
        "pminus5" => (covering::constructions::p_minus_five_tree(23, 29).unwrap(), 29, 23),
        other => panic!("unknown: {}", other),
    };
    let t0 = Instant::now();
    let fams = FamilySet::build(&tree, q, false).unwrap();
    println!("{}: {} families, {} members, build {:?}", which, fams.families().len(), fams.member_count(), t0.elapsed());
    let t0 = Instant::now();
    let audit = fams.audit(designated).unwrap();
    println!("audit {:?}: designated={} all_odd={} sf={} repeats={:?}", t0.elapsed(), audit.designated_prime_count, audit.all_odd, audit.all_square_free, audit.distinct_except.iter().map(|(m, c)| format!("{}x{}", m, c)).collect::<Vec<_>>());
    let cfg = VerifyConfig { class_budget: 2_000_000_000, ..Default::default() };
    let t0 = Instant::now();
    let report = fams.split_verify(&cfg).unwrap();
    println!("verify {:?}: {:?} classes={} depth={}", t0.elapsed(), report.verdict, report.stats.classes_explored, report.stats.max_depth);
}
