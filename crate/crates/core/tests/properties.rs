use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use proptest::prelude::*;

use wrangle::assistant::Assistant;
use wrangle::datadiff::{self, hungarian, ks_statistic, tv_statistic, Datadiff};
use wrangle::dialect::{self, Dialect};
use wrangle::eval::{self, Corruption};
use wrangle::outlier::{self, AggregateFilter};
use wrangle::protocol::{decode_bindings, encode_bindings};
use wrangle::typeinfer::TypeConstraint;
use wrangle::{InteractionSet, Session, Settings};

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

fn brute(cost: &[Vec<f64>]) -> Option<f64> {
    let n = cost.len();
    let mut perm: Vec<usize> = (0..n).collect();
    let mut best: Option<f64> = None;
    loop {
        if perm.iter().enumerate().all(|(i, &j)| cost[i][j].is_finite()) {
            let c: f64 = perm.iter().enumerate().map(|(i, &j)| cost[i][j]).sum();
            best = Some(best.map_or(c, |b: f64| b.min(c)));
        }
        let Some(k) = (1..n).rev().find(|&k| perm[k - 1] < perm[k]) else {
            return best;
        };
        let l = (k..n).rev().find(|&l| perm[l] > perm[k - 1]).unwrap();
        perm.swap(k - 1, l);
        perm[k..].reverse();
    }
}

fn matrix() -> impl Strategy<Value = Vec<Vec<f64>>> {
    (1usize..=5).prop_flat_map(|n| {
        prop::collection::vec(
            prop::collection::vec(
                prop_oneof![9 => (0u32..64).prop_map(|k| k as f64 / 16.0), 1 => Just(f64::INFINITY)],
                n,
            ),
            n,
        )
    })
}

fn freqs() -> impl Strategy<Value = BTreeMap<String, f64>> {
    prop::collection::btree_map("[a-e]", 1u32..20, 1..6).prop_map(|m| {
        let total: u32 = m.values().sum();
        m.into_iter().map(|(k, c)| (k, c as f64 / total as f64)).collect()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn assignment_is_optimal(m in matrix()) {
        let got = hungarian::solve(&m).map(|a| a.cost);
        prop_assert_eq!(got, brute(&m));
    }

    #[test]
    fn ks_is_a_bounded_symmetric_distance(
        a in prop::collection::vec(-5i32..5, 1..40),
        b in prop::collection::vec(-5i32..5, 1..40),
    ) {
        let (a, b): (Vec<f64>, Vec<f64>) = (a.iter().map(|&v| v as f64).collect(), b.iter().map(|&v| v as f64).collect());
        let d = ks_statistic(&a, &b).unwrap();
        prop_assert!((0.0..=1.0).contains(&d));
        prop_assert_eq!(d, ks_statistic(&b, &a).unwrap());
        prop_assert_eq!(ks_statistic(&a, &a).unwrap(), 0.0);
    }

    #[test]
    fn tv_is_a_bounded_symmetric_distance(p in freqs(), q in freqs()) {
        let d = tv_statistic(&p, &q);
        prop_assert!((0.0..=1.0 + 1e-12).contains(&d));
        prop_assert!((d - tv_statistic(&q, &p)).abs() < 1e-15);
        prop_assert_eq!(tv_statistic(&p, &p), 0.0);
    }

    #[test]
    fn written_dialects_parse_back(
        rows in prop::collection::vec(prop::collection::vec("[a-z0-9 ,;|\"']{1,6}", 3), 1..6),
        delim in prop::sample::select(vec![',', ';', '|', '\t']),
        quote in prop::sample::select(vec![Some('"'), Some('\''), None]),
    ) {
        let d = Dialect::new(Some(delim), quote, if quote.is_none() { Some('\\') } else { None });
        let text = eval::write_dialect(&rows, &d);
        prop_assert_eq!(dialect::parse(&text, &d), rows);
    }

    #[test]
    fn bindings_round_trip(pairs in prop::collection::vec(("[a-z]{1,8}", "\\PC{0,12}"), 0..4)) {
        let pairs: Vec<(String, String)> = pairs;
        let line = encode_bindings(&pairs);
        prop_assert!(!line.contains('\n'));
        prop_assert_eq!(decode_bindings(&line).unwrap(), pairs);
    }

    #[test]
    fn free_text_constraints_round_trip(value in "\\PC{0,16}", column in "\\PC{1,8}") {
        let c = TypeConstraint::NotMissing(value.clone());
        prop_assert_eq!(c.to_string().parse::<TypeConstraint>().unwrap(), c);
        let f = AggregateFilter { column, value };
        let text = f.to_string();
        prop_assert!(!text.contains('/'));
        prop_assert_eq!(text.parse::<AggregateFilter>().unwrap(), f);
    }

    #[test]
    fn flagged_values_lie_outside_the_band(
        values in prop::collection::vec(-100i32..100, 2..80),
        m in prop::sample::select(vec![1.0, 2.0, 3.0]),
    ) {
        let v: Vec<f64> = values.iter().map(|&x| x as f64).collect();
        let flagged = outlier::detect_outliers(&v, m);
        prop_assert!(flagged.windows(2).all(|w| w[0] < w[1]));
        let n = v.len() as f64;
        let mean = v.iter().sum::<f64>() / n;
        let sd = (v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n).sqrt();
        for (i, x) in v.iter().enumerate() {
            let far = sd > 0.0 && (x - mean).abs() >= m * sd * (1.0 + 1e-9);
            let near = sd == 0.0 || (x - mean).abs() < m * sd * (1.0 - 1e-9);
            if far {
                prop_assert!(flagged.contains(&i));
            }
            if near {
                prop_assert!(!flagged.contains(&i));
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn reconciled_output_has_the_reference_shape(seed in any::<u64>()) {
        let mut rng = <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(seed);
        let base = eval::base_table((seed % 2) as usize, &mut rng);
        let case = eval::corrupt(&base, seed, &Corruption::ALL).unwrap();
        let (rows, header) = (case.input.n_rows(), case.reference.header());
        let dd = Datadiff::new(case.input, case.reference, datadiff::Params::default()).unwrap();
        let h = InteractionSet::new();
        let e = dd.best(&h).unwrap();
        prop_assert!(dd.valid(&e, &h));
        let out = dd.apply(&e).unwrap().table;
        prop_assert_eq!(out.n_rows(), rows);
        prop_assert_eq!(out.header(), header);
    }

    #[test]
    fn random_selections_grow_the_interaction_set(picks in prop::collection::vec(0usize..50, 0..4)) {
        let bindings = vec![
            ("input".to_string(), fixture("bb14.csv")),
            ("reference".to_string(), fixture("bb15.csv")),
        ];
        let mut s = Session::init("datadiff", bindings, Settings::default()).unwrap();
        for (k, p) in picks.iter().enumerate() {
            let n = match s.step() {
                Ok(rec) => rec.choices.len(),
                Err(e) => {
                    prop_assert!(e.is_conflict());
                    break;
                }
            };
            if n == 0 {
                break;
            }
            let before = s.constraints().to_vec();
            s.select(p % n).unwrap();
            prop_assert_eq!(s.revision(), k as u64 + 1);
            prop_assert_eq!(&s.constraints()[..before.len()], &before[..]);
            prop_assert_eq!(s.constraints().len(), before.len() + 1);
        }
    }
}
