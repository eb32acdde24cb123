use std::collections::BTreeMap;

use mobsim::community::{cut_dendrogram, hierarchical_dendrogram};
use mobsim::nalgebra::DMatrix;
use mobsim::profile::{build_profile, AssociationMatrix, ProfileOptions};
use mobsim::similarity::{pairwise_similarity, SimilarityMatrix};
use mobsim::trace_io::{
    normalize_sessions, parse_sessions, systematic_sample, write_sessions, Delimiter, ParseOptions,
    SessionRecord,
};
use proptest::prelude::*;

fn session() -> impl Strategy<Value = SessionRecord> {
    (0..3u8, 0..4u8, 0i64..500, 1i64..120)
        .prop_map(|(n, l, s, d)| SessionRecord::new(format!("n{n}"), format!("l{l}"), s, s + d))
}

fn matrix(rows: usize, cols: usize) -> impl Strategy<Value = DMatrix<f64>> {
    prop::collection::vec(prop_oneof![2 => Just(0.0), 3 => 0.0f64..1.0], rows * cols).prop_map(
        move |v| {
            let mut m = DMatrix::from_vec(rows, cols, v);
            for mut r in m.row_iter_mut() {
                let s: f64 = r.iter().sum();
                if s > 0.0 {
                    r /= s;
                }
            }
            m
        },
    )
}

/// Seconds covered per node, by any location.
fn coverage(sessions: &[SessionRecord]) -> BTreeMap<String, std::collections::BTreeSet<i64>> {
    let mut out: BTreeMap<String, std::collections::BTreeSet<i64>> = BTreeMap::new();
    for s in sessions {
        out.entry(s.node_id.clone())
            .or_default()
            .extend(s.start_time..s.end_time);
    }
    out
}

proptest! {
    #[test]
    fn normalized_sessions_are_disjoint_and_never_grow(raw in prop::collection::vec(session(), 0..40)) {
        let norm = normalize_sessions(raw.clone());
        for w in norm.windows(2) {
            prop_assert!((&w[0].node_id, w[0].start_time) <= (&w[1].node_id, w[1].start_time));
            if w[0].node_id == w[1].node_id {
                prop_assert!(w[0].end_time <= w[1].start_time);
                if w[0].end_time == w[1].start_time {
                    prop_assert_ne!(&w[0].location_id, &w[1].location_id);
                }
            }
        }
        prop_assert!(norm.iter().all(|s| s.end_time > s.start_time));
        let (after, before) = (coverage(&norm), coverage(&raw));
        for (node, secs) in &after {
            prop_assert!(secs.is_subset(&before[node]));
        }
        let total = |ss: &[SessionRecord]| ss.iter().map(SessionRecord::duration).sum::<i64>();
        prop_assert!(total(&norm) <= total(&raw));
        // With one location per node nothing is truncated, only unioned.
        let single: Vec<SessionRecord> = raw.iter().filter(|s| s.location_id == "l0").cloned().collect();
        prop_assert_eq!(coverage(&normalize_sessions(single.clone())), coverage(&single));
        prop_assert_eq!(normalize_sessions(norm.clone()), norm);
    }

    #[test]
    fn session_files_round_trip(raw in prop::collection::vec(session(), 1..30), comma in any::<bool>()) {
        let (trace, _) = parse_sessions(
            {
                let mut buf = Vec::new();
                for s in &raw {
                    buf.extend(format!("{}\t{}\t{}\t{}\n", s.node_id, s.location_id, s.start_time, s.end_time).bytes());
                }
                std::io::Cursor::new(buf)
            },
            &ParseOptions::default(),
        ).unwrap();
        let delim = if comma { Delimiter::Comma } else { Delimiter::Tab };
        let mut out = Vec::new();
        write_sessions(&trace, &mut out, delim).unwrap();
        let (again, stats) = parse_sessions(std::io::Cursor::new(out), &ParseOptions::default()).unwrap();
        prop_assert_eq!(stats.rejected, 0);
        prop_assert_eq!(again.sessions(), trace.sessions());
    }

    #[test]
    fn systematic_sample_is_evenly_spaced(pop in 1usize..300, frac in 0.01f64..1.0, seed in any::<u64>()) {
        let k = ((pop as f64 * frac).ceil() as usize).clamp(1, pop);
        let items: Vec<usize> = (0..pop).collect();
        let s = systematic_sample(&items, k, seed).unwrap();
        prop_assert_eq!(s.len(), k);
        let step = pop / k;
        prop_assert!(s[0] < step);
        prop_assert!(s.windows(2).all(|w| w[1] - w[0] == step));
        prop_assert_eq!(systematic_sample(&items, k, seed).unwrap(), s);
    }

    #[test]
    fn similarity_properties(a in matrix(6, 5), b in matrix(6, 5)) {
        let opts = ProfileOptions::default();
        let (Ok(x), Ok(y)) = (
            build_profile(&AssociationMatrix::from_values("x", a, 1), &opts),
            build_profile(&AssociationMatrix::from_values("y", b, 1), &opts),
        ) else {
            return Ok(());
        };
        let xy = pairwise_similarity(&x, &y).unwrap();
        prop_assert_eq!(xy.to_bits(), pairwise_similarity(&y, &x).unwrap().to_bits());
        prop_assert!((0.0..=1.0).contains(&xy));
        let self_sim: f64 = x.weights.iter().map(|w| w * w).sum();
        prop_assert!((pairwise_similarity(&x, &x).unwrap() - self_sim).abs() < 1e-12);
    }

    #[test]
    fn cuts_coarsen_with_height(scores in prop::collection::vec(0.0f64..1.0, 28)) {
        let m = 8;
        let mut full = vec![1.0; m * m];
        let mut k = 0;
        for i in 0..m {
            for j in i + 1..m {
                full[i * m + j] = scores[k];
                full[j * m + i] = scores[k];
                k += 1;
            }
        }
        let sm = SimilarityMatrix::from_scores((0..m).map(|i| format!("u{i}")).collect(), full).unwrap();
        let d = hierarchical_dendrogram(&sm).unwrap();
        prop_assert!(d.merges().windows(2).all(|w| w[0].height <= w[1].height));
        let mut last = usize::MAX;
        for h in [0.0, 0.1, 0.3, 0.5, 0.7, 0.9, 1.01] {
            let c = cut_dendrogram(&d, h).unwrap().community_count();
            prop_assert!(c <= last);
            last = c;
        }
        prop_assert_eq!(last, 1);
    }
}
