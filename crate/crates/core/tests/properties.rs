//! Property tests for the cross-module invariants.

use proptest::prelude::*;

use mainstreamlab_core::mainstreaminess::{
    distribution_measure, kendall_tau_b, normalized_symmetrized_divergence, rank_measure,
};
use mainstreamlab_core::matrix::{
    build_matrix, filter_by_country_support, normalize_per_user, PlaycountTriple, UserRecord,
};
use mainstreamlab_core::popularity::{
    profile, scale_global_to_country, to_distribution, Basis, PopularityProfile, Scope,
};
use mainstreamlab_core::recsys::{tertile_split, UserSet};
use mainstreamlab_core::stats::{cohens_d, describe, kruskal_wallis};
use mainstreamlab_core::{ArtistId, CountryCode, UserId};

fn arb_triples() -> impl Strategy<Value = Vec<(u64, u64, u64)>> {
    proptest::collection::vec((0u64..20, 0u64..15, 1u64..50), 1..80)
}

fn matrix_from(raw: &[(u64, u64, u64)]) -> mainstreamlab_core::matrix::UserArtistMatrix {
    let countries = ["FI", "SE", "NO", "DE"];
    let users: Vec<UserRecord> = (0..20)
        .map(|i| UserRecord {
            user_id: UserId(i),
            country: CountryCode::parse(countries[(i % 4) as usize]),
        })
        .collect();
    let triples: Vec<PlaycountTriple> = raw
        .iter()
        .map(|&(u, a, c)| PlaycountTriple {
            user_id: UserId(u),
            artist_id: ArtistId(a),
            playcount: c,
        })
        .collect();
    build_matrix(&triples, &users).matrix
}

proptest! {
    #[test]
    fn normalized_rows_peak_at_one(raw in arb_triples()) {
        let m = matrix_from(&raw);
        let norm = normalize_per_user(&m).unwrap();
        for i in 0..norm.n_users() {
            let row = norm.row(i as u32);
            let max = row.iter().map(|&(_, v)| v).fold(f64::NEG_INFINITY, f64::max);
            prop_assert_eq!(max, 1.0);
            for &(_, v) in row {
                prop_assert!(v > 0.0 && v <= 1.0);
            }
        }
    }

    #[test]
    fn build_matrix_order_independent(raw in arb_triples(), seed in 0u64..1000) {
        let m1 = matrix_from(&raw);
        let mut shuffled = raw.clone();
        let mut rng = mainstreamlab_core::rng::Rng::new(seed);
        rng.shuffle(&mut shuffled);
        let m2 = matrix_from(&shuffled);
        prop_assert_eq!(m1, m2);
    }

    #[test]
    fn country_filter_idempotent(raw in arb_triples(), min_users in 1usize..6) {
        let m = matrix_from(&raw);
        if let Ok(once) = filter_by_country_support(&m, min_users) {
            let twice = filter_by_country_support(&once, min_users).unwrap();
            prop_assert_eq!(once, twice);
        }
    }

    #[test]
    fn alc_never_exceeds_apc(raw in arb_triples()) {
        let m = matrix_from(&raw);
        let apc = profile(&m, Basis::Apc, Scope::Global).unwrap();
        let alc = profile(&m, Basis::Alc, Scope::Global).unwrap();
        for a in 0..m.n_artists() as u32 {
            prop_assert!(alc.value(a) <= apc.value(a));
        }
    }

    #[test]
    fn country_profiles_sum_to_global(raw in arb_triples()) {
        let m = matrix_from(&raw);
        let global = profile(&m, Basis::Apc, Scope::Global).unwrap();
        let mut summed = vec![0.0; m.n_artists()];
        for &country in m.country_cohorts().keys() {
            let p = profile(&m, Basis::Apc, Scope::Country(country)).unwrap();
            for a in 0..m.n_artists() as u32 {
                summed[a as usize] += p.value(a);
            }
        }
        for a in 0..m.n_artists() as u32 {
            prop_assert!((summed[a as usize] - global.value(a)).abs() < 1e-9);
        }
    }

    #[test]
    fn scaled_total_matches_country_total(
        global_vals in proptest::collection::vec(0.0f64..100.0, 2..30),
        country_scale in 0.01f64..10.0,
    ) {
        prop_assume!(global_vals.iter().sum::<f64>() > 0.0);
        let n = global_vals.len();
        let global = PopularityProfile::from_dense(Basis::Apc, Scope::Global, global_vals.clone());
        let country_vals: Vec<f64> = global_vals.iter().rev().map(|v| v * country_scale + 0.1).collect();
        let country = PopularityProfile::from_dense(
            Basis::Apc,
            Scope::Country(CountryCode::parse("FI").unwrap()),
            country_vals,
        );
        let scaled = scale_global_to_country(&global, &country).unwrap();
        let rel = (scaled.total() - country.total()).abs() / country.total();
        prop_assert!(rel < 1e-9, "relative error {rel} over {n} artists");
    }

    #[test]
    fn distributions_sum_to_one(
        values in proptest::collection::vec(0.0f64..1000.0, 1..50),
        epsilon in 1e-12f64..0.1,
    ) {
        let n = values.len();
        let p = PopularityProfile::from_dense(Basis::Apc, Scope::Global, values);
        let support: Vec<u32> = (0..n as u32).collect();
        let d = to_distribution(&p, &support, epsilon).unwrap();
        let total: f64 = d.probabilities().iter().sum();
        prop_assert!((total - 1.0).abs() < 1e-12);
        prop_assert!(d.probabilities().iter().all(|&x| x > 0.0));
    }

    #[test]
    fn nsd_stays_in_unit_interval(
        a in proptest::collection::vec(0.0f64..50.0, 2..20),
        b_seed in 0u64..10_000,
    ) {
        let n = a.len();
        let mut rng = mainstreamlab_core::rng::Rng::new(b_seed);
        let b: Vec<f64> = (0..n).map(|_| rng.uniform(0.0, 50.0)).collect();
        let support: Vec<u32> = (0..n as u32).collect();
        let pa = PopularityProfile::from_dense(Basis::Apc, Scope::Global, a);
        let pb = PopularityProfile::from_dense(Basis::Apc, Scope::Global, b);
        let da = to_distribution(&pa, &support, 1e-8).unwrap();
        let db = to_distribution(&pb, &support, 1e-8).unwrap();
        let v = normalized_symmetrized_divergence(&da, &db).unwrap();
        prop_assert!((0.0..1.0).contains(&v));
    }

    #[test]
    fn distribution_measure_in_range_and_symmetric(
        a in proptest::collection::vec(0u32..40, 2..25),
        b in proptest::collection::vec(0u32..40, 2..25),
    ) {
        let n = a.len().max(b.len());
        let mut av = vec![0.0; n];
        let mut bv = vec![0.0; n];
        for (i, &x) in a.iter().enumerate() { av[i] = x as f64; }
        for (i, &x) in b.iter().enumerate() { bv[i] = x as f64; }
        prop_assume!(av.iter().any(|&x| x > 0.0) || bv.iter().any(|&x| x > 0.0));
        let pa = PopularityProfile::from_dense(Basis::Apc, Scope::Global, av);
        let pb = PopularityProfile::from_dense(Basis::Apc, Scope::Global, bv);
        let ab = distribution_measure(&pa, &pb, 1e-8).unwrap();
        let ba = distribution_measure(&pb, &pa, 1e-8).unwrap();
        prop_assert!(ab > 0.0 && ab <= 1.0);
        prop_assert!((ab - ba).abs() < 1e-12);
    }

    #[test]
    fn tau_symmetry_and_negation(
        x in proptest::collection::vec(-100.0f64..100.0, 3..40),
        y_seed in 0u64..10_000,
    ) {
        let n = x.len();
        let mut rng = mainstreamlab_core::rng::Rng::new(y_seed);
        // Tie-free y by construction.
        let mut y: Vec<f64> = (0..n).map(|i| i as f64 + rng.next_f64() * 0.5).collect();
        rng.shuffle(&mut y);
        if let Ok(t_xy) = kendall_tau_b(&x, &y) {
            let t_yx = kendall_tau_b(&y, &x).unwrap();
            prop_assert_eq!(t_xy.to_bits(), t_yx.to_bits());
            let neg_y: Vec<f64> = y.iter().map(|&v| -v).collect();
            let t_neg = kendall_tau_b(&x, &neg_y).unwrap();
            prop_assert!((t_xy + t_neg).abs() < 1e-12);
        }
    }

    #[test]
    fn rank_measure_scale_invariant(
        vals in proptest::collection::vec(0u32..30, 3..20),
        factor in 0.001f64..1000.0,
    ) {
        let n = vals.len();
        let user_vals: Vec<f64> = vals.iter().map(|&v| v as f64).collect();
        let ref_vals: Vec<f64> = (0..n).map(|i| ((i * 7 + 3) % 13) as f64 + 1.0).collect();
        let user = PopularityProfile::from_dense(Basis::Apc, Scope::Global, user_vals);
        let reference = PopularityProfile::from_dense(Basis::Apc, Scope::Global, ref_vals);
        let scaled_user = user.map_values(|v| v * factor);
        match (rank_measure(&user, &reference), rank_measure(&scaled_user, &reference)) {
            (Ok(a), Ok(b)) => prop_assert!((a - b).abs() < 1e-9),
            (a, b) => prop_assert_eq!(a.is_err(), b.is_err()),
        }
    }

    #[test]
    fn describe_affine_invariance(
        values in proptest::collection::vec(-50.0f64..50.0, 3..40),
        scale in 0.01f64..20.0,
        shift in -100.0f64..100.0,
    ) {
        let base = describe(&values).unwrap();
        let mapped: Vec<f64> = values.iter().map(|&v| scale * v + shift).collect();
        let transformed = describe(&mapped).unwrap();
        prop_assert!((transformed.mean - (scale * base.mean + shift)).abs() < 1e-6);
        prop_assert!((transformed.median - (scale * base.median + shift)).abs() < 1e-6);
        prop_assert!((transformed.skewness - base.skewness).abs() < 1e-9
            || (base.sd * scale) < 1e-9);
        prop_assert!((transformed.kurtosis - base.kurtosis).abs() < 1e-9
            || (base.sd * scale) < 1e-9);
    }

    #[test]
    fn kw_tie_correction_only_raises_h(
        a in proptest::collection::vec(0u32..6, 2..30),
        b in proptest::collection::vec(0u32..6, 2..30),
    ) {
        let ga: Vec<f64> = a.iter().map(|&v| v as f64).collect();
        let gb: Vec<f64> = b.iter().map(|&v| v as f64).collect();
        let corrected = kruskal_wallis(&[&ga, &gb]).unwrap();

        // Uncorrected H recomputed directly from average ranks.
        let pooled: Vec<f64> = ga.iter().chain(gb.iter()).copied().collect();
        let mut order: Vec<usize> = (0..pooled.len()).collect();
        order.sort_by(|&x, &y| pooled[x].total_cmp(&pooled[y]));
        let mut ranks = vec![0.0; pooled.len()];
        let mut i = 0;
        while i < order.len() {
            let mut j = i;
            while j + 1 < order.len() && pooled[order[j + 1]] == pooled[order[i]] {
                j += 1;
            }
            let avg = (i + j + 2) as f64 / 2.0;
            for &ix in &order[i..=j] {
                ranks[ix] = avg;
            }
            i = j + 1;
        }
        let nf = pooled.len() as f64;
        let r1: f64 = ranks[..ga.len()].iter().sum();
        let r2: f64 = ranks[ga.len()..].iter().sum();
        let h_plain = 12.0 / (nf * (nf + 1.0))
            * (r1 * r1 / ga.len() as f64 + r2 * r2 / gb.len() as f64)
            - 3.0 * (nf + 1.0);
        prop_assert!(corrected.statistic >= h_plain - 1e-9);
    }

    #[test]
    fn cohens_d_shift_and_scale(
        a in proptest::collection::vec(-10.0f64..10.0, 2..20),
        b in proptest::collection::vec(-10.0f64..10.0, 2..20),
        shift in -5.0f64..5.0,
        scale in 0.1f64..10.0,
    ) {
        if let Ok(d) = cohens_d(&a, &b) {
            prop_assert!((cohens_d(&b, &a).unwrap() + d).abs() < 1e-12);
            let sa: Vec<f64> = a.iter().map(|&v| v + shift).collect();
            let sb: Vec<f64> = b.iter().map(|&v| v + shift).collect();
            prop_assert!((cohens_d(&sa, &sb).unwrap() - d).abs() < 1e-9);
            let ca: Vec<f64> = a.iter().map(|&v| v * scale).collect();
            let cb: Vec<f64> = b.iter().map(|&v| v * scale).collect();
            prop_assert!((cohens_d(&ca, &cb).unwrap() - d).abs() < 1e-9);
        }
    }

    #[test]
    fn tertiles_partition_with_near_equal_sizes(
        n in 3usize..300,
        tied in proptest::bool::ANY,
        seed in 0u64..10_000,
    ) {
        let mut rng = mainstreamlab_core::rng::Rng::new(seed);
        let scores: Vec<(UserId, f64)> = (0..n as u64)
            .map(|i| (UserId(i), if tied { 0.5 } else { rng.next_f64() }))
            .collect();
        let split = tertile_split(&scores).unwrap();
        let mut all: Vec<UserId> = split
            .set(UserSet::Low).unwrap().iter()
            .chain(split.set(UserSet::Mid).unwrap())
            .chain(split.set(UserSet::High).unwrap())
            .copied()
            .collect();
        all.sort();
        let expected: Vec<UserId> = (0..n as u64).map(UserId).collect();
        prop_assert_eq!(all, expected);
        let sizes = [split.low.len(), split.mid.len(), split.high.len()];
        let max = sizes.iter().max().unwrap();
        let min = sizes.iter().min().unwrap();
        prop_assert!(max - min <= 1);
    }
}
