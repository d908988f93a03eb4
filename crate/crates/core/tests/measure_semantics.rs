//! Directional sanity of the mainstreaminess measures on a population with
//! known structure: listeners sampling the head of the popularity curve
//! must score closer to the mainstream than listeners confined to the tail,
//! under every measure.

use mainstreamlab_core::mainstreaminess::{compute_table, ComputeOptions, MeasureKey};
use mainstreamlab_core::matrix::{build_matrix, PlaycountTriple, UserRecord};
use mainstreamlab_core::rng::Rng;
use mainstreamlab_core::{ArtistId, CountryCode, UserId};

const N_ARTISTS: u64 = 200;
const HEAD: u64 = 30;

fn mainstream_user(rng: &mut Rng) -> Vec<(u64, u64)> {
    // Head-heavy: mostly top artists, with playcounts following the rank.
    let mut rows = Vec::new();
    let n = 20 + rng.next_below(15);
    let mut seen = std::collections::BTreeSet::new();
    while seen.len() < n {
        let r = rng.next_f64();
        let artist = ((r * r * HEAD as f64 * 2.0) as u64).min(N_ARTISTS - 1);
        if seen.insert(artist) {
            let count = 5 + (60.0 / (artist as f64 + 2.0)) as u64 + rng.next_below(5) as u64;
            rows.push((artist, count));
        }
    }
    rows
}

fn niche_user(rng: &mut Rng) -> Vec<(u64, u64)> {
    // Tail-only, flat playcounts.
    let mut rows = Vec::new();
    let n = 20 + rng.next_below(15);
    let mut seen = std::collections::BTreeSet::new();
    while seen.len() < n {
        let artist = HEAD * 3 + rng.next_below((N_ARTISTS - HEAD * 3) as usize) as u64;
        if seen.insert(artist) {
            rows.push((artist, 1 + rng.next_below(8) as u64));
        }
    }
    rows
}

#[test]
fn head_listeners_score_higher_than_tail_listeners_on_every_measure() {
    let mut rng = Rng::new(271828);
    let mut users = Vec::new();
    let mut triples = Vec::new();
    let fi = CountryCode::parse("FI");

    // 60 mainstream-leaning users (ids 0..60), 30 niche users (ids 60..90).
    for u in 0..90u64 {
        users.push(UserRecord {
            user_id: UserId(u),
            country: fi,
        });
        let rows = if u < 60 {
            mainstream_user(&mut rng)
        } else {
            niche_user(&mut rng)
        };
        for (artist, count) in rows {
            triples.push(PlaycountTriple {
                user_id: UserId(u),
                artist_id: ArtistId(artist),
                playcount: count,
            });
        }
    }

    let matrix = build_matrix(&triples, &users).matrix;
    let table = compute_table(&matrix, &ComputeOptions::default()).unwrap();

    for key in MeasureKey::all() {
        let scores = table.scores_for(key);
        let group_mean = |pred: &dyn Fn(u64) -> bool| -> f64 {
            let vals: Vec<f64> = scores
                .iter()
                .filter(|(u, _)| pred(u.0))
                .map(|&(_, s)| s)
                .collect();
            assert!(vals.len() > 20, "{}: too many undefined scores", key.label());
            vals.iter().sum::<f64>() / vals.len() as f64
        };
        let mainstream = group_mean(&|u| u < 60);
        let niche = group_mean(&|u| u >= 60);
        assert!(
            mainstream > niche,
            "{}: mainstream group mean {mainstream:.4} not above niche {niche:.4}",
            key.label()
        );
    }
}

#[test]
fn country_scope_rewards_alignment_with_the_local_mainstream() {
    // Two countries with disjoint favorite sets; a user listening to their
    // own country's favorites scores higher on the country measure than on
    // the global one, which is diluted by the other country.
    let mut rng = Rng::new(314159);
    let mut users = Vec::new();
    let mut triples = Vec::new();
    for u in 0..80u64 {
        let (country, base) = if u % 2 == 0 { ("FI", 0u64) } else { ("SE", 100u64) };
        users.push(UserRecord {
            user_id: UserId(u),
            country: CountryCode::parse(country),
        });
        let n = 15 + rng.next_below(10);
        let mut seen = std::collections::BTreeSet::new();
        while seen.len() < n {
            let r = rng.next_f64();
            let artist = base + ((r * r * 40.0) as u64).min(99);
            if seen.insert(artist) {
                triples.push(PlaycountTriple {
                    user_id: UserId(u),
                    artist_id: ArtistId(artist),
                    playcount: 1 + (30.0 / ((artist - base) as f64 + 1.5)) as u64,
                });
            }
        }
    }
    let matrix = build_matrix(&triples, &users).matrix;
    let table = compute_table(&matrix, &ComputeOptions::default()).unwrap();

    // Compare each user's country-scope score to their global-scope score,
    // distribution method over APC.
    let global = table.scores_for(MeasureKey::all()[0]);
    let country = table.scores_for(MeasureKey::all()[1]);
    let improved = global
        .iter()
        .zip(&country)
        .filter(|((u1, g), (u2, c))| {
            assert_eq!(u1, u2);
            c > g
        })
        .count();
    assert!(
        improved as f64 > 0.9 * global.len() as f64,
        "only {improved}/{} users score higher against their own country",
        global.len()
    );
}
