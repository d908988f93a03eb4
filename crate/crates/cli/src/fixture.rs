//! Synthetic listening-event fixture: 500 users across five countries (plus
//! a handful without country data), 300 artists on a long-tail popularity
//! curve, and per-country local favorites that produce distinct country
//! mainstreams and outliers. Fully determined by the seed.
//!
//! The checked-in files under `fixtures/` are `generate(FIXTURE_SEED)`
//! verbatim; regenerate them with the `gen-fixture` binary.

use mainstreamlab_core::math;
use mainstreamlab_core::rng::Rng;

pub const FIXTURE_SEED: u64 = 9;
const N_ARTISTS: usize = 300;
const COUNTRIES: [&str; 5] = ["BR", "DE", "FI", "JP", "SE"];
const USERS_PER_COUNTRY: usize = 100;
const STATELESS_USERS: usize = 8;

#[derive(Debug, Clone)]
pub struct Fixture {
    pub users_tsv: String,
    pub events_tsv: String,
}

fn weighted_draw(rng: &mut Rng, weights: &[f64], total: f64) -> usize {
    let mut target = rng.next_f64() * total;
    for (i, &w) in weights.iter().enumerate() {
        target -= w;
        if target <= 0.0 {
            return i;
        }
    }
    weights.len() - 1
}

pub fn generate(seed: u64) -> Fixture {
    let mut rng = Rng::substream(seed, "fixture", &[]);

    // Long-tail global popularity.
    let base_weights: Vec<f64> = (0..N_ARTISTS)
        .map(|i| 1.0 / math::powf(i as f64 + 5.0, 1.1))
        .collect();

    // Each country boosts a dozen mid-tail artists of its own.
    let mut country_weights: Vec<Vec<f64>> = Vec::new();
    for (c, _) in COUNTRIES.iter().enumerate() {
        let mut weights = base_weights.clone();
        for slot in 0..12 {
            let artist = 30 + c * 25 + slot * 2;
            weights[artist] *= 8.0;
        }
        country_weights.push(weights);
    }
    let country_totals: Vec<f64> = country_weights.iter().map(|w| w.iter().sum()).collect();
    let base_total: f64 = base_weights.iter().sum();

    let mut users_tsv = String::from("# synthetic listening fixture\nuser_id\tcountry\n");
    let mut events_tsv = String::from("# synthetic listening fixture (aggregated triples)\n");

    let mut user_id = 0u64;
    let mut emit_user = |users_tsv: &mut String,
                         events_tsv: &mut String,
                         rng: &mut Rng,
                         country: Option<&str>,
                         weights: &[f64],
                         total: f64| {
        user_id += 1;
        match country {
            Some(c) => users_tsv.push_str(&format!("{user_id}\t{c}\n")),
            None => users_tsv.push_str(&format!("{user_id}\t\n")),
        }
        let n_artists = 15 + rng.next_below(36);
        let mut chosen: Vec<usize> = Vec::with_capacity(n_artists);
        let mut guard = 0;
        while chosen.len() < n_artists && guard < 10_000 {
            guard += 1;
            let artist = weighted_draw(rng, weights, total);
            if !chosen.contains(&artist) {
                chosen.push(artist);
            }
        }
        chosen.sort_unstable();
        for artist in chosen {
            let playcount = 1 + math::floor(math::exp(rng.uniform(0.0, 4.6))) as u64;
            events_tsv.push_str(&format!("{user_id}\t{}\t{playcount}\n", 1000 + artist));
        }
    };

    for (c, country) in COUNTRIES.iter().enumerate() {
        for _ in 0..USERS_PER_COUNTRY {
            emit_user(
                &mut users_tsv,
                &mut events_tsv,
                &mut rng,
                Some(country),
                &country_weights[c],
                country_totals[c],
            );
        }
    }
    for _ in 0..STATELESS_USERS {
        emit_user(
            &mut users_tsv,
            &mut events_tsv,
            &mut rng,
            None,
            &base_weights,
            base_total,
        );
    }

    // A few orphan events referencing a user absent from the users file.
    for artist in [1000, 1001, 1002] {
        events_tsv.push_str(&format!("999999\t{artist}\t3\n"));
    }

    Fixture {
        users_tsv,
        events_tsv,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn generation_is_deterministic() {
        let a = generate(FIXTURE_SEED);
        let b = generate(FIXTURE_SEED);
        assert_eq!(a.users_tsv, b.users_tsv);
        assert_eq!(a.events_tsv, b.events_tsv);
    }

    #[test]
    fn fixture_has_five_hundred_country_users() {
        let f = generate(FIXTURE_SEED);
        let with_country = f
            .users_tsv
            .lines()
            .filter(|l| !l.starts_with('#') && !l.starts_with("user_id"))
            .filter(|l| l.split('\t').nth(1).map(|c| c.len() == 2).unwrap_or(false))
            .count();
        assert_eq!(with_country, 500);
    }

    #[test]
    fn committed_fixture_matches_generator() {
        let dir = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures");
        let users = std::fs::read_to_string(dir.join("users.tsv")).unwrap();
        let events = std::fs::read_to_string(dir.join("events.tsv")).unwrap();
        let f = generate(FIXTURE_SEED);
        assert_eq!(
            users, f.users_tsv,
            "fixtures/users.tsv is stale; rerun gen-fixture"
        );
        assert_eq!(
            events, f.events_tsv,
            "fixtures/events.tsv is stale; rerun gen-fixture"
        );
    }
}
