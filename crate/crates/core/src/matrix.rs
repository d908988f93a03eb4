//! Listening-event ingestion and the sparse user-artist playcount matrix.
//!
//! Input files are UTF-8 TSV. Lines starting with `#` are comments; a first
//! line whose leading field is a recognized column name (`user_id`, `user`)
//! is treated as an optional header. Event files come in two layouts,
//! auto-detected from the column count of the first data line:
//!
//! * 3 columns `user  artist  playcount` — pre-aggregated triples;
//! * 5 columns `user  artist  album  track  timestamp` — raw listening
//!   events, one event per row.
//!
//! Mixing layouts within one file is an error.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::types::{ArtistId, CountryCode, UserId};

/// One row of the users file.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct UserRecord {
    pub user_id: UserId,
    pub country: Option<CountryCode>,
}

/// One aggregated (user, artist, playcount) interaction.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PlaycountTriple {
    pub user_id: UserId,
    pub artist_id: ArtistId,
    pub playcount: u64,
}

fn is_header(first_field: &str) -> bool {
    matches!(
        first_field.trim().to_ascii_lowercase().as_str(),
        "user_id" | "user" | "userid"
    )
}

fn is_skippable(line: &str) -> bool {
    line.trim().is_empty() || line.starts_with('#')
}

/// Parses a users file. Blank or invalid country fields become `None`.
pub fn parse_users(input: &str) -> Result<Vec<UserRecord>> {
    let mut records = Vec::new();
    let mut seen_data = false;
    for (idx, line) in input.lines().enumerate() {
        let line_no = idx + 1;
        if is_skippable(line) {
            continue;
        }
        let mut fields = line.split('\t');
        let first = fields.next().unwrap_or("");
        if !seen_data && is_header(first) {
            seen_data = true;
            continue;
        }
        seen_data = true;
        let user_id = first.trim().parse::<u64>().map_err(|_| Error::Parse {
            line: line_no,
            message: format!("invalid user id {:?}", first),
        })?;
        let country = fields.next().and_then(|f| CountryCode::parse(f.trim()));
        records.push(UserRecord {
            user_id: UserId(user_id),
            country,
        });
    }
    Ok(records)
}

fn parse_id(field: &str, line_no: usize, what: &str) -> Result<u64> {
    field.trim().parse::<u64>().map_err(|_| Error::Parse {
        line: line_no,
        message: format!("invalid {what} {:?}", field),
    })
}

/// Parses an events file and aggregates it per (user, artist).
///
/// The output is sorted by (user, artist), so parsing is insensitive to the
/// input row order.
pub fn parse_events(input: &str) -> Result<Vec<PlaycountTriple>> {
    let mut mode: Option<usize> = None;
    let mut rows: Vec<(u64, u64, u64)> = Vec::new();
    let mut seen_data = false;
    for (idx, line) in input.lines().enumerate() {
        let line_no = idx + 1;
        if is_skippable(line) {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if !seen_data && is_header(fields[0]) {
            seen_data = true;
            continue;
        }
        seen_data = true;
        let cols = fields.len();
        let expected = match mode {
            Some(m) => {
                if cols != m {
                    return Err(Error::Parse {
                        line: line_no,
                        message: format!("expected {m} columns, found {cols}"),
                    });
                }
                m
            }
            None => {
                if cols != 3 && cols != 5 {
                    return Err(Error::Parse {
                        line: line_no,
                        message: format!("expected 3 or 5 columns, found {cols}"),
                    });
                }
                mode = Some(cols);
                cols
            }
        };
        let user = parse_id(fields[0], line_no, "user id")?;
        let artist = parse_id(fields[1], line_no, "artist id")?;
        let count = if expected == 3 {
            let raw = fields[2].trim().parse::<i64>().map_err(|_| Error::Parse {
                line: line_no,
                message: format!("invalid playcount {:?}", fields[2]),
            })?;
            if raw < 0 {
                return Err(Error::Parse {
                    line: line_no,
                    message: format!("negative playcount {raw}"),
                });
            }
            raw as u64
        } else {
            // Raw mode: each row is one listening event.
            1
        };
        rows.push((user, artist, count));
    }

    rows.sort_unstable();
    let mut triples: Vec<PlaycountTriple> = Vec::new();
    for (user, artist, count) in rows {
        match triples.last_mut() {
            Some(last) if last.user_id.0 == user && last.artist_id.0 == artist => {
                last.playcount += count;
            }
            _ => triples.push(PlaycountTriple {
                user_id: UserId(user),
                artist_id: ArtistId(artist),
                playcount: count,
            }),
        }
    }
    triples.retain(|t| t.playcount > 0);
    Ok(triples)
}

/// Sparse users × artists playcount matrix with country annotations.
///
/// Users and artists are indexed in ascending id order; rows store
/// `(artist_index, playcount)` pairs sorted by artist index, with no zero
/// entries. A finished matrix is immutable.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UserArtistMatrix {
    users: Vec<UserRecord>,
    artists: Vec<ArtistId>,
    rows: Vec<Vec<(u32, u64)>>,
}

/// Same shape as [`UserArtistMatrix`], values rescaled per user to (0, 1].
#[derive(Debug, Clone, PartialEq)]
pub struct NormalizedMatrix {
    users: Vec<UserRecord>,
    artists: Vec<ArtistId>,
    rows: Vec<Vec<(u32, f64)>>,
}

/// What happened while assembling a matrix from parsed inputs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BuildOutcome {
    pub matrix: UserArtistMatrix,
    /// Triples referencing users absent from the users file.
    pub dropped_unknown_users: u64,
    /// Users that appeared in the users file but had no events.
    pub users_without_events: u64,
}

/// Builds the matrix. Triples of unknown users are dropped (counted, not
/// fatal); duplicate (user, artist) triples are summed; users without any
/// event are left out of the matrix.
pub fn build_matrix(triples: &[PlaycountTriple], users: &[UserRecord]) -> BuildOutcome {
    // First record wins on duplicate user ids.
    let mut by_id: BTreeMap<UserId, Option<CountryCode>> = BTreeMap::new();
    for rec in users {
        by_id.entry(rec.user_id).or_insert(rec.country);
    }

    let mut dropped = 0u64;
    let mut kept: Vec<(UserId, ArtistId, u64)> = Vec::with_capacity(triples.len());
    let mut artist_set: BTreeSet<ArtistId> = BTreeSet::new();
    for t in triples {
        if t.playcount == 0 {
            continue;
        }
        if by_id.contains_key(&t.user_id) {
            artist_set.insert(t.artist_id);
            kept.push((t.user_id, t.artist_id, t.playcount));
        } else {
            dropped += 1;
        }
    }

    let artists: Vec<ArtistId> = artist_set.into_iter().collect();
    let artist_index: BTreeMap<ArtistId, u32> = artists
        .iter()
        .enumerate()
        .map(|(i, &a)| (a, i as u32))
        .collect();

    kept.sort_unstable_by_key(|&(u, a, _)| (u, a));

    let mut matrix_users: Vec<UserRecord> = Vec::new();
    let mut rows: Vec<Vec<(u32, u64)>> = Vec::new();
    let mut it = kept.into_iter().peekable();
    while let Some((user, artist, count)) = it.next() {
        let mut row: Vec<(u32, u64)> = Vec::new();
        let push = |a: ArtistId, c: u64, row: &mut Vec<(u32, u64)>| {
            let idx = artist_index[&a];
            match row.last_mut() {
                Some(last) if last.0 == idx => last.1 += c,
                _ => row.push((idx, c)),
            }
        };
        push(artist, count, &mut row);
        while let Some(&(u, a, c)) = it.peek() {
            if u != user {
                break;
            }
            it.next();
            push(a, c, &mut row);
        }
        matrix_users.push(UserRecord {
            user_id: user,
            country: by_id[&user],
        });
        rows.push(row);
    }

    let users_without_events = by_id.len() as u64 - matrix_users.len() as u64;
    BuildOutcome {
        matrix: UserArtistMatrix {
            users: matrix_users,
            artists,
            rows,
        },
        dropped_unknown_users: dropped,
        users_without_events,
    }
}

/// Drops users without a country and users of countries with fewer than
/// `min_users` users, then prunes artists left with zero total playcount.
pub fn filter_by_country_support(
    matrix: &UserArtistMatrix,
    min_users: usize,
) -> Result<UserArtistMatrix> {
    let mut country_counts: BTreeMap<CountryCode, usize> = BTreeMap::new();
    for user in &matrix.users {
        if let Some(c) = user.country {
            *country_counts.entry(c).or_insert(0) += 1;
        }
    }

    let keep_user = |rec: &UserRecord| -> bool {
        rec.country
            .map(|c| country_counts[&c] >= min_users)
            .unwrap_or(false)
    };

    let mut kept_rows: Vec<(UserRecord, &Vec<(u32, u64)>)> = Vec::new();
    for (rec, row) in matrix.users.iter().zip(&matrix.rows) {
        if keep_user(rec) {
            kept_rows.push((*rec, row));
        }
    }
    if kept_rows.is_empty() {
        return Err(Error::EmptyDataset);
    }

    // Prune artists with zero remaining playcount, remapping indices.
    let mut used = vec![false; matrix.artists.len()];
    for (_, row) in &kept_rows {
        for &(idx, _) in row.iter() {
            used[idx as usize] = true;
        }
    }
    let mut remap = vec![u32::MAX; matrix.artists.len()];
    let mut artists: Vec<ArtistId> = Vec::new();
    for (old_idx, &keep) in used.iter().enumerate() {
        if keep {
            remap[old_idx] = artists.len() as u32;
            artists.push(matrix.artists[old_idx]);
        }
    }

    let mut users = Vec::with_capacity(kept_rows.len());
    let mut rows = Vec::with_capacity(kept_rows.len());
    for (rec, row) in kept_rows {
        users.push(rec);
        rows.push(
            row.iter()
                .map(|&(idx, c)| (remap[idx as usize], c))
                .collect(),
        );
    }
    Ok(UserArtistMatrix {
        users,
        artists,
        rows,
    })
}

/// Rescales each user's playcounts into (0, 1] by dividing by the user's
/// maximum playcount. Unplayed artists stay at an implicit zero, so relative
/// preference ordering is preserved.
pub fn normalize_per_user(matrix: &UserArtistMatrix) -> Result<NormalizedMatrix> {
    let mut rows = Vec::with_capacity(matrix.rows.len());
    for (rec, row) in matrix.users.iter().zip(&matrix.rows) {
        let max = row.iter().map(|&(_, c)| c).max().unwrap_or(0);
        if max == 0 {
            return Err(Error::EmptyRow(rec.user_id));
        }
        rows.push(
            row.iter()
                .map(|&(idx, c)| (idx, c as f64 / max as f64))
                .collect(),
        );
    }
    Ok(NormalizedMatrix {
        users: matrix.users.clone(),
        artists: matrix.artists.clone(),
        rows,
    })
}

macro_rules! matrix_accessors {
    ($ty:ty, $val:ty) => {
        impl $ty {
            pub fn n_users(&self) -> usize {
                self.users.len()
            }

            pub fn n_artists(&self) -> usize {
                self.artists.len()
            }

            pub fn users(&self) -> &[UserRecord] {
                &self.users
            }

            pub fn artists(&self) -> &[ArtistId] {
                &self.artists
            }

            /// Sparse row of `(artist_index, value)` pairs sorted by index.
            pub fn row(&self, user_index: u32) -> &[(u32, $val)] {
                &self.rows[user_index as usize]
            }

            pub fn user_index(&self, user: UserId) -> Option<u32> {
                self.users
                    .binary_search_by_key(&user, |r| r.user_id)
                    .ok()
                    .map(|i| i as u32)
            }

            pub fn artist_index(&self, artist: ArtistId) -> Option<u32> {
                self.artists.binary_search(&artist).ok().map(|i| i as u32)
            }

            /// User indices per country, countries in ascending code order.
            pub fn country_cohorts(&self) -> BTreeMap<CountryCode, Vec<u32>> {
                let mut cohorts: BTreeMap<CountryCode, Vec<u32>> = BTreeMap::new();
                for (i, rec) in self.users.iter().enumerate() {
                    if let Some(c) = rec.country {
                        cohorts.entry(c).or_default().push(i as u32);
                    }
                }
                cohorts
            }

            pub fn has_country(&self, country: CountryCode) -> bool {
                self.users.iter().any(|r| r.country == Some(country))
            }
        }
    };
}

matrix_accessors!(UserArtistMatrix, u64);
matrix_accessors!(NormalizedMatrix, f64);

impl UserArtistMatrix {
    /// Sum of all stored playcounts.
    pub fn total_playcount(&self) -> u64 {
        self.rows
            .iter()
            .map(|r| r.iter().map(|&(_, c)| c).sum::<u64>())
            .sum()
    }

    /// Assembles a matrix directly from already-validated parts. Rows must be
    /// sorted by artist index and free of zeros; users and artists must be
    /// sorted ascending.
    pub fn from_parts(
        users: Vec<UserRecord>,
        artists: Vec<ArtistId>,
        rows: Vec<Vec<(u32, u64)>>,
    ) -> Self {
        debug_assert_eq!(users.len(), rows.len());
        UserArtistMatrix {
            users,
            artists,
            rows,
        }
    }
}

impl NormalizedMatrix {
    pub fn from_parts(
        users: Vec<UserRecord>,
        artists: Vec<ArtistId>,
        rows: Vec<Vec<(u32, f64)>>,
    ) -> Self {
        debug_assert_eq!(users.len(), rows.len());
        NormalizedMatrix {
            users,
            artists,
            rows,
        }
    }
}
