use std::path::Path;
use std::sync::Mutex;

use glint_core::analysis::{write_ratings_csv, RatingRecord, Ratings};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::catalog::{Catalog, CatalogEntry};
use crate::store::{EventLog, LogEvent};
use crate::ExpError;

/// Deterministic permutation of the catalog ids.
pub fn trial_order(catalog: &Catalog, seed: u64) -> Vec<String> {
    let mut ids: Vec<String> = catalog.entries().iter().map(|e| e.id.clone()).collect();
    ids.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    ids
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SessionState {
    pub id: u64,
    pub observer: String,
    pub session: u8,
    pub seed: u64,
    pub order: Vec<String>,
    pub cursor: usize,
}

impl SessionState {
    pub fn completed(&self) -> bool {
        self.cursor == self.order.len()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Trial {
    pub session_id: u64,
    pub index: usize,
    pub total: usize,
    pub stimulus_id: String,
    pub image: String,
}

/// Body of a rating submission.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Submission {
    pub stimulus_id: String,
    pub metal: f64,
    pub shiny_black: f64,
    pub shiny_white: f64,
    pub other: f64,
}

impl Submission {
    pub fn ratings(&self) -> Ratings {
        Ratings {
            metal: self.metal,
            shiny_black: self.shiny_black,
            shiny_white: self.shiny_white,
            other: self.other,
        }
    }

    /// Reject anything but four values in [0, 100] summing to 100.
    pub fn validate(&self) -> Result<(), ExpError> {
        let r = self.ratings();
        r.validate().map_err(|_| ExpError::Validation { sum: r.sum() })
    }
}

/// Parse and validate a JSON rating submission.
pub fn parse_submission(bytes: &[u8]) -> Result<Submission, ExpError> {
    let s: Submission = serde_json::from_slice(bytes).map_err(|e| ExpError::BadRequest(e.to_string()))?;
    s.validate()?;
    Ok(s)
}

#[derive(Debug)]
struct State {
    log: EventLog,
    sessions: Vec<SessionState>,
    records: Vec<RatingRecord>,
}

impl State {
    fn session_index(&self, id: u64) -> Result<usize, ExpError> {
        self.sessions
            .iter()
            .position(|s| s.id == id)
            .ok_or(ExpError::UnknownSession(id))
    }
}

/// The experiment: a stimulus catalog plus the durable session log.
///
/// All mutations go through one lock, so submissions are serialized and an
/// export sees a consistent snapshot.
#[derive(Debug)]
pub struct Experiment {
    catalog: Catalog,
    state: Mutex<State>,
}

impl Experiment {
    /// Open the log at `log_path` and replay it against `catalog`.
    pub fn open(catalog: Catalog, log_path: impl AsRef<Path>) -> Result<Self, ExpError> {
        let (log, events) = EventLog::open(log_path)?;
        let mut state = State {
            log,
            sessions: Vec::new(),
            records: Vec::new(),
        };
        for (i, event) in events.into_iter().enumerate() {
            replay(&catalog, &mut state, event).map_err(|e| ExpError::Log(format!("event {}: {e}", i + 1)))?;
        }
        Ok(Self {
            catalog,
            state: Mutex::new(state),
        })
    }

    pub fn catalog(&self) -> &Catalog {
        &self.catalog
    }

    fn lock(&self) -> std::sync::MutexGuard<'_, State> {
        // A panic while holding the lock cannot leave the state half-applied:
        // every mutation is logged first, then applied in one step.
        self.state.lock().unwrap_or_else(|p| p.into_inner())
    }

    pub fn start_session(&self, observer: &str, session: u8, seed: u64) -> Result<SessionState, ExpError> {
        if observer.trim().is_empty() {
            return Err(ExpError::BadRequest("observer must not be empty".into()));
        }
        if !(1..=2).contains(&session) {
            return Err(ExpError::BadRequest(format!("session must be 1 or 2, got {session}")));
        }
        let mut state = self.lock();
        if state.sessions.iter().any(|s| s.observer == observer && s.session == session) {
            return Err(ExpError::Conflict(format!(
                "observer {observer:?} already has session {session}"
            )));
        }
        let id = state.sessions.iter().map(|s| s.id).max().map_or(1, |m| m + 1);
        let event = LogEvent::Session {
            id,
            observer: observer.to_owned(),
            session,
            seed,
            order: trial_order(&self.catalog, seed),
        };
        state.log.append(&event)?;
        replay(&self.catalog, &mut state, event)?;
        Ok(state.sessions.last().cloned().expect("session was just added"))
    }

    pub fn session(&self, id: u64) -> Result<SessionState, ExpError> {
        let state = self.lock();
        Ok(state.sessions[state.session_index(id)?].clone())
    }

    pub fn sessions(&self) -> Vec<SessionState> {
        self.lock().sessions.clone()
    }

    /// Current trial, or `None` once every stimulus has been rated.
    pub fn next_trial(&self, id: u64) -> Result<Option<Trial>, ExpError> {
        let state = self.lock();
        let s = &state.sessions[state.session_index(id)?];
        Ok(s.order.get(s.cursor).map(|stim| Trial {
            session_id: id,
            index: s.cursor,
            total: s.order.len(),
            stimulus_id: stim.clone(),
            image: self.entry(stim).image.clone(),
        }))
    }

    /// Record a rating for the current trial and advance the session.
    pub fn submit(&self, id: u64, sub: &Submission) -> Result<SessionState, ExpError> {
        sub.validate()?;
        let mut state = self.lock();
        let idx = state.session_index(id)?;
        let s = &state.sessions[idx];
        if s.order[..s.cursor].iter().any(|done| *done == sub.stimulus_id) {
            return Err(ExpError::AlreadyRecorded(sub.stimulus_id.clone()));
        }
        match s.order.get(s.cursor) {
            Some(current) if *current == sub.stimulus_id => {}
            current => {
                return Err(ExpError::OutOfOrder {
                    expected: current.cloned(),
                    got: sub.stimulus_id.clone(),
                })
            }
        }
        let event = LogEvent::Rating {
            session_id: id,
            trial: s.cursor,
            stimulus_id: sub.stimulus_id.clone(),
            metal: sub.metal,
            shiny_black: sub.shiny_black,
            shiny_white: sub.shiny_white,
            other: sub.other,
        };
        state.log.append(&event)?;
        replay(&self.catalog, &mut state, event)?;
        Ok(state.sessions[idx].clone())
    }

    /// All accepted records, in submission order.
    pub fn records(&self) -> Vec<RatingRecord> {
        self.lock().records.clone()
    }

    /// Ratings CSV in the analysis schema.
    pub fn export_csv(&self) -> Result<Vec<u8>, ExpError> {
        let records = self.records();
        let mut out = Vec::new();
        write_ratings_csv(&mut out, &records).map_err(|e| ExpError::Log(e.to_string()))?;
        Ok(out)
    }

    fn entry(&self, id: &str) -> &CatalogEntry {
        self.catalog.get(id).expect("session orders only hold catalog ids")
    }
}

/// Apply one event to the in-memory state, checking it is consistent.
fn replay(catalog: &Catalog, state: &mut State, event: LogEvent) -> Result<(), ExpError> {
    match event {
        LogEvent::Session { id, observer, session, seed, order } => {
            if state.sessions.iter().any(|s| s.id == id) {
                return Err(ExpError::Log(format!("duplicate session id {id}")));
            }
            let mut sorted = order.clone();
            sorted.sort();
            let mut expected: Vec<&str> = catalog.entries().iter().map(|e| e.id.as_str()).collect();
            expected.sort();
            if sorted.iter().map(String::as_str).ne(expected) {
                return Err(ExpError::Log(format!(
                    "session {id} order is not a permutation of the catalog"
                )));
            }
            state.sessions.push(SessionState {
                id,
                observer,
                session,
                seed,
                order,
                cursor: 0,
            });
        }
        LogEvent::Rating { session_id, trial, stimulus_id, metal, shiny_black, shiny_white, other } => {
            let idx = state.session_index(session_id)?;
            let s = &mut state.sessions[idx];
            if trial != s.cursor || s.order.get(trial) != Some(&stimulus_id) {
                return Err(ExpError::Log(format!(
                    "rating for {stimulus_id} at trial {trial} does not match session {session_id}"
                )));
            }
            let ratings = Ratings { metal, shiny_black, shiny_white, other };
            ratings.validate().map_err(|e| ExpError::Log(e.to_string()))?;
            s.cursor += 1;
            let record = RatingRecord {
                observer: s.observer.clone(),
                session: s.session,
                stimulus: catalog
                    .get(&stimulus_id)
                    .expect("order was checked against the catalog")
                    .key(),
                ratings,
            };
            state.records.push(record);
        }
    }
    Ok(())
}
