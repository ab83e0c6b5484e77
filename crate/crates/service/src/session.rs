use std::collections::BTreeMap;
use std::fmt;

use film_accord::{ConsensusReport, FeedbackEntry, RankedRecommendation};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SessionState {
    Gathering,
    Recommended,
    ConsensusReached,
    ReEvaluating,
}

impl fmt::Display for SessionState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionParticipant {
    pub id: String,
    pub name: String,
    pub favorite: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Session {
    pub id: String,
    pub state: SessionState,
    pub participants: Vec<SessionParticipant>,
    pub candidates: Vec<String>,
    pub genre_filter: bool,
    pub recommendation: Option<RankedRecommendation>,
    pub feedback: BTreeMap<String, FeedbackEntry>,
    pub consensus: Option<ConsensusReport>,
}

impl Session {
    pub fn new(id: String, candidates: Vec<String>, genre_filter: bool) -> Self {
        Session {
            id,
            state: SessionState::Gathering,
            participants: Vec::new(),
            candidates,
            genre_filter,
            recommendation: None,
            feedback: BTreeMap::new(),
            consensus: None,
        }
    }

    pub fn participant(&self, id: &str) -> Option<&SessionParticipant> {
        self.participants.iter().find(|p| p.id == id)
    }

    /// Adds a participant or replaces one with the same id.
    pub fn upsert_participant(&mut self, p: SessionParticipant) {
        match self.participants.iter_mut().find(|q| q.id == p.id) {
            Some(slot) => *slot = p,
            None => self.participants.push(p),
        }
    }

    pub fn can_edit_participants(&self) -> bool {
        matches!(self.state, SessionState::Gathering | SessionState::ReEvaluating)
    }

    pub fn can_recommend(&self) -> bool {
        matches!(self.state, SessionState::Gathering | SessionState::ReEvaluating)
    }

    pub fn set_recommendation(&mut self, r: RankedRecommendation) {
        self.recommendation = Some(r);
        self.feedback.clear();
        self.consensus = None;
        self.state = SessionState::Recommended;
    }

    /// Participants who have not submitted feedback yet, in join order.
    pub fn missing_feedback(&self) -> Vec<&str> {
        self.participants
            .iter()
            .filter(|p| !self.feedback.contains_key(&p.id))
            .map(|p| p.id.as_str())
            .collect()
    }

    /// Submitted entries in participant join order.
    pub fn ordered_feedback(&self) -> Vec<&FeedbackEntry> {
        self.participants
            .iter()
            .filter_map(|p| self.feedback.get(&p.id))
            .collect()
    }
}
