//! One analyst's recommend / refine / accept loop.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::assistant::{Descriptor, DynAssistant, Recommendation};
use crate::error::{Error, Result};
use crate::registry::{self, Bindings, Options};
use crate::table::Table;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Active,
    Accepted,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FinalResult {
    pub script: Vec<String>,
    pub output: Table,
    pub script_text: String,
}

/// Per-session overrides of the shipped [`Options`].
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Settings {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub preview_rows: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub column: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub m: Option<f64>,
}

impl Settings {
    pub fn is_empty(&self) -> bool {
        *self == Settings::default()
    }

    pub fn options(&self) -> Options {
        let mut o = Options::default();
        if let Some(s) = self.seed {
            o.seed = s;
        }
        if let Some(n) = self.preview_rows {
            o.preview_rows = n;
        }
        if let Some(c) = &self.column {
            o.column = Some(c.clone());
        }
        if let Some(m) = self.m {
            o.m = m;
        }
        o
    }
}

/// Recorded constraint sequence that rebuilds a session.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplayScript {
    pub assistant: String,
    pub bindings: Vec<(String, String)>,
    #[serde(default, skip_serializing_if = "Settings::is_empty")]
    pub settings: Settings,
    pub constraints: Vec<String>,
}

impl ReplayScript {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::InvalidData(format!("replay script: {e}")))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("replay scripts always serialize")
    }
}

pub struct Session {
    id: String,
    assistant: Arc<dyn DynAssistant>,
    bindings: Bindings,
    settings: Settings,
    h: Vec<String>,
    history: Vec<String>,
    status: Status,
    last: Option<Recommendation>,
    result: Option<FinalResult>,
    revision: u64,
    preview_rows: usize,
}

impl Session {
    pub fn new(assistant: Arc<dyn DynAssistant>, bindings: Bindings, preview_rows: usize) -> Self {
        Session {
            id: uuid::Uuid::new_v4().simple().to_string(),
            assistant,
            bindings,
            settings: Settings::default(),
            h: Vec::new(),
            history: Vec::new(),
            status: Status::Active,
            last: None,
            result: None,
            revision: 0,
            preview_rows,
        }
    }

    /// Starts a session with the empty interaction set.
    pub fn init(assistant_id: &str, bindings: Bindings, settings: Settings) -> Result<Self> {
        let opts = settings.options();
        let a = registry::build(assistant_id, &bindings, &opts)?;
        let mut s = Session::new(a, bindings, opts.preview_rows);
        s.settings = settings;
        Ok(s)
    }

    pub fn from_replay(script: &ReplayScript) -> Result<Self> {
        let bindings = script.bindings.iter().map(|(k, v)| (k.clone(), v.into())).collect();
        let mut s = Session::init(&script.assistant, bindings, script.settings.clone())?;
        for c in &script.constraints {
            s.constrain(c)?;
        }
        Ok(s)
    }

    pub fn replay_script(&self) -> ReplayScript {
        ReplayScript {
            assistant: self.descriptor().id.to_string(),
            bindings: self
                .bindings
                .iter()
                .map(|(k, v)| (k.clone(), v.to_string_lossy().into_owned()))
                .collect(),
            settings: self.settings.clone(),
            constraints: self.h.clone(),
        }
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn set_id(&mut self, id: impl Into<String>) {
        self.id = id.into();
    }

    pub fn descriptor(&self) -> &Descriptor {
        self.assistant.descriptor()
    }

    pub fn assistant(&self) -> &Arc<dyn DynAssistant> {
        &self.assistant
    }

    pub fn bindings(&self) -> &Bindings {
        &self.bindings
    }

    pub fn constraints(&self) -> &[String] {
        &self.h
    }

    pub fn history(&self) -> &[String] {
        &self.history
    }

    pub fn status(&self) -> Status {
        self.status
    }

    /// Increases whenever the interaction set changes.
    pub fn revision(&self) -> u64 {
        self.revision
    }

    pub fn last(&self) -> Option<&Recommendation> {
        self.last.as_ref()
    }

    fn ensure_active(&self) -> Result<()> {
        match self.status {
            Status::Active => Ok(()),
            Status::Accepted => Err(Error::SessionAccepted),
        }
    }

    /// Computes (or returns the cached) recommendation for the current set.
    pub fn step(&mut self) -> Result<&Recommendation> {
        self.ensure_active()?;
        if self.last.is_none() {
            self.last = Some(self.assistant.recommend(&self.h, self.preview_rows)?);
        }
        Ok(self.last.as_ref().unwrap())
    }

    pub fn select(&mut self, index: usize) -> Result<()> {
        self.select_at(index, None)
    }

    /// Selects a choice of the cached recommendation. When `revision` is
    /// given it must match the revision the choice list was read at.
    pub fn select_at(&mut self, index: usize, revision: Option<u64>) -> Result<()> {
        self.ensure_active()?;
        if revision.is_some_and(|r| r != self.revision) {
            return Err(Error::StaleChoice);
        }
        let rec = self.last.as_ref().ok_or(Error::StaleChoice)?;
        let choice = rec.choices.get(index).ok_or(Error::ChoiceOutOfRange {
            index,
            len: rec.choices.len(),
        })?;
        self.h = choice.next.clone();
        self.history.push(choice.label.clone());
        self.last = None;
        self.revision += 1;
        Ok(())
    }

    /// Selects the choice carrying `label` from the current recommendation.
    pub fn select_label(&mut self, label: &str) -> Result<()> {
        let rec = self.step()?;
        let index = rec
            .choices
            .iter()
            .position(|c| c.label == label)
            .ok_or_else(|| Error::InvalidData(format!("no choice labelled `{label}`")))?;
        self.select(index)
    }

    /// Adds a constraint given as text, as if it had been offered and chosen.
    /// A constraint that leaves no valid expression is rejected and the
    /// session is left unchanged.
    pub fn constrain(&mut self, text: &str) -> Result<()> {
        self.ensure_active()?;
        let c = self.assistant.normalize(text)?;
        if self.h.contains(&c) {
            return Ok(());
        }
        let mut next = self.h.clone();
        next.push(c.clone());
        let rec = self.assistant.recommend(&next, self.preview_rows)?;
        self.h = next;
        self.history.push(c);
        self.last = Some(rec);
        self.revision += 1;
        Ok(())
    }

    pub fn accept(&mut self) -> Result<FinalResult> {
        self.ensure_active()?;
        let rec = self.last.take().ok_or(Error::NoRecommendation)?;
        self.status = Status::Accepted;
        let mut script_text = rec.script.join("\n");
        script_text.push('\n');
        let result = FinalResult {
            script: rec.script,
            output: rec.output,
            script_text,
        };
        self.result = Some(result.clone());
        Ok(result)
    }

    /// The accepted expression and output, once the session is accepted.
    pub fn result(&self) -> Option<&FinalResult> {
        self.result.as_ref()
    }

    pub fn preview_rows(&self) -> usize {
        self.preview_rows
    }

    pub fn settings(&self) -> &Settings {
        &self.settings
    }
}
