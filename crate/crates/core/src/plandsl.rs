//! Plan syntax and the training sample text format:
//!
//! ```text
//! Put the soap into the drawer: <BOS> 0.GotoLocation(countertop) 1.PickupObject(soap) ... <EOS>
//! goal <SEP> context <BOS> plan <EOS>
//! ```

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{MarkerError, PlanParseError};

pub const SEP: &str = "<SEP>";
pub const BOS: &str = "<BOS>";
pub const EOS: &str = "<EOS>";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum HighLevelAction {
    GotoLocation,
    PickupObject,
    PutObject,
    CoolObject,
    HeatObject,
    CleanObject,
    SliceObject,
    ToggleObject,
}

impl HighLevelAction {
    pub const ALL: [HighLevelAction; 8] = [
        HighLevelAction::GotoLocation,
        HighLevelAction::PickupObject,
        HighLevelAction::PutObject,
        HighLevelAction::CoolObject,
        HighLevelAction::HeatObject,
        HighLevelAction::CleanObject,
        HighLevelAction::SliceObject,
        HighLevelAction::ToggleObject,
    ];

    pub fn name(self) -> &'static str {
        match self {
            HighLevelAction::GotoLocation => "GotoLocation",
            HighLevelAction::PickupObject => "PickupObject",
            HighLevelAction::PutObject => "PutObject",
            HighLevelAction::CoolObject => "CoolObject",
            HighLevelAction::HeatObject => "HeatObject",
            HighLevelAction::CleanObject => "CleanObject",
            HighLevelAction::SliceObject => "SliceObject",
            HighLevelAction::ToggleObject => "ToggleObject",
        }
    }

    pub fn arity(self) -> usize {
        if self == HighLevelAction::PutObject {
            2
        } else {
            1
        }
    }
}

impl fmt::Display for HighLevelAction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for HighLevelAction {
    type Err = ();

    fn from_str(s: &str) -> Result<Self, ()> {
        HighLevelAction::ALL.into_iter().find(|a| a.name() == s).ok_or(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PlanStep {
    pub action: HighLevelAction,
    pub args: Vec<String>,
}

impl PlanStep {
    pub fn new(action: HighLevelAction, args: &[&str]) -> Self {
        debug_assert_eq!(args.len(), action.arity());
        PlanStep { action, args: args.iter().map(|s| s.to_string()).collect() }
    }

    pub fn object(&self) -> &str {
        &self.args[0]
    }
}

impl fmt::Display for PlanStep {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}({})", self.action, self.args.join(","))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct Plan {
    pub steps: Vec<PlanStep>,
}

impl Plan {
    pub fn new(steps: Vec<PlanStep>) -> Self {
        Plan { steps }
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }
}

/// Numbered-line body: `0.GotoLocation(countertop) 1.PickupObject(soap)`.
impl fmt::Display for Plan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, s) in self.steps.iter().enumerate() {
            if i > 0 {
                f.write_str(" ")?;
            }
            write!(f, "{i}.{s}")?;
        }
        Ok(())
    }
}

impl FromStr for Plan {
    type Err = PlanParseError;

    fn from_str(s: &str) -> Result<Self, PlanParseError> {
        parse_plan(s)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Sample {
    pub goal: String,
    pub context: Option<String>,
    pub plan: Plan,
}

/// Text placed before the plan: `goal [<SEP> context] <BOS>`.
pub fn prompt_text(goal: &str, context: Option<&str>) -> String {
    match context {
        Some(c) => format!("{goal} {SEP} {c} {BOS}"),
        None => format!("{goal} {BOS}"),
    }
}

pub fn serialize_sample(s: &Sample) -> String {
    let prompt = prompt_text(&s.goal, s.context.as_deref());
    if s.plan.is_empty() {
        format!("{prompt} {EOS}")
    } else {
        format!("{prompt} {} {EOS}", s.plan)
    }
}

/// Inverse of [`serialize_sample`].
pub fn parse_sample(text: &str) -> Result<Sample, PlanParseError> {
    let bos = text.find(BOS).ok_or(PlanParseError::Syntax { pos: 0 })?;
    let head = &text[..bos];
    let (goal, context) = match head.find(SEP) {
        Some(i) => (head[..i].trim(), Some(head[i + SEP.len()..].trim().to_string())),
        None => (head.trim(), None),
    };
    let body_start = bos + BOS.len();
    let rest = &text[body_start..];
    let Some(end) = rest.find(EOS) else {
        return Err(PlanParseError::Truncated { pos: text.len() });
    };
    let plan = parse_plan(&rest[..end]).map_err(|e| shift(e, body_start))?;
    Ok(Sample { goal: goal.to_string(), context, plan })
}

fn shift(e: PlanParseError, by: usize) -> PlanParseError {
    match e {
        PlanParseError::UnknownAction { name, pos } => PlanParseError::UnknownAction { name, pos: pos + by },
        PlanParseError::BadArity { action, expected, got, pos } => {
            PlanParseError::BadArity { action, expected, got, pos: pos + by }
        }
        PlanParseError::Truncated { pos } => PlanParseError::Truncated { pos: pos + by },
        PlanParseError::Syntax { pos } => PlanParseError::Syntax { pos: pos + by },
    }
}

fn is_arg_byte(b: u8) -> bool {
    b.is_ascii_alphanumeric() || b == b'_' || b == b'-'
}

/// Parses a plan body in numbered (`0.A(x) 1.B(y)`) or `;`-separated
/// (`A(x); B(y)`) style. Total over arbitrary input.
pub fn parse_plan(text: &str) -> Result<Plan, PlanParseError> {
    let b = text.as_bytes();
    let mut i = 0;
    let mut steps = Vec::new();
    let skip_sep = |i: &mut usize| {
        while *i < b.len() && (b[*i].is_ascii_whitespace() || b[*i] == b';') {
            *i += 1;
        }
    };
    let skip_ws = |i: &mut usize| {
        while *i < b.len() && b[*i].is_ascii_whitespace() {
            *i += 1;
        }
    };
    loop {
        skip_sep(&mut i);
        if i >= b.len() {
            break;
        }
        // optional step index
        if b[i].is_ascii_digit() {
            while i < b.len() && b[i].is_ascii_digit() {
                i += 1;
            }
            if i >= b.len() {
                return Err(PlanParseError::Truncated { pos: i });
            }
            if b[i] != b'.' {
                return Err(PlanParseError::Syntax { pos: i });
            }
            i += 1;
        }
        let name_start = i;
        while i < b.len() && b[i].is_ascii_alphabetic() {
            i += 1;
        }
        if i == name_start {
            return Err(if i >= b.len() {
                PlanParseError::Truncated { pos: i }
            } else {
                PlanParseError::Syntax { pos: i }
            });
        }
        let name = &text[name_start..i];
        skip_ws(&mut i);
        if i >= b.len() {
            return Err(PlanParseError::Truncated { pos: i });
        }
        if b[i] != b'(' {
            return Err(PlanParseError::Syntax { pos: i });
        }
        i += 1;
        let mut args = Vec::new();
        loop {
            skip_ws(&mut i);
            let start = i;
            while i < b.len() && is_arg_byte(b[i]) {
                i += 1;
            }
            if i >= b.len() {
                return Err(PlanParseError::Truncated { pos: i });
            }
            if i == start {
                return Err(PlanParseError::Syntax { pos: i });
            }
            args.push(text[start..i].to_string());
            skip_ws(&mut i);
            if i >= b.len() {
                return Err(PlanParseError::Truncated { pos: i });
            }
            match b[i] {
                b',' => i += 1,
                b')' => {
                    i += 1;
                    break;
                }
                _ => return Err(PlanParseError::Syntax { pos: i }),
            }
        }
        let action: HighLevelAction = name.parse().map_err(|_| PlanParseError::UnknownAction {
            name: name.to_string(),
            pos: name_start,
        })?;
        if args.len() != action.arity() {
            return Err(PlanParseError::BadArity {
                action: name.to_string(),
                expected: action.arity(),
                got: args.len(),
                pos: name_start,
            });
        }
        steps.push(PlanStep { action, args });
    }
    Ok(Plan { steps })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Extracted<'a> {
    pub text: &'a str,
    /// No `<EOS>` followed the `<BOS>` marker.
    pub truncated: bool,
}

/// Substring between the first `<BOS>` and the next `<EOS>`, trimmed.
pub fn extract_between_markers(generated: &str) -> Result<Extracted<'_>, MarkerError> {
    let start = generated.find(BOS).ok_or(MarkerError::NoBeginMarker)? + BOS.len();
    let rest = &generated[start..];
    Ok(match rest.find(EOS) {
        Some(end) => Extracted { text: rest[..end].trim(), truncated: false },
        None => Extracted { text: rest.trim(), truncated: true },
    })
}
