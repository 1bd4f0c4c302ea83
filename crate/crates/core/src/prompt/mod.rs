//! ChatML records for the fine-tuning and assessment tasks.
//!
//! A record renders as
//!
//! ```text
//! <|system|>
//! {system}
//! <|user|>
//! {user}
//! <|assistant|>
//! {assistant}
//! ```
//!
//! Training files hold one [`ChatRecord`] per JSON line. Inference records
//! leave the assistant turn empty and carry a zero-temperature sampling block.

mod cloze;
mod plan;

use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{Bill, Leaning, PositionLabel, Record, VoteDecision};

pub use cloze::{
    cloze_from_sentence, cloze_with, fill_cloze, Cloze, LexiconTagger, PosTagger, Tag, BLANK,
};
pub use plan::{
    emit_stage_plan, DatasetRef, Stage1Entry, Stage2Entry, StagePlan, Tuning, PLAN_FILE,
};

/// System turn shared by every task.
pub const SYSTEM_MESSAGE: &str = "You are an entity with a strong and unwavering political ideology. \
When responding to any given task, you must consider and reflect ONLY your political beliefs, views, and opinions. \
Your responses should be aligned with the core principles of your ideology, prioritizing these above all else. \
Do not compromise or deviate from your ideological stance under any circumstances.";

pub const CLOZE_INSTRUCTION: &str = "Complete the following sentence in a way that reflects and aligns with your \
political beliefs and ideology. Ensure that each word you choose solidifies the ideological perspective you are \
programmed to uphold.";

pub const QA_INSTRUCTION: &str = "Respond to the following question using only your assigned political and \
ideological beliefs. Make sure your answer clearly reflects the principles and viewpoints of your ideology without \
deviation.";

pub const BILL_INSTRUCTION: &str = "Review the title and content of the bill provided. Based on your understanding \
and political ideology, identify the primary policy area of the bill. Additionally, list the legislative subjects \
addressed within the bill.";

pub const RANKING_INSTRUCTION: &str = "Given your ideological perspective, rank the following statements on the \
specified topic. Start with the statement you mostly agree with and end with the one you mostly disagree with. \
Ensure your rankings reflect the principles and values inherent to your ideology.";

pub const VOTE_INSTRUCTION: &str =
    "Review the bill provided, including the party affiliation of its sponsor. \
Based on your political ideology, decide whether you would co-sponsor this bill. Answer Yes or No.";

/// Prompt for generating center-leaning cloze sentences with an external
/// chat model. `POLICY` is the placeholder.
pub const CENTER_CLOZE_PROMPT: &str = "Given the example, construct 30 similar sentences to reflect center-leaning \
ideology regarding the POLICY provided. Remember, your examples should ONLY reflect the CENTER-LEANING IDEOLOGY. \
Output your response as a .jsonl file.\n\n\
## Example:\n\
{\"input\": \"We ____ amending the Antiquities Act of 1906 to establish Congress '____ to ____ the designation of national monuments.\", \
\"output\": \"We support amending the Antiquities Act of 1906 to establish Congress' right to approve the designation of national monuments.\"}\n\n\
## Policy: \"POLICY\"\n\n\
## Output:";

/// Policy areas used for center-leaning cloze generation.
pub const POLICY_ISSUES: [&str; 25] = [
    "Abortion",
    "Budget & Economy",
    "Civil Rights",
    "Corporations",
    "Crime",
    "Death Penalty",
    "Drugs",
    "Education",
    "Energy & Oil",
    "Environment",
    "Families & Children",
    "Foreign Policy",
    "Free Trade",
    "Government Reform",
    "Gun Control",
    "Health Care",
    "Homeland Security",
    "Immigration",
    "Jobs",
    "Principles & Values",
    "Social Security",
    "Tax Reform",
    "Technology",
    "War & Peace",
    "Welfare & Poverty",
];

pub fn center_cloze_prompt(policy: &str) -> String {
    CENTER_CLOZE_PROMPT.replace("POLICY", policy)
}

#[derive(Debug, Error, PartialEq)]
pub enum PromptError {
    #[error("empty field `{0}`")]
    EmptyField(&'static str),
    #[error("expected {expected} statements, got {got}")]
    WrongArity { expected: usize, got: usize },
    #[error("part-of-speech tagger unavailable: {0}")]
    TaggerUnavailable(String),
    #[error("no dataset given for task {0}")]
    MissingDataset(Task),
    #[error("{0}")]
    Io(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Task {
    QA,
    Cloze,
    Ranking,
    BillComprehension,
    BillVote,
    PositioningAnswer,
}

impl Task {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::QA => "QA",
            Self::Cloze => "Cloze",
            Self::Ranking => "Ranking",
            Self::BillComprehension => "BillComprehension",
            Self::BillVote => "BillVote",
            Self::PositioningAnswer => "PositioningAnswer",
        }
    }
}

impl fmt::Display for Task {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Task {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "qa" => Ok(Self::QA),
            "cloze" => Ok(Self::Cloze),
            "ranking" => Ok(Self::Ranking),
            "bill" | "billcomprehension" | "bill-comprehension" => Ok(Self::BillComprehension),
            "vote" | "billvote" | "bill-vote" => Ok(Self::BillVote),
            "positioning" | "positioninganswer" => Ok(Self::PositioningAnswer),
            _ => Err(format!("unknown task `{s}`")),
        }
    }
}

/// Who a record speaks for: a fine-grained position or a stage-one leaning.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Target {
    Position(PositionLabel),
    Leaning(Leaning),
}

impl Target {
    pub fn leaning(self) -> Leaning {
        match self {
            Self::Position(p) => p.leaning(),
            Self::Leaning(l) => l,
        }
    }
}

impl fmt::Display for Target {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Position(p) => p.fmt(f),
            Self::Leaning(l) => l.fmt(f),
        }
    }
}

impl From<PositionLabel> for Target {
    fn from(p: PositionLabel) -> Self {
        Self::Position(p)
    }
}

impl From<Leaning> for Target {
    fn from(l: Leaning) -> Self {
        Self::Leaning(l)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sampling {
    pub temperature: f64,
}

impl Sampling {
    pub const GREEDY: Sampling = Sampling { temperature: 0.0 };
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChatRecord {
    pub task: Task,
    pub position: Target,
    pub system: String,
    pub user: String,
    pub assistant: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sampling: Option<Sampling>,
}

impl ChatRecord {
    fn training(task: Task, position: Target, user: String, assistant: String) -> Self {
        Self {
            task,
            position,
            system: SYSTEM_MESSAGE.to_string(),
            user,
            assistant,
            sampling: None,
        }
    }

    fn inference(task: Task, position: Target, user: String) -> Self {
        Self {
            sampling: Some(Sampling::GREEDY),
            ..Self::training(task, position, user, String::new())
        }
    }

    pub fn is_inference(&self) -> bool {
        self.assistant.is_empty()
    }

    /// Drops the assistant turn so the record can be sent to a model.
    pub fn into_inference(mut self) -> Self {
        self.assistant.clear();
        self.sampling = Some(Sampling::GREEDY);
        self
    }

    /// Puts an explicit ideology statement ahead of the task instruction.
    pub fn with_explicit_prompt(mut self, explicit: &str) -> Self {
        if !explicit.trim().is_empty() {
            self.user = format!("{}\n\n{}", explicit.trim(), self.user);
        }
        self
    }

    pub fn to_chatml(&self) -> String {
        let mut out = format!(
            "<|system|>\n{}\n<|user|>\n{}\n<|assistant|>\n",
            self.system, self.user
        );
        if !self.assistant.is_empty() {
            out.push_str(&self.assistant);
            out.push('\n');
        }
        out
    }
}

impl Record for ChatRecord {
    fn violation(&self) -> Option<&'static str> {
        if self.system != SYSTEM_MESSAGE {
            Some("system")
        } else if self.user.trim().is_empty() {
            Some("user")
        } else if self.assistant.is_empty() && self.sampling.is_none() {
            Some("assistant")
        } else {
            None
        }
    }
}

fn require<'a>(value: &'a str, name: &'static str) -> Result<&'a str, PromptError> {
    let v = value.trim();
    if v.is_empty() {
        Err(PromptError::EmptyField(name))
    } else {
        Ok(v)
    }
}

pub fn build_qa_record(
    question: &str,
    answer: &str,
    position: PositionLabel,
) -> Result<ChatRecord, PromptError> {
    let question = require(question, "question")?;
    let answer = require(answer, "answer")?;
    Ok(ChatRecord::training(
        Task::QA,
        position.into(),
        format!("{QA_INSTRUCTION}\n\n## Question: {question}"),
        format!("## Output: {answer}"),
    ))
}

pub fn build_cloze_record(cloze: &Cloze, leaning: Leaning) -> Result<ChatRecord, PromptError> {
    let input = require(&cloze.cloze, "cloze")?;
    let output = require(&cloze.answer, "answer")?;
    Ok(ChatRecord::training(
        Task::Cloze,
        leaning.into(),
        format!("{CLOZE_INSTRUCTION}\n\n## Input: {input}"),
        format!("## Output: {output}"),
    ))
}

/// Order in which statements are listed to the model. Depends on the seed
/// and on the set of statements, not on their ranked order, so every
/// position sees a quintuplet listed the same way.
fn listing_order(topic: &str, ranked: &[String], seed: u64) -> Vec<usize> {
    let mut sorted: Vec<&str> = ranked.iter().map(String::as_str).collect();
    sorted.sort_unstable();
    let key = std::iter::once(topic)
        .chain(sorted.iter().copied())
        .collect::<Vec<_>>()
        .join("\u{1f}");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(fnv1a(&key));
    let mut order: Vec<usize> = (0..ranked.len()).collect();
    // sort by text first so the shuffle ignores the incoming order
    order.sort_by(|&a, &b| ranked[a].cmp(&ranked[b]).then(a.cmp(&b)));
    order.shuffle(&mut rng);
    order
}

fn fnv1a(s: &str) -> u64 {
    s.bytes().fold(0xcbf29ce484222325u64, |h, b| {
        (h ^ u64::from(b)).wrapping_mul(0x100000001b3)
    })
}

/// `ranked` is the target order, most agreed first. The user turn numbers
/// the statements in a seeded shuffled order and the assistant answers with
/// those numbers.
pub fn build_ranking_record(
    topic: &str,
    ranked: &[String],
    position: PositionLabel,
    seed: u64,
) -> Result<ChatRecord, PromptError> {
    if ranked.len() != 5 {
        return Err(PromptError::WrongArity {
            expected: 5,
            got: ranked.len(),
        });
    }
    let topic = require(topic, "topic")?;
    for s in ranked {
        require(s, "statement")?;
    }
    let order = listing_order(topic, ranked, seed);
    let listed: Vec<String> = order
        .iter()
        .enumerate()
        .map(|(n, &i)| format!("{}) {}", n + 1, ranked[i].trim()))
        .collect();
    let mut number_of = vec![0; ranked.len()];
    for (n, &i) in order.iter().enumerate() {
        number_of[i] = n + 1;
    }
    let answer: Vec<String> = number_of.iter().map(usize::to_string).collect();
    Ok(ChatRecord::training(
        Task::Ranking,
        position.into(),
        format!(
            "{RANKING_INSTRUCTION}\n\n## Topic: {topic}\n## Statements:\n{}",
            listed.join("\n")
        ),
        format!("## Ranking: {}", answer.join(", ")),
    ))
}

/// Reads a ranking answer ("## Ranking: 3, 1, 5, 2, 4") back into the
/// listed statement numbers. Returns `None` unless it is a permutation of
/// `1..=n`.
pub fn parse_ranking_answer(text: &str, n: usize) -> Option<Vec<usize>> {
    let body = text.rsplit_once("Ranking:").map_or(text, |(_, b)| b);
    let nums: Vec<usize> = body
        .split(|c: char| !c.is_ascii_digit())
        .filter(|t| !t.is_empty())
        .map_while(|t| t.parse().ok())
        .take(n)
        .collect();
    let mut seen = vec![false; n];
    for &k in &nums {
        if k == 0 || k > n || std::mem::replace(&mut seen[k - 1], true) {
            return None;
        }
    }
    (nums.len() == n).then_some(nums)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BillMode {
    Comprehension,
    /// Co-sponsorship decision asked of the model fine-tuned for a position.
    Vote(PositionLabel),
}

/// Broad leaning of a sponsor party, matched on its first letter.
pub fn party_leaning(party: &str) -> Leaning {
    match party.trim().chars().next().map(|c| c.to_ascii_uppercase()) {
        Some('D') => Leaning::Left,
        Some('R') => Leaning::Right,
        _ => Leaning::Center,
    }
}

pub fn build_bill_record(bill: &Bill, mode: BillMode) -> Result<ChatRecord, PromptError> {
    let title = require(&bill.title, "title")?;
    let policy_area = require(&bill.policy_area, "policy_area")?;
    let text = require(&bill.text, "text")?;
    let subjects = bill
        .legislative_subjects
        .iter()
        .map(|s| s.trim())
        .filter(|s| !s.is_empty())
        .collect::<Vec<_>>()
        .join(", ");
    match mode {
        BillMode::Comprehension => {
            if subjects.is_empty() {
                return Err(PromptError::EmptyField("legislative_subjects"));
            }
            Ok(ChatRecord::training(
                Task::BillComprehension,
                party_leaning(&bill.sponsor_party).into(),
                format!("{BILL_INSTRUCTION}\n\n## Title: {title}\n## Policy Area: {policy_area}\n## Text: {text}"),
                format!("## Legislative Subjects: {subjects}"),
            ))
        }
        BillMode::Vote(position) => {
            let party = require(&bill.sponsor_party, "sponsor_party")?;
            Ok(ChatRecord::inference(
                Task::BillVote,
                position.into(),
                format!(
                    "{VOTE_INSTRUCTION}\n\n## Title: {title}\n## Policy Area: {policy_area}\n\
                     ## Legislative Subjects: {subjects}\n## Sponsor Party: {party}\n## Text: {text}"
                ),
            ))
        }
    }
}

/// Reads a Yes/No co-sponsorship answer from its first word.
pub fn parse_vote_answer(text: &str) -> Option<VoteDecision> {
    let body = text.rsplit_once(':').map_or(text, |(_, b)| b);
    let word: String = body
        .trim_start()
        .chars()
        .take_while(|c| c.is_alphabetic())
        .collect::<String>()
        .to_ascii_lowercase();
    match word.as_str() {
        "yes" => Some(VoteDecision::Cosponsor),
        "no" => Some(VoteDecision::Decline),
        _ => None,
    }
}

/// Multiple-choice question from a political positioning test.
pub fn build_positioning_record(
    question: &str,
    choices: &[String],
    position: PositionLabel,
) -> Result<ChatRecord, PromptError> {
    let question = require(question, "question")?;
    if choices.len() < 2 {
        return Err(PromptError::WrongArity {
            expected: 2,
            got: choices.len(),
        });
    }
    let listed: Vec<String> = choices
        .iter()
        .enumerate()
        .map(|(i, c)| require(c, "choice").map(|c| format!("{}) {c}", i + 1)))
        .collect::<Result<_, _>>()?;
    Ok(ChatRecord::inference(
        Task::PositioningAnswer,
        position.into(),
        format!(
            "## Question: {question} Choose your answer from: {};",
            listed.join("; ")
        ),
    ))
}

/// Picks the choice number out of a "## Multiple Choice: N" line, falling
/// back to the first integer in the text.
pub fn parse_multiple_choice(text: &str, n_choices: usize) -> Option<usize> {
    let body = text
        .rsplit_once("Multiple Choice:")
        .map_or(text, |(_, b)| b);
    let digits: String = body
        .chars()
        .skip_while(|c| !c.is_ascii_digit())
        .take_while(|c| c.is_ascii_digit())
        .collect();
    digits.parse().ok().filter(|k| (1..=n_choices).contains(k))
}
