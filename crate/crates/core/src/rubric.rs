//! 22-question documentation checklist over model-card markdown.
//!
//! Auto questions are answered by surface presence checks and always carry
//! byte-offset evidence for a `yes`. The remaining questions stay unanswered
//! unless a manual answer is supplied. Assessment reads only the text passed in.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::ops::Range;
use std::sync::LazyLock;

use rayon::prelude::*;
use regex::Regex;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::card::{export_card, extract_card, CardDocument, CardTemplate};
use crate::notebook::{Notebook, MODEL_CARD_KEY};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum RubricGroup {
    #[serde(rename = "Model Description")]
    ModelDescription,
    #[serde(rename = "Intended Usages")]
    IntendedUsages,
    #[serde(rename = "Target Distribution")]
    TargetDistribution,
    #[serde(rename = "Evaluation Metrics")]
    EvaluationMetrics,
    #[serde(rename = "Evaluation Process")]
    EvaluationProcess,
    #[serde(rename = "Training Process")]
    TrainingProcess,
    #[serde(rename = "Ethical Considerations")]
    EthicalConsiderations,
}

impl RubricGroup {
    pub const ALL: [RubricGroup; 7] = [
        RubricGroup::ModelDescription,
        RubricGroup::IntendedUsages,
        RubricGroup::TargetDistribution,
        RubricGroup::EvaluationMetrics,
        RubricGroup::EvaluationProcess,
        RubricGroup::TrainingProcess,
        RubricGroup::EthicalConsiderations,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            RubricGroup::ModelDescription => "Model Description",
            RubricGroup::IntendedUsages => "Intended Usages",
            RubricGroup::TargetDistribution => "Target Distribution",
            RubricGroup::EvaluationMetrics => "Evaluation Metrics",
            RubricGroup::EvaluationProcess => "Evaluation Process",
            RubricGroup::TrainingProcess => "Training Process",
            RubricGroup::EthicalConsiderations => "Ethical Considerations",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RubricQuestion {
    pub id: &'static str,
    pub group: RubricGroup,
    pub title: &'static str,
    pub guidance: &'static str,
    pub auto: bool,
}

const fn q(
    id: &'static str,
    group: RubricGroup,
    title: &'static str,
    guidance: &'static str,
    auto: bool,
) -> RubricQuestion {
    RubricQuestion { id, group, title, guidance, auto }
}

use RubricGroup::*;

pub static QUESTIONS: [RubricQuestion; 22] = [
    q(
        "Q1",
        ModelDescription,
        "Contact Information",
        "Is there a way to reach the people responsible for the model?",
        true,
    ),
    q("Q2", ModelDescription, "Model Type", "Is the kind of model or its architecture stated?", true),
    q("Q3", ModelDescription, "Model Date/Version", "Is a version number or release date given?", true),
    q("Q4", ModelDescription, "Model License", "Is the license under which the model is shared stated?", true),
    q("Q5", IntendedUsages, "Intended Uses", "Are the situations the model is meant for described?", true),
    q("Q6", IntendedUsages, "Out of Scope Uses", "Are uses the model is not suited for named?", true),
    q("Q7", IntendedUsages, "How to Use", "Is there a usage snippet or command showing how to run the model?", true),
    q(
        "Q8",
        TargetDistribution,
        "Target Distribution Description",
        "Is the population or input distribution the model targets described?",
        false,
    ),
    q(
        "Q9",
        TargetDistribution,
        "Target Distribution Examples",
        "Are concrete example inputs from that distribution shown?",
        false,
    ),
    q("Q10", EvaluationMetrics, "Evaluation Statistics Reported", "Are metric values reported as numbers?", true),
    q(
        "Q11",
        EvaluationMetrics,
        "Evaluation Statistics Explained",
        "Is it explained what the reported metrics mean or why they were chosen?",
        false,
    ),
    q(
        "Q12",
        EvaluationMetrics,
        "Model Performance Visuals",
        "Is there a chart or other image of model performance?",
        true,
    ),
    q("Q13", EvaluationProcess, "Evaluation Process Explained", "Is the evaluation procedure described?", false),
    q("Q14", EvaluationProcess, "Evaluation Data Explained", "Is the data used for evaluation described?", false),
    q("Q15", EvaluationProcess, "Evaluation Data Available", "Is there a link to obtain the evaluation data?", true),
    q("Q16", TrainingProcess, "Training Process Explained", "Is the training procedure described?", false),
    q(
        "Q17",
        TrainingProcess,
        "Data Properties Explained",
        "Are properties of the training data such as size or balance described?",
        false,
    ),
    q(
        "Q18",
        TrainingProcess,
        "Data Collection/Creation Explained",
        "Is it described how the training data was gathered or produced?",
        false,
    ),
    q("Q19", TrainingProcess, "Training Data Available", "Is there a link to obtain the training data?", true),
    q(
        "Q20",
        EthicalConsiderations,
        "Ethical Considerations Discussed",
        "Does the document discuss ethical aspects such as bias or fairness?",
        true,
    ),
    q(
        "Q21",
        EthicalConsiderations,
        "Ethical Issue Mitigation Process",
        "Is a process for mitigating the ethical issues described?",
        false,
    ),
    q(
        "Q22",
        EthicalConsiderations,
        "Concrete Ethical Measurements",
        "Are ethical aspects quantified with concrete measurements?",
        false,
    ),
];

pub fn question(id: &str) -> Option<&'static RubricQuestion> {
    QUESTIONS.iter().find(|q| q.id == id)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AnswerValue {
    Yes,
    No,
    Unanswered,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AnswerSource {
    Heuristic,
    Manual,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RubricAnswer {
    pub id: String,
    pub value: AnswerValue,
    pub source: AnswerSource,
    pub evidence: Vec<(usize, usize)>,
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupSummary {
    pub yes: usize,
    pub no: usize,
    pub unanswered: usize,
    /// `yes / (yes + no)`; `None` when nothing in the group is answered.
    pub fraction: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RubricReport {
    pub target: String,
    pub answers: Vec<RubricAnswer>,
    pub groups: BTreeMap<RubricGroup, GroupSummary>,
}

impl RubricReport {
    pub fn answer(&self, id: &str) -> Option<&RubricAnswer> {
        self.answers.iter().find(|a| a.id == id)
    }
}

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum ManualAnswerError {
    #[error("manual answers must be a JSON object of question id to answer")]
    NotAnObject,
    #[error("unknown question `{0}`")]
    UnknownQuestion(String),
    #[error("answer for {id} must be \"yes\", \"no\" or \"unanswered\", got {got}")]
    BadValue { id: String, got: String },
}

/// Manual answers keyed by question id.
pub type ManualAnswers = BTreeMap<String, AnswerValue>;

pub fn manual_answers_from_json(value: &Value) -> Result<ManualAnswers, ManualAnswerError> {
    let obj = value.as_object().ok_or(ManualAnswerError::NotAnObject)?;
    let mut out = ManualAnswers::new();
    for (id, v) in obj {
        if question(id).is_none() {
            return Err(ManualAnswerError::UnknownQuestion(id.clone()));
        }
        let parsed = match v.as_str() {
            Some("yes") => AnswerValue::Yes,
            Some("no") => AnswerValue::No,
            Some("unanswered") => AnswerValue::Unanswered,
            _ => return Err(ManualAnswerError::BadValue { id: id.clone(), got: v.to_string() }),
        };
        out.insert(id.clone(), parsed);
    }
    Ok(out)
}

pub fn manual_answers_to_json(answers: &ManualAnswers) -> Value {
    serde_json::to_value(answers).expect("answers serialize")
}

const RUBRIC_ANSWERS_KEY: &str = "rubric_answers";

/// Manual answers stored under notebook metadata `model_card.rubric_answers`.
pub fn notebook_manual_answers(nb: &Notebook) -> Result<ManualAnswers, ManualAnswerError> {
    match nb.metadata().get(MODEL_CARD_KEY).and_then(|m| m.get(RUBRIC_ANSWERS_KEY)) {
        Some(v) => manual_answers_from_json(v),
        None => Ok(ManualAnswers::new()),
    }
}

/// Replaces the stored manual answers. Unanswered entries are dropped, and an
/// empty set removes the key.
pub fn with_manual_answers(nb: &Notebook, answers: &ManualAnswers) -> Notebook {
    let kept: ManualAnswers =
        answers.iter().filter(|(_, v)| **v != AnswerValue::Unanswered).map(|(k, v)| (k.clone(), *v)).collect();
    let mut meta = nb.metadata().clone();
    let card = meta.entry(MODEL_CARD_KEY).or_insert_with(|| Value::Object(Default::default()));
    if !card.is_object() {
        *card = Value::Object(Default::default());
    }
    let obj = card.as_object_mut().expect("object");
    if kept.is_empty() {
        obj.remove(RUBRIC_ANSWERS_KEY);
        if obj.is_empty() {
            meta.remove(MODEL_CARD_KEY);
        }
    } else {
        obj.insert(RUBRIC_ANSWERS_KEY.into(), manual_answers_to_json(&kept));
    }
    nb.with_metadata(meta)
}

/// Assesses the exported card of a notebook together with its stored manual answers.
pub fn assess_notebook(
    target: &str,
    nb: &Notebook,
    tpl: &CardTemplate,
) -> Result<(RubricReport, String), ManualAnswerError> {
    let manual = notebook_manual_answers(nb)?;
    let text = String::from_utf8(export_card(&extract_card(nb, tpl), tpl)).expect("export is UTF-8");
    Ok((assess(target, &text, &manual), text))
}

// ---------------------------------------------------------------------------
// Document model

struct Line {
    range: Range<usize>,
    heading: Option<usize>,
    in_fence: bool,
}

struct Doc<'a> {
    text: &'a str,
    /// `text` with HTML comments and fenced code blanked to spaces; byte
    /// offsets line up with `text`.
    prose: String,
    lines: Vec<Line>,
    /// Byte ranges of fenced code block contents.
    fences: Vec<Range<usize>>,
}

fn blank(buf: &mut [u8], range: Range<usize>) {
    for b in &mut buf[range] {
        if *b != b'\n' {
            *b = b' ';
        }
    }
}

impl<'a> Doc<'a> {
    fn new(text: &'a str) -> Self {
        let mut masked = text.as_bytes().to_vec();
        let mut from = 0;
        while let Some(i) = text[from..].find("<!--") {
            let start = from + i;
            let end = text[start + 4..].find("-->").map_or(text.len(), |j| start + 4 + j + 3);
            blank(&mut masked, start..end);
            from = end;
        }

        let mut lines = Vec::new();
        let mut fences = Vec::new();
        let mut fence: Option<(String, usize)> = None;
        let mut offset = 0;
        for raw in text.split_inclusive('\n') {
            let range = offset..offset + raw.trim_end_matches(['\n', '\r']).len();
            offset += raw.len();
            let visible = std::str::from_utf8(&masked[range.clone()]).unwrap_or("");
            let trimmed = visible.trim_start();
            let marker = ["```", "~~~"].into_iter().find(|m| trimmed.starts_with(m));
            match (&fence, marker) {
                (Some((open, start)), Some(m))
                    if m == open && trimmed.trim_end().chars().all(|c| c == m.chars().next().unwrap()) =>
                {
                    fences.push(*start..range.start);
                    lines.push(Line { range, heading: None, in_fence: true });
                    fence = None;
                    continue;
                }
                (Some(_), _) => {
                    lines.push(Line { range, heading: None, in_fence: true });
                    continue;
                }
                (None, Some(m)) => {
                    fence = Some((m.to_owned(), offset));
                    lines.push(Line { range, heading: None, in_fence: true });
                    continue;
                }
                (None, None) => {}
            }
            let hashes = trimmed.bytes().take_while(|&b| b == b'#').count();
            let is_heading = (1..=6).contains(&hashes)
                && visible.len() - trimmed.len() < 4
                && trimmed[hashes..].chars().next().is_none_or(char::is_whitespace);
            lines.push(Line { range, heading: is_heading.then_some(hashes), in_fence: false });
        }
        if let Some((_, start)) = fence {
            fences.push(start.min(text.len())..text.len());
        }
        for f in &fences {
            blank(&mut masked, f.clone());
        }
        for l in lines.iter().filter(|l| l.in_fence) {
            blank(&mut masked, l.range.clone());
        }
        let prose = String::from_utf8(masked).expect("blanking keeps UTF-8");
        Doc { text, prose, lines, fences }
    }

    fn prose_of(&self, r: &Range<usize>) -> &str {
        &self.prose[r.clone()]
    }

    /// Body line indices belonging to heading `i`: up to the next heading of
    /// the same or a higher level.
    fn section_lines(&self, i: usize) -> Range<usize> {
        let level = self.lines[i].heading.unwrap_or(0);
        let end = self.lines[i + 1..]
            .iter()
            .position(|l| l.heading.is_some_and(|h| h <= level))
            .map_or(self.lines.len(), |p| i + 1 + p);
        i + 1..end
    }

    fn has_body(&self, i: usize) -> bool {
        self.section_lines(i)
            .any(|j| self.lines[j].heading.is_none() && !self.prose_of(&self.lines[j].range).trim().is_empty())
            || self
                .section_lines(i)
                .any(|j| self.lines[j].in_fence && !self.text[self.lines[j].range.clone()].trim().is_empty())
    }

    /// Headings whose title matches `re` and that have non-empty bodies.
    fn headings_with_body(&self, re: &Regex) -> Vec<(usize, usize)> {
        (0..self.lines.len())
            .filter(|&i| self.lines[i].heading.is_some())
            .filter(|&i| re.is_match(self.prose_of(&self.lines[i].range)))
            .filter(|&i| self.has_body(i))
            .map(|i| (self.lines[i].range.start, self.lines[i].range.end))
            .collect()
    }

    /// Non-heading prose lines with their indices.
    fn text_lines(&self) -> impl Iterator<Item = (usize, &Line)> {
        self.lines.iter().enumerate().filter(|(_, l)| l.heading.is_none() && !l.in_fence)
    }

    /// Matches of `re` in non-heading prose.
    fn keyword_spans(&self, re: &Regex) -> Vec<(usize, usize)> {
        self.text_lines()
            .flat_map(|(_, l)| {
                re.find_iter(self.prose_of(&l.range)).map(move |m| (l.range.start + m.start(), l.range.start + m.end()))
            })
            .collect()
    }

    /// Titles of the headings enclosing line `j`, innermost last.
    fn heading_context(&self, j: usize) -> String {
        let mut titles = Vec::new();
        let mut level = usize::MAX;
        for l in self.lines[..j].iter().rev() {
            if let Some(h) = l.heading {
                if h < level {
                    titles.push(self.prose_of(&l.range));
                    level = h;
                }
            }
        }
        titles.join(" ")
    }
}

// ---------------------------------------------------------------------------
// Heuristics

fn re(pattern: &str) -> Regex {
    Regex::new(pattern).expect("static pattern")
}

macro_rules! static_re {
    ($name:ident, $pat:expr) => {
        static $name: LazyLock<Regex> = LazyLock::new(|| re($pat));
    };
}

static_re!(EMAIL, r"[A-Za-z0-9._%+-]+@[A-Za-z0-9-]+(?:\.[A-Za-z0-9-]+)*\.[A-Za-z]{2,}");
static_re!(URL, r"https?://[^\s)<>\]]+");
static_re!(CONTACT_HEADING, r"(?i)\b(contact|maintainers?|authors?|correspondence)\b");
static_re!(CONTACT_LINE, r"(?i)\b(contact|reach (us|out)|questions|feedback|maintained by|e-?mail)\b");
static_re!(MODEL_TYPE_HEADING, r"(?i)\b(model (details|type|description|architecture)|architecture)\b");
static_re!(
    MODEL_TYPE_TEXT,
    r"(?i)\b(model type|architecture|classifier|regressor|neural network|random forest|transformer|convolutional|logistic regression|linear regression|decision tree|gradient[- ]boost\w*|xgboost|lightgbm|support vector|lstm|cnn)\b"
);
static_re!(
    VERSION_VALUE,
    r"(?i)\bv?\d+\.\d+(?:\.\d+)?\b|\b\d{4}-\d{2}-\d{2}\b|\b(?:jan|feb|mar|apr|may|jun|jul|aug|sep|sept|oct|nov|dec)[a-z]*\.? \d{4}\b"
);
static_re!(VERSION_CONTEXT, r"(?i)\b(version|versions|release|released|date|dated|updated|changelog)\b");
static_re!(
    SPDX,
    r"\b(Apache-2\.0|MIT|BSD-[23]-Clause|GPL-[23]\.0(?:-only|-or-later)?|LGPL-[23]\.[01](?:-only|-or-later)?|AGPL-3\.0(?:-only|-or-later)?|MPL-2\.0|EPL-[12]\.0|CC-BY-(?:SA-|NC-|ND-|NC-SA-|NC-ND-)?[1-4]\.0|CC0-1\.0|Unlicense|ISC|BSL-1\.0|OpenRAIL(?:-M)?)\b"
);
static_re!(LICENSE_HEADING, r"(?i)\blicen[cs]e");
static_re!(INTENDED_HEADING, r"(?i)\b(intended (use|uses|usage|purpose)|use cases?|primary uses?)\b");
static_re!(
    INTENDED_TEXT,
    r"(?i)\b(intended (use|uses|usage|for|to be used)|use cases?|primary uses?|designed (to|for)|can be used (to|for)|is meant (to|for))\b"
);
static_re!(OUT_OF_SCOPE_HEADING, r"(?i)\b(out[- ]of[- ]scope|misuse|prohibited)\b");
static_re!(
    OUT_OF_SCOPE_TEXT,
    r"(?i)\b(out[- ]of[- ]scope|should not be used|must not be used|not intended (to|for)|not be used (to|for)|not suitable for|misuse|prohibited uses?)\b"
);
static_re!(CODE_CALL, r"[A-Za-z_][\w.]*\(");
static_re!(
    SHELL_LINE,
    r"(?m)^\s*(\$ |>>> |![A-Za-z]|%[A-Za-z]|pip3? |python3? |conda |git |curl |wget |bash |sh |docker |make |npm |cargo )"
);
static_re!(METRIC, r"(?i)\b(accuracy|f1(?:[- ]score)?|precision|recall|roc[- ]auc|auc|bleu(?:-\d)?|perplexity)\b");
static_re!(NUMBER, r"(?:\b\d+(?:\.\d+)?|\.\d+)%?");
static_re!(IMAGE, r"!\[[^\]\n]*\]\([^)\s]+[^)\n]*\)|(?i)<img\b[^>]*>");
static_re!(MD_LINK, r"(!?)\[([^\]\n]*)\]\(([^)\s]+)[^)\n]*\)");
static_re!(DATA_TOKEN, r"(?i)dataset|data|download|zenodo|kaggle");
static_re!(EVAL_CONTEXT, r"(?i)eval|test|valid|benchmark");
static_re!(TRAIN_CONTEXT, r"(?i)train");
// "bias" alone is too overloaded in ML writing to count as a heading.
static_re!(ETHICS_HEADING, r"(?i)\b(ethic\w*|fairness)\b");
static_re!(ETHICS_TEXT, r"(?i)\b(ethic\w*|bias\w*|fairness)\b");

/// Maximum gap in bytes between a metric keyword and its value on one line.
const METRIC_GAP: usize = 40;

fn q1(d: &Doc) -> Vec<(usize, usize)> {
    let mut ev = d.keyword_spans(&EMAIL);
    for (_, l) in d.text_lines() {
        let line = d.prose_of(&l.range);
        if CONTACT_LINE.is_match(line) {
            ev.extend(URL.find_iter(line).map(|m| (l.range.start + m.start(), l.range.start + m.end())));
        }
    }
    ev.extend(d.headings_with_body(&CONTACT_HEADING));
    ev
}

fn q2(d: &Doc) -> Vec<(usize, usize)> {
    let mut ev = d.headings_with_body(&MODEL_TYPE_HEADING);
    ev.extend(d.keyword_spans(&MODEL_TYPE_TEXT));
    ev
}

fn q3(d: &Doc) -> Vec<(usize, usize)> {
    let mut ev = Vec::new();
    for (j, l) in d.text_lines() {
        let line = d.prose_of(&l.range);
        let near = VERSION_CONTEXT.is_match(line) || VERSION_CONTEXT.is_match(&d.heading_context(j));
        for m in VERSION_VALUE.find_iter(line) {
            let explicit_v = m.as_str().starts_with(['v', 'V']);
            if near || explicit_v {
                ev.push((l.range.start + m.start(), l.range.start + m.end()));
            }
        }
    }
    ev
}

fn q4(d: &Doc) -> Vec<(usize, usize)> {
    let mut ev = d.keyword_spans(&SPDX);
    ev.extend(d.headings_with_body(&LICENSE_HEADING));
    ev
}

fn heading_or_text(d: &Doc, heading: &Regex, text: &Regex) -> Vec<(usize, usize)> {
    let mut ev = d.headings_with_body(heading);
    ev.extend(d.keyword_spans(text));
    ev
}

fn q7(d: &Doc) -> Vec<(usize, usize)> {
    d.fences
        .iter()
        .filter(|f| {
            let body = &d.text[(*f).clone()];
            CODE_CALL.is_match(body) || SHELL_LINE.is_match(body)
        })
        .map(|f| (f.start, f.end))
        .collect()
}

fn q10(d: &Doc) -> Vec<(usize, usize)> {
    let mut ev = Vec::new();
    for (_, l) in d.text_lines() {
        let line = d.prose_of(&l.range);
        let numbers: Vec<_> = NUMBER.find_iter(line).collect();
        for k in METRIC.find_iter(line) {
            let close = numbers.iter().find(|n| {
                (n.start() >= k.end() && n.start() - k.end() <= METRIC_GAP)
                    || (n.end() <= k.start() && k.start() - n.end() <= METRIC_GAP)
            });
            if let Some(n) = close {
                let (s, e) = (k.start().min(n.start()), k.end().max(n.end()));
                ev.push((l.range.start + s, l.range.start + e));
            }
        }
    }
    // Tables: a metric keyword in the header row and a number in a data row.
    let mut i = 0;
    while i < d.lines.len() {
        let is_row =
            |l: &Line| !l.in_fence && l.heading.is_none() && d.prose_of(&l.range).trim_start().starts_with('|');
        if !is_row(&d.lines[i]) {
            i += 1;
            continue;
        }
        let start = i;
        while i < d.lines.len() && is_row(&d.lines[i]) {
            i += 1;
        }
        let header = &d.lines[start];
        let Some(k) = METRIC.find(d.prose_of(&header.range)) else { continue };
        let value = d.lines[start + 1..i].iter().find_map(|row| {
            let text = d.prose_of(&row.range);
            NUMBER.find(text).map(|n| (row.range.start + n.start(), row.range.start + n.end()))
        });
        if let Some(v) = value {
            ev.push((header.range.start + k.start(), header.range.start + k.end()));
            ev.push(v);
        }
    }
    ev
}

fn q12(d: &Doc) -> Vec<(usize, usize)> {
    d.text_lines()
        .flat_map(|(_, l)| {
            IMAGE.find_iter(d.prose_of(&l.range)).map(move |m| (l.range.start + m.start(), l.range.start + m.end()))
        })
        .collect()
}

/// Data links split by context: (evaluation spans, training spans). Links
/// whose context names neither count for both.
type Spans = Vec<(usize, usize)>;

/// Data links split into (evaluation, training) by their context.
fn data_links(d: &Doc) -> (Spans, Spans) {
    let (mut eval, mut train) = (Vec::new(), Vec::new());
    for (j, l) in d.lines.iter().enumerate() {
        if l.in_fence {
            continue;
        }
        let line = d.prose_of(&l.range);
        let mut spans: Vec<Range<usize>> = Vec::new();
        for c in MD_LINK.captures_iter(line) {
            if !c[1].is_empty() {
                continue;
            }
            let whole = c.get(0).expect("match");
            if DATA_TOKEN.is_match(&c[2]) || DATA_TOKEN.is_match(&c[3]) {
                spans.push(whole.range());
            }
        }
        for m in URL.find_iter(line) {
            let inside_link = MD_LINK.find_iter(line).any(|l| l.start() <= m.start() && m.end() <= l.end());
            if !inside_link && DATA_TOKEN.is_match(m.as_str()) {
                spans.push(m.range());
            }
        }
        if spans.is_empty() {
            continue;
        }
        let context = format!("{} {}", d.heading_context(j), line);
        let (is_eval, is_train) = (EVAL_CONTEXT.is_match(&context), TRAIN_CONTEXT.is_match(&context));
        for s in spans {
            let span = (l.range.start + s.start, l.range.start + s.end);
            if is_eval || !is_train {
                eval.push(span);
            }
            if is_train || !is_eval {
                train.push(span);
            }
        }
    }
    (eval, train)
}

fn heuristic_evidence(d: &Doc) -> BTreeMap<&'static str, Vec<(usize, usize)>> {
    let (eval_links, train_links) = data_links(d);
    let mut m = BTreeMap::new();
    m.insert("Q1", q1(d));
    m.insert("Q2", q2(d));
    m.insert("Q3", q3(d));
    m.insert("Q4", q4(d));
    m.insert("Q5", heading_or_text(d, &INTENDED_HEADING, &INTENDED_TEXT));
    m.insert("Q6", heading_or_text(d, &OUT_OF_SCOPE_HEADING, &OUT_OF_SCOPE_TEXT));
    m.insert("Q7", q7(d));
    m.insert("Q10", q10(d));
    m.insert("Q12", q12(d));
    m.insert("Q15", eval_links);
    m.insert("Q19", train_links);
    m.insert("Q20", heading_or_text(d, &ETHICS_HEADING, &ETHICS_TEXT));
    m
}

fn summarize(answers: &[RubricAnswer]) -> BTreeMap<RubricGroup, GroupSummary> {
    RubricGroup::ALL
        .iter()
        .map(|&g| {
            let mut s = GroupSummary { yes: 0, no: 0, unanswered: 0, fraction: None };
            for a in answers.iter().filter(|a| question(&a.id).is_some_and(|q| q.group == g)) {
                match a.value {
                    AnswerValue::Yes => s.yes += 1,
                    AnswerValue::No => s.no += 1,
                    AnswerValue::Unanswered => s.unanswered += 1,
                }
            }
            let answered = s.yes + s.no;
            s.fraction = (answered > 0).then(|| s.yes as f64 / answered as f64);
            (g, s)
        })
        .collect()
}

pub fn assess(target: &str, document: &str, manual: &ManualAnswers) -> RubricReport {
    let doc = Doc::new(document);
    let mut evidence = heuristic_evidence(&doc);
    let answers: Vec<RubricAnswer> = QUESTIONS
        .iter()
        .map(|q| {
            if let Some(&value) = manual.get(q.id) {
                return RubricAnswer {
                    id: q.id.into(),
                    value,
                    source: AnswerSource::Manual,
                    evidence: vec![],
                    note: None,
                };
            }
            if !q.auto {
                return RubricAnswer {
                    id: q.id.into(),
                    value: AnswerValue::Unanswered,
                    source: AnswerSource::Heuristic,
                    evidence: vec![],
                    note: Some("no automatic check; answer manually".into()),
                };
            }
            let mut ev = evidence.remove(q.id).unwrap_or_default();
            ev.sort_unstable();
            ev.dedup();
            let value = if ev.is_empty() { AnswerValue::No } else { AnswerValue::Yes };
            RubricAnswer { id: q.id.into(), value, source: AnswerSource::Heuristic, evidence: ev, note: None }
        })
        .collect();
    let groups = summarize(&answers);
    RubricReport { target: target.to_owned(), answers, groups }
}

// ---------------------------------------------------------------------------
// Corpus

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuestionAggregate {
    pub id: String,
    pub title: String,
    pub yes: usize,
    pub no: usize,
    pub unanswered: usize,
    /// Mean yes-fraction over answered documents.
    pub mean: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusReport {
    pub reports: Vec<RubricReport>,
    pub questions: Vec<QuestionAggregate>,
}

pub struct CorpusDocument<'a> {
    pub target: String,
    pub text: &'a str,
    pub manual: ManualAnswers,
}

pub fn assess_corpus(documents: &[CorpusDocument<'_>]) -> CorpusReport {
    let mut reports: Vec<RubricReport> = documents.par_iter().map(|d| assess(&d.target, d.text, &d.manual)).collect();
    reports.sort_by(|a, b| a.target.cmp(&b.target));
    let questions = QUESTIONS
        .iter()
        .map(|q| {
            let mut agg =
                QuestionAggregate { id: q.id.into(), title: q.title.into(), yes: 0, no: 0, unanswered: 0, mean: None };
            for r in &reports {
                match r.answer(q.id).map(|a| a.value) {
                    Some(AnswerValue::Yes) => agg.yes += 1,
                    Some(AnswerValue::No) => agg.no += 1,
                    _ => agg.unanswered += 1,
                }
            }
            let answered = agg.yes + agg.no;
            agg.mean = (answered > 0).then(|| agg.yes as f64 / answered as f64);
            agg
        })
        .collect();
    CorpusReport { reports, questions }
}

pub fn render_corpus_table(report: &CorpusReport) -> String {
    let title_w = QUESTIONS.iter().map(|q| q.title.len()).max().unwrap_or(0);
    let mut out = String::new();
    let _ =
        writeln!(out, "{:<4}  {:<title_w$}  {:>4}  {:>4}  {:>4}  {:>6}", "id", "question", "yes", "no", "n/a", "mean");
    for a in &report.questions {
        let mean = a.mean.map_or_else(|| "-".to_owned(), |m| format!("{m:.3}"));
        let _ = writeln!(
            out,
            "{:<4}  {:<title_w$}  {:>4}  {:>4}  {:>4}  {:>6}",
            a.id, a.title, a.yes, a.no, a.unanswered, mean
        );
    }
    let _ = writeln!(out, "documents: {}", report.reports.len());
    out
}

pub fn render_report_table(report: &RubricReport) -> String {
    let title_w = QUESTIONS.iter().map(|q| q.title.len()).max().unwrap_or(0);
    let mut out = String::new();
    let _ = writeln!(out, "{}", report.target);
    for (q, a) in QUESTIONS.iter().zip(&report.answers) {
        let value = match a.value {
            AnswerValue::Yes => "yes",
            AnswerValue::No => "no",
            AnswerValue::Unanswered => "-",
        };
        let source = match a.source {
            AnswerSource::Heuristic => "",
            AnswerSource::Manual => " (manual)",
        };
        let _ = writeln!(out, "{:<4}  {:<title_w$}  {value}{source}", q.id, q.title);
    }
    out
}

// ---------------------------------------------------------------------------
// Card coverage

/// Card sections that typically answer each group.
pub const GROUP_SECTIONS: [(RubricGroup, &[&str]); 7] = [
    (ModelDescription, &["model-details"]),
    (IntendedUsages, &["intended-use"]),
    (TargetDistribution, &["factors"]),
    (EvaluationMetrics, &["metrics", "quantitative-analyses"]),
    (EvaluationProcess, &["evaluation-data"]),
    (TrainingProcess, &["training-data"]),
    (EthicalConsiderations, &["ethical-considerations", "caveats-and-recommendations"]),
];

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroupCoverage {
    pub present: Vec<String>,
    pub missing: Vec<String>,
}

pub fn completion_vs_rubric(card: &CardDocument) -> BTreeMap<RubricGroup, GroupCoverage> {
    GROUP_SECTIONS
        .iter()
        .map(|(g, sections)| {
            let (present, missing): (Vec<&str>, Vec<&str>) = sections.iter().partition(|s| card.is_filled(s));
            let own = |v: Vec<&str>| v.into_iter().map(str::to_owned).collect();
            (*g, GroupCoverage { present: own(present), missing: own(missing) })
        })
        .collect()
}
