//! Evaluation prompt templates, one per dataset. `{context}` receives the
//! (compressed) context and `{question}` the question.

use r2c_core::Prompt;

const NQ: &str = "<s>[INST] <<SYS>> You are a helpful, respectful and honest assistant. Always answer as helpfully as possible, while being safe. Please ensure that your responses are socially unbiased and positive in nature. If a question does not make any sense, or is not factually coherent, explain why instead of answering something not correct. If you don't know the answer to a question, please don't share false information. <</SYS>>\nWrite a high-quality answer for the given question using only the provided search results (some of which might be irrelevant).\n{context}\nQuestion: {question}\nAnswer: [/INST]";

const NARRATIVEQA: &str = "You are given a story, which can be either a novel or a movie script, and a question. Answer the question as concisely as you can, using a single phrase if possible. Do not provide any explanation.\nStory: {context}\nNow, answer the question based on the story as concisely as you can, using a single phrase if possible. Do not provide any explanation.\nQuestion: {question}\nAnswer:";

const QASPER: &str = "You are given a scientific article and a question. Answer the question as concisely as you can, using a single phrase or sentence if possible. If the question cannot be answered based on the information in the article, write \"unanswerable\". If the question is a yes/no question, answer \"yes\", \"no\", or \"unanswerable\". Do not provide any explanation.\nArticle: {context}\nAnswer the question based on the above article as concisely as you can, using a single phrase or sentence if possible. If the question cannot be answered based on the information in the article, write \"unanswerable\". If the question is a yes/no question, answer \"yes\", \"no\", or \"unanswerable\". Do not provide any explanation.\nQuestion: {question}\nAnswer:";

const MULTIFIELDQA: &str = "Read the following text and answer briefly.\n{context}\nNow, answer the following question based on the above text, only give me the answer and do not output any other words.\nQuestion: {question}\nAnswer:";

const MULTIDOC: &str = "Answer the question based on the given passages. Only give me the answer and do not output any other words.\nThe following are given passages.\n{context}\nAnswer the question based on the given passages. Only give me the answer and do not output any other words.\nQuestion: {question}\nAnswer:";

const GOV_REPORT: &str = "You are given a report by a government agency. Write a one-page summary of the report.\nReport:\n{context}\nNow, write a one-page summary of the report.\nSummary:";

const QMSUM: &str = "You are given a meeting transcript and a query containing a question or instruction. Answer the query in one or more sentences.\nTranscript: {context}\nNow, answer the query based on the above meeting transcript in one or more sentences.\nQuery: {question}\nAnswer:";

const MULTI_NEWS: &str = "You are given several news passages. Write a one-page summary of all news.\nNews: {context}\nNow, write a one-page summary of all the news.\nSummary:";

const TREC: &str = "Please determine the type of the question below. Here are some examples of questions.\n{context}\n{question}";

const TRIVIAQA: &str = "Answer the question based on the given passage. Only give me the answer and do not output any other words. The following are some examples.\n{context}\n{question}";

const SAMSUM: &str = "Summarize the dialogue into a few short sentences. The following are some examples.\n{context}\n{question}";

const LCC: &str = "Please complete the code given below.\n{context} Next line of code:";

const REPOBENCH: &str = "Please complete the code given below.\n{context} {question} Next line of code:";

const GENERIC: &str = "{context}\nQuestion: {question}\nAnswer:";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TaskKind {
    OpenDomainQa,
    SingleDocQa,
    MultiDocQa,
    Summarization,
    FewShot,
    Code,
    Other,
}

impl TaskKind {
    pub fn tag(self) -> &'static str {
        match self {
            TaskKind::OpenDomainQa => "open-domain-qa",
            TaskKind::SingleDocQa => "single-doc-qa",
            TaskKind::MultiDocQa => "multi-doc-qa",
            TaskKind::Summarization => "summarization",
            TaskKind::FewShot => "few-shot",
            TaskKind::Code => "code",
            TaskKind::Other => "other",
        }
    }

    /// Tasks whose records must carry gold answers.
    pub fn requires_answers(self) -> bool {
        matches!(self, TaskKind::OpenDomainQa | TaskKind::SingleDocQa | TaskKind::MultiDocQa)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PromptTemplate {
    pub dataset: &'static str,
    pub kind: TaskKind,
    text: &'static str,
}

const TEMPLATES: &[PromptTemplate] = &[
    PromptTemplate { dataset: "nq", kind: TaskKind::OpenDomainQa, text: NQ },
    PromptTemplate { dataset: "narrativeqa", kind: TaskKind::SingleDocQa, text: NARRATIVEQA },
    PromptTemplate { dataset: "qasper", kind: TaskKind::SingleDocQa, text: QASPER },
    PromptTemplate { dataset: "multifieldqa_en", kind: TaskKind::SingleDocQa, text: MULTIFIELDQA },
    PromptTemplate { dataset: "hotpotqa", kind: TaskKind::MultiDocQa, text: MULTIDOC },
    PromptTemplate { dataset: "2wikimqa", kind: TaskKind::MultiDocQa, text: MULTIDOC },
    PromptTemplate { dataset: "musique", kind: TaskKind::MultiDocQa, text: MULTIDOC },
    PromptTemplate { dataset: "gov_report", kind: TaskKind::Summarization, text: GOV_REPORT },
    PromptTemplate { dataset: "qmsum", kind: TaskKind::Summarization, text: QMSUM },
    PromptTemplate { dataset: "multi_news", kind: TaskKind::Summarization, text: MULTI_NEWS },
    PromptTemplate { dataset: "trec", kind: TaskKind::FewShot, text: TREC },
    PromptTemplate { dataset: "triviaqa", kind: TaskKind::FewShot, text: TRIVIAQA },
    PromptTemplate { dataset: "samsum", kind: TaskKind::FewShot, text: SAMSUM },
    PromptTemplate { dataset: "lcc", kind: TaskKind::Code, text: LCC },
    PromptTemplate { dataset: "repobench-p", kind: TaskKind::Code, text: REPOBENCH },
];

const FALLBACK: PromptTemplate = PromptTemplate {
    dataset: "generic",
    kind: TaskKind::Other,
    text: GENERIC,
};

impl PromptTemplate {
    /// Template for a dataset name; unknown names get a generic QA template.
    pub fn for_dataset(name: &str) -> PromptTemplate {
        let key = name.trim().to_ascii_lowercase();
        let key = key.strip_suffix("_e").unwrap_or(&key);
        TEMPLATES
            .iter()
            .find(|t| t.dataset == key)
            .copied()
            .unwrap_or(FALLBACK)
    }

    pub fn is_known(name: &str) -> bool {
        Self::for_dataset(name).dataset != FALLBACK.dataset
    }

    pub fn has_question(&self) -> bool {
        self.text.contains("{question}")
    }

    pub fn render(&self, context: &str, question: &str) -> String {
        self.text.replace("{context}", context).replace("{question}", question)
    }

    /// All fixed template text, counted as the uncompressed instruction.
    pub fn instruction_text(&self) -> String {
        self.text.replace("{context}", "").replace("{question}", "")
    }

    /// The compression input for this template. The question only counts
    /// toward the prompt when the template has a slot for it.
    pub fn to_prompt(&self, question: &str, units: &[String]) -> Prompt {
        let question = if self.has_question() { question } else { "" };
        let prompt = if units.len() > 1 {
            Prompt::from_units(units.to_vec())
        } else {
            Prompt::new(units.first().cloned().unwrap_or_default())
        };
        prompt
            .with_instruction(self.instruction_text())
            .with_question(question)
    }
}

/// `Document [k](Title: ...) text` framing of a retrieved passage.
pub fn frame_passage(k: usize, title: &str, text: &str) -> String {
    format!("Document [{k}](Title: {title}) {text}")
}
