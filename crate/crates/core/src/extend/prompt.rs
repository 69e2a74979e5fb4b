use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Where the model's evidence comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PromptInput<'a> {
    Description(&'a str),
    /// Reference to the attached image (its file name).
    Image(&'a str),
}

/// Extraction prompt in four blocks: a definition of knowledge graphs, the
/// model's role and task, the input, and the output format.
///
/// Slots: `{subject}` and `{relation}` in `role`; `{description}` in
/// `text_input`; `{image}` in `image_input`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PromptTemplate {
    pub definition: String,
    pub role: String,
    pub text_input: String,
    pub image_input: String,
    pub formatting: String,
    /// Appended on the single re-query after unparseable output.
    pub strict_suffix: String,
}

impl Default for PromptTemplate {
    fn default() -> Self {
        Self {
            definition: "A knowledge graph stores facts as triples (subject, relation, object). \
                         Subjects and objects are entities; the relation names how they are linked."
                .into(),
            role: "You help extend a knowledge graph of cultural heritage artworks. \
                   The subject is the artwork \"{subject}\" and the relation is \"{relation}\". \
                   List the entities that could be the object of this relation for this artwork."
                .into(),
            text_input: "Description of the artwork:\n{description}".into(),
            image_input: "The attached image ({image}) shows the artwork.".into(),
            formatting: "Answer with a JSON array of strings only. Each string is a short noun phrase \
                         of one to three words. Write nothing before or after the array."
                .into(),
            strict_suffix: "Your previous answer could not be read. Reply with exactly one JSON array \
                            such as [\"horse\", \"sword\"], starting with [ and ending with ]."
                .into(),
        }
    }
}

fn fill(block: &str, slots: &[(&str, &str)]) -> String {
    let mut out = block.to_owned();
    for (name, value) in slots {
        out = out.replace(&format!("{{{name}}}"), value);
    }
    out
}

impl PromptTemplate {
    /// Renders the four blocks, separated by blank lines.
    pub fn render(&self, subject: &str, relation: &str, input: PromptInput<'_>) -> Result<String> {
        let input_block = match input {
            PromptInput::Description(text) => {
                if text.trim().is_empty() {
                    return Err(Error::InvalidArgument(format!("missing context: no description for {subject:?}")));
                }
                fill(&self.text_input, &[("description", text)])
            }
            PromptInput::Image(tag) => {
                if tag.trim().is_empty() {
                    return Err(Error::InvalidArgument(format!("missing context: no image for {subject:?}")));
                }
                fill(&self.image_input, &[("image", tag)])
            }
        };
        let role = fill(&self.role, &[("subject", subject), ("relation", relation)]);
        Ok(format!(
            "{}\n\n{}\n\n{}\n\n{}",
            self.definition, role, input_block, self.formatting
        ))
    }

    /// The re-query variant: the normal prompt plus the strict reminder.
    pub fn render_strict(&self, subject: &str, relation: &str, input: PromptInput<'_>) -> Result<String> {
        Ok(format!("{}\n\n{}", self.render(subject, relation, input)?, self.strict_suffix))
    }
}

/// Yes/no question about whether `candidate` appears in an image.
pub fn vision_question(candidate: &str, strict: bool) -> String {
    let mut q = format!("Is there {candidate} in this image? Answer with one word: yes or no.");
    if strict {
        q.push_str(" Reply with only \"yes\" or \"no\" and nothing else.");
    }
    q
}

/// Yes/no question about whether `candidate` stands in `relation` to the
/// artwork, judged from its description.
pub fn text_question(subject: &str, relation: &str, candidate: &str, description: &str, strict: bool) -> String {
    let mut q = format!(
        "Description of the artwork \"{subject}\":\n{description}\n\n\
         Does the relation \"{relation}\" hold between this artwork and \"{candidate}\"? \
         Answer with one word: yes or no."
    );
    if strict {
        q.push_str(" Reply with only \"yes\" or \"no\" and nothing else.");
    }
    q
}
