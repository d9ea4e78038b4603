//! Stage directories: `stages.json` (parameters, partitions, action tables,
//! pattern metadata) plus one word file `stage_<n>.words` per stage listing
//! each word's component ids.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{ConstructionParams, ConstructionSequence, Level, LevelParams, PatternOccurrence, Stage};
use crate::error::{Error, Result};
use crate::fbar::SymbolString;
use crate::involutions::{ActionTable, ActionTableFile};
use crate::io::{format_words, read_words};
use crate::trees::{FiniteSequence, TreeApproximation, TreeFile};

pub const MANIFEST_NAME: &str = "stages.json";

#[derive(Clone, Debug, Serialize, Deserialize)]
struct LevelFile {
    s: usize,
    class_count: usize,
    class_of_word: Vec<u32>,
    parent: Vec<u32>,
    action: ActionTableFile,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    patterns: Option<Vec<Vec<PatternOccurrence>>>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
struct StageFile {
    n: usize,
    node: FiniteSequence,
    node_in_tree: bool,
    top_level: usize,
    new_level: bool,
    h: u64,
    k_prev: usize,
    f_prev: u64,
    segments: usize,
    word_count: usize,
    words_file: String,
    levels: Vec<LevelFile>,
    level_params: Vec<LevelParams>,
    attempts: u32,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
struct SequenceFile {
    tree: TreeFile,
    params: ConstructionParams,
    stages: Vec<StageFile>,
}

/// Action tables are loaded as written so that the validator, not the loader,
/// judges them.
fn table_from_file(file: &ActionTableFile) -> Result<ActionTable> {
    let bad = |detail: String| Error::Malformed { kind: "stage manifest", detail };
    let mut images = vec![vec![u32::MAX; file.domain_size]; file.group.rank()];
    for (g, c, x) in &file.entries {
        let i = file.group.generators.iter().position(|y| y == g).ok_or_else(|| bad(format!("unknown generator {g:?}")))?;
        *images[i].get_mut(*c as usize).ok_or_else(|| bad(format!("class {c} outside the table")))? = *x;
    }
    if images.iter().flatten().any(|&x| x == u32::MAX) {
        return Err(bad("action table has missing entries".into()));
    }
    Ok(ActionTable { group: file.group.clone(), domain_size: file.domain_size, images })
}

/// Writes the sequence into `dir` (created if missing); returns the files written.
pub fn save_stages(seq: &ConstructionSequence, dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    let mut stages = Vec::new();
    for stage in &seq.stages {
        let name = format!("stage_{}.words", stage.n);
        let words: Vec<SymbolString> = stage.words.iter().map(|w| SymbolString::new(w.clone())).collect();
        let path = dir.join(&name);
        fs::write(&path, format_words(&words))?;
        written.push(path);
        stages.push(StageFile {
            n: stage.n,
            node: stage.node.clone(),
            node_in_tree: stage.node_in_tree,
            top_level: stage.top_level,
            new_level: stage.new_level,
            h: stage.h,
            k_prev: stage.k_prev(),
            f_prev: stage.f_prev,
            segments: stage.segments,
            word_count: stage.word_count(),
            words_file: name,
            levels: stage
                .levels
                .iter()
                .map(|l| LevelFile {
                    s: l.s,
                    class_count: l.class_count,
                    class_of_word: l.class_of_word.clone(),
                    parent: l.parent.clone(),
                    action: l.action.to_file(),
                    patterns: l.patterns.clone(),
                })
                .collect(),
            level_params: stage.level_params.clone(),
            attempts: stage.attempts,
        });
    }
    let file = SequenceFile { tree: seq.tree.to_file(), params: seq.params.clone(), stages };
    let path = dir.join(MANIFEST_NAME);
    fs::write(&path, serde_json::to_string(&file)? + "\n")?;
    written.push(path);
    Ok(written)
}

/// Reads a stage directory without validating its contents.
pub fn load_stages(dir: &Path) -> Result<ConstructionSequence> {
    let bad = |detail: String| Error::Malformed { kind: "stage manifest", detail };
    let file: SequenceFile = serde_json::from_str(&fs::read_to_string(dir.join(MANIFEST_NAME))?)?;
    let tree = TreeApproximation::from_file(&file.tree)?;
    let mut stages = Vec::with_capacity(file.stages.len());
    for (i, sf) in file.stages.into_iter().enumerate() {
        if sf.n != i {
            return Err(bad(format!("stage {} listed at position {i}", sf.n)));
        }
        let words_path = dir.join(&sf.words_file);
        let words: Vec<Vec<u32>> = read_words(&words_path)?.into_iter().map(|w| w.symbols).collect();
        if words.len() != sf.word_count {
            return Err(bad(format!("{} lists {} words, expected {}", sf.words_file, words.len(), sf.word_count)));
        }
        let levels = sf
            .levels
            .into_iter()
            .map(|l| {
                Ok(Level {
                    s: l.s,
                    class_of_word: l.class_of_word,
                    class_count: l.class_count,
                    parent: l.parent,
                    action: table_from_file(&l.action)?,
                    patterns: l.patterns,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        if levels.is_empty() {
            return Err(bad(format!("stage {i} has no levels")));
        }
        stages.push(Stage {
            n: sf.n,
            node: sf.node,
            node_in_tree: sf.node_in_tree,
            top_level: sf.top_level,
            new_level: sf.new_level,
            h: sf.h,
            words,
            levels,
            segments: sf.segments,
            f_prev: sf.f_prev,
            level_params: sf.level_params,
            attempts: sf.attempts,
        });
    }
    if stages.is_empty() {
        return Err(bad("no stages".into()));
    }
    Ok(ConstructionSequence { tree, params: file.params, stages })
}
