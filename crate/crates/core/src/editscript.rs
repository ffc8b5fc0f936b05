//! Position-free edit scripts between word forms.
//!
//! A script is the ordered list of `(deleted, added)` substring pairs that turn
//! one word into another, read off a character-level LCS alignment. Two scripts
//! are equal when those lists are equal; the anchor recorded with each op only
//! matters when the script is executed on a new word.
//!
//! Words are handled as sequences of Unicode scalar values throughout.

use std::cmp::Ordering;
use std::fmt;
use std::hash::{Hash, Hasher};
use std::str::FromStr;

use crate::error::{Error, Result};

/// Where an edit region sat in the source word it was extracted from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Anchor {
    /// Region begins at the start of the source.
    Start,
    /// Region ends at the end of the source.
    End,
    /// Region spans the whole source word.
    Whole,
    /// Neither boundary; `tail` is the number of source characters after the region.
    Interior { tail: usize },
}

impl Anchor {
    pub fn at_start(self) -> bool {
        matches!(self, Anchor::Start | Anchor::Whole)
    }

    pub fn at_end(self) -> bool {
        matches!(self, Anchor::End | Anchor::Whole)
    }
}

#[derive(Debug, Clone)]
pub struct EditOp {
    pub deleted: String,
    pub added: String,
    pub anchor: Anchor,
}

impl EditOp {
    fn key(&self) -> (&str, &str) {
        (&self.deleted, &self.added)
    }
}

/// Ordered list of edit operations. Equality, ordering and hashing look only
/// at the `(deleted, added)` pairs.
#[derive(Debug, Clone, Default)]
pub struct EditScript {
    ops: Vec<EditOp>,
}

impl EditScript {
    pub fn new(ops: Vec<EditOp>) -> Self {
        EditScript { ops }
    }

    pub fn ops(&self) -> &[EditOp] {
        &self.ops
    }

    pub fn is_empty(&self) -> bool {
        self.ops.is_empty()
    }

    pub fn len(&self) -> usize {
        self.ops.len()
    }

    /// The `(deleted, added)` pairs, left to right.
    pub fn pairs(&self) -> Vec<(&str, &str)> {
        self.ops.iter().map(EditOp::key).collect()
    }
}

impl PartialEq for EditScript {
    fn eq(&self, other: &Self) -> bool {
        self.ops.len() == other.ops.len()
            && self.ops.iter().zip(&other.ops).all(|(a, b)| a.key() == b.key())
    }
}

impl Eq for EditScript {}

impl Hash for EditScript {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.ops.len().hash(state);
        for op in &self.ops {
            op.key().hash(state);
        }
    }
}

impl PartialOrd for EditScript {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for EditScript {
    fn cmp(&self, other: &Self) -> Ordering {
        self.ops
            .iter()
            .map(EditOp::key)
            .cmp(other.ops.iter().map(EditOp::key))
    }
}

/// Computes the canonical edit script turning `a` into `b`.
///
/// Characters are aligned by a longest common subsequence, matching each
/// character as early as possible; when neither side matches and both skips
/// keep the optimum, the source character is skipped first.
pub fn edit_script(a: &str, b: &str) -> Result<EditScript> {
    if a.is_empty() && b.is_empty() {
        return Err(Error::EmptyEditPair);
    }
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    let (n, m) = (a.len(), b.len());

    // lcs[i][j] = LCS length of a[i..] and b[j..]
    let width = m + 1;
    let mut lcs = vec![0u32; (n + 1) * width];
    for i in (0..n).rev() {
        for j in (0..m).rev() {
            lcs[i * width + j] = if a[i] == b[j] {
                lcs[(i + 1) * width + j + 1] + 1
            } else {
                lcs[(i + 1) * width + j].max(lcs[i * width + j + 1])
            };
        }
    }

    let mut ops = Vec::new();
    let (mut i, mut j) = (0, 0);
    let (mut gap_i, mut gap_j) = (0, 0);
    let flush = |gi: usize, gj: usize, i: usize, j: usize, ops: &mut Vec<EditOp>| {
        if gi == i && gj == j {
            return;
        }
        let anchor = match (gi == 0, i == n) {
            (true, true) => Anchor::Whole,
            (true, false) => Anchor::Start,
            (false, true) => Anchor::End,
            (false, false) => Anchor::Interior { tail: n - i },
        };
        ops.push(EditOp {
            deleted: a[gi..i].iter().collect(),
            added: b[gj..j].iter().collect(),
            anchor,
        });
    };
    while i < n && j < m {
        if a[i] == b[j] {
            flush(gap_i, gap_j, i, j, &mut ops);
            i += 1;
            j += 1;
            gap_i = i;
            gap_j = j;
        } else if lcs[(i + 1) * width + j] >= lcs[i * width + j + 1] {
            i += 1;
        } else {
            j += 1;
        }
    }
    flush(gap_i, gap_j, n, m, &mut ops);
    Ok(EditScript { ops })
}

fn starts_with_at(word: &[char], pos: usize, pat: &[char]) -> bool {
    pos + pat.len() <= word.len() && word[pos..pos + pat.len()] == *pat
}

fn locate(op: &EditOp, deleted: &[char], word: &[char], cursor: usize) -> Option<usize> {
    let n = word.len();
    let dl = deleted.len();
    match op.anchor {
        Anchor::Whole => (cursor == 0 && word == deleted).then_some(0),
        Anchor::Start => (cursor == 0 && starts_with_at(word, 0, deleted)).then_some(0),
        Anchor::End => {
            let pos = n.checked_sub(dl)?;
            (pos >= cursor && starts_with_at(word, pos, deleted)).then_some(pos)
        }
        Anchor::Interior { tail } => {
            let hint = n.checked_sub(tail + dl).filter(|&p| p >= cursor);
            if let Some(pos) = hint.filter(|&p| starts_with_at(word, p, deleted)) {
                return Some(pos);
            }
            if dl == 0 {
                return None;
            }
            (cursor..=n.saturating_sub(dl)).find(|&p| starts_with_at(word, p, deleted))
        }
    }
}

/// Executes `script` on `word`.
///
/// Each op's region is located at or after the end of the previous op's
/// region: start-anchored ops must match a prefix, end-anchored ops a suffix.
/// Interior ops first try the position implied by their recorded distance
/// from the end of the word, then the leftmost occurrence. Fails with
/// [`Error::NotApplicable`] when some region cannot be placed.
pub fn apply_script(script: &EditScript, word: &str) -> Result<String> {
    let chars: Vec<char> = word.chars().collect();
    let mut out = String::with_capacity(word.len() + 8);
    let mut cursor = 0;
    for op in &script.ops {
        let deleted: Vec<char> = op.deleted.chars().collect();
        let pos = locate(op, &deleted, &chars, cursor).ok_or_else(|| Error::NotApplicable {
            word: word.to_string(),
        })?;
        out.extend(&chars[cursor..pos]);
        out.push_str(&op.added);
        cursor = pos + deleted.len();
    }
    out.extend(&chars[cursor..]);
    Ok(out)
}

/// Every word obtainable from `word` by placing the script's regions, in
/// order, at any positions where their deleted substrings occur, ignoring
/// anchors. Stops after `limit` distinct results.
///
/// Any `w2` with `edit_script(word, w2) == script` is among the results
/// (up to the limit); callers verify candidates with [`edit_script`].
pub fn placements(script: &EditScript, word: &str, limit: usize) -> Vec<String> {
    let chars: Vec<char> = word.chars().collect();
    let ops: Vec<(Vec<char>, &str)> = script
        .ops
        .iter()
        .map(|op| (op.deleted.chars().collect(), op.added.as_str()))
        .collect();
    let mut out = Vec::new();
    let mut buf = String::new();
    place_rec(&chars, &ops, 0, 0, &mut buf, &mut out, limit);
    out.sort();
    out.dedup();
    out
}

fn place_rec(
    word: &[char],
    ops: &[(Vec<char>, &str)],
    idx: usize,
    cursor: usize,
    buf: &mut String,
    out: &mut Vec<String>,
    limit: usize,
) {
    if out.len() >= limit {
        return;
    }
    let Some((deleted, added)) = ops.get(idx) else {
        let mut done = buf.clone();
        done.extend(&word[cursor..]);
        out.push(done);
        return;
    };
    let dl = deleted.len();
    if cursor + dl > word.len() {
        return;
    }
    for pos in cursor..=word.len() - dl {
        if !starts_with_at(word, pos, deleted) {
            continue;
        }
        let mark = buf.len();
        buf.extend(&word[cursor..pos]);
        buf.push_str(added);
        place_rec(word, ops, idx + 1, pos + dl, buf, out, limit);
        buf.truncate(mark);
        if out.len() >= limit {
            return;
        }
    }
}

/// Unit-cost Levenshtein distance over Unicode scalar values.
pub fn levenshtein(a: &str, b: &str) -> usize {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    levenshtein_chars(&a, &b)
}

pub fn levenshtein_chars(a: &[char], b: &[char]) -> usize {
    if a.is_empty() {
        return b.len();
    }
    if b.is_empty() {
        return a.len();
    }
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    let mut cur = vec![0; b.len() + 1];
    for (i, &ac) in a.iter().enumerate() {
        cur[0] = i + 1;
        for (j, &bc) in b.iter().enumerate() {
            let cost = usize::from(ac != bc);
            cur[j + 1] = (cur[j] + 1).min(prev[j + 1] + 1).min(prev[j] + cost);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

const SPECIAL: [char; 6] = ['>', ';', '^', '$', '\\', '@'];

fn escape_into(s: &str, out: &mut String) {
    for c in s.chars() {
        if SPECIAL.contains(&c) {
            out.push('\\');
        }
        out.push(c);
    }
}

/// Serialized as `del>add;del>add`, with `^` / `$` prefixes for start and end
/// anchors and an `@tail` suffix on interior ops.
impl fmt::Display for EditScript {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut s = String::new();
        for (k, op) in self.ops.iter().enumerate() {
            if k > 0 {
                s.push(';');
            }
            if op.anchor.at_start() {
                s.push('^');
            }
            if op.anchor.at_end() {
                s.push('$');
            }
            escape_into(&op.deleted, &mut s);
            s.push('>');
            escape_into(&op.added, &mut s);
            if let Anchor::Interior { tail } = op.anchor {
                s.push('@');
                s.push_str(&tail.to_string());
            }
        }
        f.write_str(&s)
    }
}

impl FromStr for EditScript {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let invalid = |message: &str| Error::InvalidScript {
            script: s.to_string(),
            message: message.to_string(),
        };
        if s.is_empty() {
            return Ok(EditScript::default());
        }

        // Split on unescaped ';' while keeping escapes for the op parser.
        let mut raw_ops = vec![String::new()];
        let mut chars = s.chars();
        while let Some(c) = chars.next() {
            match c {
                '\\' => {
                    let next = chars.next().ok_or_else(|| invalid("dangling escape"))?;
                    let cur = raw_ops.last_mut().unwrap();
                    cur.push('\\');
                    cur.push(next);
                }
                ';' => raw_ops.push(String::new()),
                _ => raw_ops.last_mut().unwrap().push(c),
            }
        }

        let mut ops = Vec::with_capacity(raw_ops.len());
        for raw in raw_ops {
            let mut chars = raw.chars().peekable();
            let mut at_start = false;
            let mut at_end = false;
            if chars.peek() == Some(&'^') {
                at_start = true;
                chars.next();
            }
            if chars.peek() == Some(&'$') {
                at_end = true;
                chars.next();
            }
            let mut deleted = String::new();
            let mut added = String::new();
            let mut tail = String::new();
            let mut field = 0;
            while let Some(c) = chars.next() {
                let (c, escaped) = if c == '\\' {
                    (chars.next().ok_or_else(|| invalid("dangling escape"))?, true)
                } else {
                    (c, false)
                };
                match (c, escaped, field) {
                    ('>', false, 0) => field = 1,
                    ('@', false, 1) => field = 2,
                    (_, false, _) if SPECIAL.contains(&c) => {
                        return Err(invalid("unescaped special character"))
                    }
                    (_, _, 0) => deleted.push(c),
                    (_, _, 1) => added.push(c),
                    (_, _, _) => tail.push(c),
                }
            }
            if field == 0 {
                return Err(invalid("op without '>'"));
            }
            if deleted.is_empty() && added.is_empty() {
                return Err(invalid("empty op"));
            }
            let anchor = match (at_start, at_end, field) {
                (true, true, 1) => Anchor::Whole,
                (true, false, 1) => Anchor::Start,
                (false, true, 1) => Anchor::End,
                (false, false, 2) => Anchor::Interior {
                    tail: tail.parse().map_err(|_| invalid("bad tail offset"))?,
                },
                (false, false, 1) => return Err(invalid("interior op without '@tail'")),
                _ => return Err(invalid("anchored op with '@tail'")),
            };
            ops.push(EditOp {
                deleted,
                added,
                anchor,
            });
        }
        Ok(EditScript { ops })
    }
}
