//! The declarative economy file format: a line-oriented text form with
//! one section per economy component, plus a canonical emitter.
//!
//! A file starts with a `format 1` directive and the header fields `lx`
//! and `lr`, followed by bracketed sections in any order: `entities`,
//! `sigma`, `grids`, `rights`, `states`, `welfare`, `delegates`,
//! `channels`, `feasibility`, `attributes`, and `candidate`. Lines are
//! whitespace-tokenized; compound values (axes, tuples, key-value groups)
//! are single tokens without spaces. `#` starts a comment.
//!
//! Parsing reports syntax problems with line and column; structural
//! problems in an otherwise well-formed file are left to
//! [`validate_economy`] so the two layers never disagree. Emission is
//! canonical: fixed section order, map-valued fields in key order, and
//! shortest round-trip decimal for every number, so parse, emit, parse
//! is the identity on validated economies.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use paretolab_core::economy::{
    validate_economy, ActionChannel, ActionLabel, AttributeDecl, AttributeKind, Bundle,
    ChannelId, DelegateSpec, Economy, Entity, EntityId, FeasibilityMode, FeasibilitySpec,
    Grid, InstitutionalState, RightsTag, StateId, Status, StatusAssignment,
    ValidationReport,
};
use paretolab_core::equilibrium::Candidate;
use paretolab_core::feasibility::Allocation;
use paretolab_core::welfare::{WelfareForm, WelfareFunction};

/// Version emitted and accepted by this build.
pub const FORMAT_VERSION: u32 = 1;

/// A parsed file: the economy and, when a `[candidate]` section is
/// present, the candidate under analysis.
#[derive(Clone, Debug, PartialEq)]
pub struct ParsedFile {
    pub economy: Economy,
    pub candidate: Option<Candidate>,
}

/// Why a file was rejected.
#[derive(Clone, Debug, PartialEq)]
pub enum FileError {
    /// Malformed text; located by line and column, both one-based. A zero
    /// line means the problem is with the file as a whole.
    Syntax {
        line: usize,
        col: usize,
        message: String,
    },
    /// Well-formed text describing a structurally invalid economy.
    Semantic(ValidationReport),
    /// The file could not be read at all.
    Io(String),
}

impl fmt::Display for FileError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FileError::Syntax { line: 0, message, .. } => write!(f, "{message}"),
            FileError::Syntax {
                line,
                col,
                message,
            } => write!(f, "line {line}, column {col}: {message}"),
            FileError::Semantic(report) => write!(f, "{report}"),
            FileError::Io(message) => write!(f, "{message}"),
        }
    }
}

impl std::error::Error for FileError {}

type PResult<T> = Result<T, FileError>;

fn syntax(line: usize, col: usize, message: impl Into<String>) -> FileError {
    FileError::Syntax {
        line,
        col,
        message: message.into(),
    }
}

/// Parse and then validate; the everyday entry point.
pub fn parse_economy_file(path: &Path) -> PResult<ParsedFile> {
    let text = std::fs::read_to_string(path)
        .map_err(|err| FileError::Io(format!("cannot read {}: {err}", path.display())))?;
    parse_validated(&text)
}

/// Parse and validate from text.
pub fn parse_validated(text: &str) -> PResult<ParsedFile> {
    let parsed = parse_str(text)?;
    let report = validate_economy(&parsed.economy);
    if !report.is_ok() {
        return Err(FileError::Semantic(report));
    }
    Ok(parsed)
}

/// One token with its one-based starting column.
#[derive(Clone, Copy, Debug)]
struct Tok<'a> {
    text: &'a str,
    col: usize,
}

fn tokenize(line: &str) -> Vec<Tok<'_>> {
    let mut out = Vec::new();
    let mut start = None;
    for (i, c) in line.char_indices() {
        if c.is_whitespace() {
            if let Some(s) = start.take() {
                out.push(Tok {
                    text: &line[s..i],
                    col: s + 1,
                });
            }
        } else if start.is_none() {
            start = Some(i);
        }
    }
    if let Some(s) = start {
        out.push(Tok {
            text: &line[s..],
            col: s + 1,
        });
    }
    out
}

/// Cursor over the tokens of one line.
struct Cursor<'a> {
    line_no: usize,
    toks: Vec<Tok<'a>>,
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn new(line_no: usize, text: &'a str) -> Self {
        Cursor {
            line_no,
            toks: tokenize(text),
            pos: 0,
        }
    }

    fn peek(&self) -> Option<Tok<'a>> {
        self.toks.get(self.pos).copied()
    }

    fn next(&mut self, what: &str) -> PResult<Tok<'a>> {
        match self.toks.get(self.pos) {
            Some(t) => {
                self.pos += 1;
                Ok(*t)
            }
            None => Err(self.err_here(format!("expected {what}"))),
        }
    }

    fn expect_word(&mut self, word: &str) -> PResult<()> {
        let t = self.next(&format!("keyword {word:?}"))?;
        if t.text == word {
            Ok(())
        } else {
            Err(syntax(
                self.line_no,
                t.col,
                format!("expected keyword {word:?}, found {:?}", t.text),
            ))
        }
    }

    fn expect_end(&self) -> PResult<()> {
        match self.toks.get(self.pos) {
            None => Ok(()),
            Some(t) => Err(syntax(
                self.line_no,
                t.col,
                format!("unexpected trailing token {:?}", t.text),
            )),
        }
    }

    /// Column just past the last consumed token, for end-of-line errors.
    fn err_here(&self, message: impl Into<String>) -> FileError {
        let col = self
            .toks
            .get(self.pos.saturating_sub(1))
            .map(|t| t.col + t.text.len())
            .unwrap_or(1);
        syntax(self.line_no, col, message)
    }
}

fn parse_f64(text: &str, line: usize, col: usize) -> PResult<f64> {
    match text.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        _ => Err(syntax(line, col, format!("malformed number {text:?}"))),
    }
}

fn parse_usize(text: &str, line: usize, col: usize) -> PResult<usize> {
    text.parse::<usize>()
        .map_err(|_| syntax(line, col, format!("malformed count {text:?}")))
}

fn check_ident(text: &str, line: usize, col: usize) -> PResult<&str> {
    let ok = !text.is_empty()
        && text
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || matches!(c, '_' | '-' | '.'));
    if ok {
        Ok(text)
    } else {
        Err(syntax(line, col, format!("invalid identifier {text:?}")))
    }
}

/// Split a compound token at `sep`, preserving the column of each piece.
fn split_cols(text: &str, col: usize, sep: char) -> Vec<(&str, usize)> {
    let mut out = Vec::new();
    let mut start = 0;
    for (i, c) in text.char_indices() {
        if c == sep {
            out.push((&text[start..i], col + start));
            start = i + 1;
        }
    }
    out.push((&text[start..], col + start));
    out
}

fn parse_num_list(tok: Tok<'_>, line: usize) -> PResult<Vec<f64>> {
    split_cols(tok.text, tok.col, ',')
        .into_iter()
        .map(|(piece, col)| parse_f64(piece, line, col))
        .collect()
}

/// `(a,b,...)` with the columns of the inside pieces.
fn parse_tuple(text: &str, col: usize, line: usize) -> PResult<Bundle> {
    let inner = text
        .strip_prefix('(')
        .and_then(|t| t.strip_suffix(')'))
        .ok_or_else(|| syntax(line, col, format!("expected a parenthesized tuple, found {text:?}")))?;
    let coords = split_cols(inner, col + 1, ',')
        .into_iter()
        .map(|(piece, c)| parse_f64(piece, line, c))
        .collect::<PResult<Vec<f64>>>()?;
    Ok(Bundle::new(coords))
}

fn parse_tuple_list(tok: Tok<'_>, line: usize) -> PResult<Vec<Bundle>> {
    split_cols(tok.text, tok.col, ';')
        .into_iter()
        .map(|(piece, col)| parse_tuple(piece, col, line))
        .collect()
}

/// `name(body)`; returns the body with its starting column.
fn group_body<'a>(tok: Tok<'a>, name: &str, line: usize) -> PResult<(&'a str, usize)> {
    let rest = tok.text.strip_prefix(name).ok_or_else(|| {
        syntax(
            line,
            tok.col,
            format!("expected {name}(...), found {:?}", tok.text),
        )
    })?;
    let inner = rest
        .strip_prefix('(')
        .and_then(|t| t.strip_suffix(')'))
        .ok_or_else(|| {
            syntax(
                line,
                tok.col,
                format!("expected {name}(...), found {:?}", tok.text),
            )
        })?;
    Ok((inner, tok.col + name.len() + 1))
}

/// `key=value` pairs from a comma-separated body.
fn parse_assignments(body: &str, col: usize, line: usize) -> PResult<Vec<(String, String, usize)>> {
    if body.is_empty() {
        return Ok(Vec::new());
    }
    split_cols(body, col, ',')
        .into_iter()
        .map(|(piece, c)| match piece.split_once('=') {
            Some((k, v)) => Ok((k.to_string(), v.to_string(), c + k.len() + 1)),
            None => Err(syntax(
                line,
                c,
                format!("expected key=value, found {piece:?}"),
            )),
        })
        .collect()
}

/// Tabulated entries `(a,b)=v,(c,d)=w`; entries split on `,` that follows
/// a closing parenthesis so tuple interiors stay whole.
fn parse_table_entries(body: &str, col: usize, line: usize) -> PResult<Vec<(Bundle, f64)>> {
    let mut out = Vec::new();
    let mut start = 0;
    let mut depth = 0usize;
    let bytes = body.as_bytes();
    for i in 0..=bytes.len() {
        let split = i == bytes.len() || (bytes[i] == b',' && depth == 0);
        if split {
            let piece = &body[start..i];
            let piece_col = col + start;
            let (tuple, value) = piece.split_once(")=").ok_or_else(|| {
                syntax(line, piece_col, format!("expected (tuple)=value, found {piece:?}"))
            })?;
            let bundle = parse_tuple(&format!("{tuple})"), piece_col, line)?;
            let v = parse_f64(value, line, piece_col + tuple.len() + 2)?;
            out.push((bundle, v));
            start = i + 1;
        } else if i < bytes.len() {
            match bytes[i] {
                b'(' => depth += 1,
                b')' => depth = depth.saturating_sub(1),
                _ => {}
            }
        }
    }
    Ok(out)
}

const WELFARE_STOPS: [&str; 4] = ["principal", "predecessor", "objective", "agency-cost"];

/// A welfare expression: a form followed by optional modifiers, stopping
/// at end of line or any reserved keyword of the enclosing record.
fn parse_welfare_spec(cx: &mut Cursor<'_>) -> PResult<WelfareFunction> {
    let form_tok = cx.next("a welfare form (linear, log-linear, tabulated)")?;
    let mut w = match form_tok.text {
        "linear" => {
            let weights = parse_num_list(cx.next("weights")?, cx.line_no)?;
            WelfareFunction::linear(weights)
        }
        "log-linear" => {
            let alphas = parse_num_list(cx.next("exponent weights")?, cx.line_no)?;
            cx.expect_word("shift")?;
            let t = cx.next("shift value")?;
            let shift = parse_f64(t.text, cx.line_no, t.col)?;
            WelfareFunction::log_linear(alphas, shift)
        }
        "tabulated" => {
            let t = cx.next("table entries")?;
            let entries = parse_table_entries(t.text, t.col, cx.line_no)?;
            WelfareFunction::tabulated(entries)
        }
        other => {
            return Err(syntax(
                cx.line_no,
                form_tok.col,
                format!("unknown welfare form {other:?}"),
            ))
        }
    };
    while let Some(t) = cx.peek() {
        if WELFARE_STOPS.contains(&t.text) {
            break;
        }
        cx.pos += 1;
        if t.text == "monotone" {
            w.declared_monotone = true;
        } else if t.text.starts_with("offsets(") {
            let (body, body_col) = group_body(t, "offsets", cx.line_no)?;
            for (k, v, vcol) in parse_assignments(body, body_col, cx.line_no)? {
                let delta = parse_f64(&v, cx.line_no, vcol)?;
                w.state_offsets.insert(StateId::new(k), delta);
            }
        } else if t.text.starts_with("table(") {
            let (body, body_col) = group_body(t, "table", cx.line_no)?;
            let (state, entries_text) = body.split_once(':').ok_or_else(|| {
                syntax(cx.line_no, body_col, "expected table(state:entries)")
            })?;
            let entries =
                parse_table_entries(entries_text, body_col + state.len() + 1, cx.line_no)?;
            match &w.form {
                WelfareForm::Tabulated { .. } => {
                    w = w.with_state_table(state, entries);
                }
                _ => {
                    return Err(syntax(
                        cx.line_no,
                        t.col,
                        "per-state tables apply only to the tabulated form",
                    ))
                }
            }
        } else {
            return Err(syntax(
                cx.line_no,
                t.col,
                format!("unexpected token {:?} in welfare expression", t.text),
            ));
        }
    }
    Ok(w)
}

/// One nonempty line of a section with its one-based number.
struct Line<'a> {
    no: usize,
    text: &'a str,
}

const SECTIONS: [&str; 11] = [
    "entities",
    "sigma",
    "grids",
    "rights",
    "states",
    "welfare",
    "delegates",
    "channels",
    "feasibility",
    "attributes",
    "candidate",
];

/// Parse without the final validation pass.
pub fn parse_str(text: &str) -> PResult<ParsedFile> {
    let mut header: Vec<Line<'_>> = Vec::new();
    let mut sections: BTreeMap<&str, (usize, Vec<Line<'_>>)> = BTreeMap::new();
    let mut current: Option<&str> = None;

    for (idx, raw) in text.lines().enumerate() {
        let no = idx + 1;
        let line = raw.split('#').next().unwrap_or("").trim_end();
        if line.trim().is_empty() {
            continue;
        }
        let trimmed = line.trim_start();
        if let Some(name) = trimmed.strip_prefix('[').and_then(|t| t.strip_suffix(']')) {
            let col = line.len() - trimmed.len() + 1;
            if !SECTIONS.contains(&name) {
                return Err(syntax(no, col, format!("unknown section [{name}]")));
            }
            if sections.contains_key(name) {
                return Err(syntax(no, col, format!("duplicate section [{name}]")));
            }
            sections.insert(name, (no, Vec::new()));
            current = Some(name);
            continue;
        }
        match current {
            None => header.push(Line { no, text: line }),
            Some(name) => sections
                .get_mut(name)
                .expect("current section exists")
                .1
                .push(Line { no, text: line }),
        }
    }

    // Header: format version and dimensions.
    let mut format_seen = false;
    let mut lx: Option<usize> = None;
    let mut lr: usize = 0;
    for line in &header {
        let mut cx = Cursor::new(line.no, line.text);
        let key = cx.next("a directive")?;
        match key.text {
            "format" => {
                let t = cx.next("format version")?;
                let v = parse_usize(t.text, line.no, t.col)?;
                if v != FORMAT_VERSION as usize {
                    return Err(syntax(
                        line.no,
                        t.col,
                        format!("unsupported format version {v}; this build reads version {FORMAT_VERSION}"),
                    ));
                }
                format_seen = true;
            }
            "lx" => {
                let t = cx.next("consumption dimension")?;
                lx = Some(parse_usize(t.text, line.no, t.col)?);
            }
            "lr" => {
                let t = cx.next("rights dimension")?;
                lr = parse_usize(t.text, line.no, t.col)?;
            }
            other => {
                return Err(syntax(
                    line.no,
                    key.col,
                    format!("unknown directive {other:?} before the first section"),
                ))
            }
        }
        cx.expect_end()?;
    }
    if !format_seen {
        return Err(syntax(0, 0, "missing `format 1` directive"));
    }
    let lx = lx.ok_or_else(|| syntax(0, 0, "missing `lx` directive"))?;
    let dim = lx + lr;

    let take = |name: &str| -> (usize, Vec<Line<'_>>) {
        sections.get(name).map_or((0, Vec::new()), |(no, lines)| {
            (
                *no,
                lines
                    .iter()
                    .map(|l| Line { no: l.no, text: l.text })
                    .collect(),
            )
        })
    };

    // Entities, the anchor for every positional section.
    let (ent_header_no, ent_lines) = take("entities");
    if !sections.contains_key("entities") {
        return Err(syntax(0, 0, "missing [entities] section"));
    }
    let mut entities: Vec<Entity> = Vec::new();
    for line in &ent_lines {
        let mut cx = Cursor::new(line.no, line.text);
        let id_tok = cx.next("an entity id")?;
        let id = check_ident(id_tok.text, line.no, id_tok.col)?;
        let kind = cx.next("entity kind (human or artificial)")?;
        let mut ent = match kind.text {
            "human" => Entity::human(id),
            "artificial" => Entity::artificial(id),
            other => {
                return Err(syntax(
                    line.no,
                    kind.col,
                    format!("expected \"human\" or \"artificial\", found {other:?}"),
                ))
            }
        };
        if let Some(t) = cx.peek() {
            if t.text == "price-setter" {
                ent.price_setter = true;
                cx.pos += 1;
            }
        }
        cx.expect_end()?;
        entities.push(ent);
    }
    let index_of = |id: &str| entities.iter().position(|ent| ent.id.0 == id);
    let entity_at =
        |tok: Tok<'_>, line_no: usize| -> PResult<usize> {
            check_ident(tok.text, line_no, tok.col)?;
            index_of(tok.text).ok_or_else(|| {
                syntax(line_no, tok.col, format!("unknown entity {:?}", tok.text))
            })
        };

    // Sigma.
    let mut sigma = StatusAssignment::new();
    for line in &take("sigma").1 {
        let mut cx = Cursor::new(line.no, line.text);
        let id_tok = cx.next("an entity id")?;
        check_ident(id_tok.text, line.no, id_tok.col)?;
        let st_tok = cx.next("a status (tool, delegate, agent, ws)")?;
        let status = Status::parse(st_tok.text).ok_or_else(|| {
            syntax(
                line.no,
                st_tok.col,
                format!("unknown status {:?}", st_tok.text),
            )
        })?;
        sigma.set(EntityId::new(id_tok.text), status);
        cx.expect_end()?;
    }

    // Grids, positional by entity.
    let mut grids: Vec<Option<Grid>> = vec![None; entities.len()];
    for line in &take("grids").1 {
        let mut cx = Cursor::new(line.no, line.text);
        let id_tok = cx.next("an entity id")?;
        let i = entity_at(id_tok, line.no)?;
        let kind = cx.next("grid kind (lattice or points)")?;
        let grid = match kind.text {
            "lattice" => {
                let t = cx.next("axes")?;
                let axes = split_cols(t.text, t.col, '|')
                    .into_iter()
                    .map(|(piece, col)| {
                        split_cols(piece, col, ',')
                            .into_iter()
                            .map(|(v, c)| parse_f64(v, line.no, c))
                            .collect::<PResult<Vec<f64>>>()
                    })
                    .collect::<PResult<Vec<Vec<f64>>>>()?;
                if axes.len() != dim {
                    return Err(syntax(
                        line.no,
                        t.col,
                        format!("expected {dim} axes, found {}", axes.len()),
                    ));
                }
                Grid::lattice(axes)
            }
            "points" => {
                let t = cx.next("points")?;
                let points = parse_tuple_list(t, line.no)?;
                for b in &points {
                    if b.dim() != dim {
                        return Err(syntax(
                            line.no,
                            t.col,
                            format!("expected {dim}-coordinate points, found {}", b.dim()),
                        ));
                    }
                }
                Grid::points(points)
            }
            other => {
                return Err(syntax(
                    line.no,
                    kind.col,
                    format!("expected \"lattice\" or \"points\", found {other:?}"),
                ))
            }
        };
        if grids[i].is_some() {
            return Err(syntax(
                line.no,
                id_tok.col,
                format!("duplicate grid for {:?}", id_tok.text),
            ));
        }
        grids[i] = Some(grid);
        cx.expect_end()?;
    }
    let grids = grids
        .into_iter()
        .enumerate()
        .map(|(i, g)| {
            g.ok_or_else(|| {
                syntax(
                    ent_header_no,
                    1,
                    format!("no grid declared for entity {}", entities[i].id),
                )
            })
        })
        .collect::<PResult<Vec<Grid>>>()?;

    // Rights tags, positional; absent lines default to priced.
    let mut rights_class: Vec<Vec<RightsTag>> = vec![vec![RightsTag::Priced; lr]; entities.len()];
    for line in &take("rights").1 {
        let mut cx = Cursor::new(line.no, line.text);
        let id_tok = cx.next("an entity id")?;
        let i = entity_at(id_tok, line.no)?;
        let mut tags = Vec::new();
        while let Some(t) = cx.peek() {
            cx.pos += 1;
            let tag = RightsTag::parse(t.text).ok_or_else(|| {
                syntax(
                    line.no,
                    t.col,
                    format!("unknown rights tag {:?}", t.text),
                )
            })?;
            tags.push(tag);
        }
        if tags.len() != lr {
            return Err(syntax(
                line.no,
                id_tok.col,
                format!("expected {lr} rights tags, found {}", tags.len()),
            ));
        }
        rights_class[i] = tags;
    }

    // States.
    let mut states: Vec<InstitutionalState> = Vec::new();
    for line in &take("states").1 {
        let mut cx = Cursor::new(line.no, line.text);
        let id_tok = cx.next("a state id")?;
        let id = check_ident(id_tok.text, line.no, id_tok.col)?;
        let mut state = InstitutionalState::bare(id);
        while let Some(t) = cx.peek() {
            cx.pos += 1;
            if t.text.starts_with("governed(") {
                let (body, _) = group_body(t, "governed", line.no)?;
                for (piece, col) in split_cols(body, t.col, ',') {
                    check_ident(piece, line.no, col)?;
                    state.governed_channels.insert(ChannelId::new(piece));
                }
            } else if t.text.starts_with("verified(") {
                let (body, body_col) = group_body(t, "verified", line.no)?;
                for (piece, col) in split_cols(body, body_col, ',') {
                    let kind = AttributeKind::parse(piece).ok_or_else(|| {
                        syntax(line.no, col, format!("unknown attribute kind {piece:?}"))
                    })?;
                    state.verified_attributes.insert(kind);
                }
            } else if t.text.starts_with("liability(") {
                let (body, body_col) = group_body(t, "liability", line.no)?;
                for (action, entity, vcol) in parse_assignments(body, body_col, line.no)? {
                    check_ident(&entity, line.no, vcol)?;
                    state
                        .liability
                        .insert(ActionLabel::new(action), EntityId::new(entity));
                }
            } else if t.text.starts_with("internalized(") {
                let (body, body_col) = group_body(t, "internalized", line.no)?;
                for (piece, col) in split_cols(body, body_col, ',') {
                    check_ident(piece, line.no, col)?;
                    state.internalized_delegates.insert(EntityId::new(piece));
                }
            } else if t.text.starts_with("protected(") {
                let (body, body_col) = group_body(t, "protected", line.no)?;
                for (piece, col) in split_cols(body, body_col, ',') {
                    let (ent, coord) = piece.split_once(':').ok_or_else(|| {
                        syntax(line.no, col, format!("expected entity:coordinate, found {piece:?}"))
                    })?;
                    check_ident(ent, line.no, col)?;
                    let k = parse_usize(coord, line.no, col + ent.len() + 1)?;
                    state.protected_rights.insert((EntityId::new(ent), k));
                }
            } else {
                return Err(syntax(
                    line.no,
                    t.col,
                    format!("unknown state field {:?}", t.text),
                ));
            }
        }
        states.push(state);
    }

    // Welfare.
    let mut welfare: BTreeMap<EntityId, WelfareFunction> = BTreeMap::new();
    for line in &take("welfare").1 {
        let mut cx = Cursor::new(line.no, line.text);
        let id_tok = cx.next("an entity id")?;
        check_ident(id_tok.text, line.no, id_tok.col)?;
        let w = parse_welfare_spec(&mut cx)?;
        cx.expect_end()?;
        welfare.insert(EntityId::new(id_tok.text), w);
    }

    // Delegates.
    let mut delegates: Vec<DelegateSpec> = Vec::new();
    for line in &take("delegates").1 {
        let mut cx = Cursor::new(line.no, line.text);
        let id_tok = cx.next("a delegate id")?;
        check_ident(id_tok.text, line.no, id_tok.col)?;
        let mut principal: Option<EntityId> = None;
        let mut predecessor: Option<EntityId> = None;
        let mut objective: Option<WelfareFunction> = None;
        let mut agency_cost: Option<WelfareFunction> = None;
        while let Some(t) = cx.peek() {
            cx.pos += 1;
            match t.text {
                "principal" => {
                    let p = cx.next("a principal id")?;
                    check_ident(p.text, line.no, p.col)?;
                    principal = Some(EntityId::new(p.text));
                }
                "predecessor" => {
                    let p = cx.next("a predecessor id")?;
                    check_ident(p.text, line.no, p.col)?;
                    predecessor = Some(EntityId::new(p.text));
                }
                "objective" => objective = Some(parse_welfare_spec(&mut cx)?),
                "agency-cost" => agency_cost = Some(parse_welfare_spec(&mut cx)?),
                other => {
                    return Err(syntax(
                        line.no,
                        t.col,
                        format!("unknown delegation field {other:?}"),
                    ))
                }
            }
        }
        let principal = principal.ok_or_else(|| {
            syntax(line.no, id_tok.col, "delegation record needs a principal")
        })?;
        let objective = objective.ok_or_else(|| {
            syntax(line.no, id_tok.col, "delegation record needs an objective")
        })?;
        delegates.push(DelegateSpec {
            delegate: EntityId::new(id_tok.text),
            principal,
            predecessor,
            objective,
            agency_cost,
        });
    }

    // Channels.
    let mut channels: Vec<ActionChannel> = Vec::new();
    for line in &take("channels").1 {
        let mut cx = Cursor::new(line.no, line.text);
        let id_tok = cx.next("a channel id")?;
        check_ident(id_tok.text, line.no, id_tok.col)?;
        let mut actor: Option<EntityId> = None;
        let mut target: Option<EntityId> = None;
        let mut actions: Vec<ActionLabel> = Vec::new();
        let mut null_action: Option<ActionLabel> = None;
        let mut realized: Option<ActionLabel> = None;
        let mut effects: BTreeMap<(ActionLabel, StateId), f64> = BTreeMap::new();
        let mut compensated = false;
        let mut tau: Option<BTreeMap<ActionLabel, f64>> = None;
        while let Some(t) = cx.peek() {
            cx.pos += 1;
            match t.text {
                "actor" => {
                    let p = cx.next("an actor id")?;
                    actor = Some(EntityId::new(check_ident(p.text, line.no, p.col)?));
                }
                "target" => {
                    let p = cx.next("a target id")?;
                    target = Some(EntityId::new(check_ident(p.text, line.no, p.col)?));
                }
                "actions" => {
                    let p = cx.next("action labels")?;
                    for (piece, col) in split_cols(p.text, p.col, ',') {
                        check_ident(piece, line.no, col)?;
                        actions.push(ActionLabel::new(piece));
                    }
                }
                "null" => {
                    let p = cx.next("the null action")?;
                    null_action = Some(ActionLabel::new(check_ident(p.text, line.no, p.col)?));
                }
                "realized" => {
                    let p = cx.next("the realized action")?;
                    realized = Some(ActionLabel::new(check_ident(p.text, line.no, p.col)?));
                }
                "effects" => {
                    let p = cx.next("effect entries")?;
                    for (piece, col) in split_cols(p.text, p.col, ',') {
                        let rest = piece.strip_prefix('(').ok_or_else(|| {
                            syntax(line.no, col, format!("expected (action@state)=value, found {piece:?}"))
                        })?;
                        let (key, value) = rest.split_once(")=").ok_or_else(|| {
                            syntax(line.no, col, format!("expected (action@state)=value, found {piece:?}"))
                        })?;
                        let (action, state) = key.split_once('@').ok_or_else(|| {
                            syntax(line.no, col, format!("expected action@state inside {piece:?}"))
                        })?;
                        let v = parse_f64(value, line.no, col + key.len() + 3)?;
                        effects.insert((ActionLabel::new(action), StateId::new(state)), v);
                    }
                }
                "compensated" => compensated = true,
                "tau" => {
                    let p = cx.next("transfer entries")?;
                    let mut map = BTreeMap::new();
                    for (action, value, vcol) in parse_assignments(p.text, p.col, line.no)? {
                        let v = parse_f64(&value, line.no, vcol)?;
                        map.insert(ActionLabel::new(action), v);
                    }
                    tau = Some(map);
                }
                other => {
                    return Err(syntax(
                        line.no,
                        t.col,
                        format!("unknown channel field {other:?}"),
                    ))
                }
            }
        }
        let missing = |what: &str| syntax(line.no, id_tok.col, format!("channel needs {what}"));
        channels.push(ActionChannel {
            id: ChannelId::new(id_tok.text),
            actor: actor.ok_or_else(|| missing("an actor"))?,
            target: target.ok_or_else(|| missing("a target"))?,
            actions,
            null_action: null_action.ok_or_else(|| missing("a null action"))?,
            realized: realized.ok_or_else(|| missing("a realized action"))?,
            effects,
            compensated,
            tau,
        });
    }

    // Feasibility.
    let (_, feas_lines) = take("feasibility");
    if !sections.contains_key("feasibility") {
        return Err(syntax(0, 0, "missing [feasibility] section"));
    }
    let mut omega: Option<Vec<f64>> = None;
    let mut production: Vec<Bundle> = vec![Bundle::zeros(dim)];
    let mut mode = FeasibilityMode::ExactBalance;
    for line in &feas_lines {
        let mut cx = Cursor::new(line.no, line.text);
        let key = cx.next("a feasibility field")?;
        match key.text {
            "omega" => {
                let t = cx.next("endowment coordinates")?;
                let v = parse_num_list(t, line.no)?;
                if v.len() != dim {
                    return Err(syntax(
                        line.no,
                        t.col,
                        format!("expected {dim} coordinates, found {}", v.len()),
                    ));
                }
                omega = Some(v);
            }
            "production" => {
                let t = cx.next("production vectors")?;
                production = parse_tuple_list(t, line.no)?;
            }
            "mode" => {
                let t = cx.next("a feasibility mode")?;
                mode = FeasibilityMode::parse(t.text).ok_or_else(|| {
                    syntax(
                        line.no,
                        t.col,
                        format!("unknown feasibility mode {:?}", t.text),
                    )
                })?;
            }
            other => {
                return Err(syntax(
                    line.no,
                    key.col,
                    format!("unknown feasibility field {other:?}"),
                ))
            }
        }
        cx.expect_end()?;
    }
    let omega = omega.ok_or_else(|| syntax(0, 0, "missing `omega` in [feasibility]"))?;

    // Attributes.
    let mut attributes: Vec<AttributeDecl> = Vec::new();
    for line in &take("attributes").1 {
        let mut cx = Cursor::new(line.no, line.text);
        let kind_tok = cx.next("an attribute kind")?;
        let kind = AttributeKind::parse(kind_tok.text).ok_or_else(|| {
            syntax(
                line.no,
                kind_tok.col,
                format!("unknown attribute kind {:?}", kind_tok.text),
            )
        })?;
        let mut values: Vec<String> = Vec::new();
        let mut price_coords: BTreeMap<String, usize> = BTreeMap::new();
        while let Some(t) = cx.peek() {
            cx.pos += 1;
            match t.text {
                "values" => {
                    let p = cx.next("value names")?;
                    for (piece, col) in split_cols(p.text, p.col, ',') {
                        check_ident(piece, line.no, col)?;
                        values.push(piece.to_string());
                    }
                }
                "prices" => {
                    let p = cx.next("price coordinate entries")?;
                    for (value, coord, vcol) in parse_assignments(p.text, p.col, line.no)? {
                        let k = parse_usize(&coord, line.no, vcol)?;
                        price_coords.insert(value, k);
                    }
                }
                other => {
                    return Err(syntax(
                        line.no,
                        t.col,
                        format!("unknown attribute field {other:?}"),
                    ))
                }
            }
        }
        attributes.push(AttributeDecl {
            kind,
            values,
            price_coords,
        });
    }

    // Candidate.
    let mut candidate = None;
    if sections.contains_key("candidate") {
        let (header_no, lines) = take("candidate");
        let mut prices: Option<Vec<f64>> = None;
        let mut state: Option<StateId> = None;
        let mut allocation: Option<Vec<Bundle>> = None;
        for line in &lines {
            let mut cx = Cursor::new(line.no, line.text);
            let key = cx.next("a candidate field")?;
            match key.text {
                "prices" => {
                    let t = cx.next("price coordinates")?;
                    let v = parse_num_list(t, line.no)?;
                    if v.len() != dim {
                        return Err(syntax(
                            line.no,
                            t.col,
                            format!("expected {dim} coordinates, found {}", v.len()),
                        ));
                    }
                    prices = Some(v);
                }
                "state" => {
                    let t = cx.next("a state id")?;
                    state = Some(StateId::new(check_ident(t.text, line.no, t.col)?));
                }
                "allocation" => {
                    let t = cx.next("bundles")?;
                    let bundles = parse_tuple_list(t, line.no)?;
                    if bundles.len() != entities.len() {
                        return Err(syntax(
                            line.no,
                            t.col,
                            format!(
                                "expected {} bundles (one per entity), found {}",
                                entities.len(),
                                bundles.len()
                            ),
                        ));
                    }
                    allocation = Some(bundles);
                }
                other => {
                    return Err(syntax(
                        line.no,
                        key.col,
                        format!("unknown candidate field {other:?}"),
                    ))
                }
            }
            cx.expect_end()?;
        }
        let need = |what: &str| syntax(header_no, 1, format!("[candidate] needs a `{what}` line"));
        candidate = Some(Candidate {
            prices: prices.ok_or_else(|| need("prices"))?,
            allocation: Allocation(allocation.ok_or_else(|| need("allocation"))?),
            state: state.ok_or_else(|| need("state"))?,
        });
    }

    Ok(ParsedFile {
        economy: Economy {
            lx,
            lr,
            entities,
            sigma,
            grids,
            rights_class,
            states,
            welfare,
            delegates,
            channels,
            feasibility: FeasibilitySpec {
                omega,
                production,
                mode,
            },
            attributes,
        },
        candidate,
    })
}

fn num(x: f64) -> String {
    format!("{x}")
}

fn join<I: IntoIterator<Item = String>>(items: I, sep: &str) -> String {
    items.into_iter().collect::<Vec<String>>().join(sep)
}

fn tuple(b: &Bundle) -> String {
    format!("({})", join(b.0.iter().map(|v| num(*v)), ","))
}

fn emit_welfare(w: &WelfareFunction) -> String {
    let mut s = match &w.form {
        WelfareForm::Linear { weights } => {
            format!("linear {}", join(weights.iter().map(|v| num(*v)), ","))
        }
        WelfareForm::LogLinear { alphas, shift } => format!(
            "log-linear {} shift {}",
            join(alphas.iter().map(|v| num(*v)), ","),
            num(*shift)
        ),
        WelfareForm::Tabulated { default, by_state } => {
            let mut t = format!(
                "tabulated {}",
                join(
                    default
                        .entries
                        .iter()
                        .map(|(b, v)| format!("{}={}", tuple(b), num(*v))),
                    ","
                )
            );
            for (state, table) in by_state {
                t.push_str(&format!(
                    " table({state}:{})",
                    join(
                        table
                            .entries
                            .iter()
                            .map(|(b, v)| format!("{}={}", tuple(b), num(*v))),
                        ","
                    )
                ));
            }
            t
        }
    };
    if w.declared_monotone {
        s.push_str(" monotone");
    }
    if !w.state_offsets.is_empty() {
        s.push_str(&format!(
            " offsets({})",
            join(
                w.state_offsets
                    .iter()
                    .map(|(state, v)| format!("{state}={}", num(*v))),
                ","
            )
        ));
    }
    s
}

/// Canonical text for an economy and optional candidate. Sections appear
/// in a fixed order, map-valued fields in key order, and every number as
/// its shortest round-trip decimal.
pub fn emit(e: &Economy, candidate: Option<&Candidate>) -> String {
    let mut out = String::new();
    let mut line = |s: String| {
        out.push_str(&s);
        out.push('\n');
    };

    line(format!("format {FORMAT_VERSION}"));
    line(format!("lx {}", e.lx));
    line(format!("lr {}", e.lr));

    line("\n[entities]".into());
    for ent in &e.entities {
        let kind = if ent.human { "human" } else { "artificial" };
        let setter = if ent.price_setter { " price-setter" } else { "" };
        line(format!("{} {kind}{setter}", ent.id));
    }

    if !e.sigma.is_empty() {
        line("\n[sigma]".into());
        for (id, status) in e.sigma.iter() {
            line(format!("{id} {status}"));
        }
    }

    line("\n[grids]".into());
    for (i, ent) in e.entities.iter().enumerate() {
        match &e.grids[i] {
            Grid::Lattice { axes } => line(format!(
                "{} lattice {}",
                ent.id,
                join(
                    axes.iter()
                        .map(|axis| join(axis.iter().map(|v| num(*v)), ",")),
                    "|"
                )
            )),
            Grid::Points { points } => line(format!(
                "{} points {}",
                ent.id,
                join(points.iter().map(tuple), ";")
            )),
        }
    }

    if e.lr > 0 {
        line("\n[rights]".into());
        for (i, ent) in e.entities.iter().enumerate() {
            line(format!(
                "{} {}",
                ent.id,
                join(e.rights_class[i].iter().map(|t| t.as_str().to_string()), " ")
            ));
        }
    }

    if !e.states.is_empty() {
        line("\n[states]".into());
        for s in &e.states {
            let mut parts = vec![format!("{}", s.id)];
            if !s.governed_channels.is_empty() {
                parts.push(format!(
                    "governed({})",
                    join(s.governed_channels.iter().map(|c| c.to_string()), ",")
                ));
            }
            if !s.verified_attributes.is_empty() {
                parts.push(format!(
                    "verified({})",
                    join(
                        s.verified_attributes.iter().map(|k| k.as_str().to_string()),
                        ","
                    )
                ));
            }
            if !s.liability.is_empty() {
                parts.push(format!(
                    "liability({})",
                    join(
                        s.liability.iter().map(|(a, ent)| format!("{a}={ent}")),
                        ","
                    )
                ));
            }
            if !s.internalized_delegates.is_empty() {
                parts.push(format!(
                    "internalized({})",
                    join(s.internalized_delegates.iter().map(|d| d.to_string()), ",")
                ));
            }
            if !s.protected_rights.is_empty() {
                parts.push(format!(
                    "protected({})",
                    join(
                        s.protected_rights
                            .iter()
                            .map(|(ent, k)| format!("{ent}:{k}")),
                        ","
                    )
                ));
            }
            line(parts.join(" "));
        }
    }

    if !e.welfare.is_empty() {
        line("\n[welfare]".into());
        for (id, w) in &e.welfare {
            line(format!("{id} {}", emit_welfare(w)));
        }
    }

    if !e.delegates.is_empty() {
        line("\n[delegates]".into());
        for d in &e.delegates {
            let mut s = format!("{} principal {}", d.delegate, d.principal);
            if let Some(p) = &d.predecessor {
                s.push_str(&format!(" predecessor {p}"));
            }
            s.push_str(&format!(" objective {}", emit_welfare(&d.objective)));
            if let Some(c) = &d.agency_cost {
                s.push_str(&format!(" agency-cost {}", emit_welfare(c)));
            }
            line(s);
        }
    }

    if !e.channels.is_empty() {
        line("\n[channels]".into());
        for c in &e.channels {
            let mut s = format!(
                "{} actor {} target {} actions {} null {} realized {}",
                c.id,
                c.actor,
                c.target,
                join(c.actions.iter().map(|a| a.to_string()), ","),
                c.null_action,
                c.realized
            );
            if !c.effects.is_empty() {
                s.push_str(&format!(
                    " effects {}",
                    join(
                        c.effects
                            .iter()
                            .map(|((a, st), v)| format!("({a}@{st})={}", num(*v))),
                        ","
                    )
                ));
            }
            if c.compensated {
                s.push_str(" compensated");
            }
            if let Some(tau) = &c.tau {
                if !tau.is_empty() {
                    s.push_str(&format!(
                        " tau {}",
                        join(tau.iter().map(|(a, v)| format!("{a}={}", num(*v))), ",")
                    ));
                }
            }
            line(s);
        }
    }

    line("\n[feasibility]".into());
    line(format!(
        "omega {}",
        join(e.feasibility.omega.iter().map(|v| num(*v)), ",")
    ));
    line(format!(
        "production {}",
        join(e.feasibility.production.iter().map(tuple), ";")
    ));
    line(format!("mode {}", e.feasibility.mode.as_str()));

    if !e.attributes.is_empty() {
        line("\n[attributes]".into());
        for a in &e.attributes {
            let mut s = format!("{} values {}", a.kind, join(a.values.iter().cloned(), ","));
            if !a.price_coords.is_empty() {
                s.push_str(&format!(
                    " prices {}",
                    join(
                        a.price_coords.iter().map(|(v, k)| format!("{v}={k}")),
                        ","
                    )
                ));
            }
            line(s);
        }
    }

    if let Some(cand) = candidate {
        line("\n[candidate]".into());
        line(format!(
            "prices {}",
            join(cand.prices.iter().map(|v| num(*v)), ",")
        ));
        line(format!("state {}", cand.state));
        line(format!(
            "allocation {}",
            join(cand.allocation.0.iter().map(tuple), ";")
        ));
    }

    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use paretolab_core::scenarios::{scenario, SCENARIO_NAMES};

    #[test]
    fn every_scenario_round_trips_through_the_canonical_form() {
        for name in SCENARIO_NAMES {
            let s = scenario(name).unwrap();
            let text = emit(&s.economy, Some(&s.candidate));
            let parsed = parse_validated(&text).unwrap_or_else(|err| {
                panic!("{name}: canonical text fails to parse: {err}\n{text}")
            });
            assert_eq!(parsed.economy, s.economy, "{name}: economy drifted");
            assert_eq!(parsed.candidate.as_ref(), Some(&s.candidate));
            let again = emit(&parsed.economy, parsed.candidate.as_ref());
            assert_eq!(again, text, "{name}: emission is not stable");
        }
    }

    #[test]
    fn syntax_errors_carry_line_and_column() {
        let text = "format 1\nlx 1\n\n[entities]\nh1 human\nm1 artificial\n\n[grids]\nh1 lattice 0,1,zz\nm1 points (0)\n\n[feasibility]\nomega 1\n";
        let err = parse_str(text).unwrap_err();
        match err {
            FileError::Syntax { line, col, message } => {
                assert_eq!(line, 9);
                assert_eq!(col, 16);
                assert!(message.contains("malformed number"), "{message}");
            }
            other => panic!("expected a syntax error, got {other:?}"),
        }
    }

    #[test]
    fn missing_sigma_is_a_semantic_error_naming_the_entity() {
        let text = "format 1\nlx 1\n\n[entities]\nh1 human\nm1 artificial\n\n[sigma]\nh1 agent\n\n[grids]\nh1 lattice 0,1\nm1 points (0)\n\n[welfare]\nh1 linear 1\n\n[states]\ns0\n\n[feasibility]\nomega 1\n";
        let err = parse_validated(text).unwrap_err();
        match err {
            FileError::Semantic(report) => {
                let text = report.to_string();
                assert!(
                    text.contains("missing entity m1"),
                    "expected the report to name m1: {text}"
                );
            }
            other => panic!("expected a semantic error, got {other:?}"),
        }
    }

    #[test]
    fn unknown_section_and_duplicate_section_are_rejected() {
        let err = parse_str("format 1\nlx 1\n[nonsense]\n").unwrap_err();
        assert!(matches!(err, FileError::Syntax { line: 3, .. }), "{err:?}");
        let err = parse_str("format 1\nlx 1\n[entities]\n[entities]\n").unwrap_err();
        assert!(matches!(err, FileError::Syntax { line: 4, .. }), "{err:?}");
    }

    #[test]
    fn format_version_is_enforced() {
        let err = parse_str("format 2\nlx 1\n[entities]\n[feasibility]\nomega 1\n").unwrap_err();
        match err {
            FileError::Syntax { line: 1, message, .. } => {
                assert!(message.contains("unsupported format version"), "{message}")
            }
            other => panic!("{other:?}"),
        }
    }

    proptest::proptest! {
        #![proptest_config(proptest::prelude::ProptestConfig::with_cases(256))]

        #[test]
        fn the_parser_never_panics_on_arbitrary_text(text in "[ -~\t\n]{0,300}") {
            let _ = parse_str(&text);
        }

        #[test]
        fn the_parser_never_panics_on_corrupted_canonical_text(
            pos in 0usize..4096,
            byte in 0u8..128,
        ) {
            let s = scenario("example2").unwrap();
            let mut text = emit(&s.economy, Some(&s.candidate)).into_bytes();
            let at = pos % text.len();
            text[at] = byte;
            if let Ok(text) = String::from_utf8(text) {
                let _ = parse_str(&text);
            }
        }
    }
}
