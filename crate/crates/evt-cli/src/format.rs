//! Line-oriented text formats for model and distribution files.
//!
//! Both formats share one grammar: `#` comment lines, one
//! `events <name> ...` header, then exactly one data line per subset, in
//! any order. A model line is `<bitstring> <value> <pstar>`; a
//! distribution line is `<bitstring> <prob>`. The leftmost bitstring
//! character belongs to the first listed event. Every violation is
//! reported with a 1-based line and column.
//!
//! All subsets must appear explicitly. A missing row is an error, never an
//! implicit zero: silence-as-zero invites silent modeling mistakes.
//!
//! Numbers are rendered with 17 significant digits, which is enough for
//! any double to survive a parse bit-for-bit, so `parse(emit(x)) = x`.

use std::fmt;

use evt_core::{EventSet, PowersetDistribution, SubsetMask, ValueFunction, MAX_EVENTS};

/// A parse failure at a specific spot. Lines and columns are 1-based;
/// columns count characters.
#[derive(Debug, Clone, PartialEq)]
pub struct ParseError {
    pub line: usize,
    pub column: usize,
    pub kind: ParseErrorKind,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "line {}, column {}: {}",
            self.line, self.column, self.kind
        )
    }
}

impl std::error::Error for ParseError {}

/// What went wrong at the reported position.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ParseErrorKind {
    #[error("expected an `events <name> ...` header")]
    MissingHeader,
    #[error("the header lists no event names")]
    EmptyEventList,
    #[error("{count} events exceed the supported maximum of {MAX_EVENTS}")]
    TooManyEvents { count: usize },
    #[error("duplicate event name `{name}`")]
    DuplicateEvent { name: String },
    #[error("bad bitstring `{token}`: expected {expected_len} characters, each `0` or `1`")]
    BadBitstring { token: String, expected_len: usize },
    #[error("subset `{bits}` appears more than once")]
    DuplicateMask { bits: String },
    #[error("subset `{bits}` never appears")]
    MissingMask { bits: String },
    #[error("`{token}` is not a finite base-10 real")]
    BadNumber { token: String },
    #[error("expected {expected} fields, found {got}")]
    WrongFieldCount { expected: usize, got: usize },
    #[error("negative value `{token}`")]
    NegativeValue { token: String },
    #[error("negative probability `{token}`")]
    NegativeProbability { token: String },
    #[error("probabilities sum to {sum}, not 1")]
    NotNormalized { sum: f64 },
}

/// A parsed model file: the theorem's inputs.
#[derive(Debug, Clone)]
pub struct ModelFile {
    pub events: EventSet,
    pub value: ValueFunction,
    pub base: PowersetDistribution,
}

/// A parsed distribution file, with whatever metadata the emitter left.
#[derive(Debug, Clone)]
pub struct DistFile {
    pub dist: PowersetDistribution,
    pub metadata: Option<DistMetadata>,
}

/// The `# alpha=.. logZ=.. H=..` comment a distribution emitter writes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DistMetadata {
    pub alpha: f64,
    pub log_z: f64,
    pub entropy: f64,
}

/// Whitespace-separated tokens of one line, each with its 1-based
/// character column.
fn tokens(line: &str) -> Vec<(usize, &str)> {
    let mut out = Vec::new();
    let mut column = 0;
    let mut start: Option<(usize, usize)> = None;
    for (byte, ch) in line.char_indices() {
        column += 1;
        if ch.is_whitespace() {
            if let Some((col, from)) = start.take() {
                out.push((col, &line[from..byte]));
            }
        } else if start.is_none() {
            start = Some((column, byte));
        }
    }
    if let Some((col, from)) = start {
        out.push((col, &line[from..]));
    }
    out
}

/// Renders a subset as a bitstring; the leftmost character is event 0.
pub fn render_mask(mask: SubsetMask, event_count: usize) -> String {
    (0..event_count)
        .map(|k| if mask.contains(k) { '1' } else { '0' })
        .collect()
}

fn parse_mask(token: &str, event_count: usize) -> Option<SubsetMask> {
    if token.chars().count() != event_count {
        return None;
    }
    let mut mask = 0u16;
    for (k, ch) in token.chars().enumerate() {
        match ch {
            '0' => {}
            '1' => mask |= 1 << k,
            _ => return None,
        }
    }
    Some(SubsetMask(mask))
}

fn parse_number(token: &str) -> Option<f64> {
    token.parse::<f64>().ok().filter(|x| x.is_finite())
}

struct Line<'a> {
    number: usize,
    tokens: Vec<(usize, &'a str)>,
}

/// Splits the text into significant lines (header and data), handling
/// comments and blanks, and collects the last metadata comment seen.
fn significant_lines<'a>(
    text: &'a str,
    metadata: Option<&mut Option<DistMetadata>>,
) -> Vec<Line<'a>> {
    let mut out = Vec::new();
    let mut meta_slot = metadata;
    for (index, raw) in text.lines().enumerate() {
        let trimmed = raw.trim_start();
        if trimmed.starts_with('#') {
            if let Some(slot) = meta_slot.as_deref_mut() {
                if let Some(found) = parse_metadata_comment(trimmed) {
                    *slot = Some(found);
                }
            }
            continue;
        }
        if trimmed.is_empty() {
            continue;
        }
        out.push(Line {
            number: index + 1,
            tokens: tokens(raw),
        });
    }
    out
}

fn parse_metadata_comment(comment: &str) -> Option<DistMetadata> {
    let body = comment.trim_start_matches('#');
    let fields: Vec<&str> = body.split_whitespace().collect();
    if fields.len() != 3 {
        return None;
    }
    let alpha = parse_number(fields[0].strip_prefix("alpha=")?)?;
    let log_z = parse_number(fields[1].strip_prefix("logZ=")?)?;
    let entropy = parse_number(fields[2].strip_prefix("H=")?)?;
    Some(DistMetadata {
        alpha,
        log_z,
        entropy,
    })
}

fn parse_header(line: &Line<'_>) -> Result<EventSet, ParseError> {
    let fail = |column, kind| ParseError {
        line: line.number,
        column,
        kind,
    };
    let Some(&(first_col, first)) = line.tokens.first() else {
        return Err(fail(1, ParseErrorKind::MissingHeader));
    };
    if first != "events" {
        return Err(fail(first_col, ParseErrorKind::MissingHeader));
    }
    let names = &line.tokens[1..];
    if names.is_empty() {
        return Err(fail(first_col, ParseErrorKind::EmptyEventList));
    }
    if names.len() > MAX_EVENTS {
        return Err(fail(
            names[MAX_EVENTS].0,
            ParseErrorKind::TooManyEvents { count: names.len() },
        ));
    }
    for (k, &(col, name)) in names.iter().enumerate() {
        if names[..k].iter().any(|&(_, earlier)| earlier == name) {
            return Err(fail(
                col,
                ParseErrorKind::DuplicateEvent {
                    name: name.to_string(),
                },
            ));
        }
    }
    Ok(EventSet::new(names.iter().map(|&(_, name)| name)).expect("header tokens validated"))
}

/// Shared row walk: checks field count, decodes and deduplicates the mask,
/// and hands each row's remaining tokens to `on_row` with its line number.
/// Returns the line just past the final row, where completeness errors are
/// reported.
fn parse_rows<'a>(
    lines: &[Line<'a>],
    events: &EventSet,
    fields: usize,
    mut on_row: impl FnMut(usize, usize, &[(usize, &'a str)]) -> Result<(), ParseError>,
) -> Result<usize, ParseError> {
    let n = events.len();
    let size = events.subset_count();
    let mut seen = vec![false; size];
    let mut last_line = 0;

    for line in lines {
        last_line = line.number;
        let fail = |column, kind| ParseError {
            line: line.number,
            column,
            kind,
        };
        if line.tokens.len() != fields {
            let column = line.tokens.get(fields).map(|&(c, _)| c).unwrap_or(1);
            return Err(fail(
                column,
                ParseErrorKind::WrongFieldCount {
                    expected: fields,
                    got: line.tokens.len(),
                },
            ));
        }
        let (bits_col, bits) = line.tokens[0];
        let Some(mask) = parse_mask(bits, n) else {
            return Err(fail(
                bits_col,
                ParseErrorKind::BadBitstring {
                    token: bits.to_string(),
                    expected_len: n,
                },
            ));
        };
        if seen[mask.index()] {
            return Err(fail(
                bits_col,
                ParseErrorKind::DuplicateMask {
                    bits: bits.to_string(),
                },
            ));
        }
        seen[mask.index()] = true;
        on_row(line.number, mask.index(), &line.tokens[1..])?;
    }

    if let Some(missing) = seen.iter().position(|&s| !s) {
        return Err(ParseError {
            line: last_line + 1,
            column: 1,
            kind: ParseErrorKind::MissingMask {
                bits: render_mask(SubsetMask(missing as u16), n),
            },
        });
    }
    Ok(last_line + 1)
}

fn number_field(
    line: usize,
    (column, token): (usize, &str),
    negative: fn(String) -> ParseErrorKind,
) -> Result<f64, ParseError> {
    let fail = |kind| ParseError { line, column, kind };
    let Some(x) = parse_number(token) else {
        return Err(fail(ParseErrorKind::BadNumber {
            token: token.to_string(),
        }));
    };
    if x < 0.0 {
        return Err(fail(negative(token.to_string())));
    }
    Ok(x)
}

fn validate_table(
    events: EventSet,
    probs: Vec<f64>,
    end_line: usize,
) -> Result<PowersetDistribution, ParseError> {
    PowersetDistribution::from_table(events, probs).map_err(|err| match err {
        evt_core::Error::NotNormalized { sum, .. } => ParseError {
            line: end_line,
            column: 1,
            kind: ParseErrorKind::NotNormalized { sum },
        },
        other => unreachable!("rows pre-validated: {other}"),
    })
}

fn header_and_rows<'a, 'b>(
    text: &'a str,
    lines: &'b [Line<'a>],
) -> Result<(EventSet, &'b [Line<'a>]), ParseError> {
    let Some((header, rows)) = lines.split_first() else {
        return Err(ParseError {
            line: text.lines().count() + 1,
            column: 1,
            kind: ParseErrorKind::MissingHeader,
        });
    };
    Ok((parse_header(header)?, rows))
}

/// Parses a model file: header, then one `<bitstring> <value> <pstar>`
/// line per subset.
pub fn parse_model(text: &str) -> Result<ModelFile, ParseError> {
    let lines = significant_lines(text, None);
    let (events, rows) = header_and_rows(text, &lines)?;
    let size = events.subset_count();

    let mut values = vec![0.0; size];
    let mut probs = vec![0.0; size];
    let end_line = parse_rows(rows, &events, 3, |line, index, rest| {
        values[index] = number_field(line, rest[0], |token| ParseErrorKind::NegativeValue {
            token,
        })?;
        probs[index] = number_field(line, rest[1], |token| ParseErrorKind::NegativeProbability {
            token,
        })?;
        Ok(())
    })?;

    let value = ValueFunction::new(events.clone(), values).expect("rows pre-validated");
    let base = validate_table(events.clone(), probs, end_line.saturating_sub(1))?;
    Ok(ModelFile {
        events,
        value,
        base,
    })
}

/// Parses a distribution file: header, then one `<bitstring> <prob>` line
/// per subset, plus optional emitter metadata in comments.
pub fn parse_dist(text: &str) -> Result<DistFile, ParseError> {
    let mut metadata = None;
    let lines = significant_lines(text, Some(&mut metadata));
    let (events, rows) = header_and_rows(text, &lines)?;
    let size = events.subset_count();

    let mut probs = vec![0.0; size];
    let end_line = parse_rows(rows, &events, 2, |line, index, rest| {
        probs[index] = number_field(line, rest[0], |token| ParseErrorKind::NegativeProbability {
            token,
        })?;
        Ok(())
    })?;

    let dist = validate_table(events, probs, end_line.saturating_sub(1))?;
    Ok(DistFile { dist, metadata })
}

/// Renders a float with 17 significant digits: enough for the exact bits
/// to survive a parse, with trailing zeros trimmed, positional notation
/// for moderate exponents and scientific otherwise.
pub fn fmt_g17(x: f64) -> String {
    if x == 0.0 {
        return if x.is_sign_negative() { "-0" } else { "0" }.to_string();
    }
    // `{:.16e}` renders `d.dddddddddddddddde<exp>`: 17 significant digits,
    // correctly rounded.
    let sci = format!("{:.16e}", x);
    let (mantissa, exp) = sci.split_once('e').expect("exponential form");
    let exp: i32 = exp.parse().expect("integer exponent");
    let sign = if mantissa.starts_with('-') { "-" } else { "" };
    let digits: String = mantissa.chars().filter(char::is_ascii_digit).collect();
    let digits = digits.trim_end_matches('0');
    let digits = if digits.is_empty() { "0" } else { digits };

    if (-4..17).contains(&exp) {
        if exp >= 0 {
            let int_len = exp as usize + 1;
            if digits.len() > int_len {
                format!("{sign}{}.{}", &digits[..int_len], &digits[int_len..])
            } else {
                format!("{sign}{}{}", digits, "0".repeat(int_len - digits.len()))
            }
        } else {
            format!("{sign}0.{}{}", "0".repeat((-exp) as usize - 1), digits)
        }
    } else if digits.len() > 1 {
        format!("{sign}{}.{}e{}", &digits[..1], &digits[1..], exp)
    } else {
        format!("{sign}{digits}e{exp}")
    }
}

/// Renders a distribution file: header, optional metadata comment, then
/// one `<bitstring> <prob>` line per subset in increasing mask order.
pub fn emit_dist(dist: &PowersetDistribution, metadata: Option<&DistMetadata>) -> String {
    let events = dist.events();
    let mut out = format!("events {}\n", events.names().join(" "));
    if let Some(meta) = metadata {
        out.push_str(&format!(
            "# alpha={} logZ={} H={}\n",
            fmt_g17(meta.alpha),
            fmt_g17(meta.log_z),
            fmt_g17(meta.entropy)
        ));
    }
    for mask in events.subsets() {
        out.push_str(&format!(
            "{} {}\n",
            render_mask(mask, events.len()),
            fmt_g17(dist.prob(mask))
        ));
    }
    out
}

/// Renders a model file in the same shape `parse_model` reads.
pub fn emit_model(model: &ModelFile) -> String {
    let events = &model.events;
    let mut out = format!("events {}\n", events.names().join(" "));
    for mask in events.subsets() {
        out.push_str(&format!(
            "{} {} {}\n",
            render_mask(mask, events.len()),
            fmt_g17(model.value.value(mask)),
            fmt_g17(model.base.prob(mask))
        ));
    }
    out
}
