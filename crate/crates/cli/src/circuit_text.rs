//! Line-oriented circuit description format.
//!
//! One element per line as `kind(bindings; params)`, `#` starts a comment.
//! Photons are letters A..F, atoms are 1-based numbers, rails are x1/x2:
//!
//! ```text
//! # step-2 front end for photon A
//! pbs(photon=A; in=x1:x2, out=x1:x2)
//! pockels(photon=A; trigger=1)
//! pbs(photon=A; in=x1:x2, out=x1:x2)
//! delay(photon=A; cond=path:x1, slots=1)
//! bs(photon=A; paths=x1:x2)
//! ```
//!
//! Supported kinds: `prep`, `cpf`, `hwp`, `pockels`, `delay`, `pbs`, `bs`,
//! `t2p`.

use std::fmt;

use hyperghz::components::{DelayCondition, ElementOp, HwpMode};
use hyperghz::hilbert::{AtomId, PhotonId, Polarization};
use hyperghz::oracle::TemplateElement;

/// Parse failure with 1-based line and column.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CircuitParseError {
    pub line: usize,
    pub column: usize,
    pub message: String,
}

impl fmt::Display for CircuitParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}, column {}: {}", self.line, self.column, self.message)
    }
}

impl std::error::Error for CircuitParseError {}

struct LineParser<'a> {
    text: &'a str,
    line: usize,
}

impl<'a> LineParser<'a> {
    fn fail<T>(&self, column: usize, message: impl Into<String>) -> Result<T, CircuitParseError> {
        Err(CircuitParseError { line: self.line, column: column + 1, message: message.into() })
    }

    /// Column of `needle` inside the full line, for error reporting.
    fn column_of(&self, part: &str) -> usize {
        let base = self.text.as_ptr() as usize;
        let offset = part.as_ptr() as usize;
        offset.saturating_sub(base)
    }

    fn parse(&self) -> Result<Option<ElementOp>, CircuitParseError> {
        let code = self.text.split('#').next().unwrap_or("");
        let trimmed = code.trim();
        if trimmed.is_empty() {
            return Ok(None);
        }
        let open = match trimmed.find('(') {
            Some(i) => i,
            None => return self.fail(self.column_of(trimmed), "expected `kind(...)`"),
        };
        if !trimmed.ends_with(')') {
            return self.fail(self.column_of(trimmed) + trimmed.len(), "missing closing `)`");
        }
        let kind = &trimmed[..open];
        let body = &trimmed[open + 1..trimmed.len() - 1];
        let fields = Fields::parse(self, body)?;
        let op = match kind {
            "prep" => ElementOp::prepare_plus(fields.atom(self, "atom")?),
            "cpf" => ElementOp::cpf(fields.atom(self, "atom")?, fields.photon(self, "photon")?),
            "hwp" => {
                let mode = match fields.value(self, "mode")? {
                    "hadamard" => HwpMode::Hadamard,
                    "flip" => HwpMode::Flip,
                    other => {
                        return self.fail(
                            fields.column(self, "mode"),
                            format!("unknown wave-plate mode `{other}` (hadamard|flip)"),
                        )
                    }
                };
                ElementOp::hwp(fields.photon(self, "photon")?, mode)
            }
            "pockels" => {
                let trigger = fields.integer(self, "trigger")?;
                self.lift(fields.column(self, "trigger"), ElementOp::pockels(
                    fields.photon(self, "photon")?,
                    trigger,
                ))?
            }
            "delay" => {
                let condition = match fields.value(self, "cond")? {
                    "pol:H" => DelayCondition::Pol(Polarization::H),
                    "pol:V" => DelayCondition::Pol(Polarization::V),
                    "path:x1" => DelayCondition::Path(0),
                    "path:x2" => DelayCondition::Path(1),
                    other => {
                        return self.fail(
                            fields.column(self, "cond"),
                            format!("unknown delay condition `{other}` (pol:H|pol:V|path:x1|path:x2)"),
                        )
                    }
                };
                let slots = fields.integer(self, "slots")?;
                self.lift(fields.column(self, "slots"), ElementOp::delay(
                    fields.photon(self, "photon")?,
                    condition,
                    slots,
                ))?
            }
            "pbs" => {
                let in_paths = fields.path_pair(self, "in")?;
                let out_paths = fields.path_pair(self, "out")?;
                self.lift(fields.column(self, "in"), ElementOp::pbs(
                    fields.photon(self, "photon")?,
                    in_paths,
                    out_paths,
                ))?
            }
            "bs" => {
                let paths = fields.path_pair(self, "paths")?;
                self.lift(fields.column(self, "paths"), ElementOp::bs(
                    fields.photon(self, "photon")?,
                    paths,
                ))?
            }
            "t2p" => {
                let out_paths = fields.path_pair(self, "out")?;
                self.lift(fields.column(self, "out"), ElementOp::t2p(
                    fields.photon(self, "photon")?,
                    out_paths,
                ))?
            }
            other => {
                return self.fail(self.column_of(trimmed), format!("unknown element kind `{other}`"))
            }
        };
        Ok(Some(op))
    }

    fn lift(
        &self,
        column: usize,
        result: hyperghz::Result<ElementOp>,
    ) -> Result<ElementOp, CircuitParseError> {
        result.or_else(|e| self.fail(column, e.to_string()))
    }
}

/// Key=value fields from both sides of the optional `;`.
struct Fields<'a> {
    entries: Vec<(&'a str, &'a str)>,
}

impl<'a> Fields<'a> {
    fn parse(parser: &LineParser<'a>, body: &'a str) -> Result<Self, CircuitParseError> {
        let mut entries = Vec::new();
        for section in body.split(';') {
            for item in section.split(',') {
                let item = item.trim();
                if item.is_empty() {
                    continue;
                }
                match item.split_once('=') {
                    Some((k, v)) => entries.push((k.trim(), v.trim())),
                    None => {
                        return parser.fail(
                            parser.column_of(item),
                            format!("expected key=value, got `{item}`"),
                        )
                    }
                }
            }
        }
        Ok(Fields { entries })
    }

    fn value(&self, parser: &LineParser<'a>, key: &str) -> Result<&'a str, CircuitParseError> {
        self.entries
            .iter()
            .find(|(k, _)| *k == key)
            .map(|(_, v)| *v)
            .ok_or(CircuitParseError {
                line: parser.line,
                column: 1,
                message: format!("missing `{key}=` field"),
            })
    }

    fn column(&self, parser: &LineParser<'a>, key: &str) -> usize {
        self.entries
            .iter()
            .find(|(k, _)| *k == key)
            .map(|(_, v)| parser.column_of(v))
            .unwrap_or(0)
    }

    fn photon(&self, parser: &LineParser<'a>, key: &str) -> Result<PhotonId, CircuitParseError> {
        let v = self.value(parser, key)?;
        let mut chars = v.chars();
        match (chars.next(), chars.next()) {
            (Some(c @ 'A'..='F'), None) => Ok(PhotonId(c as u8 - b'A')),
            _ => parser.fail(self.column(parser, key), format!("photon must be A..F, got `{v}`")),
        }
    }

    fn atom(&self, parser: &LineParser<'a>, key: &str) -> Result<AtomId, CircuitParseError> {
        let v = self.value(parser, key)?;
        match v.parse::<u8>() {
            Ok(n @ 1..=6) => Ok(AtomId(n - 1)),
            _ => parser.fail(self.column(parser, key), format!("atom must be 1..6, got `{v}`")),
        }
    }

    fn integer(&self, parser: &LineParser<'a>, key: &str) -> Result<u8, CircuitParseError> {
        let v = self.value(parser, key)?;
        v.parse::<u8>()
            .or_else(|_| parser.fail(self.column(parser, key), format!("expected a small integer, got `{v}`")))
    }

    fn path_pair(&self, parser: &LineParser<'a>, key: &str) -> Result<(u8, u8), CircuitParseError> {
        let v = self.value(parser, key)?;
        let parse_rail = |s: &str| match s {
            "x1" => Some(0u8),
            "x2" => Some(1u8),
            _ => None,
        };
        match v.split_once(':') {
            Some((a, b)) => match (parse_rail(a.trim()), parse_rail(b.trim())) {
                (Some(a), Some(b)) => Ok((a, b)),
                _ => parser.fail(self.column(parser, key), format!("rails must be x1/x2, got `{v}`")),
            },
            None => parser.fail(self.column(parser, key), format!("expected `x1:x2` pair, got `{v}`")),
        }
    }
}

/// Parses a whole description into an ordered element list.
pub fn parse_circuit(text: &str) -> Result<Vec<ElementOp>, CircuitParseError> {
    let mut elements = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let parser = LineParser { text: line, line: idx + 1 };
        if let Some(op) = parser.parse()? {
            elements.push(op);
        }
    }
    Ok(elements)
}

/// One-line description of an element; inverse of [`parse_circuit`].
pub fn format_element(op: &ElementOp) -> String {
    let photon = |p: &PhotonId| (b'A' + p.0) as char;
    let rail = |x: u8| if x == 0 { "x1" } else { "x2" };
    match op {
        ElementOp::PreparePlus { atom } => format!("prep(atom={})", atom.0 + 1),
        ElementOp::Cpf { atom, photon: p } => {
            format!("cpf(atom={}, photon={})", atom.0 + 1, photon(p))
        }
        ElementOp::Hwp { photon: p, mode } => format!(
            "hwp(photon={}; mode={})",
            photon(p),
            match mode {
                HwpMode::Hadamard => "hadamard",
                HwpMode::Flip => "flip",
            }
        ),
        ElementOp::Pockels { photon: p, trigger_slot } => {
            format!("pockels(photon={}; trigger={trigger_slot})", photon(p))
        }
        ElementOp::Delay { photon: p, condition, slots } => {
            let cond = match condition {
                DelayCondition::Pol(Polarization::H) => "pol:H".to_string(),
                DelayCondition::Pol(Polarization::V) => "pol:V".to_string(),
                DelayCondition::Path(x) => format!("path:{}", rail(*x)),
            };
            format!("delay(photon={}; cond={cond}, slots={slots})", photon(p))
        }
        ElementOp::Pbs { photon: p, in_paths, out_paths } => format!(
            "pbs(photon={}; in={}:{}, out={}:{})",
            photon(p),
            rail(in_paths.0),
            rail(in_paths.1),
            rail(out_paths.0),
            rail(out_paths.1)
        ),
        ElementOp::Bs { photon: p, paths } => {
            format!("bs(photon={}; paths={}:{})", photon(p), rail(paths.0), rail(paths.1))
        }
        ElementOp::T2p { photon: p, out_paths } => format!(
            "t2p(photon={}; out={}:{})",
            photon(p),
            rail(out_paths.0),
            rail(out_paths.1)
        ),
    }
}

/// Serializes an ordered element list, one record per line.
pub fn format_circuit(elements: &[ElementOp]) -> String {
    let mut out = String::new();
    for op in elements {
        out.push_str(&format_element(op));
        out.push('\n');
    }
    out
}

/// Converts parsed elements into search templates. Every element must be a
/// step-2 front-end kind; bindings are ignored (the search re-binds the
/// template to each photon).
pub fn to_templates(elements: &[ElementOp]) -> Result<Vec<TemplateElement>, String> {
    elements
        .iter()
        .map(|op| match op {
            ElementOp::Pockels { trigger_slot, .. } => {
                Ok(TemplateElement::Pockels { trigger: *trigger_slot })
            }
            ElementOp::Delay { condition, slots, .. } => {
                Ok(TemplateElement::Delay { condition: *condition, slots: *slots })
            }
            ElementOp::Pbs { .. } => Ok(TemplateElement::PbsSplit),
            ElementOp::Hwp { mode: HwpMode::Flip, .. } => Ok(TemplateElement::HwpFlip),
            ElementOp::Bs { .. } => Ok(TemplateElement::BsPath),
            other => Err(format!(
                "`{}` cannot seed the transduction search (allowed: pockels, delay, pbs, hwp flip, bs)",
                format_element(other)
            )),
        })
        .collect()
}
