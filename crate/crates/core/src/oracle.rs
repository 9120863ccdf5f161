//! Brute-force, assumption-free verification.
//!
//! Expectations here are recomputed from the published truth tables and the
//! term expansions of the analyzer's defining equations, never from the
//! protocol module's classifier, so a shared bug cannot certify itself:
//!
//! - the step-1 atom table is transcribed verbatim for three photons and
//!   generated from the parity pattern (atom m reads the XOR of photon 1's
//!   bit with photon m+1's bit; the phase atom follows the sign, inverted
//!   for even photon counts) for the rest;
//! - the eight step-2 output states for preserved polarization `+001` are
//!   transcribed amplitude-by-amplitude;
//! - the detector grouping is derived independently from the support-letter
//!   and path-parity rule and cross-checked against the transcribed
//!   eight-group table.
//!
//! Everything at four photons or fewer is checked exhaustively; sampling is
//! used only for the frequency statistics.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::components::{DelayCondition, ElementOp};
use crate::hilbert::{
    BasisState, MeasBasis, ModeSpec, PhotonId, Polarization, StateVector, SubsystemId,
};
use crate::protocol::{build_tesa, Analyzer, Circuit, GroupId, Parity};
use crate::states::{
    canonicalize, enumerate_ghz_labels, enumerate_labels, make_hyper, BitString, GhzDof, GhzLabel,
    HyperLabel, Sign,
};
use crate::{Complex64, Error, Result, NORM_TOL};

/// One verified case: pass means `expected == observed`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CaseRecord {
    pub input: String,
    pub expected: String,
    pub observed: String,
    /// Fidelity or probability backing the comparison, when one exists.
    pub fidelity: Option<f64>,
}

impl CaseRecord {
    pub fn pass(&self) -> bool {
        self.expected == self.observed
    }
}

/// Outcome of one verification scope.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct VerificationReport {
    pub scope: String,
    pub pass: bool,
    pub cases: Vec<CaseRecord>,
    /// Wall-clock duration, stamped by the caller; the core stays clock-free.
    pub duration_ms: u64,
}

impl VerificationReport {
    pub fn new(scope: impl Into<String>) -> Self {
        VerificationReport { scope: scope.into(), pass: true, cases: Vec::new(), duration_ms: 0 }
    }

    pub fn push(&mut self, case: CaseRecord) {
        self.pass &= case.pass();
        self.cases.push(case);
    }

    pub fn failures(&self) -> impl Iterator<Item = &CaseRecord> {
        self.cases.iter().filter(|c| !c.pass())
    }
}

/// Step-1 atom table for three photons, transcribed row-for-row from the
/// published table (labels in minimum-weight display form).
pub const TABLE1_ROWS: [(&str, &str); 8] = [
    ("+000", "(+,+,-)"),
    ("-000", "(+,+,+)"),
    ("+001", "(+,-,-)"),
    ("-001", "(+,-,+)"),
    ("+010", "(-,+,-)"),
    ("-010", "(-,+,+)"),
    ("+100", "(-,-,-)"),
    ("-100", "(-,-,+)"),
];

/// The published eight-group detector classification of all 64 three-photon
/// inputs, transcribed state-for-state (minimum-weight display form).
pub const TABLE2_GROUPS: [[&str; 8]; 8] = [
    [
        "P+000,T+000", "P+001,T+001", "P+010,T+010", "P+100,T+100",
        "P-000,T-000", "P-001,T-001", "P-010,T-010", "P-100,T-100",
    ],
    [
        "P+000,T-000", "P+001,T-001", "P+010,T-010", "P+100,T-100",
        "P-000,T+000", "P-001,T+001", "P-010,T+010", "P-100,T+100",
    ],
    [
        "P+000,T+001", "P+001,T+000", "P+010,T+100", "P+100,T+010",
        "P-000,T-001", "P-001,T-000", "P-010,T-100", "P-100,T-010",
    ],
    [
        "P+000,T-001", "P+001,T-000", "P+010,T-100", "P+100,T-010",
        "P-000,T+001", "P-001,T+000", "P-010,T+100", "P-100,T+010",
    ],
    [
        "P+000,T+010", "P+001,T+100", "P+010,T+000", "P+100,T+001",
        "P-000,T-010", "P-001,T-100", "P-010,T-000", "P-100,T-001",
    ],
    [
        "P+000,T-010", "P+001,T-100", "P+010,T-000", "P+100,T-001",
        "P-000,T+010", "P-001,T+100", "P-010,T+000", "P-100,T+001",
    ],
    [
        "P+000,T+100", "P+001,T+010", "P+010,T+001", "P+100,T+000",
        "P-000,T-100", "P-001,T-010", "P-010,T-001", "P-100,T-000",
    ],
    [
        "P+000,T-100", "P+001,T-010", "P+010,T-001", "P+100,T-000",
        "P-000,T+100", "P-001,T+010", "P-010,T+001", "P-100,T+000",
    ],
];

/// One transcribed step-2 output: time label (display form), polarization
/// support pair, and the four signed path patterns (digits are rail numbers
/// for photons a, b, c).
pub type TranscribedOutput = (&'static str, [&'static str; 2], [(&'static str, i8); 4]);

/// The eight step-2 output states for preserved polarization `+001`,
/// transcribed term-for-term. Every amplitude is `sign / (2*sqrt(2))` and
/// all photons arrive in slot 1.
pub const EQ_OUTPUTS: [TranscribedOutput; 8] = [
    ("+000", ["HHV", "VVH"], [("111", 1), ("122", 1), ("212", 1), ("221", 1)]),
    ("-000", ["HHV", "VVH"], [("112", 1), ("121", 1), ("211", 1), ("222", 1)]),
    ("+001", ["HHH", "VVV"], [("111", 1), ("122", -1), ("212", -1), ("221", 1)]),
    ("-001", ["HHH", "VVV"], [("112", 1), ("121", -1), ("211", -1), ("222", 1)]),
    ("+010", ["HVV", "VHH"], [("111", 1), ("122", -1), ("212", 1), ("221", -1)]),
    ("-010", ["HVV", "VHH"], [("112", 1), ("121", -1), ("211", 1), ("222", -1)]),
    ("+100", ["VHV", "HVH"], [("111", 1), ("122", 1), ("212", -1), ("221", -1)]),
    ("-100", ["VHV", "HVH"], [("112", 1), ("121", 1), ("211", -1), ("222", -1)]),
];

/// Parses a display-form sign+bits pair (which may use the minimum-weight
/// representative) into a canonical label.
pub fn parse_display_label(dof: GhzDof, text: &str) -> Result<GhzLabel> {
    let Some(sign_ch) = text.chars().next() else {
        return Err(Error::Argument("empty label"));
    };
    let sign = match sign_ch {
        '+' => Sign::Plus,
        '-' => Sign::Minus,
        _ => return Err(Error::Argument("label must start with + or -")),
    };
    let bits: BitString = text[1..].parse()?;
    let (label, _) = GhzLabel::new(dof, sign, bits);
    Ok(label)
}

/// Parses a display-form hyper label such as `P+001,T-100`.
pub fn parse_display_hyper(text: &str) -> Result<HyperLabel> {
    let (pol_part, time_part) = text
        .split_once(',')
        .ok_or(Error::Argument("hyper label needs a comma"))?;
    let pol = parse_display_label(
        GhzDof::Polarization,
        pol_part.strip_prefix('P').ok_or(Error::Argument("missing P prefix"))?,
    )?;
    let time = parse_display_label(
        GhzDof::TimeBin,
        time_part.strip_prefix('T').ok_or(Error::Argument("missing T prefix"))?,
    )?;
    HyperLabel::new(pol, time)
}

/// Expected step-1 atom readout for one polarization label, from the parity
/// pattern: parity atom m reads the XOR of photon 1's bit with photon m+1's
/// bit, and the phase atom reads `-` for `+` labels at odd photon counts,
/// inverted at even counts.
pub fn expected_atoms(pol: &GhzLabel) -> Vec<Sign> {
    let n = pol.photon_count();
    let bits = pol.bits();
    let mut atoms = Vec::with_capacity(n as usize);
    for m in 1..n {
        atoms.push(if bits.bit(0) ^ bits.bit(m) == 1 { Sign::Minus } else { Sign::Plus });
    }
    let odd = n % 2 == 1;
    let phase = match (pol.sign(), odd) {
        (Sign::Plus, true) | (Sign::Minus, false) => Sign::Minus,
        _ => Sign::Plus,
    };
    atoms.push(phase);
    atoms
}

/// Expected detector group: support letter is the canonical class of
/// `pol_bits XOR time_bits`; parity is even exactly when the two signs
/// agree.
pub fn expected_group(label: &HyperLabel) -> GroupId {
    let raw = label.pol.bits().xor(&label.time.bits()).expect("same photon count");
    let (_, letter, _) = canonicalize(Sign::Plus, raw);
    let parity = if label.pol.sign() == label.time.sign() { Parity::Even } else { Parity::Odd };
    GroupId { letter, parity }
}

fn atoms_string(atoms: &[Sign]) -> String {
    let mut s = String::from("(");
    for (i, sign) in atoms.iter().enumerate() {
        if i > 0 {
            s.push(',');
        }
        s.push(match sign {
            Sign::Plus => '+',
            Sign::Minus => '-',
        });
    }
    s.push(')');
    s
}

/// Runs step 1 on every hyperentangled input and checks the atom readout
/// against the parity pattern (and, for three photons, the transcribed
/// table) plus photonic preservation. The scope string flags the documented
/// even-count inversion of the phase atom.
pub fn verify_step1_table(n: u8) -> Result<VerificationReport> {
    let scope = if n.is_multiple_of(2) {
        format!("step1-table n={n} (even-count phase-atom convention inverted)")
    } else {
        format!("step1-table n={n}")
    };
    let mut report = VerificationReport::new(scope);
    let analyzer = Analyzer::new(n)?;
    let table1: BTreeMap<&str, &str> = TABLE1_ROWS.iter().copied().collect();
    for label in enumerate_labels(n)? {
        let expected_signs = expected_atoms(&label.pol);
        let mut expected = atoms_string(&expected_signs);
        if n == 3 {
            let row = table1
                .get(label.pol.paper_sign_bits().as_str())
                .ok_or(Error::Argument("missing transcribed table row"))?;
            if *row != expected {
                // A transcription/derivation mismatch must surface loudly.
                expected = format!("{row} (table) != {expected} (derived)");
            }
        }
        let case = match analyzer.prepare(&label) {
            Ok(prepared) => {
                let atoms = atoms_string(&prepared.atoms);
                let observed = if (prepared.preservation_fidelity - 1.0).abs() <= NORM_TOL {
                    atoms
                } else {
                    format!(
                        "{atoms} with photonic state disturbed (fidelity {})",
                        prepared.preservation_fidelity
                    )
                };
                CaseRecord {
                    input: label.to_string(),
                    expected,
                    observed,
                    fidelity: Some(prepared.preservation_fidelity),
                }
            }
            Err(e) => CaseRecord {
                input: label.to_string(),
                expected,
                observed: format!("error: {e}"),
                fidelity: None,
            },
        };
        report.push(case);
    }
    Ok(report)
}

/// Optional global swap of the two detector rails, applied consistently when
/// comparing a candidate circuit against the transcribed outputs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PathRelabel {
    #[default]
    Identity,
    Swapped,
}

impl PathRelabel {
    fn apply(self, state: &StateVector) -> Result<StateVector> {
        match self {
            PathRelabel::Identity => Ok(state.clone()),
            PathRelabel::Swapped => {
                let photons: Vec<PhotonId> = state.spec().photons().collect();
                state.apply_basis_map(|b| {
                    let mut out = b;
                    for p in &photons {
                        out = out.with_path(*p, 1 - out.path(*p));
                    }
                    Ok(crate::hilbert::TermList::one(out, Complex64::new(1.0, 0.0)))
                })
            }
        }
    }
}

/// Builds the transcribed step-2 output state for one fixture line.
fn eq_output_state(spec: &ModeSpec, line: &TranscribedOutput) -> Result<StateVector> {
    let (_, supports, path_terms) = line;
    let amp = 1.0 / (2.0 * libm::sqrt(2.0));
    let mut terms = Vec::new();
    for support in supports {
        for (paths, sign) in path_terms {
            let mut basis = BasisState::VACUUM;
            for (i, (pol_ch, path_ch)) in support.chars().zip(paths.chars()).enumerate() {
                let photon = PhotonId(i as u8);
                let pol = if pol_ch == 'H' { Polarization::H } else { Polarization::V };
                basis = basis
                    .with_pol(photon, pol)
                    .with_slot(photon, 1)
                    .with_path(photon, if path_ch == '1' { 0 } else { 1 });
            }
            terms.push((basis, Complex64::new(*sign as f64 * amp, 0.0)));
        }
    }
    StateVector::from_terms(*spec, spec.photonic_coverage(), terms)
}

/// Input hyper label for one fixture line (preserved polarization `+001`).
fn eq_input_label(time_display: &str) -> Result<HyperLabel> {
    let pol = parse_display_label(GhzDof::Polarization, "+001")?;
    let time = parse_display_label(GhzDof::TimeBin, time_display)?;
    HyperLabel::new(pol, time)
}

/// Applies a step-2 circuit (pre-measurement) to preserved polarization
/// `+001` tensored with each of the eight time-bin GHZ states and compares
/// against the transcribed outputs: fidelity at least `1 - 1e-10` up to
/// global phase, with single-slot arrival per photon.
pub fn verify_tesa_contract(circuit: &Circuit, relabel: PathRelabel) -> Result<VerificationReport> {
    let mut report = VerificationReport::new("tesa-contract n=3");
    for line in &EQ_OUTPUTS {
        report.push(tesa_contract_case(circuit, relabel, line)?);
    }
    Ok(report)
}

fn tesa_contract_case(
    circuit: &Circuit,
    relabel: PathRelabel,
    line: &TranscribedOutput,
) -> Result<CaseRecord> {
    let spec = circuit.spec();
    let label = eq_input_label(line.0)?;
    let reference = eq_output_state(spec, line)?;
    let input = make_hyper(&label, spec)?;
    let expected = "transcribed output, single-slot arrival".to_string();
    let case = match circuit.apply_elements(&input).and_then(|s| relabel.apply(&s)) {
        Ok(evolved) => {
            let spread = spec
                .photons()
                .find(|p| matches!(evolved.definite_value(SubsystemId::TimeBin(*p)), Ok(None)));
            if let Some(photon) = spread {
                CaseRecord {
                    input: label.to_string(),
                    expected,
                    observed: format!("temporal spread on photon {photon}"),
                    fidelity: None,
                }
            } else {
                let fidelity = evolved.fidelity(&reference)?;
                let observed = if fidelity >= 1.0 - NORM_TOL {
                    expected.clone()
                } else {
                    format!("fidelity {fidelity:.6}")
                };
                CaseRecord { input: label.to_string(), expected, observed, fidelity: Some(fidelity) }
            }
        }
        Err(e) => CaseRecord {
            input: label.to_string(),
            expected,
            observed: format!("error: {e}"),
            fidelity: None,
        },
    };
    Ok(case)
}

/// Row of a derived step-2 mapping table.
#[derive(Debug, Clone, PartialEq)]
pub struct TesaRow {
    pub time: GhzLabel,
    pub letter: BitString,
    pub parity: Parity,
}

/// Step-2 discrimination table for one preserved polarization state:
/// which (support letter, path parity) class each time-bin input lands in.
#[derive(Debug, Clone, PartialEq)]
pub struct TesaTable {
    pub pol: GhzLabel,
    pub rows: Vec<TesaRow>,
}

impl TesaTable {
    /// Every time label must land in a distinct class for the grouping to
    /// discriminate.
    pub fn is_injective(&self) -> bool {
        let mut seen = BTreeSet::new();
        self.rows.iter().all(|row| seen.insert((row.letter, row.parity)))
    }
}

/// Simulates the reference step-2 circuit on `pol ⊗ t` for every time label
/// `t` and reads the (support letter, path parity) class from the evolved
/// state's amplitudes. The published equations list these outputs only for
/// preserved polarization `+001`; this derives the other tables.
pub fn derive_tesa_table(pol: &GhzLabel) -> Result<TesaTable> {
    let n = pol.photon_count();
    let circuit = build_tesa(n)?;
    let spec = *circuit.spec();
    let mut rows = Vec::new();
    for time in enumerate_ghz_labels(GhzDof::TimeBin, n)? {
        let label = HyperLabel::new(*pol, time)?;
        let input = make_hyper(&label, &spec)?;
        let evolved = circuit.apply_elements(&input)?;
        let (letter, parity) = read_class(&evolved)?;
        rows.push(TesaRow { time, letter, parity });
    }
    Ok(TesaTable { pol: *pol, rows })
}

/// Extracts the polarization support class and path parity from a
/// pre-detection state; fails if the state is not confined to one class.
fn read_class(state: &StateVector) -> Result<(BitString, Parity)> {
    let spec = state.spec();
    let n = spec.photon_count();
    let mut letters = BTreeSet::new();
    let mut parities = BTreeSet::new();
    for (basis, _) in state.terms() {
        let mut bits = BitString::zeros(n)?;
        let mut second_rail = 0u8;
        for p in spec.photons() {
            bits = bits.with_bit(p.0, basis.pol(p).bit());
            second_rail += basis.path(p);
        }
        let (_, letter, _) = canonicalize(Sign::Plus, bits);
        letters.insert(letter);
        parities.insert(if second_rail.is_multiple_of(2) { Parity::Even } else { Parity::Odd });
    }
    if letters.len() != 1 || parities.len() != 1 {
        return Err(Error::Precondition("state is not confined to one detector class"));
    }
    Ok((
        letters.into_iter().next().expect("one letter"),
        parities.into_iter().next().expect("one parity"),
    ))
}

/// Derives the step-2 table for every preserved polarization label and
/// checks each row against the analytic class rule, plus injectivity per
/// table.
pub fn verify_tesa_tables(n: u8) -> Result<VerificationReport> {
    let mut report = VerificationReport::new(format!("tesa-tables n={n}"));
    for pol in enumerate_ghz_labels(GhzDof::Polarization, n)? {
        match derive_tesa_table(&pol) {
            Ok(table) => {
                for row in &table.rows {
                    let label = HyperLabel::new(pol, row.time)?;
                    let expected = expected_group(&label);
                    let observed = GroupId { letter: row.letter, parity: row.parity };
                    report.push(CaseRecord {
                        input: label.to_string(),
                        expected: expected.to_string(),
                        observed: observed.to_string(),
                        fidelity: None,
                    });
                }
                report.push(CaseRecord {
                    input: format!("{pol} table"),
                    expected: "injective over time labels".to_string(),
                    observed: if table.is_injective() {
                        "injective over time labels".to_string()
                    } else {
                        "collision".to_string()
                    },
                    fidelity: None,
                });
            }
            Err(e) => report.push(CaseRecord {
                input: pol.to_string(),
                expected: "derived table".to_string(),
                observed: format!("error: {e}"),
                fidelity: None,
            }),
        }
    }
    Ok(report)
}

/// Unbound element template used by the configuration search.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TemplateElement {
    Pockels { trigger: u8 },
    Delay { condition: DelayCondition, slots: u8 },
    PbsSplit,
    HwpFlip,
    BsPath,
}

impl core::fmt::Display for TemplateElement {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            TemplateElement::Pockels { trigger } => write!(f, "pockels(trigger={trigger})"),
            TemplateElement::Delay { condition, slots } => {
                let cond = match condition {
                    DelayCondition::Pol(Polarization::H) => "pol=H",
                    DelayCondition::Pol(Polarization::V) => "pol=V",
                    DelayCondition::Path(0) => "path=x1",
                    DelayCondition::Path(_) => "path=x2",
                };
                write!(f, "delay({cond}, slots={slots})")
            }
            TemplateElement::PbsSplit => write!(f, "pbs()"),
            TemplateElement::HwpFlip => write!(f, "hwp(flip)"),
            TemplateElement::BsPath => write!(f, "bs()"),
        }
    }
}

impl TemplateElement {
    fn bind(&self, photon: PhotonId) -> Result<ElementOp> {
        Ok(match *self {
            TemplateElement::Pockels { trigger } => ElementOp::pockels(photon, trigger)?,
            TemplateElement::Delay { condition, slots } => {
                ElementOp::delay(photon, condition, slots)?
            }
            TemplateElement::PbsSplit => ElementOp::pbs(photon, (0, 1), (0, 1))?,
            TemplateElement::HwpFlip => ElementOp::hwp(photon, crate::components::HwpMode::Flip),
            TemplateElement::BsPath => ElementOp::bs(photon, (0, 1))?,
        })
    }
}

/// One candidate step-2 front end: an ordered per-photon element sequence
/// plus an optional global rail relabeling.
#[derive(Debug, Clone, PartialEq)]
pub struct TesaConfig {
    pub elements: Vec<TemplateElement>,
    pub relabel: PathRelabel,
}

impl TesaConfig {
    /// Binds the template to every photon and attaches the detection plan.
    pub fn instantiate(&self, n: u8) -> Result<Circuit> {
        let spec = ModeSpec::protocol(n, n)?;
        let mut elements = Vec::new();
        for photon in spec.photons() {
            for template in &self.elements {
                elements.push(template.bind(photon)?);
            }
        }
        let mut detected = Vec::new();
        for photon in spec.photons() {
            detected.push(SubsystemId::Pol(photon));
            detected.push(SubsystemId::Path(photon));
        }
        Circuit::new(spec, elements, alloc::vec![(detected, MeasBasis::Computational)])
    }

    pub fn describe(&self) -> String {
        let mut s = String::new();
        for (i, e) in self.elements.iter().enumerate() {
            if i > 0 {
                s.push_str(", ");
            }
            s.push_str(&e.to_string());
        }
        if self.relabel == PathRelabel::Swapped {
            s.push_str(" [rails swapped]");
        }
        s
    }
}

/// Bounded enumeration space for the configuration search.
#[derive(Debug, Clone)]
pub struct SearchSpace {
    pub pool: Vec<TemplateElement>,
    pub max_len: usize,
    pub max_candidates: usize,
    pub try_swapped_relabel: bool,
}

impl SearchSpace {
    /// Pool covering the dashed-box inventory (Pockels cells, conditional
    /// delays, splitter, flip plate, rail mixer) with search depth 5.
    pub fn default_space() -> Self {
        SearchSpace {
            pool: alloc::vec![
                TemplateElement::PbsSplit,
                TemplateElement::Pockels { trigger: 1 },
                TemplateElement::Delay { condition: DelayCondition::Path(0), slots: 1 },
                TemplateElement::BsPath,
                TemplateElement::Pockels { trigger: 0 },
                TemplateElement::HwpFlip,
                TemplateElement::Delay { condition: DelayCondition::Pol(Polarization::V), slots: 1 },
            ],
            max_len: 5,
            max_candidates: 100_000,
            try_swapped_relabel: false,
        }
    }
}

/// Enumerates candidate configurations in deterministic order (length
/// ascending, then lexicographic by pool index, identity relabeling before
/// swapped) and returns the first one whose instantiation reproduces all
/// eight transcribed outputs, together with that candidate's full contract
/// report. Returns `None` and a summary report when the space is exhausted.
pub fn search_tesa_config(space: &SearchSpace) -> Result<(Option<TesaConfig>, VerificationReport)> {
    let mut evaluated = 0usize;
    let pool_len = space.pool.len();
    if pool_len > 0 {
        for len in 1..=space.max_len {
            let mut indices = alloc::vec![0usize; len];
            loop {
                let elements: Vec<TemplateElement> =
                    indices.iter().map(|i| space.pool[*i]).collect();
                let relabels: &[PathRelabel] = if space.try_swapped_relabel {
                    &[PathRelabel::Identity, PathRelabel::Swapped]
                } else {
                    &[PathRelabel::Identity]
                };
                for relabel in relabels {
                    if evaluated >= space.max_candidates {
                        return Ok((None, exhausted_report(evaluated)));
                    }
                    evaluated += 1;
                    let config = TesaConfig { elements: elements.clone(), relabel: *relabel };
                    if config_passes(&config)? {
                        let circuit = config.instantiate(3)?;
                        let mut report = verify_tesa_contract(&circuit, config.relabel)?;
                        report.scope = format!(
                            "tesa-config-search (candidate {evaluated}: {})",
                            config.describe()
                        );
                        return Ok((Some(config), report));
                    }
                }
                // advance the odometer
                let mut pos = len;
                loop {
                    if pos == 0 {
                        break;
                    }
                    pos -= 1;
                    indices[pos] += 1;
                    if indices[pos] < pool_len {
                        break;
                    }
                    indices[pos] = 0;
                }
                if indices.iter().all(|i| *i == 0) {
                    break;
                }
            }
        }
    }
    Ok((None, exhausted_report(evaluated)))
}

fn exhausted_report(evaluated: usize) -> VerificationReport {
    let mut report = VerificationReport::new("tesa-config-search");
    report.pass = false;
    if evaluated > 0 {
        report.push(CaseRecord {
            input: "(search space)".to_string(),
            expected: "a configuration reproducing the transduction contract".to_string(),
            observed: format!("none found after {evaluated} candidates"),
            fidelity: None,
        });
    }
    report
}

/// Cheap short-circuit evaluation of one candidate: bail on the first
/// fixture input that fails.
fn config_passes(config: &TesaConfig) -> Result<bool> {
    let circuit = match config.instantiate(3) {
        Ok(c) => c,
        Err(_) => return Ok(false),
    };
    let spec = *circuit.spec();
    for line in &EQ_OUTPUTS {
        let label = eq_input_label(line.0)?;
        let input = make_hyper(&label, &spec)?;
        let Ok(evolved) = circuit.apply_elements(&input) else {
            return Ok(false);
        };
        let Ok(relabeled) = config.relabel.apply(&evolved) else {
            return Ok(false);
        };
        for p in spec.photons() {
            if relabeled.definite_value(SubsystemId::TimeBin(p))?.is_none() {
                return Ok(false);
            }
        }
        let reference = eq_output_state(&spec, line)?;
        if relabeled.fidelity(&reference)? < 1.0 - NORM_TOL {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Closed-loop certification: every hyperentangled input, analyzed with
/// per-shot derived random streams, must classify back to its own label on
/// every shot; the deterministic signature map (atom vector, detector
/// group) must be injective; and with at least 1000 shots the path patterns
/// within each group must pass a 3-sigma chi-square uniformity test.
pub fn verify_complete_discrimination(n: u8, shots: u32, seed: u64) -> Result<VerificationReport> {
    if n > 5 {
        return Err(Error::Argument("complete discrimination is certified for 2..=5 photons"));
    }
    if shots == 0 {
        return Err(Error::Argument("at least one shot per state is required"));
    }
    let mut report =
        VerificationReport::new(format!("complete-discrimination n={n} shots={shots}"));
    let analyzer = Analyzer::new(n)?;
    let labels = enumerate_labels(n)?;
    let mut signatures: BTreeMap<(Vec<Sign>, GroupId), HyperLabel> = BTreeMap::new();
    for (case_idx, label) in labels.iter().enumerate() {
        let prepared = match analyzer.prepare(label) {
            Ok(p) => p,
            Err(e) => {
                report.push(CaseRecord {
                    input: label.to_string(),
                    expected: label.to_string(),
                    observed: format!("error: {e}"),
                    fidelity: None,
                });
                continue;
            }
        };
        let group = expected_group(label);
        let mut failures = 0u32;
        let mut first_failure = None;
        let mut pattern_counts: BTreeMap<Vec<u8>, u32> = BTreeMap::new();
        for shot in 0..shots {
            let mut rng = crate::rng::shot_rng(seed, case_idx as u64, shot as u64);
            let run = prepared.sample_with(&mut rng)?;
            let observed_group = GroupId::from_record(&run.record)?;
            if run.classified != *label || observed_group != group {
                failures += 1;
                if first_failure.is_none() {
                    first_failure =
                        Some(format!("{} in {observed_group}", run.classified));
                }
            }
            *pattern_counts
                .entry(run.record.detector_pattern.iter().map(|c| c.path).collect())
                .or_insert(0) += 1;
        }
        let expected = format!("{label} on {shots}/{shots} shots");
        let observed = if failures == 0 {
            expected.clone()
        } else {
            format!(
                "{} misclassified shots (first: {})",
                failures,
                first_failure.unwrap_or_default()
            )
        };
        report.push(CaseRecord {
            input: label.to_string(),
            expected,
            observed,
            fidelity: Some(prepared.preservation_fidelity),
        });

        if let Some(previous) = signatures.insert((prepared.atoms.clone(), group), *label) {
            report.push(CaseRecord {
                input: label.to_string(),
                expected: "unique signature".to_string(),
                observed: format!("signature collision with {previous}"),
                fidelity: None,
            });
        }

        if shots >= 1000 {
            report.push(chi_square_case(label, n, shots, &pattern_counts));
        }
    }
    if signatures.len() == labels.len() {
        report.push(CaseRecord {
            input: format!("signature map n={n}"),
            expected: format!("{} distinct signatures", labels.len()),
            observed: format!("{} distinct signatures", signatures.len()),
            fidelity: None,
        });
    }
    Ok(report)
}

/// Chi-square test of path-pattern uniformity for one input at 3 sigma,
/// using Fisher's normalization `sqrt(2 chi2) - sqrt(2 dof - 1) ~ N(0,1)`
/// over the `2^(n-1)` admissible patterns.
fn chi_square_case(
    label: &HyperLabel,
    n: u8,
    shots: u32,
    counts: &BTreeMap<Vec<u8>, u32>,
) -> CaseRecord {
    let k = 1u32 << (n - 1);
    let expected_count = shots as f64 / k as f64;
    let mut chi2 = 0.0;
    for count in counts.values() {
        let d = *count as f64 - expected_count;
        chi2 += d * d / expected_count;
    }
    // Patterns that never appeared still contribute their expectation.
    chi2 += (k as usize - counts.len()) as f64 * expected_count;
    let dof = (k - 1) as f64;
    let fisher = 3.0 + libm::sqrt(2.0 * dof - 1.0);
    let threshold = fisher * fisher / 2.0;
    let admissible = counts.len() == k as usize;
    let expected = format!("{k} patterns, chi2 <= {threshold:.2}");
    let observed = if admissible && chi2 <= threshold {
        expected.clone()
    } else {
        format!("{} patterns, chi2 = {chi2:.2}", counts.len())
    };
    CaseRecord {
        input: format!("{label} path uniformity"),
        expected,
        observed,
        fidelity: Some(chi2),
    }
}
