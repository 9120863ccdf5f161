//! Canonical naming and construction of GHZ and hyperentangled GHZ states.
//!
//! A single-DOF GHZ state is `(|b> +/- |b_bar>)/sqrt(2)` where `b` is an
//! N-bit string and `b_bar` its bitwise complement. Complementing the string
//! names the same ray, so labels are canonicalized to a leading bit of 0;
//! the `-` family picks up a global phase of -1 under complementation, which
//! [`canonicalize`] reports so linear-algebra checks stay exact.
//!
//! Bit conventions: polarization `0 = H`, `1 = V`; time-bin `0 = S` (early,
//! slot 0), `1 = L` (late, slot 1). Bit `i` of a label belongs to photon `i`
//! and is displayed first-photon-first.

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use crate::hilbert::{
    BasisState, ModeSpec, PhotonId, Polarization, StateVector, SubsystemId, SubsystemSet,
};
use crate::{Complex64, Error, Result};

const FRAC_1_SQRT_2: f64 = core::f64::consts::FRAC_1_SQRT_2;

/// Relative sign between the two branches of a GHZ state.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub fn factor(self) -> f64 {
        match self {
            Sign::Plus => 1.0,
            Sign::Minus => -1.0,
        }
    }

    pub fn flipped(self) -> Self {
        match self {
            Sign::Plus => Sign::Minus,
            Sign::Minus => Sign::Plus,
        }
    }
}

impl fmt::Display for Sign {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Sign::Plus => write!(f, "+"),
            Sign::Minus => write!(f, "-"),
        }
    }
}

/// Degree of freedom a GHZ label refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum GhzDof {
    Polarization,
    TimeBin,
}

impl GhzDof {
    fn prefix(self) -> char {
        match self {
            GhzDof::Polarization => 'P',
            GhzDof::TimeBin => 'T',
        }
    }
}

/// Fixed-length bit string of up to six bits; bit `i` belongs to photon `i`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct BitString {
    len: u8,
    bits: u8,
}

impl BitString {
    pub fn new(len: u8, bits: u8) -> Result<Self> {
        if len == 0 || len > 6 {
            return Err(Error::Argument("bit string length must be in 1..=6"));
        }
        if bits & !((1u16 << len) as u8).wrapping_sub(1) != 0 {
            return Err(Error::Argument("bit string has bits beyond its length"));
        }
        Ok(BitString { len, bits })
    }

    pub fn zeros(len: u8) -> Result<Self> {
        BitString::new(len, 0)
    }

    pub fn len(&self) -> u8 {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn bit(&self, i: u8) -> u8 {
        (self.bits >> i) & 1
    }

    pub fn with_bit(&self, i: u8, value: u8) -> Self {
        let bits = (self.bits & !(1 << i)) | ((value & 1) << i);
        BitString { len: self.len, bits }
    }

    pub fn leading_bit(&self) -> u8 {
        self.bit(0)
    }

    pub fn complement(&self) -> Self {
        let mask = ((1u16 << self.len) as u8).wrapping_sub(1);
        BitString { len: self.len, bits: !self.bits & mask }
    }

    pub fn xor(&self, other: &Self) -> Result<Self> {
        if self.len != other.len {
            return Err(Error::Argument("bit strings of different length"));
        }
        Ok(BitString { len: self.len, bits: self.bits ^ other.bits })
    }

    pub fn weight(&self) -> u8 {
        self.bits.count_ones() as u8
    }

    /// Value of the displayed string read as a binary number (photon 0 most
    /// significant); this is the ordering used by label enumeration.
    pub fn display_value(&self) -> u8 {
        (0..self.len).fold(0, |acc, i| (acc << 1) | self.bit(i))
    }

    /// Representative used by the published three-photon tables: the
    /// minimum-weight member of `{b, complement(b)}` (ties keep the
    /// canonical leading-0 member). Display only; internal canonical form
    /// stays leading-0.
    pub fn min_weight_rep(&self) -> Self {
        let comp = self.complement();
        if comp.weight() < self.weight() {
            comp
        } else {
            *self
        }
    }
}

impl PartialOrd for BitString {
    fn partial_cmp(&self, other: &Self) -> Option<core::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for BitString {
    fn cmp(&self, other: &Self) -> core::cmp::Ordering {
        (self.len, self.display_value()).cmp(&(other.len, other.display_value()))
    }
}

impl fmt::Display for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.len {
            write!(f, "{}", self.bit(i))?;
        }
        Ok(())
    }
}

impl FromStr for BitString {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let len = s.len();
        if !(1..=6).contains(&len) {
            return Err(Error::Argument("bit string length must be in 1..=6"));
        }
        let mut bits = 0u8;
        for (i, ch) in s.chars().enumerate() {
            match ch {
                '0' => {}
                '1' => bits |= 1 << i,
                _ => return Err(Error::Argument("bit string may contain only 0 and 1")),
            }
        }
        BitString::new(len as u8, bits)
    }
}

/// Canonical name of one single-DOF GHZ state.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct GhzLabel {
    dof: GhzDof,
    sign: Sign,
    bits: BitString,
}

impl GhzLabel {
    /// Builds a label, canonicalizing the bit string; the returned phase is
    /// +1 or -1 depending on whether complementation was needed on a `-`
    /// label.
    pub fn new(dof: GhzDof, sign: Sign, bits: BitString) -> (Self, i8) {
        let (canon_sign, canon_bits, phase) = canonicalize(sign, bits);
        (GhzLabel { dof, sign: canon_sign, bits: canon_bits }, phase)
    }

    /// Builds a label that must already be canonical (leading bit 0).
    pub fn canonical(dof: GhzDof, sign: Sign, bits: BitString) -> Result<Self> {
        if bits.leading_bit() != 0 {
            return Err(Error::Argument("label bit string must have a leading 0"));
        }
        Ok(GhzLabel { dof, sign, bits })
    }

    pub fn dof(&self) -> GhzDof {
        self.dof
    }

    pub fn sign(&self) -> Sign {
        self.sign
    }

    pub fn bits(&self) -> BitString {
        self.bits
    }

    pub fn photon_count(&self) -> u8 {
        self.bits.len()
    }

    /// `sign` + `bits` without the DOF prefix, e.g. `+001`.
    pub fn sign_bits(&self) -> String {
        alloc::format!("{}{}", self.sign, self.bits)
    }

    /// Display form used by the published three-photon tables (minimum
    /// weight representative), e.g. internal `+011` renders as `+100`.
    pub fn paper_sign_bits(&self) -> String {
        alloc::format!("{}{}", self.sign, self.bits.min_weight_rep())
    }
}

impl fmt::Display for GhzLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}{}", self.dof.prefix(), self.sign, self.bits)
    }
}

/// Name of one two-DOF hyperentangled GHZ state: a polarization label and a
/// time-bin label over the same photons.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct HyperLabel {
    pub pol: GhzLabel,
    pub time: GhzLabel,
}

impl HyperLabel {
    pub fn new(pol: GhzLabel, time: GhzLabel) -> Result<Self> {
        if pol.dof() != GhzDof::Polarization || time.dof() != GhzDof::TimeBin {
            return Err(Error::Argument("hyper label needs one polarization and one time-bin factor"));
        }
        if pol.photon_count() != time.photon_count() {
            return Err(Error::Argument("hyper label factors disagree on photon count"));
        }
        Ok(HyperLabel { pol, time })
    }

    pub fn photon_count(&self) -> u8 {
        self.pol.photon_count()
    }

    /// Paper-style display `P+001,T-100` using minimum-weight representatives.
    pub fn paper_string(&self) -> String {
        alloc::format!("P{},T{}", self.pol.paper_sign_bits(), self.time.paper_sign_bits())
    }
}

impl fmt::Display for HyperLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{},{}", self.pol, self.time)
    }
}

/// Error produced when a label string does not match the grammar
/// `P<sign><bits>,T<sign><bits>` with a mandatory leading 0 bit.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelParseError {
    /// Byte offset of the offending character.
    pub position: usize,
    pub message: &'static str,
}

impl fmt::Display for LabelParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "label parse error at column {}: {}", self.position + 1, self.message)
    }
}

impl core::error::Error for LabelParseError {}

fn parse_factor(
    s: &str,
    offset: usize,
    prefix: char,
    dof: GhzDof,
) -> core::result::Result<(GhzLabel, usize), LabelParseError> {
    let bytes = s.as_bytes();
    let mut pos = 0;
    if bytes.get(pos) != Some(&(prefix as u8)) {
        return Err(LabelParseError { position: offset + pos, message: "expected DOF prefix" });
    }
    pos += 1;
    let sign = match bytes.get(pos) {
        Some(b'+') => Sign::Plus,
        Some(b'-') => Sign::Minus,
        _ => return Err(LabelParseError { position: offset + pos, message: "expected + or -" }),
    };
    pos += 1;
    let start = pos;
    while pos < bytes.len() && (bytes[pos] == b'0' || bytes[pos] == b'1') {
        pos += 1;
    }
    let n = pos - start;
    if !(2..=6).contains(&n) {
        return Err(LabelParseError {
            position: offset + start,
            message: "expected 2 to 6 binary digits",
        });
    }
    if bytes[start] != b'0' {
        return Err(LabelParseError {
            position: offset + start,
            message: "non-canonical label: leading bit must be 0",
        });
    }
    let bits: BitString = s[start..pos].parse().expect("digits validated above");
    let label = GhzLabel::canonical(dof, sign, bits).expect("leading bit validated above");
    Ok((label, pos))
}

impl FromStr for HyperLabel {
    type Err = LabelParseError;

    fn from_str(s: &str) -> core::result::Result<Self, LabelParseError> {
        let (pol, used) = parse_factor(s, 0, 'P', GhzDof::Polarization)?;
        let rest = &s[used..];
        if !rest.starts_with(',') {
            return Err(LabelParseError { position: used, message: "expected ',' then the time factor" });
        }
        let (time, used2) = parse_factor(&rest[1..], used + 1, 'T', GhzDof::TimeBin)?;
        if used + 1 + used2 != s.len() {
            return Err(LabelParseError {
                position: used + 1 + used2,
                message: "trailing characters after label",
            });
        }
        if pol.photon_count() != time.photon_count() {
            return Err(LabelParseError {
                position: used + 2,
                message: "polarization and time factors disagree on photon count",
            });
        }
        Ok(HyperLabel { pol, time })
    }
}

/// Canonicalizes a `(sign, bits)` pair. A leading 0 is already canonical
/// (phase +1); otherwise the complement is returned with the same sign, and
/// the global phase is +1 for `+` labels and -1 for `-` labels, because
/// `(|b_bar> - |b>)/sqrt(2) = -(|b> - |b_bar>)/sqrt(2)`.
pub fn canonicalize(sign: Sign, bits: BitString) -> (Sign, BitString, i8) {
    if bits.leading_bit() == 0 {
        (sign, bits, 1)
    } else {
        let phase = match sign {
            Sign::Plus => 1,
            Sign::Minus => -1,
        };
        (sign, bits.complement(), phase)
    }
}

fn branch_basis(label: &GhzLabel, bits: &BitString) -> BasisState {
    let mut basis = BasisState::VACUUM;
    for i in 0..bits.len() {
        let photon = PhotonId(i);
        basis = match label.dof() {
            GhzDof::Polarization => basis.with_pol(photon, Polarization::from_bit(bits.bit(i))),
            GhzDof::TimeBin => basis.with_slot(photon, bits.bit(i)),
        };
    }
    basis
}

/// Subsystems covered by one GHZ factor: the label's DOF on every photon.
pub fn ghz_coverage(label: &GhzLabel) -> SubsystemSet {
    SubsystemSet::from_iter((0..label.photon_count()).map(|i| match label.dof() {
        GhzDof::Polarization => SubsystemId::Pol(PhotonId(i)),
        GhzDof::TimeBin => SubsystemId::TimeBin(PhotonId(i)),
    }))
}

/// Builds the GHZ state `(|b> + sign*|b_bar>)/sqrt(2)` in the label's DOF.
/// The returned state covers only that DOF; path and the other DOF are
/// attached by [`make_hyper`] or by explicit tensor products.
pub fn make_ghz(label: &GhzLabel, spec: &ModeSpec) -> Result<StateVector> {
    if label.photon_count() != spec.photon_count() {
        return Err(Error::Argument("label length does not match the photon count"));
    }
    let bits = label.bits();
    let comp = bits.complement();
    StateVector::from_terms(
        *spec,
        ghz_coverage(label),
        [
            (branch_basis(label, &bits), Complex64::new(FRAC_1_SQRT_2, 0.0)),
            (branch_basis(label, &comp), Complex64::new(label.sign().factor() * FRAC_1_SQRT_2, 0.0)),
        ],
    )
}

/// Product state placing every photon on the first path rail.
pub fn default_paths(spec: &ModeSpec) -> Result<StateVector> {
    let covered = SubsystemSet::from_iter(spec.photons().map(SubsystemId::Path));
    StateVector::basis(*spec, covered, BasisState::VACUUM)
}

/// Product state of all atoms in level 0.
pub fn atoms_ground(spec: &ModeSpec) -> Result<StateVector> {
    StateVector::basis(*spec, spec.atom_coverage(), BasisState::VACUUM)
}

/// Builds the full hyperentangled input: polarization GHZ factor, time-bin
/// GHZ factor, and all photons on the first path rail.
pub fn make_hyper(label: &HyperLabel, spec: &ModeSpec) -> Result<StateVector> {
    let pol = make_ghz(&label.pol, spec)?;
    let time = make_ghz(&label.time, spec)?;
    pol.tensor(&time)?.tensor(&default_paths(spec)?)
}

/// All single-DOF labels for `n` photons in enumeration order: sign major
/// (`+` first), then bit strings ascending.
pub fn enumerate_ghz_labels(dof: GhzDof, n: u8) -> Result<Vec<GhzLabel>> {
    if !(2..=6).contains(&n) {
        return Err(Error::Argument("photon count must be in 2..=6"));
    }
    let mut labels = Vec::with_capacity(1 << n);
    for sign in [Sign::Plus, Sign::Minus] {
        for value in 0..(1u8 << (n - 1)) {
            // `value` is the displayed string read as a number; the leading
            // (photon-0) bit stays 0.
            let mut bits = BitString::zeros(n)?;
            for i in 1..n {
                bits = bits.with_bit(i, (value >> (n - 1 - i)) & 1);
            }
            labels.push(GhzLabel::canonical(dof, sign, bits)?);
        }
    }
    Ok(labels)
}

/// All `4^n` hyperentangled labels, polarization major, time minor.
pub fn enumerate_labels(n: u8) -> Result<Vec<HyperLabel>> {
    let pols = enumerate_ghz_labels(GhzDof::Polarization, n)?;
    let times = enumerate_ghz_labels(GhzDof::TimeBin, n)?;
    let mut labels = Vec::with_capacity(pols.len() * times.len());
    for pol in &pols {
        for time in &times {
            labels.push(HyperLabel { pol: *pol, time: *time });
        }
    }
    Ok(labels)
}
