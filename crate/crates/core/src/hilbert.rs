//! Composite-system state algebra.
//!
//! A simulated system is a register of *subsystems*: per photon a
//! polarization qubit, a time-slot lattice site, and a path rail, plus a
//! two-level qubit per cavity atom. [`ModeSpec`] fixes the geometry,
//! [`BasisState`] encodes one computational-basis configuration, and
//! [`StateVector`] holds a sparse map from basis states to complex
//! amplitudes.
//!
//! States may cover only part of the register (for example a bare
//! polarization GHZ factor before the time-bin factor is attached); the
//! covered subsystem set is tracked explicitly so that tensor products can
//! reject overlapping factors.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;
use core::fmt;

use rand_core::RngCore;

use crate::{Complex64, Error, Result, NORM_TOL, PRUNE_TOL};

/// Maximum photons supported by the packed basis encoding.
pub const MAX_PHOTONS: u8 = 6;
/// Maximum time slots (two bits in the packed encoding).
pub const MAX_SLOTS: u8 = 4;
/// Maximum paths per photon.
pub const MAX_PATHS: u8 = 2;
/// Maximum cavity atoms.
pub const MAX_ATOMS: u8 = 6;

/// Horizontal / vertical polarization of a photon.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Polarization {
    H,
    V,
}

impl Polarization {
    pub fn flipped(self) -> Self {
        match self {
            Polarization::H => Polarization::V,
            Polarization::V => Polarization::H,
        }
    }

    pub fn bit(self) -> u8 {
        match self {
            Polarization::H => 0,
            Polarization::V => 1,
        }
    }

    pub fn from_bit(bit: u8) -> Self {
        if bit & 1 == 0 {
            Polarization::H
        } else {
            Polarization::V
        }
    }
}

impl fmt::Display for Polarization {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Polarization::H => write!(f, "H"),
            Polarization::V => write!(f, "V"),
        }
    }
}

/// Index of a photon; displayed as the letters A, B, C, ...
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PhotonId(pub u8);

impl fmt::Display for PhotonId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", (b'A' + self.0) as char)
    }
}

/// Index of a cavity atom; displayed 1-based to match the circuit diagrams.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct AtomId(pub u8);

impl fmt::Display for AtomId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "atom{}", self.0 + 1)
    }
}

/// Structured identifier of one subsystem: a photon degree of freedom or an
/// atom qubit. Structured identifiers (rather than flat integers) keep
/// circuit generation for variable photon counts free of binding mistakes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum SubsystemId {
    Pol(PhotonId),
    TimeBin(PhotonId),
    Path(PhotonId),
    Atom(AtomId),
}

impl SubsystemId {
    /// Dense index used by [`SubsystemSet`]; photons first, atoms after.
    fn index(self) -> u32 {
        match self {
            SubsystemId::Pol(p) => 3 * p.0 as u32,
            SubsystemId::TimeBin(p) => 3 * p.0 as u32 + 1,
            SubsystemId::Path(p) => 3 * p.0 as u32 + 2,
            SubsystemId::Atom(a) => 18 + a.0 as u32,
        }
    }

    fn from_index(i: u32) -> Self {
        if i < 18 {
            let p = PhotonId((i / 3) as u8);
            match i % 3 {
                0 => SubsystemId::Pol(p),
                1 => SubsystemId::TimeBin(p),
                _ => SubsystemId::Path(p),
            }
        } else {
            SubsystemId::Atom(AtomId((i - 18) as u8))
        }
    }

    /// Bit mask of this subsystem inside the packed [`BasisState`].
    fn bits(self) -> u32 {
        match self {
            SubsystemId::Pol(p) => 1 << (4 * p.0),
            SubsystemId::TimeBin(p) => 0b11 << (4 * p.0 + 1),
            SubsystemId::Path(p) => 1 << (4 * p.0 + 3),
            SubsystemId::Atom(a) => 1 << (24 + a.0),
        }
    }

    fn shift(self) -> u32 {
        match self {
            SubsystemId::Pol(p) => 4 * p.0 as u32,
            SubsystemId::TimeBin(p) => 4 * p.0 as u32 + 1,
            SubsystemId::Path(p) => 4 * p.0 as u32 + 3,
            SubsystemId::Atom(a) => 24 + a.0 as u32,
        }
    }

    /// Number of distinct values this subsystem can take under `spec`.
    pub fn cardinality(self, spec: &ModeSpec) -> u8 {
        match self {
            SubsystemId::Pol(_) | SubsystemId::Atom(_) => 2,
            SubsystemId::TimeBin(_) => spec.time_slots(),
            SubsystemId::Path(_) => spec.paths_per_photon(),
        }
    }

    /// Whether the identifier exists at all under `spec`.
    pub fn in_spec(self, spec: &ModeSpec) -> bool {
        match self {
            SubsystemId::Pol(p) | SubsystemId::TimeBin(p) | SubsystemId::Path(p) => {
                p.0 < spec.photon_count()
            }
            SubsystemId::Atom(a) => a.0 < spec.atom_count(),
        }
    }
}

impl fmt::Display for SubsystemId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SubsystemId::Pol(p) => write!(f, "pol({p})"),
            SubsystemId::TimeBin(p) => write!(f, "timebin({p})"),
            SubsystemId::Path(p) => write!(f, "path({p})"),
            SubsystemId::Atom(a) => write!(f, "{a}"),
        }
    }
}

/// Set of subsystems, stored as a bitmask over dense subsystem indices.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Default, Hash)]
pub struct SubsystemSet(u32);

impl SubsystemSet {
    pub const EMPTY: SubsystemSet = SubsystemSet(0);

    pub fn single(id: SubsystemId) -> Self {
        SubsystemSet(1 << id.index())
    }

    pub fn insert(&mut self, id: SubsystemId) {
        self.0 |= 1 << id.index();
    }

    pub fn contains(self, id: SubsystemId) -> bool {
        self.0 & (1 << id.index()) != 0
    }

    pub fn union(self, other: Self) -> Self {
        SubsystemSet(self.0 | other.0)
    }

    pub fn intersects(self, other: Self) -> bool {
        self.0 & other.0 != 0
    }

    pub fn is_subset_of(self, other: Self) -> bool {
        self.0 & !other.0 == 0
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    /// Iterates members in dense-index order (photon-major, atoms last).
    pub fn iter(self) -> impl Iterator<Item = SubsystemId> {
        (0..32u32).filter(move |i| self.0 & (1 << i) != 0).map(SubsystemId::from_index)
    }

    /// First member shared with `other`, if any.
    fn common(self, other: Self) -> Option<SubsystemId> {
        let overlap = self.0 & other.0;
        if overlap == 0 {
            None
        } else {
            Some(SubsystemId::from_index(overlap.trailing_zeros()))
        }
    }

    /// Packed-basis mask of all member subsystems.
    fn bits(self) -> u32 {
        self.iter().map(SubsystemId::bits).fold(0, |acc, b| acc | b)
    }

    pub fn remove_all(&mut self, other: Self) {
        self.0 &= !other.0;
    }
}

impl FromIterator<SubsystemId> for SubsystemSet {
    fn from_iter<I: IntoIterator<Item = SubsystemId>>(ids: I) -> Self {
        let mut set = SubsystemSet::EMPTY;
        for id in ids {
            set.insert(id);
        }
        set
    }
}

/// Geometry of the simulated register: photon count, time-lattice size,
/// number of path rails per photon, and number of cavity atoms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ModeSpec {
    photon_count: u8,
    time_slots: u8,
    paths_per_photon: u8,
    atom_count: u8,
}

impl ModeSpec {
    /// Validates the supported range: `1 <= N <= 6`, `2 <= T <= 4`,
    /// `1 <= P <= 2`, `M <= 6`. Within that range the total dimension
    /// `(2*T*P)^N * 2^M` always fits in a `u64`.
    pub fn new(photons: u8, time_slots: u8, paths: u8, atoms: u8) -> Result<Self> {
        if photons == 0 || photons > MAX_PHOTONS {
            return Err(Error::InvalidSpec("photon count must be in 1..=6"));
        }
        if !(2..=MAX_SLOTS).contains(&time_slots) {
            return Err(Error::InvalidSpec("time slots must be in 2..=4"));
        }
        if paths == 0 || paths > MAX_PATHS {
            return Err(Error::InvalidSpec("paths per photon must be 1 or 2"));
        }
        if atoms > MAX_ATOMS {
            return Err(Error::InvalidSpec("atom count must be at most 6"));
        }
        Ok(ModeSpec { photon_count: photons, time_slots, paths_per_photon: paths, atom_count: atoms })
    }

    /// Default lattice for the analyzer: `T = 4` slots and two path rails,
    /// leaving headroom for delays during transduction.
    pub fn protocol(photons: u8, atoms: u8) -> Result<Self> {
        ModeSpec::new(photons, MAX_SLOTS, MAX_PATHS, atoms)
    }

    pub fn photon_count(&self) -> u8 {
        self.photon_count
    }

    pub fn time_slots(&self) -> u8 {
        self.time_slots
    }

    pub fn paths_per_photon(&self) -> u8 {
        self.paths_per_photon
    }

    pub fn atom_count(&self) -> u8 {
        self.atom_count
    }

    pub fn photons(&self) -> impl Iterator<Item = PhotonId> {
        (0..self.photon_count).map(PhotonId)
    }

    pub fn atoms(&self) -> impl Iterator<Item = AtomId> {
        (0..self.atom_count).map(AtomId)
    }

    /// Total basis dimension `(2*T*P)^N * 2^M`.
    pub fn dimension(&self) -> u64 {
        let per_photon = 2 * self.time_slots as u64 * self.paths_per_photon as u64;
        per_photon.pow(self.photon_count as u32) * (1u64 << self.atom_count)
    }

    /// All photon subsystems plus all atoms.
    pub fn full_coverage(&self) -> SubsystemSet {
        self.photonic_coverage().union(self.atom_coverage())
    }

    /// Pol, time-bin, and path of every photon.
    pub fn photonic_coverage(&self) -> SubsystemSet {
        SubsystemSet::from_iter(self.photons().flat_map(|p| {
            [SubsystemId::Pol(p), SubsystemId::TimeBin(p), SubsystemId::Path(p)]
        }))
    }

    pub fn atom_coverage(&self) -> SubsystemSet {
        SubsystemSet::from_iter(self.atoms().map(SubsystemId::Atom))
    }
}

/// One computational-basis configuration, packed into a `u32`.
///
/// Photon `i` occupies bits `4i..4i+4` (polarization, two slot bits, path);
/// atom `j` occupies bit `24+j`. Subsystems a state does not cover are kept
/// at zero so packed equality equals field-wise equality.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct BasisState(u32);

impl BasisState {
    pub const VACUUM: BasisState = BasisState(0);

    pub fn value(self, id: SubsystemId) -> u8 {
        ((self.0 & id.bits()) >> id.shift()) as u8
    }

    pub fn with_value(self, id: SubsystemId, value: u8) -> Self {
        BasisState((self.0 & !id.bits()) | ((value as u32) << id.shift()))
    }

    pub fn pol(self, photon: PhotonId) -> Polarization {
        Polarization::from_bit(self.value(SubsystemId::Pol(photon)))
    }

    pub fn slot(self, photon: PhotonId) -> u8 {
        self.value(SubsystemId::TimeBin(photon))
    }

    pub fn path(self, photon: PhotonId) -> u8 {
        self.value(SubsystemId::Path(photon))
    }

    pub fn atom(self, atom: AtomId) -> u8 {
        self.value(SubsystemId::Atom(atom))
    }

    pub fn with_pol(self, photon: PhotonId, pol: Polarization) -> Self {
        self.with_value(SubsystemId::Pol(photon), pol.bit())
    }

    pub fn with_slot(self, photon: PhotonId, slot: u8) -> Self {
        self.with_value(SubsystemId::TimeBin(photon), slot)
    }

    pub fn with_path(self, photon: PhotonId, path: u8) -> Self {
        self.with_value(SubsystemId::Path(photon), path)
    }

    pub fn with_atom(self, atom: AtomId, level: u8) -> Self {
        self.with_value(SubsystemId::Atom(atom), level)
    }

    fn masked(self, mask: u32) -> u32 {
        self.0 & mask
    }

    fn cleared(self, mask: u32) -> Self {
        BasisState(self.0 & !mask)
    }

    /// Checks every covered value against the spec's ranges.
    fn validate(self, spec: &ModeSpec, covered: SubsystemSet) -> Result<()> {
        for id in covered.iter() {
            if !id.in_spec(spec) {
                return Err(Error::UnboundSubsystem(id));
            }
            let v = self.value(id);
            if v >= id.cardinality(spec) {
                return Err(Error::ValueOutOfRange { subsystem: id, value: v });
            }
        }
        if self.masked(!covered.bits()) != 0 {
            return Err(Error::Argument("basis state sets bits outside its coverage"));
        }
        Ok(())
    }
}

/// Measurement basis selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MeasBasis {
    /// Native basis of each subsystem (H/V, slot index, path index, 0/1).
    Computational,
    /// The `|+> = (|0>+|1>)/sqrt(2)`, `|->` basis; atoms only.
    PmAtom,
}

/// Observed classical value of one measured subsystem.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Reading {
    Pol(Polarization),
    Slot(u8),
    Path(u8),
    AtomLevel(u8),
    /// Atom read out in the +/- basis; `true` means `|+>`.
    AtomPlus(bool),
}

impl fmt::Display for Reading {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Reading::Pol(p) => write!(f, "{p}"),
            Reading::Slot(s) => write!(f, "slot{s}"),
            Reading::Path(x) => write!(f, "x{}", x + 1),
            Reading::AtomLevel(l) => write!(f, "{l}"),
            Reading::AtomPlus(true) => write!(f, "+"),
            Reading::AtomPlus(false) => write!(f, "-"),
        }
    }
}

/// Result of one projective measurement: what was measured, what was seen,
/// and the Born weight of the observed projector on the pre-measurement
/// state.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub readings: Vec<(SubsystemId, Reading)>,
    pub probability: f64,
}

impl Outcome {
    pub fn reading(&self, id: SubsystemId) -> Option<Reading> {
        self.readings.iter().find(|(s, _)| *s == id).map(|(_, r)| *r)
    }
}

/// Sparse state vector over a covered subset of the register.
///
/// Values are immutable after construction; every operation returns a new
/// state. The stored amplitudes always satisfy `sum |amp|^2 = 1` within
/// [`NORM_TOL`] and contain no entry smaller in magnitude than [`PRUNE_TOL`].
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    spec: ModeSpec,
    covered: SubsystemSet,
    amps: BTreeMap<BasisState, Complex64>,
}

impl StateVector {
    /// Unit ket on the given basis configuration.
    pub fn basis(spec: ModeSpec, covered: SubsystemSet, state: BasisState) -> Result<Self> {
        state.validate(&spec, covered)?;
        let mut amps = BTreeMap::new();
        amps.insert(state, Complex64::new(1.0, 0.0));
        Ok(StateVector { spec, covered, amps })
    }

    /// Builds a state from explicit terms; duplicate basis states are summed.
    /// Fails if the resulting norm is not 1 within [`NORM_TOL`].
    pub fn from_terms(
        spec: ModeSpec,
        covered: SubsystemSet,
        terms: impl IntoIterator<Item = (BasisState, Complex64)>,
    ) -> Result<Self> {
        let state = Self::accumulate(spec, covered, terms)?;
        state.check_norm()?;
        Ok(state)
    }

    /// Like [`StateVector::from_terms`] but rescales to unit norm, so callers
    /// can pass unnormalized superpositions.
    pub fn normalized_from_terms(
        spec: ModeSpec,
        covered: SubsystemSet,
        terms: impl IntoIterator<Item = (BasisState, Complex64)>,
    ) -> Result<Self> {
        let mut state = Self::accumulate(spec, covered, terms)?;
        let norm_sqr = state.norm_sqr();
        if norm_sqr < PRUNE_TOL * PRUNE_TOL {
            return Err(Error::ZeroNorm);
        }
        let inv = 1.0 / libm::sqrt(norm_sqr);
        for amp in state.amps.values_mut() {
            *amp *= inv;
        }
        Ok(state)
    }

    fn accumulate(
        spec: ModeSpec,
        covered: SubsystemSet,
        terms: impl IntoIterator<Item = (BasisState, Complex64)>,
    ) -> Result<Self> {
        let mut amps: BTreeMap<BasisState, Complex64> = BTreeMap::new();
        for (basis, amp) in terms {
            basis.validate(&spec, covered)?;
            *amps.entry(basis).or_insert(Complex64::new(0.0, 0.0)) += amp;
        }
        amps.retain(|_, a| a.norm_sqr() >= PRUNE_TOL * PRUNE_TOL);
        if amps.is_empty() {
            return Err(Error::ZeroNorm);
        }
        Ok(StateVector { spec, covered, amps })
    }

    /// Normalized linear combination `sum_k c_k |psi_k>` of states over the
    /// same register.
    pub fn superpose(parts: &[(Complex64, &StateVector)]) -> Result<Self> {
        let (_, first) = parts.first().ok_or(Error::Argument("empty superposition"))?;
        let mut amps: BTreeMap<BasisState, Complex64> = BTreeMap::new();
        for (coeff, state) in parts {
            if state.spec != first.spec {
                return Err(Error::SpecMismatch);
            }
            if state.covered != first.covered {
                return Err(Error::CoverageMismatch);
            }
            for (basis, amp) in &state.amps {
                *amps.entry(*basis).or_insert(Complex64::new(0.0, 0.0)) += coeff * amp;
            }
        }
        Self::normalized_from_terms(first.spec, first.covered, amps)
    }

    pub fn spec(&self) -> &ModeSpec {
        &self.spec
    }

    pub fn covered(&self) -> SubsystemSet {
        self.covered
    }

    pub fn len(&self) -> usize {
        self.amps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.amps.is_empty()
    }

    /// Amplitude of one basis state (zero when absent).
    pub fn amplitude(&self, basis: BasisState) -> Complex64 {
        self.amps.get(&basis).copied().unwrap_or(Complex64::new(0.0, 0.0))
    }

    /// Iterates stored `(basis, amplitude)` pairs in basis order.
    pub fn terms(&self) -> impl Iterator<Item = (BasisState, Complex64)> + '_ {
        self.amps.iter().map(|(b, a)| (*b, *a))
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.values().map(|a| a.norm_sqr()).sum()
    }

    fn check_norm(&self) -> Result<()> {
        let norm_sqr = self.norm_sqr();
        if (norm_sqr - 1.0).abs() > NORM_TOL {
            return Err(Error::NormViolation { norm_sqr });
        }
        Ok(())
    }

    /// Tensor product of two states over disjoint subsystem sets of the same
    /// register.
    pub fn tensor(&self, other: &StateVector) -> Result<StateVector> {
        if self.spec != other.spec {
            return Err(Error::SpecMismatch);
        }
        if let Some(shared) = self.covered.common(other.covered) {
            return Err(Error::OverlappingSubsystems(shared));
        }
        let mut amps = BTreeMap::new();
        for (ba, aa) in &self.amps {
            for (bb, ab) in &other.amps {
                amps.insert(BasisState(ba.0 | bb.0), aa * ab);
            }
        }
        let state = StateVector { spec: self.spec, covered: self.covered.union(other.covered), amps };
        state.check_norm()?;
        Ok(state)
    }

    /// Squared overlap `|<a|b>|^2`; invariant under global phases of either
    /// argument. This is the canonical state-equality test.
    pub fn fidelity(&self, other: &StateVector) -> Result<f64> {
        Ok(self.inner(other)?.norm_sqr())
    }

    /// Inner product `<self|other>`.
    pub fn inner(&self, other: &StateVector) -> Result<Complex64> {
        if self.spec != other.spec {
            return Err(Error::SpecMismatch);
        }
        if self.covered != other.covered {
            return Err(Error::CoverageMismatch);
        }
        let mut acc = Complex64::new(0.0, 0.0);
        for (basis, amp) in &self.amps {
            if let Some(b) = other.amps.get(basis) {
                acc += amp.conj() * b;
            }
        }
        Ok(acc)
    }

    /// Applies a linear basis map: `f` sends each basis state to a short list
    /// of `(basis, coefficient)` terms. The map must be an isometry on the
    /// populated subspace; the output norm is re-checked.
    pub fn apply_basis_map<F>(&self, f: F) -> Result<StateVector>
    where
        F: Fn(BasisState) -> Result<TermList>,
    {
        // Batch into a vector and merge once; cheaper than per-term map
        // insertion on the states this simulator produces.
        let mut out: Vec<(BasisState, Complex64)> = Vec::with_capacity(self.amps.len() * 2);
        for (basis, amp) in &self.amps {
            let terms = f(*basis)?;
            for (target, coeff) in terms.iter() {
                out.push((target, amp * coeff));
            }
        }
        if !out.is_sorted_by_key(|(b, _)| *b) {
            out.sort_unstable_by_key(|(b, _)| *b);
        }
        let mut merged: Vec<(BasisState, Complex64)> = Vec::with_capacity(out.len());
        for (basis, amp) in out {
            match merged.last_mut() {
                Some((prev, acc)) if *prev == basis => *acc += amp,
                _ => merged.push((basis, amp)),
            }
        }
        merged.retain(|(_, a)| a.norm_sqr() >= PRUNE_TOL * PRUNE_TOL);
        let state =
            StateVector { spec: self.spec, covered: self.covered, amps: merged.into_iter().collect() };
        state.check_norm()?;
        Ok(state)
    }

    /// Probability distribution over the joint values of `subsystems`,
    /// keyed by the value tuple in subsystem-list order.
    pub fn marginal(&self, subsystems: &[SubsystemId]) -> Result<BTreeMap<Vec<u8>, f64>> {
        for id in subsystems {
            if !self.covered.contains(*id) {
                return Err(Error::UnboundSubsystem(*id));
            }
        }
        let mut dist: BTreeMap<Vec<u8>, f64> = BTreeMap::new();
        for (basis, amp) in &self.amps {
            let key: Vec<u8> = subsystems.iter().map(|id| basis.value(*id)).collect();
            *dist.entry(key).or_insert(0.0) += amp.norm_sqr();
        }
        Ok(dist)
    }

    /// The single value taken by `id` across all amplitudes, if definite.
    pub fn definite_value(&self, id: SubsystemId) -> Result<Option<u8>> {
        if !self.covered.contains(id) {
            return Err(Error::UnboundSubsystem(id));
        }
        let mut iter = self.amps.keys().map(|b| b.value(id));
        let first = iter.next().ok_or(Error::ZeroNorm)?;
        Ok(iter.all(|v| v == first).then_some(first))
    }

    /// Projective measurement of `subsystems` in the chosen basis, sampled by
    /// the Born rule from `rng`. Returns the outcome and the renormalized
    /// post-measurement state with the measured subsystems removed (their
    /// factor is a definite classical value after collapse).
    pub fn measure<R: RngCore>(
        &self,
        subsystems: &[SubsystemId],
        basis: MeasBasis,
        rng: &mut R,
    ) -> Result<(Outcome, StateVector)> {
        if subsystems.is_empty() {
            return Err(Error::Argument("measurement needs at least one subsystem"));
        }
        let mut seen = SubsystemSet::EMPTY;
        for id in subsystems {
            if !self.covered.contains(*id) {
                return Err(Error::UnboundSubsystem(*id));
            }
            if seen.contains(*id) {
                return Err(Error::DuplicateSubsystem(*id));
            }
            seen.insert(*id);
            if basis == MeasBasis::PmAtom && !matches!(id, SubsystemId::Atom(_)) {
                return Err(Error::Argument("the +/- basis applies to atoms only"));
            }
        }

        // +/- readout = Hadamard rotation on each atom, then a computational
        // measurement: H|+> = |0>, H|-> = |1>.
        let rotated;
        let state = if basis == MeasBasis::PmAtom {
            let mut current = self.clone();
            for id in subsystems {
                current = current.apply_basis_map(|b| {
                    Ok(hadamard_terms(b, *id))
                })?;
            }
            rotated = current;
            &rotated
        } else {
            self
        };

        let mask = seen.bits();
        let mut weights: BTreeMap<u32, f64> = BTreeMap::new();
        for (b, amp) in &state.amps {
            *weights.entry(b.masked(mask)).or_insert(0.0) += amp.norm_sqr();
        }
        let total: f64 = weights.values().sum();
        let draw = unit_f64(rng) * total;
        let mut acc = 0.0;
        let mut chosen = None;
        for (key, w) in &weights {
            acc += w;
            if draw < acc {
                chosen = Some((*key, *w));
                break;
            }
        }
        // Guard against accumulated rounding at draw ~ total.
        let (key, weight) =
            chosen.or_else(|| weights.iter().next_back().map(|(k, w)| (*k, *w))).ok_or(Error::ZeroNorm)?;
        let probability = weight / total;

        let inv = 1.0 / libm::sqrt(weight);
        let mut amps = BTreeMap::new();
        for (b, amp) in &state.amps {
            if b.masked(mask) == key {
                amps.insert(b.cleared(mask), amp * inv);
            }
        }
        let mut covered = state.covered;
        covered.remove_all(seen);
        let post = StateVector { spec: state.spec, covered, amps };
        post.check_norm()?;

        let observed = BasisState(key);
        let readings = subsystems
            .iter()
            .map(|id| {
                let v = observed.value(*id);
                let reading = match (basis, id) {
                    (MeasBasis::PmAtom, _) => Reading::AtomPlus(v == 0),
                    (_, SubsystemId::Pol(_)) => Reading::Pol(Polarization::from_bit(v)),
                    (_, SubsystemId::TimeBin(_)) => Reading::Slot(v),
                    (_, SubsystemId::Path(_)) => Reading::Path(v),
                    (_, SubsystemId::Atom(_)) => Reading::AtomLevel(v),
                };
                (*id, reading)
            })
            .collect();
        Ok((Outcome { readings, probability }, post))
    }

    /// Convenience wrapper over [`StateVector::measure`] with a fresh seeded
    /// generator; identical seeds produce identical outcomes.
    pub fn measure_seeded(
        &self,
        subsystems: &[SubsystemId],
        basis: MeasBasis,
        seed: u64,
    ) -> Result<(Outcome, StateVector)> {
        let mut rng = crate::rng::seeded(seed);
        self.measure(subsystems, basis, &mut rng)
    }

    /// Uniformly random complex amplitudes over the full covered register,
    /// normalized. Intended for property tests and commutation checks.
    pub fn random<R: RngCore>(spec: ModeSpec, covered: SubsystemSet, rng: &mut R) -> Result<Self> {
        let basis = enumerate_basis(&spec, covered);
        let terms: Vec<(BasisState, Complex64)> = basis
            .into_iter()
            .map(|b| {
                let re = 2.0 * unit_f64(rng) - 1.0;
                let im = 2.0 * unit_f64(rng) - 1.0;
                (b, Complex64::new(re, im))
            })
            .collect();
        Self::normalized_from_terms(spec, covered, terms)
    }
}

/// Hadamard image of `basis` on a two-valued subsystem, used for atom
/// +/- readout rotation.
fn hadamard_terms(basis: BasisState, id: SubsystemId) -> TermList {
    const FRAC: f64 = core::f64::consts::FRAC_1_SQRT_2;
    let v = basis.value(id);
    let zero = basis.with_value(id, 0);
    let one = basis.with_value(id, 1);
    if v == 0 {
        TermList::two((zero, Complex64::new(FRAC, 0.0)), (one, Complex64::new(FRAC, 0.0)))
    } else {
        TermList::two((zero, Complex64::new(FRAC, 0.0)), (one, Complex64::new(-FRAC, 0.0)))
    }
}

/// All basis states of a covered register, in packed order.
pub fn enumerate_basis(spec: &ModeSpec, covered: SubsystemSet) -> Vec<BasisState> {
    let mut states = alloc::vec![BasisState::VACUUM];
    for id in covered.iter() {
        let card = id.cardinality(spec);
        let mut next = Vec::with_capacity(states.len() * card as usize);
        for s in &states {
            for v in 0..card {
                next.push(s.with_value(id, v));
            }
        }
        states = next;
    }
    states.sort_unstable();
    states
}

/// Short list of output terms produced by one basis state under an element
/// (at most two for every element in this crate).
#[derive(Debug, Clone, Copy)]
pub struct TermList {
    items: [(BasisState, Complex64); 2],
    len: u8,
}

impl TermList {
    pub fn one(basis: BasisState, coeff: Complex64) -> Self {
        TermList { items: [(basis, coeff), (BasisState::VACUUM, Complex64::new(0.0, 0.0))], len: 1 }
    }

    pub fn two(a: (BasisState, Complex64), b: (BasisState, Complex64)) -> Self {
        TermList { items: [a, b], len: 2 }
    }

    pub fn iter(&self) -> impl Iterator<Item = (BasisState, Complex64)> + '_ {
        self.items.iter().take(self.len as usize).copied()
    }
}

/// Uniform f64 in [0, 1) with 53 random bits.
pub(crate) fn unit_f64<R: RngCore>(rng: &mut R) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / 9007199254740992.0)
}
