//! Coding actions over traffic types: direct transmissions, XOR chains
//! around user cycles, the one-slot triple XOR, and free-form linear plans.
//!
//! An action carries a frame length, a clearance vector (packets of each
//! traffic type it delivers), and a concrete plan: one broadcast message
//! per downlink slot, each message the XOR of a set of packet references.
//! Executing an action is bit-exact; decodability is certified by Gaussian
//! elimination over GF(2).

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use rand::RngCore;
use thiserror::Error;

use crate::cycles::enumerate_cycles;
use crate::gf2::{BitVec, SpanBasis};
use crate::graph::{DemandGraph, UserCycle, WeightedCompressedGraph};

/// Default payload width in bits.
pub const DEFAULT_PAYLOAD_BITS: usize = 128;
/// Bound on frame lengths accepted when constructing actions.
pub const T_MAX: usize = 256;
/// Bound on per-type clearance accepted when constructing actions.
pub const MU_MAX: u32 = 256;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ActionError {
    #[error("traffic type index {0} out of range")]
    InvalidType(usize),
    #[error("leg {leg} ({from}->{to}): type {ttype} lacks {from} in its side set or {to} in its dest set")]
    LegMismatch {
        leg: usize,
        from: u32,
        to: u32,
        ttype: usize,
    },
    #[error("leg count {got} does not match cycle length {expected}")]
    LegCount { expected: usize, got: usize },
    #[error("types {0:?} do not realize the triple-XOR pattern: user {1} must hold the other two")]
    PatternMismatch([usize; 3], u32),
    #[error("triple-XOR action requires three distinct types")]
    DuplicateType,
    #[error("expected {expected} payloads, got {got}")]
    PayloadCount { expected: usize, got: usize },
    #[error("payload lengths must be uniform")]
    PayloadLength,
    #[error("user {user} cannot decode packet (type {ttype}, slot {slot}) from the plan")]
    DecodeFailure { user: u32, ttype: usize, slot: u32 },
    #[error("action exceeds frame or clearance bounds")]
    BoundsExceeded,
    #[error("plan is empty")]
    EmptyPlan,
}

#[derive(Debug, Error, PartialEq)]
pub enum SpecError {
    #[error("spec must have at least one traffic type")]
    NoTypes,
    #[error("type {0}: destination set is empty")]
    EmptyDest(usize),
    #[error("type {ttype}: user {user} is in both dest and side sets")]
    DestSideOverlap { ttype: usize, user: u32 },
    #[error("type {ttype}: user {user} out of range 1..={max}")]
    UserOutOfRange { ttype: usize, user: u32, max: u32 },
    #[error("type {ttype}: rate {rate} outside [0,1]")]
    BadRate { ttype: usize, rate: f64 },
    #[error("rates vector has wrong length")]
    RateCount,
    #[error("parse error on line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

/// Fixed-width packet payload; all payloads of one execution share a width.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PacketPayload {
    bits: usize,
    bytes: Vec<u8>,
}

impl PacketPayload {
    pub fn zero(bits: usize) -> Self {
        assert!(bits > 0, "payload width must be positive");
        PacketPayload {
            bits,
            bytes: vec![0; bits.div_ceil(8)],
        }
    }

    pub fn random<R: RngCore>(bits: usize, rng: &mut R) -> Self {
        let mut p = Self::zero(bits);
        rng.fill_bytes(&mut p.bytes);
        p.mask_tail();
        p
    }

    pub fn from_bytes(bits: usize, bytes: Vec<u8>) -> Self {
        assert_eq!(bytes.len(), bits.div_ceil(8));
        let mut p = PacketPayload { bits, bytes };
        p.mask_tail();
        p
    }

    fn mask_tail(&mut self) {
        let extra = self.bytes.len() * 8 - self.bits;
        if extra > 0 {
            let last = self.bytes.len() - 1;
            self.bytes[last] &= 0xff >> extra;
        }
    }

    pub fn bits(&self) -> usize {
        self.bits
    }

    pub fn bytes(&self) -> &[u8] {
        &self.bytes
    }

    pub fn xor_assign(&mut self, other: &PacketPayload) {
        assert_eq!(self.bits, other.bits, "payload widths must match");
        for (a, b) in self.bytes.iter_mut().zip(&other.bytes) {
            *a ^= b;
        }
    }
}

/// One traffic type: packets delivered to `dest`, already held by `side`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TrafficType {
    pub dest: BTreeSet<u32>,
    pub side: BTreeSet<u32>,
}

/// The traffic classes of a broadcast station, with optional arrival-rate
/// direction weights.
#[derive(Debug, Clone, PartialEq)]
pub struct TrafficSpec {
    num_users: u32,
    types: Vec<TrafficType>,
    rates: Option<Vec<f64>>,
}

impl TrafficSpec {
    pub fn new(
        num_users: u32,
        types: Vec<TrafficType>,
        rates: Option<Vec<f64>>,
    ) -> Result<Self, SpecError> {
        if types.is_empty() {
            return Err(SpecError::NoTypes);
        }
        for (m, t) in types.iter().enumerate() {
            if t.dest.is_empty() {
                return Err(SpecError::EmptyDest(m));
            }
            for &u in t.dest.iter().chain(t.side.iter()) {
                if u == 0 || u > num_users {
                    return Err(SpecError::UserOutOfRange {
                        ttype: m,
                        user: u,
                        max: num_users,
                    });
                }
            }
            if let Some(&u) = t.dest.intersection(&t.side).next() {
                return Err(SpecError::DestSideOverlap { ttype: m, user: u });
            }
        }
        if let Some(r) = &rates {
            if r.len() != types.len() {
                return Err(SpecError::RateCount);
            }
            for (m, &rate) in r.iter().enumerate() {
                if !(0.0..=1.0).contains(&rate) || rate.is_nan() {
                    return Err(SpecError::BadRate { ttype: m, rate });
                }
            }
        }
        Ok(TrafficSpec {
            num_users,
            types,
            rates,
        })
    }

    /// One traffic type per packet of a static batch; used to express
    /// clearance plans as coding actions.
    pub fn per_packet(graph: &DemandGraph) -> TrafficSpec {
        let types = graph
            .packets()
            .map(|p| TrafficType {
                dest: graph.wanters(p).into_iter().collect(),
                side: graph.holders(p).into_iter().collect(),
            })
            .collect();
        TrafficSpec::new(graph.num_users(), types, None).expect("valid graph induces a valid spec")
    }

    pub fn num_users(&self) -> u32 {
        self.num_users
    }

    pub fn num_types(&self) -> usize {
        self.types.len()
    }

    pub fn types(&self) -> &[TrafficType] {
        &self.types
    }

    pub fn dest(&self, m: usize) -> &BTreeSet<u32> {
        &self.types[m].dest
    }

    pub fn side(&self, m: usize) -> &BTreeSet<u32> {
        &self.types[m].side
    }

    pub fn rates(&self) -> Option<&[f64]> {
        self.rates.as_deref()
    }

    pub fn with_rates(&self, rates: Vec<f64>) -> Result<TrafficSpec, SpecError> {
        TrafficSpec::new(self.num_users, self.types.clone(), Some(rates))
    }

    /// Types usable on a user-to-user leg `from -> to`.
    pub fn leg_types(&self, from: u32, to: u32) -> Vec<usize> {
        (0..self.types.len())
            .filter(|&m| self.side(m).contains(&from) && self.dest(m).contains(&to))
            .collect()
    }

    /// User digraph with a link wherever some type allows a coding leg.
    pub fn user_graph(&self) -> WeightedCompressedGraph {
        let n = self.num_users as usize;
        let mut weights = vec![vec![0u32; n]; n];
        for (i, row) in weights.iter_mut().enumerate() {
            for (j, w) in row.iter_mut().enumerate() {
                if i != j {
                    *w = self.leg_types(i as u32 + 1, j as u32 + 1).len() as u32;
                }
            }
        }
        WeightedCompressedGraph::from_weights(weights).expect("square matrix with zero diagonal")
    }

    /// Canonical text form: `users N types M` header, then one line per
    /// type with 1-based set members.
    pub fn to_text(&self) -> String {
        let fmt_set = |s: &BTreeSet<u32>| -> String {
            if s.is_empty() {
                "-".to_string()
            } else {
                s.iter().map(|u| u.to_string()).collect::<Vec<_>>().join(",")
            }
        };
        let mut out = format!("users {} types {}\n", self.num_users, self.types.len());
        for (m, t) in self.types.iter().enumerate() {
            out.push_str(&format!(
                "type {} dest {} side {}",
                m + 1,
                fmt_set(&t.dest),
                fmt_set(&t.side)
            ));
            if let Some(r) = &self.rates {
                out.push_str(&format!(" rate {}", r[m]));
            }
            out.push('\n');
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self, SpecError> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty());
        let (line_no, header) = lines
            .next()
            .ok_or(SpecError::Parse { line: 1, msg: "empty input".into() })?;
        let parts: Vec<&str> = header.split_whitespace().collect();
        let (num_users, num_types) = match parts.as_slice() {
            ["users", n, "types", m] => {
                let n: u32 = n.parse().map_err(|_| SpecError::Parse {
                    line: line_no,
                    msg: format!("bad user count {n:?}"),
                })?;
                let m: usize = m.parse().map_err(|_| SpecError::Parse {
                    line: line_no,
                    msg: format!("bad type count {m:?}"),
                })?;
                (n, m)
            }
            _ => {
                return Err(SpecError::Parse {
                    line: line_no,
                    msg: "expected header `users N types M`".into(),
                })
            }
        };
        let mut types = vec![
            TrafficType {
                dest: BTreeSet::new(),
                side: BTreeSet::new(),
            };
            num_types
        ];
        let mut rates: Vec<Option<f64>> = vec![None; num_types];
        for (line_no, line) in lines {
            let parts: Vec<&str> = line.split_whitespace().collect();
            let (head, rate) = match parts.as_slice() {
                [a @ "type", b, c @ "dest", d, e @ "side", f] => ([*a, *b, *c, *d, *e, *f], None),
                [a @ "type", b, c @ "dest", d, e @ "side", f, "rate", r] => {
                    let r: f64 = r.parse().map_err(|_| SpecError::Parse {
                        line: line_no,
                        msg: format!("bad rate {r:?}"),
                    })?;
                    ([*a, *b, *c, *d, *e, *f], Some(r))
                }
                _ => {
                    return Err(SpecError::Parse {
                        line: line_no,
                        msg: "expected `type M dest ... side ... [rate r]`".into(),
                    })
                }
            };
            let idx: usize = head[1].parse().map_err(|_| SpecError::Parse {
                line: line_no,
                msg: format!("bad type id {:?}", head[1]),
            })?;
            if idx == 0 || idx > num_types {
                return Err(SpecError::Parse {
                    line: line_no,
                    msg: format!("type id {idx} out of range"),
                });
            }
            types[idx - 1] = TrafficType {
                dest: parse_user_set(head[3], line_no)?,
                side: parse_user_set(head[5], line_no)?,
            };
            rates[idx - 1] = rate;
        }
        let rates = if rates.iter().all(|r| r.is_none()) {
            None
        } else if rates.iter().all(|r| r.is_some()) {
            Some(rates.into_iter().map(|r| r.unwrap()).collect())
        } else {
            return Err(SpecError::RateCount);
        };
        TrafficSpec::new(num_users, types, rates)
    }
}

fn parse_user_set(field: &str, line: usize) -> Result<BTreeSet<u32>, SpecError> {
    if field == "-" {
        return Ok(BTreeSet::new());
    }
    field
        .split(',')
        .map(|tok| {
            tok.parse::<u32>().map_err(|_| SpecError::Parse {
                line,
                msg: format!("bad user id {tok:?}"),
            })
        })
        .collect()
}

/// Reference to one cleared packet: a traffic type and the queue slot
/// (0 = head of line) bound at execution time.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PacketRef {
    pub ttype: usize,
    pub slot: u32,
}

/// One broadcast slot: the XOR of the referenced packets.
pub type Message = BTreeSet<PacketRef>;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ActionKind {
    Direct,
    KCycle { k: usize },
    DoubleCycle,
    CustomLinear,
}

impl ActionKind {
    /// Ordering rank: direct, then cycles by length, then the triple XOR,
    /// then free-form plans.
    fn rank(&self) -> usize {
        match self {
            ActionKind::Direct => 0,
            ActionKind::KCycle { k } => *k - 1,
            ActionKind::DoubleCycle => usize::MAX - 1,
            ActionKind::CustomLinear => usize::MAX,
        }
    }

    pub fn label(&self) -> String {
        match self {
            ActionKind::Direct => "direct".into(),
            ActionKind::KCycle { k } => format!("{k}-cycle"),
            ActionKind::DoubleCycle => "double-cycle".into(),
            ActionKind::CustomLinear => "custom-linear".into(),
        }
    }
}

/// A concrete coding action: frame length, clearance vector, message plan.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CodingAction {
    id: usize,
    kind: ActionKind,
    frame_len: usize,
    /// Uplink slots folded into `frame_len` in relay mode.
    uplink_slots: usize,
    clearance: Vec<u32>,
    plan: Vec<Message>,
}

impl CodingAction {
    fn validate(self) -> Result<Self, ActionError> {
        if self.plan.is_empty() {
            return Err(ActionError::EmptyPlan);
        }
        if self.frame_len == 0
            || self.frame_len > T_MAX
            || self.clearance.iter().any(|&c| c > MU_MAX)
        {
            return Err(ActionError::BoundsExceeded);
        }
        debug_assert_eq!(self.frame_len, self.plan.len() + self.uplink_slots);
        Ok(self)
    }

    pub fn id(&self) -> usize {
        self.id
    }

    pub(crate) fn set_id(&mut self, id: usize) {
        self.id = id;
    }

    pub fn kind(&self) -> ActionKind {
        self.kind
    }

    pub fn frame_len(&self) -> usize {
        self.frame_len
    }

    pub fn uplink_slots(&self) -> usize {
        self.uplink_slots
    }

    pub fn clearance(&self) -> &[u32] {
        &self.clearance
    }

    pub fn plan(&self) -> &[Message] {
        &self.plan
    }

    pub fn total_cleared(&self) -> u32 {
        self.clearance.iter().sum()
    }

    /// Cleared packet references in (type, slot) order; payload vectors for
    /// [`execute_and_decode`] follow this order.
    pub fn cleared_refs(&self) -> Vec<PacketRef> {
        let mut refs = Vec::new();
        for (m, &c) in self.clearance.iter().enumerate() {
            for slot in 0..c {
                refs.push(PacketRef { ttype: m, slot });
            }
        }
        refs
    }

    /// Packets delivered per slot.
    pub fn efficiency(&self) -> f64 {
        self.total_cleared() as f64 / self.frame_len as f64
    }

    fn with_relay_uplink(mut self, relay: bool) -> Result<Self, ActionError> {
        if relay {
            self.uplink_slots = self.total_cleared() as usize;
            self.frame_len += self.uplink_slots;
        }
        self.validate()
    }

    /// Dump line: `id kind T=... mu=[...] plan=[{p1,p3},...]` where `pN`
    /// is the 1-based position in [`cleared_refs`] order.
    ///
    /// [`cleared_refs`]: CodingAction::cleared_refs
    pub fn dump_line(&self) -> String {
        let refs = self.cleared_refs();
        let index_of = |r: &PacketRef| refs.iter().position(|x| x == r).unwrap() + 1;
        let mu = self
            .clearance
            .iter()
            .map(|c| c.to_string())
            .collect::<Vec<_>>()
            .join(",");
        let plan = self
            .plan
            .iter()
            .map(|msg| {
                let ids = msg
                    .iter()
                    .map(|r| format!("p{}", index_of(r)))
                    .collect::<Vec<_>>()
                    .join(",");
                format!("{{{ids}}}")
            })
            .collect::<Vec<_>>()
            .join(",");
        format!(
            "{} {} T={} mu=[{}] plan=[{}]",
            self.id,
            self.kind.label(),
            self.frame_len,
            mu,
            plan
        )
    }
}

impl fmt::Display for CodingAction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.dump_line())
    }
}

/// Direct (uncoded) transmission of one head-of-line packet of a type.
pub fn direct_action(spec: &TrafficSpec, ttype: usize) -> Result<CodingAction, ActionError> {
    if ttype >= spec.num_types() {
        return Err(ActionError::InvalidType(ttype));
    }
    let mut clearance = vec![0u32; spec.num_types()];
    clearance[ttype] = 1;
    CodingAction {
        id: 0,
        kind: ActionKind::Direct,
        frame_len: 1,
        uplink_slots: 0,
        clearance,
        plan: vec![Message::from([PacketRef { ttype, slot: 0 }])],
    }
    .validate()
}

/// XOR chain around a user cycle: K packets delivered in K-1 slots.
///
/// Leg k carries a packet held by the cycle's k-th user and wanted by the
/// next one; message k is the XOR of the packets on legs k and k+1.
pub fn k_cycle_action(
    spec: &TrafficSpec,
    cycle: &UserCycle,
    leg_types: &[usize],
) -> Result<CodingAction, ActionError> {
    let k = cycle.len();
    if leg_types.len() != k {
        return Err(ActionError::LegCount {
            expected: k,
            got: leg_types.len(),
        });
    }
    let mut clearance = vec![0u32; spec.num_types()];
    let mut refs = Vec::with_capacity(k);
    for (leg, ((from, to), &m)) in cycle.legs().iter().zip(leg_types).enumerate() {
        if m >= spec.num_types() {
            return Err(ActionError::InvalidType(m));
        }
        if !spec.side(m).contains(from) || !spec.dest(m).contains(to) {
            return Err(ActionError::LegMismatch {
                leg,
                from: *from,
                to: *to,
                ttype: m,
            });
        }
        refs.push(PacketRef {
            ttype: m,
            slot: clearance[m],
        });
        clearance[m] += 1;
    }
    let plan = (0..k - 1)
        .map(|i| Message::from([refs[i], refs[i + 1]]))
        .collect();
    CodingAction {
        id: 0,
        kind: ActionKind::KCycle { k },
        frame_len: k - 1,
        uplink_slots: 0,
        clearance,
        plan,
    }
    .validate()
}

/// One-slot XOR of three packets whose destinations each hold the other
/// two packets.
pub fn double_cycle_action(
    spec: &TrafficSpec,
    types: [usize; 3],
) -> Result<CodingAction, ActionError> {
    let [a, b, c] = types;
    if a == b || b == c || a == c {
        return Err(ActionError::DuplicateType);
    }
    for m in types {
        if m >= spec.num_types() {
            return Err(ActionError::InvalidType(m));
        }
    }
    for (target, others) in [(a, [b, c]), (b, [a, c]), (c, [a, b])] {
        for &u in spec.dest(target) {
            if !others.iter().all(|&o| spec.side(o).contains(&u)) {
                return Err(ActionError::PatternMismatch(types, u));
            }
        }
    }
    let mut clearance = vec![0u32; spec.num_types()];
    for m in types {
        clearance[m] = 1;
    }
    let msg: Message = types.map(|m| PacketRef { ttype: m, slot: 0 }).into();
    CodingAction {
        id: 0,
        kind: ActionKind::DoubleCycle,
        frame_len: 1,
        uplink_slots: 0,
        clearance,
        plan: vec![msg],
    }
    .validate()
}

/// Free-form linear plan; the cleared set is the union of the referenced
/// packets and the plan must be decodable by every destination.
pub fn custom_linear_action(
    spec: &TrafficSpec,
    plan: Vec<Message>,
) -> Result<CodingAction, ActionError> {
    let mut clearance = vec![0u32; spec.num_types()];
    for msg in &plan {
        for r in msg {
            if r.ttype >= spec.num_types() {
                return Err(ActionError::InvalidType(r.ttype));
            }
            clearance[r.ttype] = clearance[r.ttype].max(r.slot + 1);
        }
    }
    let action = CodingAction {
        id: 0,
        kind: ActionKind::CustomLinear,
        frame_len: plan.len(),
        uplink_slots: 0,
        clearance,
        plan,
    }
    .validate()?;
    decode_table(&action, spec)?;
    Ok(action)
}

/// Per-destination decode recipes: for each cleared packet and each of its
/// destination users, the message indices and side packets to XOR.
type DecodeTable = BTreeMap<(u32, PacketRef), (Vec<usize>, Vec<PacketRef>)>;

fn decode_table(action: &CodingAction, spec: &TrafficSpec) -> Result<DecodeTable, ActionError> {
    let refs = action.cleared_refs();
    let cols = refs.len();
    let col_of = |r: &PacketRef| refs.iter().position(|x| x == r).unwrap();
    let mut table = BTreeMap::new();
    for user in 1..=spec.num_users() {
        let side_refs: Vec<&PacketRef> = refs
            .iter()
            .filter(|r| spec.side(r.ttype).contains(&user))
            .collect();
        let wanted: Vec<&PacketRef> = refs
            .iter()
            .filter(|r| spec.dest(r.ttype).contains(&user))
            .collect();
        if wanted.is_empty() {
            continue;
        }
        let mut basis = SpanBasis::new(cols);
        // ids 0..plan.len() are messages, the rest are side packets
        for msg in action.plan() {
            basis.insert(BitVec::from_indices(cols, msg.iter().map(&col_of)));
        }
        for r in &side_refs {
            basis.insert(BitVec::unit(cols, col_of(r)));
        }
        for r in wanted {
            let target = BitVec::unit(cols, col_of(r));
            let combo = basis.solve(&target).ok_or(ActionError::DecodeFailure {
                user,
                ttype: r.ttype,
                slot: r.slot,
            })?;
            let mut msgs = Vec::new();
            let mut sides = Vec::new();
            for id in combo {
                if id < action.plan().len() {
                    msgs.push(id);
                } else {
                    sides.push(*side_refs[id - action.plan().len()]);
                }
            }
            table.insert((user, *r), (msgs, sides));
        }
    }
    Ok(table)
}

/// True iff every destination of every cleared packet can reconstruct it
/// from the plan's messages plus its own side information.
pub fn action_decodable(action: &CodingAction, spec: &TrafficSpec) -> bool {
    decode_table(action, spec).is_ok()
}

/// Broadcast the plan and decode at every destination, bit for bit.
///
/// `payloads` supplies one payload per cleared packet in
/// [`CodingAction::cleared_refs`] order. Returns, per user, the recovered
/// packets.
pub fn execute_and_decode(
    action: &CodingAction,
    spec: &TrafficSpec,
    payloads: &[PacketPayload],
) -> Result<BTreeMap<u32, Vec<(PacketRef, PacketPayload)>>, ActionError> {
    let refs = action.cleared_refs();
    if payloads.len() != refs.len() {
        return Err(ActionError::PayloadCount {
            expected: refs.len(),
            got: payloads.len(),
        });
    }
    if refs.is_empty() {
        return Ok(BTreeMap::new());
    }
    let bits = payloads.first().map(|p| p.bits()).unwrap_or(0);
    if payloads.iter().any(|p| p.bits() != bits) {
        return Err(ActionError::PayloadLength);
    }
    let payload_of = |r: &PacketRef| {
        let i = refs.iter().position(|x| x == r).unwrap();
        &payloads[i]
    };
    // broadcast: one message payload per downlink slot
    let messages: Vec<PacketPayload> = action
        .plan()
        .iter()
        .map(|msg| {
            let mut acc = PacketPayload::zero(bits);
            for r in msg {
                acc.xor_assign(payload_of(r));
            }
            acc
        })
        .collect();
    let table = decode_table(action, spec)?;
    let mut out: BTreeMap<u32, Vec<(PacketRef, PacketPayload)>> = BTreeMap::new();
    for ((user, r), (msg_ids, side_refs)) in table {
        let mut acc = PacketPayload::zero(bits);
        for i in msg_ids {
            acc.xor_assign(&messages[i]);
        }
        for s in side_refs {
            acc.xor_assign(payload_of(&s));
        }
        out.entry(user).or_default().push((r, acc));
    }
    Ok(out)
}

/// Demand graph induced by an action's cleared packets: packet i+1 is the
/// i-th cleared reference.
pub fn induced_subgraph(action: &CodingAction, spec: &TrafficSpec) -> DemandGraph {
    let refs = action.cleared_refs();
    let mut have = vec![BTreeSet::new(); spec.num_users() as usize];
    let mut want = vec![BTreeSet::new(); spec.num_users() as usize];
    for (i, r) in refs.iter().enumerate() {
        let p = i as u32 + 1;
        for &u in spec.side(r.ttype) {
            have[u as usize - 1].insert(p);
        }
        for &u in spec.dest(r.ttype) {
            want[u as usize - 1].insert(p);
        }
    }
    DemandGraph::build_with_packet_count(spec.num_users(), refs.len() as u32, have, want)
        .expect("cleared packets always have a destination")
}

/// Plan messages as packet-id sets, for plans over a per-packet spec
/// (type index m encodes packet id m+1).
pub fn plan_packet_messages(actions: &[CodingAction]) -> Vec<BTreeSet<u32>> {
    let mut out = Vec::new();
    for action in actions {
        for msg in action.plan() {
            out.push(
                msg.iter()
                    .map(|r| {
                        debug_assert_eq!(r.slot, 0, "static plans clear each packet once");
                        r.ttype as u32 + 1
                    })
                    .collect(),
            );
        }
    }
    out
}

/// Decide whether a message list completes the mission on a demand graph:
/// every user can reconstruct each wanted packet from the messages plus
/// its own side information, over GF(2).
pub fn verify_linear_code(graph: &DemandGraph, messages: &[BTreeSet<u32>]) -> bool {
    let cols = graph.num_packets() as usize;
    for user in graph.users() {
        if graph.want(user).is_empty() {
            continue;
        }
        let mut basis = SpanBasis::new(cols);
        for msg in messages {
            basis.insert(BitVec::from_indices(
                cols,
                msg.iter().map(|&p| p as usize - 1),
            ));
        }
        for &q in graph.have(user) {
            basis.insert(BitVec::unit(cols, q as usize - 1));
        }
        for &p in graph.want(user) {
            if !basis.contains(&BitVec::unit(cols, p as usize - 1)) {
                return false;
            }
        }
    }
    true
}

/// Selection of action kinds to enumerate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ActionSetOptions {
    /// Longest user cycle turned into XOR chains; values below 2 keep the
    /// set direct-only.
    pub max_cycle_len: usize,
    /// Include the one-slot triple-XOR actions.
    pub double_cycles: bool,
    /// Count one uplink slot per cleared packet in each frame length.
    pub relay_mode: bool,
    /// Defer per-leg type choice to scheduling time (max-backlog binding).
    pub template: bool,
}

impl Default for ActionSetOptions {
    fn default() -> Self {
        ActionSetOptions {
            max_cycle_len: 3,
            double_cycles: true,
            relay_mode: false,
            template: false,
        }
    }
}

impl ActionSetOptions {
    pub fn direct_only() -> Self {
        ActionSetOptions {
            max_cycle_len: 1,
            double_cycles: false,
            relay_mode: false,
            template: false,
        }
    }

    pub fn templated(mut self) -> Self {
        self.template = true;
        self
    }

    pub fn relay(mut self) -> Self {
        self.relay_mode = true;
        self
    }
}

/// Entry of an action set: either a fully bound action or a template whose
/// legs bind to traffic types when the scheduler inspects the backlogs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ActionEntry {
    Concrete(CodingAction),
    KCycleTemplate {
        id: usize,
        cycle: UserCycle,
        /// Per-leg candidate types; binding picks the max-backlog one.
        eligible: Vec<Vec<usize>>,
        relay: bool,
    },
    DoubleTemplate {
        id: usize,
        users: [u32; 3],
        eligible: [Vec<usize>; 3],
        relay: bool,
    },
}

impl ActionEntry {
    pub fn id(&self) -> usize {
        match self {
            ActionEntry::Concrete(a) => a.id(),
            ActionEntry::KCycleTemplate { id, .. } => *id,
            ActionEntry::DoubleTemplate { id, .. } => *id,
        }
    }

    fn set_id(&mut self, new_id: usize) {
        match self {
            ActionEntry::Concrete(a) => a.set_id(new_id),
            ActionEntry::KCycleTemplate { id, .. } => *id = new_id,
            ActionEntry::DoubleTemplate { id, .. } => *id = new_id,
        }
    }

    pub fn is_template(&self) -> bool {
        !matches!(self, ActionEntry::Concrete(_))
    }

    /// Frame length and sparse clearance after binding template legs to
    /// the largest-backlog eligible types (smallest index on ties).
    pub fn bind(&self, backlogs: &[u64]) -> (usize, Vec<(usize, u32)>) {
        match self {
            ActionEntry::Concrete(a) => {
                let mu = a
                    .clearance()
                    .iter()
                    .enumerate()
                    .filter(|(_, &c)| c > 0)
                    .map(|(m, &c)| (m, c))
                    .collect();
                (a.frame_len(), mu)
            }
            ActionEntry::KCycleTemplate { eligible, relay, .. } => {
                let k = eligible.len();
                let mut mu: BTreeMap<usize, u32> = BTreeMap::new();
                for leg in eligible {
                    let m = pick_max_backlog(leg, backlogs);
                    *mu.entry(m).or_insert(0) += 1;
                }
                let uplink = if *relay { k } else { 0 };
                (k - 1 + uplink, mu.into_iter().collect())
            }
            ActionEntry::DoubleTemplate { eligible, relay, .. } => {
                let mut mu: BTreeMap<usize, u32> = BTreeMap::new();
                for leg in eligible {
                    let m = pick_max_backlog(leg, backlogs);
                    *mu.entry(m).or_insert(0) += 1;
                }
                let uplink = if *relay { 3 } else { 0 };
                (1 + uplink, mu.into_iter().collect())
            }
        }
    }

    /// Materialize the bound action (for execution or inspection).
    pub fn bind_concrete(
        &self,
        spec: &TrafficSpec,
        backlogs: &[u64],
    ) -> Result<CodingAction, ActionError> {
        match self {
            ActionEntry::Concrete(a) => Ok(a.clone()),
            ActionEntry::KCycleTemplate {
                id,
                cycle,
                eligible,
                relay,
            } => {
                let legs: Vec<usize> = eligible
                    .iter()
                    .map(|cands| pick_max_backlog(cands, backlogs))
                    .collect();
                let mut a = k_cycle_action(spec, cycle, &legs)?.with_relay_uplink(*relay)?;
                a.set_id(*id);
                Ok(a)
            }
            ActionEntry::DoubleTemplate {
                id,
                eligible,
                relay,
                ..
            } => {
                let types = [
                    pick_max_backlog(&eligible[0], backlogs),
                    pick_max_backlog(&eligible[1], backlogs),
                    pick_max_backlog(&eligible[2], backlogs),
                ];
                let mut a = double_cycle_action(spec, types)?.with_relay_uplink(*relay)?;
                a.set_id(*id);
                Ok(a)
            }
        }
    }

    fn sort_key(&self) -> (usize, Vec<usize>, Vec<u32>) {
        match self {
            ActionEntry::Concrete(a) => {
                let types: Vec<usize> = a
                    .plan()
                    .iter()
                    .flat_map(|m| m.iter().map(|r| r.ttype))
                    .collect();
                (a.kind().rank(), types, Vec::new())
            }
            ActionEntry::KCycleTemplate { cycle, eligible, .. } => (
                ActionKind::KCycle { k: cycle.len() }.rank(),
                eligible.iter().flatten().copied().collect(),
                cycle.nodes().to_vec(),
            ),
            ActionEntry::DoubleTemplate { users, eligible, .. } => (
                ActionKind::DoubleCycle.rank(),
                eligible.iter().flatten().copied().collect(),
                users.to_vec(),
            ),
        }
    }

    pub fn dump_line(&self) -> String {
        match self {
            ActionEntry::Concrete(a) => a.dump_line(),
            ActionEntry::KCycleTemplate {
                id,
                cycle,
                eligible,
                ..
            } => {
                let legs = eligible
                    .iter()
                    .map(|cands| {
                        let ids: Vec<String> =
                            cands.iter().map(|m| (m + 1).to_string()).collect();
                        format!("{{{}}}", ids.join("|"))
                    })
                    .collect::<Vec<_>>()
                    .join(",");
                format!("{} {}-cycle-template users={} legs=[{}]", id, cycle.len(), cycle, legs)
            }
            ActionEntry::DoubleTemplate {
                id,
                users,
                eligible,
                ..
            } => {
                let legs = eligible
                    .iter()
                    .map(|cands| {
                        let ids: Vec<String> =
                            cands.iter().map(|m| (m + 1).to_string()).collect();
                        format!("{{{}}}", ids.join("|"))
                    })
                    .collect::<Vec<_>>()
                    .join(",");
                format!(
                    "{} double-cycle-template users=[{},{},{}] legs=[{}]",
                    id, users[0], users[1], users[2], legs
                )
            }
        }
    }
}

fn pick_max_backlog(candidates: &[usize], backlogs: &[u64]) -> usize {
    debug_assert!(!candidates.is_empty());
    let mut best = candidates[0];
    for &m in &candidates[1..] {
        if backlogs[m] > backlogs[best] {
            best = m;
        }
    }
    best
}

/// A finite, deterministically ordered set of coding actions.
#[derive(Debug, Clone, PartialEq)]
pub struct ActionSet {
    entries: Vec<ActionEntry>,
    options: ActionSetOptions,
    num_types: usize,
}

impl ActionSet {
    pub fn entries(&self) -> &[ActionEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn options(&self) -> ActionSetOptions {
        self.options
    }

    pub fn num_types(&self) -> usize {
        self.num_types
    }

    pub fn get(&self, id: usize) -> &ActionEntry {
        &self.entries[id]
    }

    pub fn is_concrete(&self) -> bool {
        self.entries.iter().all(|e| !e.is_template())
    }

    /// The concrete actions, or `None` when the set contains templates.
    pub fn concrete_actions(&self) -> Option<Vec<&CodingAction>> {
        self.entries
            .iter()
            .map(|e| match e {
                ActionEntry::Concrete(a) => Some(a),
                _ => None,
            })
            .collect()
    }

    pub fn dump(&self) -> String {
        let mut out = String::new();
        for e in &self.entries {
            out.push_str(&e.dump_line());
            out.push('\n');
        }
        out
    }
}

/// Enumerate every valid action of the selected kinds over the spec's
/// traffic types. Ordering and ids are stable given equal inputs.
pub fn generate_action_set(spec: &TrafficSpec, options: ActionSetOptions) -> ActionSet {
    let mut entries: Vec<ActionEntry> = Vec::new();
    for m in 0..spec.num_types() {
        let action = direct_action(spec, m)
            .and_then(|a| a.with_relay_uplink(options.relay_mode))
            .expect("direct actions are always valid");
        entries.push(ActionEntry::Concrete(action));
    }
    if options.max_cycle_len >= 2 {
        let user_graph = spec.user_graph();
        let cycles = enumerate_cycles(&user_graph, options.max_cycle_len);
        for cycle in &cycles {
            if options.template {
                // independent per-leg binding is only sound when every
                // candidate unicasts to the leg target
                let eligible: Vec<Vec<usize>> = cycle
                    .legs()
                    .iter()
                    .map(|(from, to)| {
                        spec.leg_types(*from, *to)
                            .into_iter()
                            .filter(|&m| spec.dest(m).len() == 1)
                            .collect()
                    })
                    .collect();
                if eligible.iter().all(|e| !e.is_empty()) {
                    entries.push(ActionEntry::KCycleTemplate {
                        id: 0,
                        cycle: cycle.clone(),
                        eligible,
                        relay: options.relay_mode,
                    });
                }
            } else {
                let leg_candidates: Vec<Vec<usize>> = cycle
                    .legs()
                    .iter()
                    .map(|(from, to)| spec.leg_types(*from, *to))
                    .collect();
                for assignment in cartesian(&leg_candidates) {
                    let action = k_cycle_action(spec, cycle, &assignment)
                        .expect("legs chosen from eligible types");
                    if !action_decodable(&action, spec) {
                        continue;
                    }
                    let action = action
                        .with_relay_uplink(options.relay_mode)
                        .expect("bounds hold for capped cycles");
                    entries.push(ActionEntry::Concrete(action));
                }
            }
        }
    }
    if options.double_cycles {
        if options.template {
            let n = spec.num_users();
            for u1 in 1..=n {
                for u2 in u1 + 1..=n {
                    for u3 in u2 + 1..=n {
                        let eligible = [u1, u2, u3].map(|target| {
                            let others: Vec<u32> =
                                [u1, u2, u3].into_iter().filter(|&u| u != target).collect();
                            (0..spec.num_types())
                                .filter(|&m| {
                                    spec.dest(m).len() == 1
                                        && spec.dest(m).contains(&target)
                                        && others.iter().all(|o| spec.side(m).contains(o))
                                })
                                .collect::<Vec<usize>>()
                        });
                        if eligible.iter().all(|e| !e.is_empty()) {
                            entries.push(ActionEntry::DoubleTemplate {
                                id: 0,
                                users: [u1, u2, u3],
                                eligible,
                                relay: options.relay_mode,
                            });
                        }
                    }
                }
            }
        } else {
            let m = spec.num_types();
            for a in 0..m {
                for b in a + 1..m {
                    for c in b + 1..m {
                        if let Ok(action) = double_cycle_action(spec, [a, b, c]) {
                            let action = action
                                .with_relay_uplink(options.relay_mode)
                                .expect("triple XOR stays within bounds");
                            entries.push(ActionEntry::Concrete(action));
                        }
                    }
                }
            }
        }
    }
    entries.sort_by(|a, b| a.sort_key().cmp(&b.sort_key()));
    for (id, entry) in entries.iter_mut().enumerate() {
        entry.set_id(id);
    }
    ActionSet {
        entries,
        options,
        num_types: spec.num_types(),
    }
}

/// Lexicographic cartesian product of the candidate lists.
fn cartesian(candidates: &[Vec<usize>]) -> Vec<Vec<usize>> {
    let mut out: Vec<Vec<usize>> = vec![Vec::new()];
    for list in candidates {
        let mut next = Vec::with_capacity(out.len() * list.len());
        for prefix in &out {
            for &item in list {
                let mut row = prefix.clone();
                row.push(item);
                next.push(row);
            }
        }
        out = next;
    }
    if candidates.iter().any(|l| l.is_empty()) {
        Vec::new()
    } else {
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn users(ids: &[u32]) -> BTreeSet<u32> {
        ids.iter().copied().collect()
    }

    /// user 1 has B wants A, user 2 has A wants B, as two unicast types.
    fn swap_spec() -> TrafficSpec {
        TrafficSpec::new(
            2,
            vec![
                TrafficType { dest: users(&[1]), side: users(&[2]) },
                TrafficType { dest: users(&[2]), side: users(&[1]) },
            ],
            None,
        )
        .unwrap()
    }

    fn triple_spec() -> TrafficSpec {
        // packet A -> user 1 (held by 2,3), B -> 2 (held by 1,3), C -> 3 (held by 1,2)
        TrafficSpec::new(
            3,
            vec![
                TrafficType { dest: users(&[1]), side: users(&[2, 3]) },
                TrafficType { dest: users(&[2]), side: users(&[1, 3]) },
                TrafficType { dest: users(&[3]), side: users(&[1, 2]) },
            ],
            None,
        )
        .unwrap()
    }

    /// The 3-user, 12-type workload: per destination, side information at
    /// none, one, the other, or both of the remaining users.
    pub(crate) fn three_user_spec() -> TrafficSpec {
        let mut types = Vec::new();
        for n in 1..=3u32 {
            let others: Vec<u32> = (1..=3).filter(|&u| u != n).collect();
            for side in [
                vec![],
                vec![others[0]],
                vec![others[1]],
                vec![others[0], others[1]],
            ] {
                types.push(TrafficType {
                    dest: users(&[n]),
                    side: side.into_iter().collect(),
                });
            }
        }
        TrafficSpec::new(3, types, None).unwrap()
    }

    #[test]
    fn spec_rejects_dest_side_overlap() {
        let err = TrafficSpec::new(
            2,
            vec![TrafficType { dest: users(&[1]), side: users(&[1, 2]) }],
            None,
        )
        .unwrap_err();
        assert_eq!(err, SpecError::DestSideOverlap { ttype: 0, user: 1 });
    }

    #[test]
    fn spec_rejects_bad_rates() {
        let types = vec![TrafficType { dest: users(&[1]), side: users(&[]) }];
        assert!(TrafficSpec::new(2, types.clone(), Some(vec![1.5])).is_err());
        assert!(TrafficSpec::new(2, types, Some(vec![0.5, 0.5])).is_err());
    }

    #[test]
    fn spec_text_round_trip() {
        let spec = three_user_spec().with_rates(vec![0.25; 12]).unwrap();
        let text = spec.to_text();
        let parsed = TrafficSpec::from_text(&text).unwrap();
        assert_eq!(parsed, spec);
        assert_eq!(parsed.to_text(), text);
    }

    #[test]
    fn direct_action_is_a_unit_clearance_single_slot() {
        let spec = three_user_spec();
        let a = direct_action(&spec, 2).unwrap();
        assert_eq!(a.frame_len(), 1);
        let mut expected = vec![0u32; 12];
        expected[2] = 1;
        assert_eq!(a.clearance(), &expected[..]);
        assert_eq!(a.efficiency(), 1.0);
        assert!(direct_action(&spec, 12).is_err());
    }

    #[test]
    fn swap_cycle_is_one_mixed_slot() {
        let spec = swap_spec();
        let cycle = UserCycle::new(vec![1, 2]);
        // leg 1->2 carries type 1 (dest 2, side 1); leg 2->1 carries type 0
        let a = k_cycle_action(&spec, &cycle, &[1, 0]).unwrap();
        assert_eq!(a.frame_len(), 1);
        assert_eq!(a.clearance(), &[1, 1]);
        assert_eq!(a.plan().len(), 1);
        assert_eq!(a.efficiency(), 2.0);
    }

    #[test]
    fn three_cycle_efficiency_and_mismatch() {
        let spec = three_user_spec();
        let cycle = UserCycle::new(vec![1, 2, 3]);
        // legs 1->2, 2->3, 3->1 with single-side types
        let a = k_cycle_action(&spec, &cycle, &[5, 10, 2]).unwrap();
        assert_eq!(a.frame_len(), 2);
        assert_eq!(a.total_cleared(), 3);
        assert_eq!(a.efficiency(), 1.5);
        // type 4 (dest 2, side none) cannot ride leg 1->2
        let err = k_cycle_action(&spec, &cycle, &[4, 10, 2]).unwrap_err();
        assert!(matches!(err, ActionError::LegMismatch { leg: 0, .. }));
    }

    #[test]
    fn double_cycle_checks_the_pattern() {
        let spec = triple_spec();
        let a = double_cycle_action(&spec, [0, 1, 2]).unwrap();
        assert_eq!(a.frame_len(), 1);
        assert_eq!(a.total_cleared(), 3);
        assert_eq!(a.efficiency(), 3.0);
        assert_eq!(
            double_cycle_action(&spec, [0, 0, 1]).unwrap_err(),
            ActionError::DuplicateType
        );
        // break the pattern: user 3 no longer holds B
        let broken = TrafficSpec::new(
            3,
            vec![
                TrafficType { dest: users(&[1]), side: users(&[2, 3]) },
                TrafficType { dest: users(&[2]), side: users(&[1]) },
                TrafficType { dest: users(&[3]), side: users(&[1, 2]) },
            ],
            None,
        )
        .unwrap();
        assert!(matches!(
            double_cycle_action(&broken, [0, 1, 2]),
            Err(ActionError::PatternMismatch(_, 3))
        ));
    }

    #[test]
    fn execute_swap_recovers_exact_payloads() {
        let spec = swap_spec();
        let cycle = UserCycle::new(vec![1, 2]);
        let a = k_cycle_action(&spec, &cycle, &[1, 0]).unwrap();
        // cleared refs order: (type 0, slot 0) then (type 1, slot 0)
        let pkt_a = PacketPayload::from_bytes(8, vec![0xAA]);
        let pkt_b = PacketPayload::from_bytes(8, vec![0x55]);
        let decoded = execute_and_decode(&a, &spec, &[pkt_a.clone(), pkt_b.clone()]).unwrap();
        assert_eq!(decoded[&1].len(), 1);
        assert_eq!(decoded[&1][0].1, pkt_a);
        assert_eq!(decoded[&2][0].1, pkt_b);
    }

    #[test]
    fn four_cycle_chain_decodes_at_the_wrapping_user() {
        // relay-like ring on 4 users: user k holds X_k wanted by user k+1
        let mut types = Vec::new();
        for k in 1..=4u32 {
            let next = k % 4 + 1;
            types.push(TrafficType { dest: users(&[next]), side: users(&[k]) });
        }
        let spec = TrafficSpec::new(4, types, None).unwrap();
        let cycle = UserCycle::new(vec![1, 2, 3, 4]);
        let a = k_cycle_action(&spec, &cycle, &[0, 1, 2, 3]).unwrap();
        assert_eq!(a.frame_len(), 3);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let payloads: Vec<PacketPayload> =
            (0..4).map(|_| PacketPayload::random(128, &mut rng)).collect();
        let decoded = execute_and_decode(&a, &spec, &payloads).unwrap();
        // user 1 wants X_4 = type index 3
        assert_eq!(decoded[&1][0].0, PacketRef { ttype: 3, slot: 0 });
        assert_eq!(decoded[&1][0].1, payloads[3]);
    }

    #[test]
    fn corrupted_plan_fails_to_decode() {
        let spec = swap_spec();
        let cycle = UserCycle::new(vec![1, 2]);
        let mut a = k_cycle_action(&spec, &cycle, &[1, 0]).unwrap();
        a.plan.clear();
        a.plan.push(Message::new());
        let payloads = vec![PacketPayload::zero(8), PacketPayload::zero(8)];
        assert!(matches!(
            execute_and_decode(&a, &spec, &payloads),
            Err(ActionError::DecodeFailure { .. })
        ));
        assert!(!action_decodable(&a, &spec));
    }

    #[test]
    fn payload_count_and_width_are_checked() {
        let spec = swap_spec();
        let a = k_cycle_action(&spec, &UserCycle::new(vec![1, 2]), &[1, 0]).unwrap();
        assert!(matches!(
            execute_and_decode(&a, &spec, &[PacketPayload::zero(8)]),
            Err(ActionError::PayloadCount { expected: 2, got: 1 })
        ));
        assert!(matches!(
            execute_and_decode(&a, &spec, &[PacketPayload::zero(8), PacketPayload::zero(16)]),
            Err(ActionError::PayloadLength)
        ));
    }

    #[test]
    fn generate_direct_only_yields_one_action_per_type() {
        let spec = three_user_spec();
        let set = generate_action_set(&spec, ActionSetOptions::direct_only());
        assert_eq!(set.len(), 12);
        assert!(set.is_concrete());
    }

    #[test]
    fn generate_full_three_user_set() {
        let spec = three_user_spec();
        let set = generate_action_set(&spec, ActionSetOptions::default());
        // 12 direct + 12 two-cycle + 16 three-cycle + 1 double
        assert_eq!(set.len(), 41);
        let doubles = set
            .entries()
            .iter()
            .filter(|e| matches!(e, ActionEntry::Concrete(a) if a.kind() == ActionKind::DoubleCycle))
            .count();
        assert_eq!(doubles, 1);
        // ids are positional and ascending
        for (i, e) in set.entries().iter().enumerate() {
            assert_eq!(e.id(), i);
        }
    }

    #[test]
    fn generate_template_three_user_set() {
        let spec = three_user_spec();
        let set = generate_action_set(&spec, ActionSetOptions::default().templated());
        // 12 direct + 3 two-cycle + 2 three-cycle + 1 double templates
        assert_eq!(set.len(), 18);
        assert!(!set.is_concrete());
        assert!(set.concrete_actions().is_none());
    }

    #[test]
    fn relay_mode_adds_uplink_slots() {
        let spec = swap_spec();
        let set = generate_action_set(
            &spec,
            ActionSetOptions { max_cycle_len: 2, double_cycles: false, relay_mode: true, template: false },
        );
        for e in set.entries() {
            if let ActionEntry::Concrete(a) = e {
                match a.kind() {
                    ActionKind::Direct => assert_eq!(a.frame_len(), 2),
                    ActionKind::KCycle { k: 2 } => assert_eq!(a.frame_len(), 3),
                    other => panic!("unexpected kind {other:?}"),
                }
            }
        }
    }

    #[test]
    fn executability_of_generated_actions() {
        let spec = three_user_spec();
        let set = generate_action_set(&spec, ActionSetOptions::default());
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for e in set.entries() {
            let ActionEntry::Concrete(a) = e else { unreachable!() };
            let payloads: Vec<PacketPayload> = (0..a.total_cleared())
                .map(|_| PacketPayload::random(64, &mut rng))
                .collect();
            execute_and_decode(a, &spec, &payloads).unwrap_or_else(|err| {
                panic!("action {} not executable: {err}", a.dump_line())
            });
        }
    }

    #[test]
    fn template_binding_prefers_larger_backlogs() {
        let spec = three_user_spec();
        let set = generate_action_set(&spec, ActionSetOptions::default().templated());
        let mut backlogs = vec![0u64; 12];
        backlogs[7] = 9; // type 8: dest 2, side {1,3}
        backlogs[5] = 3; // type 6: dest 2, side {1}
        backlogs[1] = 5; // type 2: dest 1, side {2}
        for e in set.entries() {
            if let ActionEntry::KCycleTemplate { cycle, .. } = e {
                if cycle.nodes() == [1, 2] {
                    let (t, mu) = e.bind(&backlogs);
                    assert_eq!(t, 1);
                    assert_eq!(mu, vec![(1, 1), (7, 1)]);
                    let bound = e.bind_concrete(&spec, &backlogs).unwrap();
                    assert_eq!(bound.clearance()[7], 1);
                    assert_eq!(bound.clearance()[1], 1);
                    return;
                }
            }
        }
        panic!("expected a [1,2] cycle template");
    }

    #[test]
    fn verify_identity_code_and_truncations() {
        let g = crate::graph::DemandGraph::build(
            2,
            vec![users(&[2]), users(&[1])],
            vec![users(&[1]), users(&[2])],
        )
        .unwrap();
        let uncoded: Vec<BTreeSet<u32>> = vec![users(&[1]), users(&[2])];
        assert!(verify_linear_code(&g, &uncoded));
        assert!(!verify_linear_code(&g, &[]));
        let mixed: Vec<BTreeSet<u32>> = vec![users(&[1, 2])];
        assert!(verify_linear_code(&g, &mixed));
    }

    #[test]
    fn decode_agreement_with_verify_on_induced_graph() {
        let spec = three_user_spec();
        let set = generate_action_set(&spec, ActionSetOptions::default());
        for e in set.entries() {
            let ActionEntry::Concrete(a) = e else { unreachable!() };
            let induced = induced_subgraph(a, &spec);
            let refs = a.cleared_refs();
            let messages: Vec<BTreeSet<u32>> = a
                .plan()
                .iter()
                .map(|msg| {
                    msg.iter()
                        .map(|r| refs.iter().position(|x| x == r).unwrap() as u32 + 1)
                        .collect()
                })
                .collect();
            assert_eq!(
                action_decodable(a, &spec),
                verify_linear_code(&induced, &messages),
                "disagreement on {}",
                a.dump_line()
            );
        }
    }

    #[test]
    fn payload_round_trip_across_widths() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for bits in [1usize, 8, 128, 1024] {
            let a = PacketPayload::random(bits, &mut rng);
            let b = PacketPayload::random(bits, &mut rng);
            let mut mixed = a.clone();
            mixed.xor_assign(&b);
            mixed.xor_assign(&b);
            assert_eq!(mixed, a, "width {bits}");
        }
    }

    #[test]
    fn dump_is_stable() {
        let spec = swap_spec();
        let set = generate_action_set(
            &spec,
            ActionSetOptions { max_cycle_len: 2, double_cycles: false, relay_mode: false, template: false },
        );
        assert_eq!(
            set.dump(),
            "0 direct T=1 mu=[1,0] plan=[{p1}]\n\
             1 direct T=1 mu=[0,1] plan=[{p1}]\n\
             2 2-cycle T=1 mu=[1,1] plan=[{p1,p2}]\n"
        );
        let again = generate_action_set(
            &spec,
            ActionSetOptions { max_cycle_len: 2, double_cycles: false, relay_mode: false, template: false },
        );
        assert_eq!(set.dump(), again.dump());
    }
}
