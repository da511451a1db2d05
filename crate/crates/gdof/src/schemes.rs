//! Regime classification, layered signal layouts, and the matching
//! encoder/decoder pair.
//!
//! Each layered regime places message digits ("qits") on a window of base-Q
//! levels so that, after the channel shifts interference by `M` levels, every
//! received level is either interference-free or resolvable by successive
//! peeling. The four constructions:
//!
//! * very strong (`alpha >= 2`): `N = floor(M/(alpha-1))` information levels;
//!   interference lands entirely above the signal and is stripped first.
//! * strong (`1 < alpha < 2`): `N = floor(M*alpha/(2(alpha-1)))` information
//!   levels plus `N - M` repeated levels on top. The repeats let the receiver
//!   recover the interference profile it needs to peel the overlapped levels.
//! * moderately weak (`2/3 <= alpha < 1`): block pattern
//!   `[M info | M zero | N copy | M info | N info]` from the least significant
//!   level up, `N = floor(M(3*alpha-2)/(2(1-alpha)))`. The zero block exposes
//!   part of the interferers' copy block; the copies mirror the top info
//!   block, which closes the peeling chain.
//! * weak (`1/2 <= alpha < 2/3`): `[M info | M zero | N info]` with
//!   `N = floor(M(2*alpha-1)/(1-alpha))`; interference falls only on the zero
//!   block and below the decoding window.
//!
//! Digit alphabets exclude 0 and the top of the range so that the receiver's
//! composite signal is carry-free and keeps a one-digit noise cushion at every
//! level, for any number of users:
//! `{1..floor((Q-1)/(K-1)) - 1}` where desired and interfering digits never
//! share a level (very strong, weak), `{1..floor((Q-1)/K) - 1}` where they do
//! (strong, moderately weak). At `K = 2` these reduce to the familiar
//! `{1..Q-2}` and `{1..floor((Q-1)/2) - 1}`.

use crate::channel::{Alpha, ChannelError, ChannelParams};
use crate::qary::QaryVector;
use num::rational::Ratio;
use num::One;
use rand::{Rng, RngExt};
use std::fmt;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SchemeError {
    #[error("no layered construction for the {0} regime")]
    RegimeUnsupported(Regime),
    #[error("alpha = {alpha} lies outside the {regime} regime")]
    AlphaOutOfRange { alpha: Alpha, regime: Regime },
    #[error("construction degenerates at M = {levels}: no information levels fit the power budget")]
    NoCapacity { levels: u32 },
    #[error("message has {got} digits, layout carries {want}")]
    MessageLength { got: usize, want: usize },
    #[error("message digit {digit} outside alphabet {{{lo}..{hi}}}")]
    DigitOutOfAlphabet { digit: u32, lo: u32, hi: u32 },
    #[error(transparent)]
    Channel(#[from] ChannelError),
}

/// The five interference regimes of the W curve, plus the degenerate
/// `alpha = 1` point where the symmetric rate collapses to `1/K`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Regime {
    Noisy,
    Weak,
    ModeratelyWeak,
    AlphaOne,
    Strong,
    VeryStrong,
}

impl Regime {
    /// Partition of `alpha >= 0`; interval ends are left-closed below 1 and
    /// left-open above, so every alpha maps to exactly one regime.
    pub fn classify(alpha: Alpha) -> Regime {
        let a = alpha.ratio();
        if a < Ratio::new(1, 2) {
            Regime::Noisy
        } else if a < Ratio::new(2, 3) {
            Regime::Weak
        } else if a < Ratio::one() {
            Regime::ModeratelyWeak
        } else if a == Ratio::one() {
            Regime::AlphaOne
        } else if a < Ratio::from_integer(2) {
            Regime::Strong
        } else {
            Regime::VeryStrong
        }
    }

    pub fn has_layout(&self) -> bool {
        !matches!(self, Regime::Noisy | Regime::AlphaOne)
    }
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            Regime::Noisy => "noisy",
            Regime::Weak => "weak",
            Regime::ModeratelyWeak => "moderately-weak",
            Regime::AlphaOne => "alpha-one",
            Regime::Strong => "strong",
            Regime::VeryStrong => "very-strong",
        };
        f.write_str(name)
    }
}

/// Contiguous digit alphabet `{lo..hi}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DigitAlphabet {
    pub lo: u32,
    pub hi: u32,
}

impl DigitAlphabet {
    /// Alphabet for `regime` at base `Q` with `K` users; see the module docs.
    pub fn for_regime(regime: Regime, base: u32, users: u32) -> DigitAlphabet {
        let divisor = match regime {
            Regime::Strong | Regime::ModeratelyWeak => users,
            _ => users - 1,
        };
        let hi = ((base - 1) / divisor).saturating_sub(1).max(1);
        DigitAlphabet { lo: 1, hi }
    }

    pub fn size(&self) -> u32 {
        self.hi - self.lo + 1
    }

    pub fn contains(&self, digit: u32) -> bool {
        (self.lo..=self.hi).contains(&digit)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BlockKind {
    Info,
    Zero,
    /// Repeats information levels in reverse order: the copy at `start + i`
    /// duplicates level `first_source - i`.
    Copy { first_source: u32 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Block {
    pub kind: BlockKind,
    pub start: u32,
    pub len: u32,
}

/// Role of a single transmit level, after flattening blocks.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PositionRole {
    Info,
    Zero,
    Copy { source: u32 },
}

/// A regime's placement of message digits on levels `0..span` (least
/// significant first), together with its digit alphabet.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SignalLayout {
    pub regime: Regime,
    pub span: u32,
    pub blocks: Vec<Block>,
    pub alphabet: DigitAlphabet,
    roles: Vec<PositionRole>,
    info_positions: Vec<u32>,
}

impl SignalLayout {
    /// Assembles a layout from explicit blocks. Blocks must tile `0..span` in
    /// order and copy sources must land on information levels (panics
    /// otherwise). Exposed so tests and experiments can build custom or
    /// deliberately broken layouts; `build_layout` covers the standard ones.
    pub fn from_blocks(
        regime: Regime,
        alphabet: DigitAlphabet,
        blocks: Vec<Block>,
    ) -> SignalLayout {
        let mut roles = Vec::new();
        for block in &blocks {
            assert_eq!(block.start as usize, roles.len(), "blocks must tile the span in order");
            for i in 0..block.len {
                roles.push(match block.kind {
                    BlockKind::Info => PositionRole::Info,
                    BlockKind::Zero => PositionRole::Zero,
                    BlockKind::Copy { first_source } => {
                        PositionRole::Copy { source: first_source - i }
                    }
                });
            }
        }
        let span = roles.len() as u32;
        let info_positions: Vec<u32> = (0..span)
            .filter(|&p| roles[p as usize] == PositionRole::Info)
            .collect();
        for role in &roles {
            if let PositionRole::Copy { source } = role {
                assert_eq!(
                    roles[*source as usize],
                    PositionRole::Info,
                    "copy source must be an information level"
                );
            }
        }
        SignalLayout { regime, span, blocks, alphabet, roles, info_positions }
    }

    pub fn role(&self, position: u32) -> PositionRole {
        self.roles[position as usize]
    }

    pub fn roles(&self) -> &[PositionRole] {
        &self.roles
    }

    pub fn info_positions(&self) -> &[u32] {
        &self.info_positions
    }

    pub fn info_count(&self) -> usize {
        self.info_positions.len()
    }
}

fn floor_u32(r: Ratio<i64>) -> u32 {
    r.floor().to_integer() as u32
}

/// Builds the layered layout for `regime`.
///
/// Accepts alpha on the regime's closure where the neighbouring construction
/// coincides (weak up to 2/3, strong up to 2), so boundary agreement can be
/// checked; `Regime::classify` still assigns the boundary point to the upper
/// regime.
pub fn build_layout(
    regime: Regime,
    users: u32,
    base: u32,
    levels: u32,
    alpha: Alpha,
) -> Result<SignalLayout, SchemeError> {
    let a = alpha.ratio();
    let m = Ratio::from_integer(levels as i64);
    let one = Ratio::one();
    let alphabet = DigitAlphabet::for_regime(regime, base, users);
    let out_of_range = || SchemeError::AlphaOutOfRange { alpha, regime };

    let blocks = match regime {
        Regime::VeryStrong => {
            if a < Ratio::from_integer(2) {
                return Err(out_of_range());
            }
            let n = floor_u32(m / (a - one));
            if n == 0 {
                return Err(SchemeError::NoCapacity { levels });
            }
            vec![Block { kind: BlockKind::Info, start: 0, len: n }]
        }
        Regime::Strong => {
            if a <= one || a > Ratio::from_integer(2) {
                return Err(out_of_range());
            }
            let n = floor_u32(m * a / ((a - one) * 2));
            let copies = n - levels; // alpha < 2 forces n >= M
            let mut blocks = vec![Block { kind: BlockKind::Info, start: 0, len: n }];
            if copies > 0 {
                blocks.push(Block {
                    kind: BlockKind::Copy { first_source: n - levels - 1 },
                    start: n,
                    len: copies,
                });
            }
            blocks
        }
        Regime::ModeratelyWeak => {
            if a < Ratio::new(2, 3) || a >= one {
                return Err(out_of_range());
            }
            let n = floor_u32(m * (a * 3 - 2) / ((one - a) * 2));
            let mut blocks = vec![
                Block { kind: BlockKind::Info, start: 0, len: levels },
                Block { kind: BlockKind::Zero, start: levels, len: levels },
            ];
            let mut at = 2 * levels;
            if n > 0 {
                blocks.push(Block {
                    kind: BlockKind::Copy { first_source: 2 * n + 3 * levels - 1 },
                    start: at,
                    len: n,
                });
                at += n;
            }
            blocks.push(Block { kind: BlockKind::Info, start: at, len: levels });
            at += levels;
            if n > 0 {
                blocks.push(Block { kind: BlockKind::Info, start: at, len: n });
            }
            blocks
        }
        Regime::Weak => {
            if a < Ratio::new(1, 2) || a > Ratio::new(2, 3) {
                return Err(out_of_range());
            }
            let n = floor_u32(m * (a * 2 - 1) / (one - a));
            let mut blocks = vec![
                Block { kind: BlockKind::Info, start: 0, len: levels },
                Block { kind: BlockKind::Zero, start: levels, len: levels },
            ];
            if n > 0 {
                blocks.push(Block { kind: BlockKind::Info, start: 2 * levels, len: n });
            }
            blocks
        }
        Regime::Noisy | Regime::AlphaOne => return Err(SchemeError::RegimeUnsupported(regime)),
    };
    Ok(SignalLayout::from_blocks(regime, alphabet, blocks))
}

/// One user's message: the digits carried by the layout's information levels,
/// listed from the least significant level up.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Message {
    pub digits: Vec<u32>,
}

impl Message {
    pub fn random<R: Rng>(alphabet: DigitAlphabet, len: usize, rng: &mut R) -> Message {
        Message { digits: (0..len).map(|_| rng.random_range(alphabet.lo..=alphabet.hi)).collect() }
    }

    pub fn len(&self) -> usize {
        self.digits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.digits.is_empty()
    }
}

/// Maps a message onto the layout's levels: information levels take message
/// digits, zero levels 0, copy levels their source's digit.
pub fn encode(
    layout: &SignalLayout,
    base: u32,
    message: &Message,
) -> Result<QaryVector, SchemeError> {
    if message.len() != layout.info_count() {
        return Err(SchemeError::MessageLength {
            got: message.len(),
            want: layout.info_count(),
        });
    }
    for &d in &message.digits {
        if !layout.alphabet.contains(d) {
            return Err(SchemeError::DigitOutOfAlphabet {
                digit: d,
                lo: layout.alphabet.lo,
                hi: layout.alphabet.hi,
            });
        }
    }
    let mut digits = vec![0u32; layout.span as usize];
    for (&pos, &d) in layout.info_positions().iter().zip(&message.digits) {
        digits[pos as usize] = d;
    }
    for p in 0..layout.span {
        if let PositionRole::Copy { source } = layout.role(p) {
            digits[p as usize] = digits[source as usize];
        }
    }
    Ok(QaryVector::from_digits(base, digits).expect("layout digits stay below the base"))
}

/// Decoder output. `message` is always fully populated with the decoder's
/// best digit estimates; the flags record how trustworthy it is.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DecodedMessage {
    pub message: Message,
    /// Some recovered digit fell outside the transmit alphabet — a reliable
    /// sign of noise corruption on a noisy channel.
    pub out_of_alphabet: bool,
    /// Information levels the peeling never determined (0 for every valid
    /// layout; nonzero would mean the constraint graph has a gap).
    pub unresolved: u32,
}

/// Peeling decoder over the reduced composite `y` (digits `0..m`).
///
/// Unknowns are the desired signal's digits and the interferers' digit-sum
/// profile. Each received level contributes one linear constraint
/// `y[p] = desired[p] + interferer_sum[p - shift]` (terms outside their
/// windows vanish), zero levels pin both profiles to 0, and copy levels tie
/// pairs of unknowns together in both profiles — interferer sums inherit the
/// copy structure because every user transmits with the same layout. The
/// worklist resolves one-unknown constraints until a fixpoint.
pub fn decode(layout: &SignalLayout, params: &ChannelParams, y: &QaryVector) -> DecodedMessage {
    debug_assert_eq!(y.base(), params.base);
    debug_assert_eq!(layout.span, params.span);
    let span = layout.span as usize;
    let base = params.base as i64;
    let mut desired: Vec<Option<i64>> = vec![None; span];
    let mut interferer: Vec<Option<i64>> = vec![None; span];
    for p in 0..span {
        if layout.role(p as u32) == PositionRole::Zero {
            desired[p] = Some(0);
            interferer[p] = Some(0);
        }
    }

    loop {
        let mut progress = false;
        for p in 0..params.m as i64 {
            let r = y.digit_at(p as i32) as i64;
            let d = (p as usize) < span;
            let q = p - params.shift as i64;
            let v = (0..span as i64).contains(&q);
            match (d, v) {
                (true, false) => {
                    if desired[p as usize].is_none() {
                        desired[p as usize] = Some(r);
                        progress = true;
                    }
                }
                (false, true) => {
                    if interferer[q as usize].is_none() {
                        interferer[q as usize] = Some(r);
                        progress = true;
                    }
                }
                (true, true) => {
                    let (dp, vq) = (desired[p as usize], interferer[q as usize]);
                    if let (Some(known), None) = (dp, vq) {
                        interferer[q as usize] = Some((r - known).rem_euclid(base));
                        progress = true;
                    } else if let (None, Some(known)) = (dp, vq) {
                        desired[p as usize] = Some((r - known).rem_euclid(base));
                        progress = true;
                    }
                }
                (false, false) => {}
            }
        }
        for c in 0..span {
            if let PositionRole::Copy { source } = layout.role(c as u32) {
                let s = source as usize;
                for profile in [&mut desired, &mut interferer] {
                    match (profile[c], profile[s]) {
                        (Some(x), None) => {
                            profile[s] = Some(x);
                            progress = true;
                        }
                        (None, Some(x)) => {
                            profile[c] = Some(x);
                            progress = true;
                        }
                        _ => {}
                    }
                }
            }
        }
        if !progress {
            break;
        }
    }

    let mut out_of_alphabet = false;
    let mut unresolved = 0u32;
    let digits = layout
        .info_positions()
        .iter()
        .map(|&pos| match desired[pos as usize] {
            Some(d) => {
                if !layout.alphabet.contains(d as u32) {
                    out_of_alphabet = true;
                }
                d as u32
            }
            None => {
                unresolved += 1;
                layout.alphabet.lo
            }
        })
        .collect();
    DecodedMessage { message: Message { digits }, out_of_alphabet, unresolved }
}

/// A regime's construction bundled with the channel parameters it induces.
#[derive(Debug, Clone)]
pub struct Scheme {
    pub params: ChannelParams,
    pub layout: SignalLayout,
}

impl Scheme {
    /// Classifies `alpha` and builds the matching construction. Fails for the
    /// noisy regime and `alpha = 1`, which have no layered scheme.
    pub fn new(users: u32, base: u32, levels: u32, alpha: Alpha) -> Result<Scheme, SchemeError> {
        let regime = Regime::classify(alpha);
        let layout = build_layout(regime, users, base, levels, alpha)?;
        let params = ChannelParams::derive(users, base, levels, alpha, layout.span)?;
        debug_assert!(params.power_satisfied(layout.span));
        Ok(Scheme { params, layout })
    }

    /// Per-user symmetric rate in qits (base-Q units) per channel use.
    pub fn rate_qits(&self) -> f64 {
        symmetric_rate_qits(&self.layout, self.params.base)
    }
}

/// `info_count * log_Q |alphabet|`: each information level carries one
/// alphabet symbol per channel use.
pub fn symmetric_rate_qits(layout: &SignalLayout, base: u32) -> f64 {
    layout.info_count() as f64 * (layout.alphabet.size() as f64).ln() / (base as f64).ln()
}

fn softplus(x: f64) -> f64 {
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

/// Treat-interference-as-noise rate in bits:
/// `0.5 * log2(1 + SNR / (1 + (K-1) * SNR^alpha))`, evaluated in the log
/// domain so it stays finite for astronomically large SNR.
pub fn noisy_regime_rate_from_ln(ln_snr: f64, alpha: f64, users: u32) -> f64 {
    let ln_inr_total = ((users - 1) as f64).ln() + alpha * ln_snr;
    softplus(ln_snr - softplus(ln_inr_total)) / (2.0 * std::f64::consts::LN_2)
}

pub fn noisy_regime_rate(snr: f64, alpha: f64, users: u32) -> f64 {
    noisy_regime_rate_from_ln(snr.ln(), alpha, users)
}
