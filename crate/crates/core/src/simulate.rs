//! Misbehaving servers and pass-probability measurement.
//!
//! A [`Scenario`] fixes the data, the token header and one [`ServerModel`]
//! per server. Every model is a deterministic function of
//! `(β, stored state, seed)`. Models that "draw" something hash the seed
//! with the server index and challenge (and, in Monte-Carlo runs, the
//! trial number) into a fresh ChaCha20 stream, so results never depend on
//! evaluation order.

use std::collections::BTreeMap;
use std::fmt;

use crate::codes::{CodeScheme, Message};
use crate::error::{usage, Error, Result};
use crate::field::{ceil_log2, BigNat, FieldElement};
use crate::protocol::{
    honest_shard_response, verify, AuditToken, AuditVerdict, ChallengeRng, ProtocolScheme, Reply,
    ShardData, TokenHeader,
};

/// Largest `n` an exhaustive sweep will visit.
pub const SWEEP_LIMIT: usize = 1 << 20;

#[derive(Debug, Clone, PartialEq)]
pub enum AmnesiacAnswer {
    Constant(u64),
    /// A fresh uniform element per challenge (and per trial).
    Uniform,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ServerModel {
    Honest,
    /// Stores nothing.
    Amnesiac(AmnesiacAnswer),
    /// Keeps the leading `fraction` of its shard; the rest is replaced by
    /// a guess frozen per `(seed, server, position)`, so the kept sets of
    /// different fractions are nested and share one guess.
    Partial {
        fraction: f64,
    },
    /// Stores these symbol values instead of its shard and answers
    /// honestly for them.
    Substitute(Vec<u64>),
    /// Adds `delta` to the honest answer.
    Offset(u64),
    /// Servers with the same `group` pool their storage, keeping the
    /// leading `fraction` of their concatenated shards. The lowest-index
    /// member answers the group's summed hash; the others answer zero.
    Collude {
        group: u32,
        fraction: f64,
    },
    /// Never answers when `probability >= 1`, otherwise skips each
    /// challenge with that probability.
    Silent {
        probability: f64,
    },
}

impl fmt::Display for ServerModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ServerModel::Honest => write!(f, "honest"),
            ServerModel::Amnesiac(AmnesiacAnswer::Constant(c)) => write!(f, "amnesiac-const{c}"),
            ServerModel::Amnesiac(AmnesiacAnswer::Uniform) => write!(f, "amnesiac-uniform"),
            ServerModel::Partial { fraction } => write!(f, "partial{fraction}"),
            ServerModel::Substitute(_) => write!(f, "substitute"),
            ServerModel::Offset(d) => write!(f, "offset{d}"),
            ServerModel::Collude { group, fraction } => write!(f, "collude{group}-{fraction}"),
            ServerModel::Silent { probability } => write!(f, "silent{probability}"),
        }
    }
}

/// Parses `honest`, `amnesiac`, `amnesiac:C`, `partial:F`, `offset:D`,
/// `silent`, `silent:P` or `collude:G:F`.
impl std::str::FromStr for ServerModel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(':').collect();
        let bad = || usage(format!("cannot parse server model {s:?}"));
        let num = |t: &str| t.parse::<u64>().map_err(|_| bad());
        let frac = |t: &str| t.parse::<f64>().map_err(|_| bad());
        Ok(match parts.as_slice() {
            ["honest"] => ServerModel::Honest,
            ["amnesiac"] => ServerModel::Amnesiac(AmnesiacAnswer::Uniform),
            ["amnesiac", c] => ServerModel::Amnesiac(AmnesiacAnswer::Constant(num(c)?)),
            ["partial", f] => ServerModel::Partial { fraction: frac(f)? },
            ["offset", d] => ServerModel::Offset(num(d)?),
            ["silent"] => ServerModel::Silent { probability: 1.0 },
            ["silent", p] => ServerModel::Silent {
                probability: frac(p)?,
            },
            ["collude", g, f] => ServerModel::Collude {
                group: num(g)? as u32,
                fraction: frac(f)?,
            },
            _ => return Err(bad()),
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Stored {
    Symbols(Vec<FieldElement>),
    Integer(BigNat),
}

impl Stored {
    fn view(&self) -> ShardData<'_> {
        match self {
            Stored::Symbols(s) => ShardData::Symbols(s),
            Stored::Integer(x) => ShardData::Integer(x),
        }
    }
}

#[derive(Debug, Clone)]
enum Behaviour {
    /// Answers for its own (possibly altered) copy.
    Holds(Stored),
    /// Answers the sum over several pooled copies `(stored, offset)`.
    Leads(Vec<(Stored, usize)>),
    Zero,
    Constant(u64),
    Uniform,
    Offset(u64),
    Silent(f64),
}

const TAG_GUESS: u64 = 1;
const TAG_UNIFORM: u64 = 2;
const TAG_SILENT: u64 = 3;

fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// A uniform index in `[0, n)` determined by `seed` and `tags`.
fn keyed_index(seed: u64, tags: [u64; 4], n: u64) -> u64 {
    let key = tags.iter().fold(mix(seed), |acc, &t| mix(acc ^ t));
    ChallengeRng::new(key).index(n)
}

/// The data, the protocol and one model per server.
#[derive(Debug, Clone)]
pub struct Scenario<'a> {
    msg: &'a Message,
    header: TokenHeader,
    models: Vec<ServerModel>,
    behaviour: Vec<Behaviour>,
    stored_bits: Vec<u64>,
    seed: u64,
}

impl<'a> Scenario<'a> {
    pub fn new(
        msg: &'a Message,
        header: TokenHeader,
        models: Vec<ServerModel>,
        seed: u64,
    ) -> Result<Self> {
        if models.len() != header.servers {
            return Err(usage(format!(
                "{} server models for {} servers",
                models.len(),
                header.servers
            )));
        }
        let mut s = Scenario {
            msg,
            header,
            behaviour: Vec::with_capacity(models.len()),
            stored_bits: Vec::with_capacity(models.len()),
            models,
            seed,
        };
        for i in 0..s.models.len() {
            let (b, bits) = s.build(i)?;
            s.behaviour.push(b);
            s.stored_bits.push(bits);
        }
        Ok(s)
    }

    pub fn header(&self) -> &TokenHeader {
        &self.header
    }

    pub fn models(&self) -> &[ServerModel] {
        &self.models
    }

    /// State each server keeps, in bits.
    pub fn stored_bits(&self) -> &[u64] {
        &self.stored_bits
    }

    pub fn total_stored_bits(&self) -> u64 {
        self.stored_bits.iter().sum()
    }

    fn unit_bits(&self) -> u64 {
        match self.header.code.scheme {
            CodeScheme::ReedSolomon => ceil_log2(self.header.code.max_alphabet()) as u64,
            CodeScheme::Crt => 8,
        }
    }

    fn offset(&self, i: usize) -> usize {
        if self.header.scheme == ProtocolScheme::Single {
            0
        } else {
            self.msg.shard_offset(i)
        }
    }

    /// The honest shard of server `i` as units: symbols or big-endian bytes.
    fn shard_units(&self, i: usize) -> Result<Vec<u64>> {
        let single = self.header.scheme == ProtocolScheme::Single;
        match self.header.code.scheme {
            CodeScheme::ReedSolomon => {
                let s = if single {
                    self.msg.symbols()?
                } else {
                    self.msg.shard_symbols(i)?
                };
                Ok(s.iter().map(FieldElement::value).collect())
            }
            CodeScheme::Crt => {
                let x = self.msg.shard_integer(if single { 0 } else { i })?;
                let bytes = x.to_bytes_be_padded(self.msg.layout().shard_len)?;
                Ok(bytes.into_iter().map(u64::from).collect())
            }
        }
    }

    fn units_to_stored(&self, units: &[u64]) -> Result<Stored> {
        match self.header.code.scheme {
            CodeScheme::ReedSolomon => {
                let f = self.header.code.field().expect("RS code");
                if let Some(v) = units.iter().find(|&&v| v >= f.modulus()) {
                    return Err(usage(format!("symbol {v} is not in {f}")));
                }
                Ok(Stored::Symbols(
                    units.iter().map(|&v| f.element(v)).collect(),
                ))
            }
            CodeScheme::Crt => {
                if units.iter().any(|&v| v > 255) {
                    return Err(usage("integer shards are stored as bytes"));
                }
                let bytes: Vec<u8> = units.iter().map(|&v| v as u8).collect();
                Ok(Stored::Integer(BigNat::from_bytes_be(&bytes)))
            }
        }
    }

    fn guessed(&self, server: usize, units: &[u64], keep: usize) -> Vec<u64> {
        let range = match self.header.code.scheme {
            CodeScheme::ReedSolomon => self.header.code.max_alphabet(),
            CodeScheme::Crt => 256,
        };
        units
            .iter()
            .enumerate()
            .map(|(pos, &v)| {
                if pos < keep {
                    v
                } else {
                    keyed_index(self.seed, [TAG_GUESS, server as u64, pos as u64, 0], range)
                }
            })
            .collect()
    }

    fn build(&self, i: usize) -> Result<(Behaviour, u64)> {
        let unit_bits = self.unit_bits();
        Ok(match &self.models[i] {
            ServerModel::Honest => {
                let units = self.shard_units(i)?;
                (
                    Behaviour::Holds(self.units_to_stored(&units)?),
                    units.len() as u64 * unit_bits,
                )
            }
            ServerModel::Amnesiac(AmnesiacAnswer::Constant(c)) => (Behaviour::Constant(*c), 0),
            ServerModel::Amnesiac(AmnesiacAnswer::Uniform) => (Behaviour::Uniform, 0),
            ServerModel::Partial { fraction } => {
                check_fraction(*fraction)?;
                let units = self.shard_units(i)?;
                let keep = (fraction * units.len() as f64).floor() as usize;
                let stored = self.units_to_stored(&self.guessed(i, &units, keep))?;
                (Behaviour::Holds(stored), keep as u64 * unit_bits)
            }
            ServerModel::Substitute(values) => {
                let units = self.shard_units(i)?;
                if values.len() != units.len() {
                    return Err(usage("substitute shard must have the shard's length"));
                }
                (
                    Behaviour::Holds(self.units_to_stored(values)?),
                    units.len() as u64 * unit_bits,
                )
            }
            ServerModel::Offset(d) => {
                let units = self.shard_units(i)?;
                (Behaviour::Offset(*d), units.len() as u64 * unit_bits)
            }
            ServerModel::Silent { probability } => {
                if !(0.0..=1.0).contains(probability) {
                    return Err(usage("silence probability must lie in [0, 1]"));
                }
                (Behaviour::Silent(*probability), 0)
            }
            ServerModel::Collude { group, fraction } => {
                check_fraction(*fraction)?;
                let members: Vec<usize> = self
                    .models
                    .iter()
                    .enumerate()
                    .filter_map(|(j, m)| match m {
                        ServerModel::Collude {
                            group: g,
                            fraction: f,
                        } if g == group => Some((j, *f)),
                        _ => None,
                    })
                    .map(|(j, f)| {
                        if f == *fraction {
                            Ok(j)
                        } else {
                            Err(usage("colluding servers must share one storage fraction"))
                        }
                    })
                    .collect::<Result<_>>()?;
                if members[0] != i {
                    return Ok((Behaviour::Zero, 0));
                }
                let shards: Vec<Vec<u64>> = members
                    .iter()
                    .map(|&j| self.shard_units(j))
                    .collect::<Result<_>>()?;
                let total: usize = shards.iter().map(Vec::len).sum();
                let mut keep = (fraction * total as f64).floor() as usize;
                let kept_bits = keep as u64 * unit_bits;
                let mut pooled = Vec::with_capacity(members.len());
                for (&j, units) in members.iter().zip(&shards) {
                    let here = keep.min(units.len());
                    keep -= here;
                    pooled.push((
                        self.units_to_stored(&self.guessed(j, units, here))?,
                        self.offset(j),
                    ));
                }
                (Behaviour::Leads(pooled), kept_bits)
            }
        })
    }

    fn hash(&self, stored: &Stored, offset: usize, beta: usize) -> Result<FieldElement> {
        honest_shard_response(
            self.header.scheme,
            &self.header.code,
            stored.view(),
            offset,
            beta,
        )
    }

    fn honest(&self, i: usize, beta: usize) -> Result<FieldElement> {
        let stored = self.units_to_stored(&self.shard_units(i)?)?;
        self.hash(&stored, self.offset(i), beta)
    }

    /// Server `i`'s reply to challenge `beta` in trial `trial`.
    pub fn reply(&self, i: usize, beta: usize, trial: u64) -> Result<Reply> {
        let field = self.header.code.position_field(beta)?;
        let answer = match &self.behaviour[i] {
            Behaviour::Holds(stored) => self.hash(stored, self.offset(i), beta)?,
            Behaviour::Leads(pooled) => pooled.iter().try_fold(field.zero(), |acc, (s, off)| {
                Ok::<_, Error>(acc + self.hash(s, *off, beta)?)
            })?,
            Behaviour::Zero => field.zero(),
            Behaviour::Constant(c) => field.element(*c),
            Behaviour::Uniform => field.element(keyed_index(
                self.seed,
                [TAG_UNIFORM, i as u64, beta as u64, trial],
                field.modulus(),
            )),
            Behaviour::Offset(d) => self.honest(i, beta)? + field.element(*d),
            Behaviour::Silent(p) => {
                let silent = *p >= 1.0
                    || (keyed_index(
                        self.seed,
                        [TAG_SILENT, i as u64, beta as u64, trial],
                        1 << 32,
                    ) as f64)
                        < p * 4_294_967_296.0;
                if silent {
                    return Ok(Reply::NoResponse);
                }
                self.honest(i, beta)?
            }
        };
        Ok(Reply::Answer(answer))
    }

    pub fn replies(&self, beta: usize, trial: u64) -> Result<Vec<Reply>> {
        (0..self.models.len())
            .map(|i| self.reply(i, beta, trial))
            .collect()
    }

    /// Runs one audit at `beta`. A protocol error (silence under the
    /// linear scheme) counts as a failed audit.
    pub fn audit(&self, beta: usize, trial: u64) -> Result<Outcome> {
        let token = AuditToken {
            header: self.header.clone(),
            record: self.header.make_record(self.msg, beta)?,
        };
        let replies = self.replies(beta, trial)?;
        match verify(&token, &replies) {
            Ok(v) => Ok(Outcome::Verdict(v)),
            Err(Error::Protocol(_)) => Ok(Outcome::Unverifiable {
                silent: replies
                    .iter()
                    .enumerate()
                    .filter_map(|(i, r)| (*r == Reply::NoResponse).then_some(i))
                    .collect(),
            }),
            Err(e) => Err(e),
        }
    }

    fn model_label(&self) -> String {
        let labels: Vec<String> = self.models.iter().map(ToString::to_string).collect();
        labels.join("+")
    }
}

fn check_fraction(f: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&f) {
        return Err(usage(format!("storage fraction {f} outside [0, 1]")));
    }
    Ok(())
}

/// Result of one simulated audit.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Outcome {
    Verdict(AuditVerdict),
    /// The scheme cannot verify with missing replies.
    Unverifiable {
        silent: Vec<usize>,
    },
}

impl Outcome {
    pub fn passed(&self) -> bool {
        matches!(self, Outcome::Verdict(v) if v.passed())
    }

    /// Servers the client learns something bad about.
    pub fn flagged(&self) -> Vec<usize> {
        let mut out = match self {
            Outcome::Verdict(AuditVerdict::Bit { failed, .. }) => failed.clone(),
            Outcome::Verdict(AuditVerdict::Located { cheaters, erased }) => {
                cheaters.iter().chain(erased).copied().collect()
            }
            Outcome::Verdict(AuditVerdict::DecodingFailure { erased }) => erased.clone(),
            Outcome::Unverifiable { silent } => silent.clone(),
        };
        out.sort_unstable();
        out
    }

    pub fn label(&self) -> &'static str {
        match self {
            Outcome::Verdict(AuditVerdict::Bit { pass: true, .. }) => "pass",
            Outcome::Verdict(AuditVerdict::Bit { pass: false, .. }) => "fail",
            Outcome::Verdict(AuditVerdict::Located { cheaters, .. }) if cheaters.is_empty() => {
                "pass"
            }
            Outcome::Verdict(AuditVerdict::Located { .. }) => "located",
            Outcome::Verdict(AuditVerdict::DecodingFailure { .. }) => "decoding_failure",
            Outcome::Unverifiable { .. } => "no_response",
        }
    }
}

/// Exact pass probability as `passes / n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PassCount {
    pub passes: u64,
    pub n: u64,
}

impl PassCount {
    pub fn probability(&self) -> f64 {
        self.passes as f64 / self.n as f64
    }
}

/// Fraction of challenges `β ∈ [n]` on which the audit passes.
pub fn exhaustive_pass_probability(scenario: &Scenario<'_>) -> Result<PassCount> {
    let n = scenario.header.code.n;
    if n > SWEEP_LIMIT {
        return Err(usage(format!(
            "n = {n} exceeds the exhaustive sweep limit 2^20"
        )));
    }
    let mut passes = 0;
    for beta in 0..n {
        if scenario.audit(beta, 0)?.passed() {
            passes += 1;
        }
    }
    Ok(PassCount {
        passes,
        n: n as u64,
    })
}

/// Monte-Carlo audit statistics.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialReport {
    pub trials: u64,
    pub passes: u64,
    /// Per server, how many trials flagged it.
    pub flags: Vec<u64>,
    pub histogram: BTreeMap<&'static str, u64>,
}

impl TrialReport {
    pub fn pass_rate(&self) -> f64 {
        self.passes as f64 / self.trials as f64
    }

    /// Binomial standard error of [`Self::pass_rate`].
    pub fn std_error(&self) -> f64 {
        let p = self.pass_rate();
        (p * (1.0 - p) / self.trials as f64).sqrt()
    }

    pub fn flag_rates(&self) -> Vec<f64> {
        self.flags
            .iter()
            .map(|&f| f as f64 / self.trials as f64)
            .collect()
    }
}

/// Runs `trials` audits with challenges drawn from `seed`.
pub fn run_audit_trials(scenario: &Scenario<'_>, trials: u64, seed: u64) -> Result<TrialReport> {
    if trials == 0 {
        return Err(usage("need at least one trial"));
    }
    let mut rng = ChallengeRng::new(seed);
    let mut report = TrialReport {
        trials,
        passes: 0,
        flags: vec![0; scenario.header.servers],
        histogram: BTreeMap::new(),
    };
    for t in 0..trials {
        let beta = rng.index(scenario.header.code.n as u64) as usize;
        let outcome = scenario.audit(beta, t)?;
        report.passes += outcome.passed() as u64;
        for i in outcome.flagged() {
            report.flags[i] += 1;
        }
        *report.histogram.entry(outcome.label()).or_insert(0) += 1;
    }
    Ok(report)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TradeoffRow {
    pub fraction: f64,
    pub stored_bits: u64,
    pub pass: PassCount,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TradeoffTable {
    pub rows: Vec<TradeoffRow>,
}

impl TradeoffTable {
    /// Whether pass probability never drops as stored bits grow. Below
    /// full storage every point sits at the `(k-1)/n` agreement floor and
    /// can move either way, so this is reported, not guaranteed.
    pub fn monotone(&self) -> bool {
        let mut rows = self.rows.clone();
        rows.sort_by_key(|r| r.stored_bits);
        rows.windows(2)
            .all(|w| w[0].pass.passes <= w[1].pass.passes)
    }
}

/// Exact pass probability with every server running `Partial(f)`, for
/// each `f` in `fractions`.
pub fn storage_tradeoff_sweep(
    msg: &Message,
    header: &TokenHeader,
    fractions: &[f64],
    seed: u64,
) -> Result<TradeoffTable> {
    let rows = fractions
        .iter()
        .map(|&fraction| {
            let models = vec![ServerModel::Partial { fraction }; header.servers];
            let scenario = Scenario::new(msg, header.clone(), models, seed)?;
            Ok(TradeoffRow {
                fraction,
                stored_bits: scenario.total_stored_bits(),
                pass: exhaustive_pass_probability(&scenario)?,
            })
        })
        .collect::<Result<_>>()?;
    Ok(TradeoffTable { rows })
}

/// One line of a simulation report.
#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub scheme: ProtocolScheme,
    pub q: u64,
    pub k: usize,
    pub n: usize,
    pub s: usize,
    pub r: usize,
    pub e: usize,
    pub model: String,
    pub stored_bits: u64,
    pub pass_prob: f64,
    /// Audits behind `pass_prob`; `n` for an exhaustive sweep.
    pub trials: u64,
}

pub const CSV_HEADER: &str = "scheme,q,k,n,s,r,e,model,stored_bits,pass_prob,trials";

impl ReportRow {
    pub fn new(scenario: &Scenario<'_>, pass_prob: f64, trials: u64) -> Self {
        let h = &scenario.header;
        ReportRow {
            scheme: h.scheme,
            q: h.code.max_alphabet(),
            k: h.code.k,
            n: h.code.n,
            s: h.servers,
            r: h.budget.r,
            e: h.budget.e,
            model: scenario.model_label(),
            stored_bits: scenario.total_stored_bits(),
            pass_prob,
            trials,
        }
    }

    fn fields(&self) -> [(&'static str, String); 11] {
        [
            ("scheme", self.scheme.to_string()),
            ("q", self.q.to_string()),
            ("k", self.k.to_string()),
            ("n", self.n.to_string()),
            ("s", self.s.to_string()),
            ("r", self.r.to_string()),
            ("e", self.e.to_string()),
            ("model", self.model.clone()),
            ("stored_bits", self.stored_bits.to_string()),
            ("pass_prob", self.pass_prob.to_string()),
            ("trials", self.trials.to_string()),
        ]
    }

    /// Space-separated `key=value` pairs.
    pub fn to_kv(&self) -> String {
        let parts: Vec<String> = self
            .fields()
            .iter()
            .map(|(k, v)| format!("{k}={v}"))
            .collect();
        parts.join(" ")
    }

    pub fn to_csv(&self) -> String {
        let parts: Vec<String> = self.fields().into_iter().map(|(_, v)| v).collect();
        parts.join(",")
    }
}
