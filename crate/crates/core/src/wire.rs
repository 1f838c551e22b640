//! Newline-delimited JSON transport for running the protocol between two
//! processes.
//!
//! One message per line, strictly ordered. The verifier serves exactly one
//! session: hello, instance, then per shot either commit/challenge/response
//! (commit-first) or challenge/response/commit (challenge-first), with the
//! basis exchange spliced in on squaring interference shots, a verdict
//! after every shot, and a summary at the end. Any message out of turn or
//! with unknown fields aborts the session with an error message both sides
//! surface.
//!
//! Determinism carries over the wire: both parties draw from per-shot
//! streams of the run seed announced in the instance message, so a wire
//! session and an in-process run with the same configuration produce
//! identical shot records.

use std::io::{BufRead, BufReader, Read, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::numtheory::BitString;
use crate::protocol::{
    Challenge, Mode, ProtocolKind, Prover, PublicInstance, RunConfig, RunTally, ShotRecord,
    Verifier,
};
use crate::sim::Basis;

pub const WIRE_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum Message {
    Hello { role: String, version: u32 },
    Instance { public: PublicInstance, config: RunConfig },
    Commit { shot: u64, commitment: BitString },
    Challenge { shot: u64, challenge: Challenge },
    Response { shot: u64, response: BitString },
    BasisRequest { shot: u64, basis: Basis },
    BasisOutcome { shot: u64, outcome: u8 },
    Verdict { record: ShotRecord },
    Summary { tally: RunTally },
    Close,
    Error { message: String },
}

#[derive(Debug, Error)]
pub enum WireError {
    #[error("i/o failure: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed message: {0}")]
    Malformed(#[from] serde_json::Error),
    #[error("protocol violation: {0}")]
    Violation(String),
    #[error("peer reported: {0}")]
    Remote(String),
    #[error("peer closed the connection mid-session")]
    Disconnected,
}

pub type Result<T> = std::result::Result<T, WireError>;

fn violation(msg: impl Into<String>) -> WireError {
    WireError::Violation(msg.into())
}

/// One side of a line-oriented connection.
pub struct Endpoint<S: Read + Write> {
    reader: BufReader<S>,
}

impl<S: Read + Write> Endpoint<S> {
    pub fn new(stream: S) -> Self {
        Endpoint { reader: BufReader::new(stream) }
    }

    pub fn send(&mut self, msg: &Message) -> Result<()> {
        let mut line = serde_json::to_string(msg)?;
        line.push('\n');
        let w = self.reader.get_mut();
        w.write_all(line.as_bytes())?;
        w.flush()?;
        Ok(())
    }

    /// Receives the next message; a remote error report becomes `Remote`.
    pub fn recv(&mut self) -> Result<Message> {
        let mut line = String::new();
        if self.reader.read_line(&mut line)? == 0 {
            return Err(WireError::Disconnected);
        }
        let msg: Message = serde_json::from_str(line.trim_end())?;
        if let Message::Error { message } = msg {
            return Err(WireError::Remote(message));
        }
        Ok(msg)
    }

    /// Sends an error report, best-effort, before tearing down.
    pub fn report(&mut self, err: &WireError) {
        let _ = self.send(&Message::Error { message: err.to_string() });
    }
}

fn expect_shot(got: u64, want: u64, what: &str) -> Result<()> {
    if got == want {
        Ok(())
    } else {
        Err(violation(format!("{what} for shot {got}, expected shot {want}")))
    }
}

/// Serves one verifier session on an established connection. Every shot
/// record is streamed through `on_record`; the branch totals come back at
/// the end.
pub fn serve_verifier<S: Read + Write>(
    stream: S,
    verifier: &Verifier,
    cfg: &RunConfig,
    mut on_record: impl FnMut(&ShotRecord),
) -> Result<RunTally> {
    let mut ep = Endpoint::new(stream);
    let result = verifier_session(&mut ep, verifier, cfg, &mut on_record);
    if let Err(ref err) = result {
        ep.report(err);
    }
    result
}

fn verifier_session<S: Read + Write>(
    ep: &mut Endpoint<S>,
    verifier: &Verifier,
    cfg: &RunConfig,
    on_record: &mut impl FnMut(&ShotRecord),
) -> Result<RunTally> {
    match ep.recv()? {
        Message::Hello { role, version } => {
            if role != "prover" {
                return Err(violation(format!("expected a prover hello, got role {role}")));
            }
            if version != WIRE_VERSION {
                return Err(violation(format!("unsupported wire version {version}")));
            }
        }
        other => return Err(violation(format!("expected hello, got {other:?}"))),
    }
    ep.send(&Message::Instance { public: verifier.public_instance(), config: *cfg })?;

    let mut tally = RunTally::default();
    for shot in 0..cfg.total_shots() {
        let challenge = verifier.challenge_for(cfg, shot);

        let early_commitment = match cfg.mode {
            Mode::Interactive => match ep.recv()? {
                Message::Commit { shot: s, commitment } => {
                    expect_shot(s, shot, "commit")?;
                    Some(commitment)
                }
                other => return Err(violation(format!("expected commit, got {other:?}"))),
            },
            Mode::Delayed => None,
        };

        ep.send(&Message::Challenge { shot, challenge: challenge.clone() })?;
        let response = match ep.recv()? {
            Message::Response { shot: s, response } => {
                expect_shot(s, shot, "response")?;
                response
            }
            other => return Err(violation(format!("expected response, got {other:?}"))),
        };

        let (branch, challenge_bits) = match &challenge {
            Challenge::Standard => (crate::protocol::BranchKind::Standard, None),
            Challenge::Interference { parity } => {
                (crate::protocol::BranchKind::Interference, parity.clone())
            }
        };

        let (basis, basis_outcome) = if branch == crate::protocol::BranchKind::Interference
            && verifier.kind() == ProtocolKind::Factoring
        {
            let basis = verifier.basis_for(cfg, shot);
            ep.send(&Message::BasisRequest { shot, basis })?;
            match ep.recv()? {
                Message::BasisOutcome { shot: s, outcome } => {
                    expect_shot(s, shot, "basis outcome")?;
                    (Some(basis), Some(outcome))
                }
                other => return Err(violation(format!("expected basis outcome, got {other:?}"))),
            }
        } else {
            (None, None)
        };

        let commitment = match early_commitment {
            Some(w) => w,
            None => match ep.recv()? {
                Message::Commit { shot: s, commitment } => {
                    expect_shot(s, shot, "commit")?;
                    commitment
                }
                other => return Err(violation(format!("expected commit, got {other:?}"))),
            },
        };

        let (status, accepted) = verifier.judge(
            branch,
            &commitment,
            challenge_bits.as_ref(),
            &response,
            basis,
            basis_outcome,
        );
        let record = ShotRecord {
            shot,
            branch,
            commitment,
            challenge: challenge_bits,
            response,
            basis,
            basis_outcome,
            status,
            accepted,
        };
        tally.record(&record);
        on_record(&record);
        ep.send(&Message::Verdict { record })?;
    }
    ep.send(&Message::Summary { tally })?;
    ep.send(&Message::Close)?;
    Ok(tally)
}

/// Runs the prover side of one session on an established connection. The
/// factory receives the instance and run seed announced by the verifier
/// and returns the prover to play.
pub fn run_prover<S: Read + Write>(
    stream: S,
    factory: impl FnOnce(&PublicInstance, &RunConfig) -> Box<dyn Prover>,
) -> Result<RunTally> {
    let mut ep = Endpoint::new(stream);
    let result = prover_session(&mut ep, factory);
    if let Err(ref err) = result {
        ep.report(err);
    }
    result
}

fn prover_session<S: Read + Write>(
    ep: &mut Endpoint<S>,
    factory: impl FnOnce(&PublicInstance, &RunConfig) -> Box<dyn Prover>,
) -> Result<RunTally> {
    ep.send(&Message::Hello { role: "prover".into(), version: WIRE_VERSION })?;
    let (public, cfg) = match ep.recv()? {
        Message::Instance { public, config } => (public, config),
        other => return Err(violation(format!("expected instance, got {other:?}"))),
    };
    let kind = public.kind();
    let mut prover = factory(&public, &cfg);

    for shot in 0..cfg.total_shots() {
        prover.begin_shot(shot);
        if cfg.mode == Mode::Interactive {
            ep.send(&Message::Commit { shot, commitment: prover.commit() })?;
        }
        let challenge = match ep.recv()? {
            Message::Challenge { shot: s, challenge } => {
                expect_shot(s, shot, "challenge")?;
                challenge
            }
            other => return Err(violation(format!("expected challenge, got {other:?}"))),
        };
        let interference = match &challenge {
            Challenge::Standard => {
                ep.send(&Message::Response { shot, response: prover.respond_standard() })?;
                false
            }
            Challenge::Interference { parity } => {
                let response = prover.respond_interference(parity.as_ref());
                ep.send(&Message::Response { shot, response })?;
                true
            }
        };
        if interference && kind == ProtocolKind::Factoring {
            let basis = match ep.recv()? {
                Message::BasisRequest { shot: s, basis } => {
                    expect_shot(s, shot, "basis request")?;
                    basis
                }
                other => return Err(violation(format!("expected basis request, got {other:?}"))),
            };
            ep.send(&Message::BasisOutcome { shot, outcome: prover.measure_ancilla(basis) })?;
        }
        if cfg.mode == Mode::Delayed {
            ep.send(&Message::Commit { shot, commitment: prover.finish_delayed_commit() })?;
        }
        match ep.recv()? {
            Message::Verdict { record } => expect_shot(record.shot, shot, "verdict")?,
            other => return Err(violation(format!("expected verdict, got {other:?}"))),
        }
    }
    let tally = match ep.recv()? {
        Message::Summary { tally } => tally,
        other => return Err(violation(format!("expected summary, got {other:?}"))),
    };
    match ep.recv()? {
        Message::Close => Ok(tally),
        other => Err(violation(format!("expected close, got {other:?}"))),
    }
}
