use std::io::{BufRead, Write};

use super::{advance_turn, new_debate, DebateConfig, DebateTranscript, DebateTurn, OrchestratorError};
use crate::generation::GeneratorBackend;

fn print_turn<W: Write>(out: &mut W, turn: &DebateTurn) -> std::io::Result<()> {
    writeln!(out, "{}: {}", turn.speaker, turn.display_text.replace('\n', " / "))
}

/// Interactive debate. The agent opens; each input line is a human turn
/// answered by the agent. `/auto` lets the agent take the human's turn,
/// `/quit` (or end of input) stops early.
pub fn run_repl<B, R, W>(
    subject: &str,
    backend: &B,
    config: DebateConfig,
    input: R,
    mut out: W,
) -> Result<DebateTranscript, OrchestratorError>
where
    B: GeneratorBackend + ?Sized,
    R: BufRead,
    W: Write,
{
    let mut t = new_debate(subject, backend, config)?;
    print_turn(&mut out, &t.turns[0])?;
    let mut lines = input.lines();
    while !t.is_full() {
        write!(out, "> ")?;
        out.flush()?;
        let Some(line) = lines.next() else { break };
        let line = line?;
        let line = line.trim();
        match line {
            "/quit" => break,
            "" => continue,
            "/auto" => {
                t = advance_turn(&t, backend, None)?;
                print_turn(&mut out, t.turns.last().expect("turn added"))?;
            }
            text => match advance_turn(&t, backend, Some(text)) {
                Ok(next) => t = next,
                Err(OrchestratorError::EmptyTurn) => {
                    writeln!(out, "(nothing to say?)")?;
                    continue;
                }
                Err(e) => return Err(e),
            },
        }
        if !t.is_full() && t.turns.last().map(|x| x.speaker) == Some(super::Speaker::Human) {
            t = advance_turn(&t, backend, None)?;
            print_turn(&mut out, t.turns.last().expect("turn added"))?;
        }
    }
    writeln!(out, "-- {} turns --", t.len())?;
    Ok(t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generation::EchoBackend;
    use crate::orchestrator::Speaker;

    #[test]
    fn scripted_session() {
        let input = "Dogs are better.\n/auto\n\n/quit\nnever read\n";
        let mut out = Vec::new();
        let t = run_repl("Cats are best.", &EchoBackend, DebateConfig::new(10, 0), input.as_bytes(), &mut out).unwrap();
        let speakers: Vec<Speaker> = t.turns.iter().map(|x| x.speaker).collect();
        assert_eq!(speakers, [Speaker::Alice, Speaker::Human, Speaker::Alice, Speaker::Bob]);
        let text = String::from_utf8(out).unwrap();
        assert!(text.starts_with("Alice: cats are best.\n"));
        assert!(text.contains("-- 4 turns --"));
    }

    #[test]
    fn stops_when_full() {
        let input = "a\nb\nc\n";
        let t = run_repl("x", &EchoBackend, DebateConfig::new(2, 0), input.as_bytes(), Vec::new()).unwrap();
        assert_eq!(t.len(), 2);
        assert_eq!(t.turns[1].speaker, Speaker::Human);
    }
}
