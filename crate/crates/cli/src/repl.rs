use std::io::{self, BufRead, Write};

use ina_core::{classify, Decision, InaModel};
use ina_service::{FeedbackLog, FeedbackRecord};

const PROMPT: &str = "> ";

fn read_line(input: &mut dyn BufRead) -> io::Result<Option<String>> {
    let mut line = String::new();
    if input.read_line(&mut line)? == 0 {
        return Ok(None);
    }
    Ok(Some(line.trim().to_string()))
}

/// Line-oriented loop: one query per line, `exit` (or end of input) quits.
///
/// On an ambiguous result the candidates are listed and a number `1..=k` is
/// read; the chosen class is printed and recorded in `log`.
pub fn repl_loop(
    model: &InaModel,
    log: &FeedbackLog,
    input: &mut dyn BufRead,
    output: &mut dyn Write,
) -> io::Result<()> {
    loop {
        write!(output, "{PROMPT}")?;
        output.flush()?;
        let Some(query) = read_line(input)? else {
            return Ok(());
        };
        if query.is_empty() {
            continue;
        }
        if query == "exit" {
            return Ok(());
        }
        let result = classify(&query, model).map_err(io::Error::other)?;
        match result.decision {
            Decision::Answered { class, confidence } => {
                writeln!(output, "class {class} (CL={confidence:.4})")?;
            }
            Decision::Rejected { best_confidence } => {
                writeln!(
                    output,
                    "no confident answer (best CL={best_confidence:.4} below {:.2})",
                    model.config().threshold
                )?;
            }
            Decision::Ambiguous { candidates } => {
                writeln!(output, "did you mean:")?;
                for (i, c) in candidates.iter().enumerate() {
                    writeln!(
                        output,
                        "  {}. {} (CL={:.4}) \"{}\"",
                        i + 1,
                        c.class,
                        c.confidence,
                        c.representative
                    )?;
                }
                let k = candidates.len();
                let chosen = loop {
                    write!(output, "pick 1-{k}: ")?;
                    output.flush()?;
                    let Some(answer) = read_line(input)? else {
                        return Ok(());
                    };
                    match answer.parse::<usize>() {
                        Ok(n) if (1..=k).contains(&n) => break &candidates[n - 1],
                        _ => continue,
                    }
                };
                writeln!(
                    output,
                    "class {} (CL={:.4})",
                    chosen.class, chosen.confidence
                )?;
                let record = FeedbackRecord::now(
                    None,
                    query,
                    candidates.iter().map(|c| c.class.clone()).collect(),
                    chosen.class.clone(),
                );
                log.append(&record)?;
            }
        }
    }
}
