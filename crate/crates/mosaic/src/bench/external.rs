//! Bridge to external evaluation commands. Each evaluation spawns the
//! command, writes the pipeline JSON to its standard input, and reads one
//! JSON line `{"reward": …}` from its standard output. Overruns are killed
//! at the cutoff.

use std::io::{BufRead, BufReader, Write};
use std::path::PathBuf;
use std::process::{Command, Stdio};
use std::time::{Duration, Instant};

use serde::Deserialize;

use crate::optimizer::{EvalOutcome, Evaluator, Status};
use crate::space::Pipeline;

pub struct ExternalEvaluator {
    pub program: String,
    pub args: Vec<String>,
    pub workdir: Option<PathBuf>,
}

impl ExternalEvaluator {
    pub fn new(command: &[String], workdir: Option<PathBuf>) -> Result<Self, String> {
        let (program, args) = command
            .split_first()
            .ok_or_else(|| "external evaluator command is empty".to_string())?;
        Ok(Self {
            program: program.clone(),
            args: args.to_vec(),
            workdir,
        })
    }
}

#[derive(Debug, Deserialize)]
struct RewardLine {
    reward: f64,
    #[serde(default)]
    duration: Option<f64>,
}

fn failed() -> EvalOutcome {
    EvalOutcome {
        reward: 0.0,
        status: Status::Failed,
        duration: 0.0,
        noiseless: None,
    }
}

impl Evaluator for ExternalEvaluator {
    fn evaluate(&self, pipeline: &Pipeline, cutoff: Duration) -> EvalOutcome {
        let started = Instant::now();
        let mut cmd = Command::new(&self.program);
        cmd.args(&self.args)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::null());
        if let Some(dir) = &self.workdir {
            cmd.current_dir(dir);
        }
        let mut child = match cmd.spawn() {
            Ok(c) => c,
            Err(e) => {
                eprintln!("external evaluator: cannot spawn `{}`: {e}", self.program);
                return failed();
            }
        };

        let payload = serde_json::to_string(pipeline).expect("pipeline serializes");
        if let Some(mut stdin) = child.stdin.take() {
            // the command may exit without reading; a broken pipe is its answer
            let _ = stdin.write_all(payload.as_bytes());
            let _ = stdin.write_all(b"\n");
        }

        loop {
            match child.try_wait() {
                Ok(Some(exit)) => {
                    let duration = started.elapsed().as_secs_f64();
                    if !exit.success() {
                        return failed();
                    }
                    let Some(stdout) = child.stdout.take() else {
                        return failed();
                    };
                    let mut line = String::new();
                    if BufReader::new(stdout).read_line(&mut line).is_err() {
                        return failed();
                    }
                    return match serde_json::from_str::<RewardLine>(line.trim()) {
                        Ok(parsed) => EvalOutcome {
                            reward: parsed.reward,
                            status: Status::Ok,
                            duration: parsed.duration.unwrap_or(duration),
                            noiseless: None,
                        },
                        Err(e) => {
                            eprintln!("external evaluator: malformed output `{}`: {e}", line.trim());
                            failed()
                        }
                    };
                }
                Ok(None) => {
                    if started.elapsed() >= cutoff {
                        let _ = child.kill();
                        let _ = child.wait();
                        return EvalOutcome {
                            reward: 0.0,
                            status: Status::Timeout,
                            duration: started.elapsed().as_secs_f64(),
                            noiseless: None,
                        };
                    }
                    std::thread::sleep(Duration::from_millis(5));
                }
                Err(e) => {
                    eprintln!("external evaluator: wait failed: {e}");
                    let _ = child.kill();
                    return failed();
                }
            }
        }
    }
}
