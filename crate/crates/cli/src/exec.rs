//! Sampler backed by an external process.
//!
//! The child reads replication indices (zero-based), one per line, on
//! stdin and answers each with one line of `k·m` whitespace-separated
//! outputs in row-major order.

use std::collections::HashMap;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::process::{Child, ChildStdin, ChildStdout, Command, Stdio};

use robust_select::sampler::{SampleError, Sampler, SystemId};

use crate::CliError;

pub struct ExecSampler {
    k: usize,
    m: usize,
    child: Child,
    input: BufWriter<ChildStdin>,
    output: BufReader<ChildStdout>,
    rows: HashMap<u64, Vec<f64>>,
}

impl ExecSampler {
    /// Starts `spec` through `sh -c`.
    pub fn spawn(spec: &str, k: usize, m: usize) -> Result<Self, CliError> {
        let mut child = Command::new("sh")
            .arg("-c")
            .arg(spec)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .spawn()
            .map_err(|e| CliError::Runtime(format!("cannot start {spec:?}: {e}")))?;
        let input = BufWriter::new(child.stdin.take().expect("piped stdin"));
        let output = BufReader::new(child.stdout.take().expect("piped stdout"));
        Ok(ExecSampler {
            k,
            m,
            child,
            input,
            output,
            rows: HashMap::new(),
        })
    }

    fn request(&mut self, replication: u64) -> Result<Vec<f64>, SampleError> {
        let fail = |msg: String| SampleError::Failed(format!("replication {replication}: {msg}"));
        writeln!(self.input, "{replication}").map_err(|e| fail(e.to_string()))?;
        self.input.flush().map_err(|e| fail(e.to_string()))?;
        let mut line = String::new();
        let read = self
            .output
            .read_line(&mut line)
            .map_err(|e| fail(e.to_string()))?;
        if read == 0 {
            return Err(fail("sampler closed its output".into()));
        }
        let values: Vec<f64> = line
            .split_whitespace()
            .map(|t| {
                t.parse::<f64>()
                    .map_err(|_| fail(format!("not a number: {t:?}")))
            })
            .collect::<Result<_, _>>()?;
        if values.len() != self.k * self.m {
            return Err(fail(format!(
                "expected {} values, got {}",
                self.k * self.m,
                values.len()
            )));
        }
        Ok(values)
    }
}

impl Sampler for ExecSampler {
    fn alternatives(&self) -> usize {
        self.k
    }

    fn scenarios(&self) -> usize {
        self.m
    }

    fn draw(
        &mut self,
        replication: u64,
        systems: &[SystemId],
        out: &mut [f64],
    ) -> Result<(), SampleError> {
        if !self.rows.contains_key(&replication) {
            let row = self.request(replication)?;
            self.rows.insert(replication, row);
        }
        let row = &self.rows[&replication];
        for (o, s) in out.iter_mut().zip(systems) {
            *o = row[s.flat(self.m)];
        }
        Ok(())
    }
}

impl Drop for ExecSampler {
    fn drop(&mut self) {
        let _ = self.child.kill();
        let _ = self.child.wait();
    }
}
