//! Plain-text checkpoints of named networks.
//!
//! Layout (line-feed separated, UTF-8):
//!
//! ```text
//! gdpg-checkpoint 1
//! networks <count>
//! network <name>
//! layers <n0> <n1> ... <nk>
//! output identity            | output squash <scale>
//! params <count>
//! <count values, up to 8 per line, space separated>
//! network <name>
//! ...
//! ```
//!
//! Parameters are listed layer by layer as `W0` (row-major), `b0`, `W1`,
//! `b1`, ... Values use Rust's shortest round-trip float formatting, so a
//! save/load cycle reproduces every bit.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::mlp::{MlpParams, OutputActivation};

use super::trainer::GdpgState;

const MAGIC: &str = "gdpg-checkpoint 1";
const PER_LINE: usize = 8;

/// Names of the networks a [`GdpgState`] writes, in file order.
pub const STATE_NETWORKS: [&str; 7] = [
    "actor",
    "critic",
    "augmented_critic",
    "transition",
    "actor_target",
    "critic_target",
    "augmented_target",
];

/// Serializes named networks.
pub fn write_checkpoint(nets: &[(&str, &MlpParams)]) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{MAGIC}");
    let _ = writeln!(out, "networks {}", nets.len());
    for (name, net) in nets {
        let _ = writeln!(out, "network {name}");
        let sizes: Vec<String> = net.layer_sizes().iter().map(|n| n.to_string()).collect();
        let _ = writeln!(out, "layers {}", sizes.join(" "));
        match net.output_activation() {
            OutputActivation::Identity => out.push_str("output identity\n"),
            OutputActivation::Squash { scale } => {
                let _ = writeln!(out, "output squash {scale:?}");
            }
        }
        let flat = net.to_flat();
        let _ = writeln!(out, "params {}", flat.len());
        for chunk in flat.chunks(PER_LINE) {
            let line: Vec<String> = chunk.iter().map(|v| format!("{v:?}")).collect();
            let _ = writeln!(out, "{}", line.join(" "));
        }
    }
    out
}

/// Parses a checkpoint back into `(name, network)` pairs.
pub fn read_checkpoint(text: &str) -> Result<Vec<(String, MlpParams)>> {
    let bad = |msg: String| Error::Checkpoint(msg);
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim()));
    let mut next = |what: &str| lines.next().ok_or_else(|| bad(format!("unexpected end of file, expected {what}")));
    let (_, magic) = next("header")?;
    if magic != MAGIC {
        return Err(bad(format!("unknown header '{magic}'")));
    }
    let count: usize = field(next("network count")?, "networks")?;
    let mut nets = Vec::with_capacity(count);
    for _ in 0..count {
        let (ln, line) = next("network name")?;
        let name = line
            .strip_prefix("network ")
            .ok_or_else(|| bad(format!("line {ln}: expected 'network <name>'")))?
            .to_string();
        let (ln, line) = next("layers")?;
        let sizes = line
            .strip_prefix("layers ")
            .ok_or_else(|| bad(format!("line {ln}: expected 'layers ...'")))?
            .split_whitespace()
            .map(|t| t.parse::<usize>().map_err(|e| bad(format!("line {ln}: {e}"))))
            .collect::<Result<Vec<_>>>()?;
        let (ln, line) = next("output")?;
        let output = match line.split_whitespace().collect::<Vec<_>>().as_slice() {
            ["output", "identity"] => OutputActivation::Identity,
            ["output", "squash", s] => OutputActivation::Squash {
                scale: s.parse().map_err(|e| bad(format!("line {ln}: {e}")))?,
            },
            _ => return Err(bad(format!("line {ln}: expected 'output identity' or 'output squash <scale>'"))),
        };
        let n_params: usize = field(next("params")?, "params")?;
        let mut values = Vec::with_capacity(n_params);
        while values.len() < n_params {
            let (ln, line) = next("parameter values")?;
            for tok in line.split_whitespace() {
                values.push(tok.parse::<f64>().map_err(|e| bad(format!("line {ln}: {e}")))?);
            }
        }
        if values.len() != n_params {
            return Err(bad(format!("network {name}: {} values for {n_params} params", values.len())));
        }
        let mut net = MlpParams::zeros(&sizes, output)?;
        net.set_flat(&values)
            .map_err(|_| bad(format!("network {name}: {n_params} params do not fit layers {sizes:?}")))?;
        nets.push((name, net));
    }
    Ok(nets)
}

fn field((ln, line): (usize, &str), key: &str) -> Result<usize> {
    line.strip_prefix(key)
        .map(str::trim)
        .and_then(|v| v.parse().ok())
        .ok_or_else(|| Error::Checkpoint(format!("line {ln}: expected '{key} <count>'")))
}

impl GdpgState {
    fn networks(&self) -> [(&'static str, &MlpParams); 7] {
        [
            ("actor", &self.actor),
            ("critic", &self.critic),
            ("augmented_critic", &self.augmented_critic),
            ("transition", &self.transition),
            ("actor_target", &self.actor_target),
            ("critic_target", &self.critic_target),
            ("augmented_target", &self.augmented_target),
        ]
    }

    pub fn checkpoint_text(&self) -> String {
        write_checkpoint(&self.networks())
    }

    pub fn save_checkpoint(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.checkpoint_text())?;
        Ok(())
    }

    /// Replaces every network with the checkpoint's copy; shapes must match.
    pub fn load_checkpoint_text(&mut self, text: &str) -> Result<()> {
        let nets = read_checkpoint(text)?;
        for name in STATE_NETWORKS {
            let (_, net) = nets
                .iter()
                .find(|(n, _)| n == name)
                .ok_or_else(|| Error::Checkpoint(format!("missing network '{name}'")))?;
            let slot = match name {
                "actor" => &mut self.actor,
                "critic" => &mut self.critic,
                "augmented_critic" => &mut self.augmented_critic,
                "transition" => &mut self.transition,
                "actor_target" => &mut self.actor_target,
                "critic_target" => &mut self.critic_target,
                _ => &mut self.augmented_target,
            };
            if !slot.same_shape(net) || slot.output_activation() != net.output_activation() {
                return Err(Error::Checkpoint(format!("network '{name}' has a different shape")));
            }
            *slot = net.clone();
        }
        Ok(())
    }
}

/// Reads just the actor from a checkpoint file.
pub fn load_actor(path: &Path) -> Result<MlpParams> {
    let text = std::fs::read_to_string(path)?;
    read_checkpoint(&text)?
        .into_iter()
        .find(|(n, _)| n == "actor")
        .map(|(_, net)| net)
        .ok_or_else(|| Error::Checkpoint("checkpoint has no 'actor' network".into()))
}
