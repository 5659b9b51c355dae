//! Plain-text checkpoint of RBM parameters.
//!
//! ```text
//! lgap-checkpoint 1
//! visible 4
//! hidden 24
//! ancillary product ----++++    (or: ancillary identity)
//! iteration 120
//! values 448
//! <one real coordinate per line>
//! ```
//!
//! Values use Rust's shortest round-trip float formatting, so a load after a
//! save reproduces the parameters bit for bit.

use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use super::{AncillaryState, RbmParameters};
use crate::model::BiBaseConfig;
use crate::{Error, Result};

const MAGIC: &str = "lgap-checkpoint 1";

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub rbm: RbmParameters,
    pub ancillary: AncillaryState,
    pub iteration: usize,
}

fn spins_to_string(spins: &[i8]) -> String {
    spins.iter().map(|&s| if s > 0 { '+' } else { '-' }).collect()
}

fn parse_spins(text: &str) -> Result<BiBaseConfig> {
    let spins = text
        .chars()
        .map(|c| match c {
            '+' => Ok(1),
            '-' => Ok(-1),
            other => Err(Error::Checkpoint(format!("bad spin character {other:?}"))),
        })
        .collect::<Result<Vec<i8>>>()?;
    BiBaseConfig::new(spins).map_err(|e| Error::Checkpoint(e.to_string()))
}

impl Checkpoint {
    pub fn write_to<W: Write>(&self, mut w: W) -> Result<()> {
        let values = self.rbm.to_real();
        writeln!(w, "{MAGIC}")?;
        writeln!(w, "visible {}", self.rbm.visible())?;
        writeln!(w, "hidden {}", self.rbm.hidden())?;
        match &self.ancillary {
            AncillaryState::Identity => writeln!(w, "ancillary identity")?,
            AncillaryState::Product(x) => {
                writeln!(w, "ancillary product {}", spins_to_string(x.spins()))?
            }
        }
        writeln!(w, "iteration {}", self.iteration)?;
        writeln!(w, "values {}", values.len())?;
        for v in values {
            writeln!(w, "{v}")?;
        }
        Ok(())
    }

    pub fn read_from<R: BufRead>(r: R) -> Result<Self> {
        let mut lines = r.lines();
        let mut next = |what: &str| -> Result<String> {
            match lines.next() {
                Some(line) => Ok(line?.trim().to_string()),
                None => Err(Error::Checkpoint(format!("missing {what}"))),
            }
        };
        if next("header")? != MAGIC {
            return Err(Error::Checkpoint("not a checkpoint file".into()));
        }
        let field = |line: String, key: &str| -> Result<String> {
            line.strip_prefix(key)
                .and_then(|rest| rest.strip_prefix(' '))
                .map(str::to_string)
                .ok_or_else(|| Error::Checkpoint(format!("expected `{key}` line, got {line:?}")))
        };
        let number = |text: String, key: &str| -> Result<usize> {
            text.parse()
                .map_err(|_| Error::Checkpoint(format!("bad {key} value {text:?}")))
        };
        let visible = number(field(next("visible")?, "visible")?, "visible")?;
        let hidden = number(field(next("hidden")?, "hidden")?, "hidden")?;
        let anc = field(next("ancillary")?, "ancillary")?;
        let ancillary = if anc == "identity" {
            AncillaryState::Identity
        } else if let Some(spins) = anc.strip_prefix("product ") {
            AncillaryState::Product(parse_spins(spins.trim())?)
        } else {
            return Err(Error::Checkpoint(format!("bad ancillary {anc:?}")));
        };
        let iteration = number(field(next("iteration")?, "iteration")?, "iteration")?;
        let count = number(field(next("values")?, "values")?, "values")?;
        let mut values = Vec::with_capacity(count);
        for i in 0..count {
            let text = next(&format!("value {i}"))?;
            values.push(
                text.parse::<f64>()
                    .map_err(|_| Error::Checkpoint(format!("bad value {text:?}")))?,
            );
        }
        let rbm = RbmParameters::from_real(visible, hidden, &values)
            .map_err(|e| Error::Checkpoint(e.to_string()))?;
        if let AncillaryState::Product(x) = &ancillary {
            if x.sites() != visible {
                return Err(Error::Checkpoint("ancillary size does not match".into()));
            }
        }
        Ok(Self {
            rbm,
            ancillary,
            iteration,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut buf = Vec::new();
        self.write_to(&mut buf)?;
        fs::write(path, buf)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::read_from(BufReader::new(fs::File::open(path)?))
    }
}
