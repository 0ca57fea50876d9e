//! Versioned plain-text checkpoints.
//!
//! Parameters are written as the hexadecimal bit patterns of their `f64`
//! widening, so both `f32` and `f64` networks round-trip bit-exactly.
//!
//! ```text
//! am2r-checkpoint 1
//! action_dim 1
//! batches_done 120
//! hyper workers 10
//! ...
//! meta mode h_efficiency
//! net policy 3 128 128 2
//! w <hex> <hex> ...
//! b <hex> ...
//! ```

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use super::gaussian::PolicyParameters;
use super::mlp::{Layer, Mlp};
use super::ppo::PpoConfig;
use crate::error::{Error, Result};
use crate::real::Real;

pub const CHECKPOINT_VERSION: u32 = 1;
const MAGIC: &str = "am2r-checkpoint";

#[derive(Clone, Debug, PartialEq)]
pub struct Checkpoint<T> {
    pub params: PolicyParameters<T>,
    pub config: PpoConfig,
    pub batches_done: usize,
    /// Free-form tags such as the training mode; keys and values contain no whitespace.
    pub meta: BTreeMap<String, String>,
}

fn err(detail: impl Into<String>) -> Error {
    Error::Parse { what: "checkpoint", detail: detail.into() }
}

fn hex_row<T: Real>(out: &mut String, tag: &str, values: &[T]) {
    out.push_str(tag);
    for v in values {
        write!(out, " {:016x}", v.as_f64().to_bits()).expect("write to string");
    }
    out.push('\n');
}

fn hyper_pairs(c: &PpoConfig) -> Vec<(&'static str, String)> {
    let hidden: Vec<String> = c.hidden.iter().map(|h| h.to_string()).collect();
    vec![
        ("workers", c.workers.to_string()),
        ("fragment_len", c.fragment_len.to_string()),
        ("minibatch", c.minibatch.to_string()),
        ("epochs", c.epochs.to_string()),
        ("learning_rate", format!("{:?}", c.learning_rate)),
        ("clip", format!("{:?}", c.clip)),
        ("vf_coef", format!("{:?}", c.vf_coef)),
        ("ent_coef", format!("{:?}", c.ent_coef)),
        ("gamma", format!("{:?}", c.gamma)),
        ("lambda", format!("{:?}", c.lambda)),
        ("normalize_advantages", c.normalize_advantages.to_string()),
        ("hidden", hidden.join(",")),
        ("batches", c.batches.to_string()),
        ("seed", c.seed.to_string()),
    ]
}

fn set_hyper(c: &mut PpoConfig, key: &str, value: &str) -> Result<()> {
    fn p<V: std::str::FromStr>(key: &str, value: &str) -> Result<V> {
        value.parse().map_err(|_| err(format!("bad value `{value}` for `{key}`")))
    }
    match key {
        "workers" => c.workers = p(key, value)?,
        "fragment_len" => c.fragment_len = p(key, value)?,
        "minibatch" => c.minibatch = p(key, value)?,
        "epochs" => c.epochs = p(key, value)?,
        "learning_rate" => c.learning_rate = p(key, value)?,
        "clip" => c.clip = p(key, value)?,
        "vf_coef" => c.vf_coef = p(key, value)?,
        "ent_coef" => c.ent_coef = p(key, value)?,
        "gamma" => c.gamma = p(key, value)?,
        "lambda" => c.lambda = p(key, value)?,
        "normalize_advantages" => c.normalize_advantages = p(key, value)?,
        "hidden" => {
            c.hidden = if value.is_empty() {
                Vec::new()
            } else {
                value.split(',').map(|h| p(key, h)).collect::<Result<_>>()?
            }
        }
        "batches" => c.batches = p(key, value)?,
        "seed" => c.seed = p(key, value)?,
        _ => return Err(err(format!("unknown hyperparameter `{key}`"))),
    }
    Ok(())
}

fn parse_hex<T: Real>(tokens: &[&str], expected: usize) -> Result<Vec<T>> {
    if tokens.len() != expected {
        return Err(err(format!("expected {expected} values, found {}", tokens.len())));
    }
    tokens
        .iter()
        .map(|t| {
            u64::from_str_radix(t, 16)
                .map(|bits| T::lit(f64::from_bits(bits)))
                .map_err(|_| err(format!("bad parameter `{t}`")))
        })
        .collect()
}

impl<T: Real> Checkpoint<T> {
    pub fn new(params: PolicyParameters<T>, config: PpoConfig, batches_done: usize) -> Self {
        Self { params, config, batches_done, meta: BTreeMap::new() }
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("{MAGIC} {CHECKPOINT_VERSION}\n");
        writeln!(out, "action_dim {}", self.params.action_dim).expect("write to string");
        writeln!(out, "batches_done {}", self.batches_done).expect("write to string");
        for (k, v) in hyper_pairs(&self.config) {
            writeln!(out, "hyper {k} {v}").expect("write to string");
        }
        for (k, v) in &self.meta {
            writeln!(out, "meta {k} {v}").expect("write to string");
        }
        for (name, net) in [("policy", &self.params.policy), ("value", &self.params.value)] {
            let sizes: Vec<String> = net.sizes().iter().map(|s| s.to_string()).collect();
            writeln!(out, "net {name} {}", sizes.join(" ")).expect("write to string");
            for layer in &net.layers {
                hex_row(&mut out, "w", &layer.weights);
                hex_row(&mut out, "b", &layer.bias);
            }
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines.next().ok_or_else(|| err("empty file"))?;
        let version = header
            .strip_prefix(MAGIC)
            .map(str::trim)
            .ok_or_else(|| err("missing header"))?
            .parse::<u32>()
            .map_err(|_| err("bad version"))?;
        if version != CHECKPOINT_VERSION {
            return Err(err(format!("unsupported version {version}, expected {CHECKPOINT_VERSION}")));
        }
        let mut action_dim = None;
        let mut batches_done = 0;
        let mut config = PpoConfig::default();
        let mut meta = BTreeMap::new();
        let mut nets: BTreeMap<String, Mlp<T>> = BTreeMap::new();
        let mut current: Option<(String, Vec<usize>, usize)> = None;
        let mut pending_w: Option<Vec<T>> = None;
        for line in lines {
            let tokens: Vec<&str> = line.split_whitespace().collect();
            match tokens[0] {
                "action_dim" => action_dim = Some(tokens.get(1).and_then(|v| v.parse().ok()).ok_or_else(|| err("bad action_dim"))?),
                "batches_done" => {
                    batches_done = tokens.get(1).and_then(|v| v.parse().ok()).ok_or_else(|| err("bad batches_done"))?
                }
                "hyper" => set_hyper(&mut config, tokens.get(1).copied().unwrap_or(""), tokens.get(2).copied().unwrap_or(""))?,
                "meta" => {
                    meta.insert(tokens.get(1).unwrap_or(&"").to_string(), tokens[2..].join(" "));
                }
                "net" => {
                    let name = tokens.get(1).ok_or_else(|| err("unnamed net"))?.to_string();
                    let sizes: Vec<usize> =
                        tokens[2..].iter().map(|s| s.parse().map_err(|_| err("bad layer size"))).collect::<Result<_>>()?;
                    if sizes.len() < 2 {
                        return Err(err(format!("net `{name}` needs at least two widths")));
                    }
                    nets.insert(name.clone(), Mlp { layers: Vec::new() });
                    current = Some((name, sizes, 0));
                }
                "w" | "b" => {
                    let (name, sizes, layer) = current.as_mut().ok_or_else(|| err("parameters before net"))?;
                    if *layer + 1 >= sizes.len() {
                        return Err(err(format!("too many layers in `{name}`")));
                    }
                    let (n_in, n_out) = (sizes[*layer], sizes[*layer + 1]);
                    if tokens[0] == "w" {
                        pending_w = Some(parse_hex(&tokens[1..], n_in * n_out)?);
                    } else {
                        let weights = pending_w.take().ok_or_else(|| err("bias without weights"))?;
                        let bias = parse_hex(&tokens[1..], n_out)?;
                        nets.get_mut(name.as_str()).expect("net inserted").layers.push(Layer { n_in, n_out, weights, bias });
                        *layer += 1;
                    }
                }
                other => return Err(err(format!("unknown record `{other}`"))),
            }
        }
        let action_dim: usize = action_dim.ok_or_else(|| err("missing action_dim"))?;
        let policy = nets.remove("policy").ok_or_else(|| err("missing policy net"))?;
        let value = nets.remove("value").ok_or_else(|| err("missing value net"))?;
        for (name, net, outputs) in [("policy", &policy, 2 * action_dim), ("value", &value, 1)] {
            if net.layers.is_empty() || net.n_outputs() != outputs {
                return Err(err(format!("net `{name}` is incomplete or has the wrong output width")));
            }
        }
        if policy.n_inputs() != value.n_inputs() {
            return Err(err("policy and value inputs differ"));
        }
        Ok(Self { params: PolicyParameters { action_dim, policy, value }, config, batches_done, meta })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_text())?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_text(&std::fs::read_to_string(path)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn sample() -> Checkpoint<f64> {
        let params = PolicyParameters::new(3, 2, &[7, 5], &mut ChaCha8Rng::seed_from_u64(3));
        let config = PpoConfig { learning_rate: 3.3e-5, hidden: vec![7, 5], seed: 12, ..PpoConfig::default() };
        let mut c = Checkpoint::new(params, config, 42);
        c.meta.insert("mode".into(), "hp_accuracy".into());
        c
    }

    #[test]
    fn round_trip_is_bit_exact() {
        let mut c = sample();
        c.params.policy.layers[0].weights[0] = -0.0;
        c.params.value.layers[1].bias[0] = f64::MIN_POSITIVE / 3.0;
        let text = c.to_text();
        let back = Checkpoint::<f64>::from_text(&text).unwrap();
        assert_eq!(back.to_text(), text);
        let bits = |p: &PolicyParameters<f64>| {
            let mut v = p.policy.flatten();
            v.extend(p.value.flatten());
            v.into_iter().map(f64::to_bits).collect::<Vec<_>>()
        };
        assert_eq!(bits(&back.params), bits(&c.params));
        assert_eq!(back.config, c.config);
        assert_eq!(back.batches_done, 42);
        assert_eq!(back.meta["mode"], "hp_accuracy");
    }

    #[test]
    fn f32_round_trip() {
        let params = PolicyParameters::<f32>::new(3, 1, &[4], &mut ChaCha8Rng::seed_from_u64(5));
        let c = Checkpoint::new(params, PpoConfig::default(), 0);
        assert_eq!(Checkpoint::<f32>::from_text(&c.to_text()).unwrap(), c);
    }

    #[test]
    fn rejects_bad_input() {
        let text = sample().to_text();
        assert!(Checkpoint::<f64>::from_text("").is_err());
        assert!(Checkpoint::<f64>::from_text(&text.replace("am2r-checkpoint 1", "am2r-checkpoint 9")).is_err());
        let truncated: String = text.lines().take(20).collect::<Vec<_>>().join("\n");
        assert!(Checkpoint::<f64>::from_text(&truncated).is_err());
        assert!(Checkpoint::<f64>::from_text(&text.replace("hyper clip", "hyper clamp")).is_err());
    }
}
