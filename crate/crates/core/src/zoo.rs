//! Architecture descriptors such as `2LSTM-128H-2ReLU` or
//! `(LSTM-128H-2ReLU)×3`, and the networks they denote.
//!
//! Grammar: `[n]LSTM-{H}H-{m}ReLU`, optionally wrapped as `(…)×k`
//! (`x` or `X` also accepted for `×`). An omitted `n` means 1.
//!
//! `nLSTM` places n LSTM layers back to back; `(…)×k` repeats the whole
//! LSTM+ReLU block, so ReLU layers sit between the LSTM groups.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::{Activation, Layer, Network};
use crate::optim::{init_dense, init_lstm};
use crate::rng::Rng;
use crate::scalar::Scalar;

pub const DEFAULT_FEATURE_DIM: usize = 64;
pub const DEFAULT_CLASS_COUNT: usize = 5;

/// The eight networks compared in the architecture study, baseline first.
pub const TABLE2_DESCRIPTORS: [&str; 8] = [
    "LSTM-128H-2ReLU",
    "LSTM-256H-2ReLU",
    "2LSTM-128H-2ReLU",
    "3LSTM-128H-2ReLU",
    "LSTM-128H-1ReLU",
    "LSTM-128H-3ReLU",
    "(LSTM-128H-2ReLU)×2",
    "(LSTM-128H-2ReLU)×3",
];

pub const BASELINE_DESCRIPTOR: &str = "LSTM-128H-2ReLU";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ArchSpec {
    pub lstm_layers: usize,
    pub hidden_cells: usize,
    pub relu_layers: usize,
    pub stack_factor: usize,
    pub input_dim: usize,
    /// Width of the leading feature layer and of every ReLU layer.
    pub feature_dim: usize,
    pub class_count: usize,
}

impl ArchSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::InvalidArgument(format!("{what} in {self:?}")));
        if self.lstm_layers < 1 {
            return bad("need at least one LSTM layer");
        }
        if self.hidden_cells < 1 {
            return bad("hidden cell count must be at least 1");
        }
        if self.stack_factor < 1 {
            return bad("stack factor must be at least 1");
        }
        if self.input_dim < 1 || self.feature_dim < 1 || self.class_count < 1 {
            return bad("input, feature and class widths must be at least 1");
        }
        Ok(())
    }

    pub fn with_hidden(mut self, hidden_cells: usize) -> Self {
        self.hidden_cells = hidden_cells;
        self
    }

    pub fn with_feature_dim(mut self, feature_dim: usize) -> Self {
        self.feature_dim = feature_dim;
        self
    }

    /// Layer list: feature ReLU, k × {n LSTM, m ReLU}, softmax head.
    pub fn layout(&self) -> Vec<String> {
        let mut out = vec![format!("ReLU({})", self.feature_dim)];
        for _ in 0..self.stack_factor {
            out.extend((0..self.lstm_layers).map(|_| format!("LSTM({})", self.hidden_cells)));
            out.extend((0..self.relu_layers).map(|_| format!("ReLU({})", self.feature_dim)));
        }
        out.push(format!("Softmax({})", self.class_count));
        out
    }
}

impl fmt::Display for ArchSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let n = if self.lstm_layers == 1 {
            String::new()
        } else {
            self.lstm_layers.to_string()
        };
        let body = format!("{n}LSTM-{}H-{}ReLU", self.hidden_cells, self.relu_layers);
        if self.stack_factor == 1 {
            f.write_str(&body)
        } else {
            write!(f, "({body})×{}", self.stack_factor)
        }
    }
}

impl FromStr for ArchSpec {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        parse_arch(s)
    }
}

fn descriptor_err(descriptor: &str, token: &str, reason: &str) -> Error {
    Error::Descriptor {
        descriptor: descriptor.to_string(),
        token: token.to_string(),
        reason: reason.to_string(),
    }
}

/// Splits `digits + suffix`, requiring the exact suffix.
fn count_with_suffix(
    descriptor: &str,
    token: &str,
    suffix: &str,
    optional_count: bool,
) -> Result<usize> {
    let digits = token
        .strip_suffix(suffix)
        .ok_or_else(|| descriptor_err(descriptor, token, &format!("expected <count>{suffix}")))?;
    if digits.is_empty() {
        return if optional_count {
            Ok(1)
        } else {
            Err(descriptor_err(
                descriptor,
                token,
                &format!("missing count before {suffix}"),
            ))
        };
    }
    if !digits.bytes().all(|b| b.is_ascii_digit()) {
        return Err(descriptor_err(
            descriptor,
            token,
            "count must be a decimal integer",
        ));
    }
    digits
        .parse()
        .map_err(|_| descriptor_err(descriptor, token, "count out of range"))
}

pub fn parse_arch(descriptor: &str) -> Result<ArchSpec> {
    let d = descriptor.trim();
    let (body, stack_factor) = if let Some(rest) = d.strip_prefix('(') {
        let close = rest
            .rfind(')')
            .ok_or_else(|| descriptor_err(descriptor, "(", "unclosed parenthesis"))?;
        let suffix = &rest[close + 1..];
        let k_str = suffix
            .strip_prefix('×')
            .or_else(|| suffix.strip_prefix('x'))
            .or_else(|| suffix.strip_prefix('X'))
            .ok_or_else(|| {
                descriptor_err(
                    descriptor,
                    suffix,
                    "expected ×k after the closing parenthesis",
                )
            })?;
        let k = count_with_suffix(descriptor, k_str, "", false)?;
        (&rest[..close], k)
    } else {
        (d, 1)
    };

    let parts: Vec<&str> = body.split('-').collect();
    let [lstm, hidden, relu] = parts[..] else {
        return Err(descriptor_err(
            descriptor,
            body,
            "expected three '-'-separated parts [n]LSTM-{H}H-{m}ReLU",
        ));
    };
    let spec = ArchSpec {
        lstm_layers: count_with_suffix(descriptor, lstm, "LSTM", true)?,
        hidden_cells: count_with_suffix(descriptor, hidden, "H", false)?,
        relu_layers: count_with_suffix(descriptor, relu, "ReLU", false)?,
        stack_factor,
        input_dim: 1,
        feature_dim: DEFAULT_FEATURE_DIM,
        class_count: DEFAULT_CLASS_COUNT,
    };
    if spec.lstm_layers == 0 {
        return Err(descriptor_err(
            descriptor,
            lstm,
            "LSTM layer count must be at least 1",
        ));
    }
    if spec.hidden_cells == 0 {
        return Err(descriptor_err(
            descriptor,
            hidden,
            "hidden cell count must be at least 1",
        ));
    }
    if spec.stack_factor == 0 {
        return Err(descriptor_err(
            descriptor,
            d,
            "stack factor must be at least 1",
        ));
    }
    Ok(spec)
}

/// Builds and orthogonally initializes the network `spec` denotes.
pub fn build<T: Scalar>(spec: &ArchSpec, rng: &mut Rng) -> Result<Network<T>> {
    spec.validate()?;
    let mut layers = vec![Layer::Dense(init_dense(
        spec.input_dim,
        spec.feature_dim,
        Activation::Relu,
        rng,
    ))];
    let mut width = spec.feature_dim;
    for _ in 0..spec.stack_factor {
        for _ in 0..spec.lstm_layers {
            layers.push(Layer::Lstm(init_lstm(width, spec.hidden_cells, rng)));
            width = spec.hidden_cells;
        }
        for _ in 0..spec.relu_layers {
            layers.push(Layer::Dense(init_dense(
                width,
                spec.feature_dim,
                Activation::Relu,
                rng,
            )));
            width = spec.feature_dim;
        }
    }
    layers.push(Layer::Dense(init_dense(
        width,
        spec.class_count,
        Activation::Linear,
        rng,
    )));
    Network::new(layers, spec.class_count)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::Rng;
    use proptest::prelude::*;

    #[test]
    fn table_rows_parse() {
        let s = parse_arch("LSTM-128H-2ReLU").unwrap();
        assert_eq!(
            (s.lstm_layers, s.hidden_cells, s.relu_layers, s.stack_factor),
            (1, 128, 2, 1)
        );
        let s = parse_arch("3LSTM-128H-2ReLU").unwrap();
        assert_eq!(
            (s.lstm_layers, s.hidden_cells, s.relu_layers, s.stack_factor),
            (3, 128, 2, 1)
        );
        let s = parse_arch("(LSTM-128H-2ReLU)×3").unwrap();
        assert_eq!(
            (s.lstm_layers, s.hidden_cells, s.relu_layers, s.stack_factor),
            (1, 128, 2, 3)
        );
        assert_eq!(parse_arch("(LSTM-128H-2ReLU)x3").unwrap(), s);
    }

    #[test]
    fn canonical_forms() {
        for d in TABLE2_DESCRIPTORS {
            assert_eq!(parse_arch(d).unwrap().to_string(), d);
        }
        assert_eq!(
            parse_arch("1LSTM-8H-0ReLU").unwrap().to_string(),
            "LSTM-8H-0ReLU"
        );
        assert_eq!(
            parse_arch("(2LSTM-8H-1ReLU)×1").unwrap().to_string(),
            "2LSTM-8H-1ReLU"
        );
    }

    #[test]
    fn malformed_descriptors_quote_the_token() {
        for (d, token) in [
            ("LSTM-0H-2ReLU", "0H"),
            ("LSTM-128-2ReLU", "128"),
            ("GRU-128H-2ReLU", "GRU"),
            ("LSTM-128H", "LSTM-128H"),
            ("(LSTM-128H-2ReLU)", ""),
            ("(LSTM-128H-2ReLU)×0", "(LSTM-128H-2ReLU)×0"),
            ("0LSTM-128H-2ReLU", "0LSTM"),
            ("LSTM-128H-twoReLU", "twoReLU"),
        ] {
            match parse_arch(d) {
                Err(Error::Descriptor { token: t, .. }) => assert_eq!(t, token, "{d}"),
                other => panic!("{d}: {other:?}"),
            }
        }
    }

    #[test]
    fn layouts() {
        let net: Network<f64> =
            build(&parse_arch("LSTM-128H-2ReLU").unwrap(), &mut Rng::new(0)).unwrap();
        assert_eq!(
            net.layout(),
            vec![
                "ReLU(64)",
                "LSTM(128)",
                "ReLU(64)",
                "ReLU(64)",
                "Softmax(5)"
            ]
        );
        let stacked = parse_arch("(LSTM-16H-2ReLU)×2").unwrap();
        let net: Network<f64> = build(&stacked, &mut Rng::new(0)).unwrap();
        assert_eq!(
            net.layout(),
            vec![
                "ReLU(64)",
                "LSTM(16)",
                "ReLU(64)",
                "ReLU(64)",
                "LSTM(16)",
                "ReLU(64)",
                "ReLU(64)",
                "Softmax(5)"
            ]
        );
        assert_eq!(net.layout(), stacked.layout());
        let adjacent: Network<f64> =
            build(&parse_arch("2LSTM-16H-2ReLU").unwrap(), &mut Rng::new(0)).unwrap();
        assert_eq!(adjacent.layout()[1..3], ["LSTM(16)", "LSTM(16)"]);
    }

    fn count(s: ArchSpec) -> usize {
        build::<f64>(&s, &mut Rng::new(1)).unwrap().param_count()
    }

    #[test]
    fn wider_network_has_more_parameters() {
        assert!(
            count(parse_arch("LSTM-256H-2ReLU").unwrap())
                > count(parse_arch("LSTM-128H-2ReLU").unwrap())
        );
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn format_parse_round_trip(n in 1usize..5, h in 1usize..300, m in 0usize..5, k in 1usize..5) {
            let spec = ArchSpec { lstm_layers: n, hidden_cells: h, relu_layers: m, stack_factor: k,
                input_dim: 1, feature_dim: DEFAULT_FEATURE_DIM, class_count: DEFAULT_CLASS_COUNT };
            prop_assert_eq!(parse_arch(&spec.to_string()).unwrap(), spec);
        }

        #[test]
        fn parameter_count_grows_with_depth_width_and_stacking(n in 1usize..3, h in 1usize..12, m in 0usize..3, k in 1usize..3) {
            let base = ArchSpec { lstm_layers: n, hidden_cells: h, relu_layers: m, stack_factor: k,
                input_dim: 1, feature_dim: 6, class_count: 5 };
            let c = count(base);
            let mut grown = vec![
                ArchSpec { lstm_layers: n + 1, ..base },
                ArchSpec { hidden_cells: h + 1, ..base },
                ArchSpec { stack_factor: k + 1, ..base },
            ];
            // between stacked blocks a narrow ReLU layer can shrink the next LSTM's input
            if k == 1 {
                grown.push(ArchSpec { relu_layers: m + 1, ..base });
            }
            for g in grown {
                prop_assert!(count(g) > c, "{g}");
            }
        }
    }
}
