//! The named experiments, their configuration keys and descriptions.

use crate::error::{Error, Result};

/// One documented configuration key.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct KeyDoc {
    pub key: &'static str,
    pub default: &'static str,
    pub doc: &'static str,
}

impl KeyDoc {
    pub const fn new(key: &'static str, default: &'static str, doc: &'static str) -> Self {
        KeyDoc { key, default, doc }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ExperimentKind {
    Sir,
    SirNoisy,
    Hospital,
    Replicator,
    ReplicatorRandomCost,
    LowerBound,
    MixingReport,
    CustomSimplexLds,
}

const ETA: KeyDoc = KeyDoc::new(
    "eta",
    "experiment",
    "step size: `experiment` = sqrt(d H ln H)/(2 sqrt T), `theory` = c sqrt(d H ln d)/(L tau^2 ln^2 T sqrt T), or a number",
);
const ETA_C: KeyDoc = KeyDoc::new("eta_c", "1", "constant c of the theory step size");
const TAU: KeyDoc = KeyDoc::new("tau", "1", "mixing-time parameter of the comparator class");
const OPT_EW: KeyDoc = KeyDoc::new(
    "optimizer",
    "exp-weights",
    "`exp-weights` (fixed scale, multiplicative updates) or `lazy-md` (entropic FTRL over the scale range)",
);
const OPT_MD: KeyDoc = KeyDoc::new("optimizer", "lazy-md", OPT_EW.doc);
const GRAD_FD: KeyDoc = KeyDoc::new(
    "gradient",
    "fd",
    "`fd` (central differences) or `exact` (forward sensitivities; linear systems only)",
);
const GRAD_EXACT: KeyDoc = KeyDoc::new("gradient", "exact", GRAD_FD.doc);
const H5: KeyDoc = KeyDoc::new("H", "5", "history length of the controller");

const SIR_KEYS: &[KeyDoc] = &[
    KeyDoc::new("T", "200", "horizon"),
    H5,
    ETA,
    ETA_C,
    TAU,
    OPT_EW,
    GRAD_FD,
    KeyDoc::new("beta", "0.5", "transmission rate"),
    KeyDoc::new("theta", "0.03", "recovery rate"),
    KeyDoc::new("xi", "0.005", "immunity-loss rate"),
    KeyDoc::new("x1", "0.9,0.1,0", "initial (S, I, R)"),
    KeyDoc::new("c2", "1", "prevention cost weight"),
    KeyDoc::new("c3", "10", "infection cost weight"),
];

const SIR_NOISY_KEYS: &[KeyDoc] = &[
    KeyDoc::new("T", "200", "horizon"),
    H5,
    ETA,
    ETA_C,
    TAU,
    OPT_EW,
    GRAD_FD,
    KeyDoc::new("beta", "0.5", "transmission rate"),
    KeyDoc::new("theta", "0.03", "recovery rate"),
    KeyDoc::new("xi", "0.005", "immunity-loss rate"),
    KeyDoc::new("x1", "0.9,0.1,0", "initial (S, I, R)"),
    KeyDoc::new("c2", "1", "prevention cost weight"),
    KeyDoc::new("c3", "5", "infection cost weight"),
    KeyDoc::new(
        "noise",
        "bursts",
        "`bursts`: gamma = rate with probability prob, w = (0,1,0); `uniform`: gamma = rate, w a normalised uniform vector",
    ),
    KeyDoc::new("noise_rate", "0.01", "perturbation strength"),
    KeyDoc::new("noise_prob", "0.2", "burst probability"),
];

const HOSPITAL_KEYS: &[KeyDoc] = &[
    KeyDoc::new("T", "100", "horizon"),
    H5,
    ETA,
    ETA_C,
    TAU,
    OPT_EW,
    GRAD_FD,
    KeyDoc::new("sigma0", "3", "base reproduction number"),
    KeyDoc::new("rate", "0.1", "recovery rate; transmission is rate*sigma0"),
    KeyDoc::new("x1", "0.9,0.01,0.09", "initial (S, I, R)"),
    KeyDoc::new("y_max", "0.1", "hospital capacity as a population fraction"),
    KeyDoc::new("c2", "0.01", "prevention cost weight"),
    KeyDoc::new("c3", "100", "surge cost weight"),
    KeyDoc::new("reference", "", "optional CSV t,S,I,u with an optimal-control reference trajectory"),
];

const REPLICATOR_KEYS: &[KeyDoc] = &[
    KeyDoc::new("T", "100", "horizon"),
    H5,
    ETA,
    ETA_C,
    TAU,
    OPT_EW,
    GRAD_FD,
    KeyDoc::new("evolution_rate", "0.25", "replicator step size in (0, 1]"),
    KeyDoc::new("grid", "50", "best-response lattice resolution"),
];

const REPLICATOR_RANDOM_KEYS: &[KeyDoc] = &[
    KeyDoc::new("T", "200", "horizon"),
    H5,
    ETA,
    ETA_C,
    TAU,
    OPT_EW,
    GRAD_FD,
    KeyDoc::new("evolution_rate", "0.25", "replicator step size in (0, 1]"),
    KeyDoc::new("grid", "50", "best-response lattice resolution"),
    KeyDoc::new("window", "15", "trailing window for reported average costs"),
];

const LOWER_BOUND_KEYS: &[KeyDoc] = &[
    H5,
    ETA,
    ETA_C,
    TAU,
    OPT_MD,
    GRAD_EXACT,
    KeyDoc::new("variant", "simplex", "`simplex` or `scalar`"),
    KeyDoc::new("beta_lb", "32", "construction constant (at least 2)"),
    KeyDoc::new("horizons", "200,400,800", "even horizons to evaluate"),
    KeyDoc::new("trials", "40", "trials per horizon"),
    KeyDoc::new("scalar_gain", "0.5", "gain k of the u = k x controller used for the scalar variant"),
];

const MIXING_KEYS: &[KeyDoc] = &[
    KeyDoc::new("A", "0.9,0.2;0.1,0.8", "column-stochastic matrix, rows separated by `;`"),
    KeyDoc::new("t_max", "50", "largest power reported"),
];

const CUSTOM_KEYS: &[KeyDoc] = &[
    KeyDoc::new("T", "100", "horizon"),
    H5,
    ETA,
    ETA_C,
    TAU,
    OPT_MD,
    GRAD_FD,
    KeyDoc::new("A", "0.9,0.2;0.1,0.8", "state transition (column-stochastic, d x d)"),
    KeyDoc::new("B", "0,1;1,0", "control transition (column-stochastic, d x k)"),
    KeyDoc::new("x1", "0.5,0.5", "initial state"),
    KeyDoc::new("alpha_lb", "0", "smallest control mass"),
    KeyDoc::new("alpha_ub", "0.5", "largest control mass"),
    KeyDoc::new("gamma", "0", "perturbation strength every round"),
    KeyDoc::new("noise", "random", "`random` (w uniform on the simplex) or `vertex` (w = first vertex)"),
    KeyDoc::new("cost", "l1", "`l1` (|x - target|_1), `quadratic` (|x - target|_2^2) or `linear` (<weights, x>)"),
    KeyDoc::new("target", "0.7,0.3", "target state for l1/quadratic costs"),
    KeyDoc::new("weights", "1,0", "state weights for the linear cost"),
];

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 8] = [
        ExperimentKind::Sir,
        ExperimentKind::SirNoisy,
        ExperimentKind::Hospital,
        ExperimentKind::Replicator,
        ExperimentKind::ReplicatorRandomCost,
        ExperimentKind::LowerBound,
        ExperimentKind::MixingReport,
        ExperimentKind::CustomSimplexLds,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::Sir => "sir",
            ExperimentKind::SirNoisy => "sir-noisy",
            ExperimentKind::Hospital => "hospital",
            ExperimentKind::Replicator => "replicator",
            ExperimentKind::ReplicatorRandomCost => "replicator-random-cost",
            ExperimentKind::LowerBound => "lowerbound",
            ExperimentKind::MixingReport => "mixing-report",
            ExperimentKind::CustomSimplexLds => "custom-simplex-lds",
        }
    }

    pub fn from_name(name: &str) -> Result<Self> {
        Self::ALL.into_iter().find(|k| k.name() == name).ok_or_else(|| {
            let names: Vec<&str> = Self::ALL.iter().map(|k| k.name()).collect();
            Error::Config(format!("unknown experiment {name:?}; valid names: {}", names.join(", ")))
        })
    }

    pub fn keys(self) -> &'static [KeyDoc] {
        match self {
            ExperimentKind::Sir => SIR_KEYS,
            ExperimentKind::SirNoisy => SIR_NOISY_KEYS,
            ExperimentKind::Hospital => HOSPITAL_KEYS,
            ExperimentKind::Replicator => REPLICATOR_KEYS,
            ExperimentKind::ReplicatorRandomCost => REPLICATOR_RANDOM_KEYS,
            ExperimentKind::LowerBound => LOWER_BOUND_KEYS,
            ExperimentKind::MixingReport => MIXING_KEYS,
            ExperimentKind::CustomSimplexLds => CUSTOM_KEYS,
        }
    }

    pub fn summary(self) -> &'static str {
        match self {
            ExperimentKind::Sir => "controlled SIR epidemic, GPC-Simplex vs full and no prevention",
            ExperimentKind::SirNoisy => "controlled SIR with adversarial perturbations",
            ExperimentKind::Hospital => "SIR with a hospital-capacity surge cost",
            ExperimentKind::Replicator => "controlled Rock-Paper-Scissors replicator dynamics",
            ExperimentKind::ReplicatorRandomCost => "replicator dynamics with coin-flip costs",
            ExperimentKind::LowerBound => "regret on the two-system lower-bound construction",
            ExperimentKind::MixingReport => "stationary distribution and mixing profile of a matrix",
            ExperimentKind::CustomSimplexLds => "user-specified simplex LDS",
        }
    }

    fn model(self) -> &'static str {
        match self {
            ExperimentKind::Sir | ExperimentKind::SirNoisy => {
                "state x = (S, I, R) in the 3-simplex, control u in the 2-simplex\n\
                 x' = (1 - g) ( [[1 - b I, 0, xi], [0, 1 - th, 0], [0, th, 1 - xi]] x\n\
                 \x20             + [[b I S, 0], [0, b I S], [0, 0]] u ) + g w\n\
                 cost c(x, u) = c3 I^2 + c2 S u(1)\n\
                 u = (1, 0) is full prevention, u = (0, 1) none; effective transmission is b u(2)\n\
                 policies: gpc-simplex, full-prevention, no-prevention"
            }
            ExperimentKind::Hospital => {
                "SIR with b = rate * sigma0, th = rate, xi = 0, no perturbations\n\
                 cost c(x, u) = -S_inf(S, I) + c2 u(1)^2 + c3 (I - y_max) / (1 + exp(-100 (I - y_max)))\n\
                 S_inf(S, I) = W0(-sigma0 I exp(-sigma0 (S + I))) / sigma0, W0 the principal Lambert branch\n\
                 policies: gpc-simplex, no-control"
            }
            ExperimentKind::Replicator => {
                "x' = x + eta_rep [x_i (M(u) x)_i]_i with M(u) = [[0, u1, -u3], [-u1, 0, u2], [u3, -u2, 0]]\n\
                 uniform start, cost c(x, u) = x1^2\n\
                 policies: gpc-simplex, best-response, uniform-default"
            }
            ExperimentKind::ReplicatorRandomCost => {
                "replicator dynamics as in `replicator`; each round the cost is x1^2 or x1^2 + u3^2\n\
                 with equal probability (seeded coin). Best response optimises the previous round's cost.\n\
                 policies: gpc-simplex, best-response, uniform-default"
            }
            ExperimentKind::LowerBound => {
                "simplex variant: A = B = I, x1 = (0, 1), control mass in [0, beta/T], gamma = 1/2 at T/2 only,\n\
                 w = (1/2, 1/2) or (1, 0) by a hidden fair coin; cost |x(2) - 1/2| after T/2.\n\
                 scalar variant: x' = x - (beta/T) u + w, x1 = 1, w = -1 at T/2 on branch 1; cost |x| + |u| after T/2.\n\
                 regret is measured against the better of the two comparator policies on the drawn system"
            }
            ExperimentKind::MixingReport => {
                "stationary distribution pi of A, D(t) = max_j |A^t e_j - pi|_1,\n\
                 Dbar(t) = max_jk |A^t e_j - A^t e_k|_1, and the mixing time at epsilon = 1/4"
            }
            ExperimentKind::CustomSimplexLds => {
                "x' = (1 - g) ((1 - |u|_1) A x + B u) + g w with a user-chosen cost;\n\
                 policies: gpc-simplex and the constant-gain policies u = alpha_ub e_j for each control vertex j\n\
                 (plus zero control when alpha_lb = 0)"
            }
        }
    }

    /// Human-readable description: model, policies, keys and defaults.
    pub fn describe(self) -> String {
        let mut s = format!("{}: {}\n\n{}\n\nkeys (default):\n", self.name(), self.summary(), self.model());
        for d in super::config::COMMON_KEYS.iter().chain(self.keys()) {
            if d.key == "experiment" {
                continue;
            }
            s.push_str(&format!("  {:<16} ({})  {}\n", d.key, d.default, d.doc));
        }
        s
    }
}

/// `describe <name>`.
pub fn describe(name: &str) -> Result<String> {
    Ok(ExperimentKind::from_name(name)?.describe())
}

/// `list`.
pub fn list() -> String {
    ExperimentKind::ALL
        .iter()
        .map(|k| format!("{:<24}{}\n", k.name(), k.summary()))
        .collect()
}
