//! Frozen CSV layouts. `docs/schemas.md` documents the same table.

pub const SCHEMA_VERSION: u32 = 1;

pub struct Schema {
    pub id: &'static str,
    pub columns: &'static [&'static str],
}

pub const WAVEPACKET: Schema = Schema {
    id: "wavepacket/1",
    columns: &["t", "n", "re", "im", "probability"],
};
pub const MOMENTS: Schema = Schema {
    id: "moments/1",
    columns: &["t", "p", "moment", "uncertainty"],
};
pub const OUTSIDE: Schema = Schema {
    id: "outside/1",
    columns: &["t", "n", "right", "left", "both"],
};
pub const BANDS: Schema = Schema {
    id: "bands/1",
    columns: &["k", "j", "root", "m", "left", "right", "width"],
};
pub const PROFILES: Schema = Schema {
    id: "profiles/1",
    columns: &["k", "m", "count"],
};
pub const DIMENSION: Schema = Schema {
    id: "dimension/1",
    columns: &[
        "lambda",
        "k",
        "delta",
        "dimension",
        "dimension_log_lambda",
        "correlation",
    ],
};
pub const COVERS: Schema = Schema {
    id: "covers/1",
    columns: &["lambda", "eps", "count"],
};
pub const PROBABILITIES: Schema = Schema {
    id: "probabilities/1",
    columns: &["t", "alpha", "n", "probability"],
};
pub const SPREADING: Schema = Schema {
    id: "spreading/1",
    columns: &["alpha", "s_minus", "s_plus"],
};
pub const ENVELOPE: Schema = Schema {
    id: "envelope/1",
    columns: &["n", "t", "measured", "rhs", "envelope"],
};
pub const CHAIN: Schema = Schema {
    id: "chain/1",
    columns: &["t", "n", "measured", "bound"],
};
pub const TREND: Schema = Schema {
    id: "trend/1",
    columns: &["lambda", "alpha_upper_log_lambda", "alpha_lower_log_lambda", "gap"],
};
pub const REPORT: Schema = Schema {
    id: "report/1",
    columns: &[],
};

pub const ALL: &[&Schema] = &[
    &WAVEPACKET,
    &MOMENTS,
    &OUTSIDE,
    &BANDS,
    &PROFILES,
    &DIMENSION,
    &COVERS,
    &PROBABILITIES,
    &SPREADING,
    &ENVELOPE,
    &CHAIN,
    &TREND,
    &REPORT,
];

pub fn lookup(id: &str) -> Option<&'static Schema> {
    ALL.iter().copied().find(|s| s.id == id)
}
