//! Configuration files.
//!
//! A config describes either an explicit lattice (`[lattice]`, `[nodes.N]`,
//! `[ports.N]`, `[links.A-B]`) or a route request (`[route]`), optionally
//! followed by `[baths]` occupancy overrides and a `[sweep]` definition.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt;
use std::ops::Range;

use activenet::route::DEFAULT_KAPPA_LINK;
use activenet::{
    AmpPolicy, BathId, LatticeSpec, LinkKind, LinkSpec, NodeSpec, Occupancies, PortSpec,
    RouteRequest, RouteStyle, Variant,
};
use serde::{Deserialize, Serialize};
use toml::{Spanned, Value};

/// Subcommands a `[sweep]` section may drive.
pub const SWEEPABLE: [&str; 5] = ["scatter", "noise", "map", "evolve", "compile-route"];

#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub path: String,
    /// 1-based line and column.
    pub location: Option<(usize, usize)>,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.location {
            Some((line, col)) => write!(f, "{}:{line}:{col}: {}", self.path, self.message),
            None => write!(f, "{}: {}", self.path, self.message),
        }
    }
}

impl std::error::Error for ConfigError {}

#[derive(Debug, Clone, PartialEq)]
pub enum Source {
    Lattice(LatticeSpec),
    Route(RouteRequest),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepParam {
    pub key: String,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Config {
    pub source: Source,
    pub model: Variant,
    pub strict: bool,
    pub baths: Occupancies,
    pub sweep_run: Option<String>,
    pub sweep: Vec<SweepParam>,
}

impl Config {
    pub fn new(source: Source) -> Self {
        Self {
            source,
            model: Variant::Adiabatic,
            strict: false,
            baths: Occupancies::new(),
            sweep_run: None,
            sweep: Vec::new(),
        }
    }
}

/// A parsed config together with non-fatal findings.
#[derive(Debug, Clone, PartialEq)]
pub struct Loaded {
    pub config: Config,
    pub warnings: Vec<String>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawFile {
    lattice: Option<RawLattice>,
    #[serde(default)]
    nodes: BTreeMap<String, Spanned<RawNode>>,
    #[serde(default)]
    ports: BTreeMap<String, Spanned<RawPort>>,
    #[serde(default)]
    links: BTreeMap<String, Spanned<RawLink>>,
    #[serde(default)]
    baths: BTreeMap<String, Spanned<f64>>,
    route: Option<Spanned<RawRoute>>,
    sweep: Option<RawSweep>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawLattice {
    rows: Spanned<i64>,
    cols: Spanned<i64>,
    detuning: Option<Spanned<f64>>,
    loss: Option<Spanned<f64>>,
    loss_occupancy: Option<Spanned<f64>>,
    model: Option<Spanned<String>>,
    strict: Option<bool>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawNode {
    detuning: Option<Spanned<f64>>,
    loss: Option<Spanned<f64>>,
    loss_occupancy: Option<Spanned<f64>>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPort {
    rate: Spanned<f64>,
    occupancy: Option<Spanned<f64>>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawLink {
    kind: Option<Spanned<String>>,
    gamma: Option<Spanned<f64>>,
    hop: Option<Spanned<f64>>,
    phase: Option<Spanned<f64>>,
    g: Option<Spanned<f64>>,
    g_i: Option<Spanned<f64>>,
    g_j: Option<Spanned<f64>>,
    kappa: Option<Spanned<f64>>,
    occupancy: Option<Spanned<f64>>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRoute {
    style: Spanned<String>,
    n: Option<Spanned<i64>>,
    rows: Option<Spanned<i64>>,
    cols: Option<Spanned<i64>>,
    paths: Option<Spanned<Vec<Vec<i64>>>>,
    amp: Option<Spanned<Value>>,
    gamma_amp: Option<Spanned<f64>>,
    gamma: Option<Spanned<f64>>,
    j: Option<Spanned<f64>>,
    j_amp: Option<Spanned<f64>>,
    kappa: Option<Spanned<f64>>,
    kappa_link: Option<Spanned<f64>>,
    eta: Option<Spanned<f64>>,
    delta: Option<Spanned<f64>>,
    off_path: Option<Spanned<String>>,
    model: Option<Spanned<String>>,
    strict: Option<bool>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSweep {
    run: Option<Spanned<String>>,
    #[serde(default)]
    params: BTreeMap<String, Spanned<Value>>,
}

struct Ctx<'a> {
    text: &'a str,
    path: &'a str,
}

type Res<T> = std::result::Result<T, ConfigError>;

impl Ctx<'_> {
    fn locate(&self, offset: usize) -> (usize, usize) {
        let before = &self.text[..offset.min(self.text.len())];
        let line = before.matches('\n').count() + 1;
        let col = before.len() - before.rfind('\n').map_or(0, |k| k + 1) + 1;
        (line, col)
    }

    fn err(&self, span: Option<Range<usize>>, message: impl Into<String>) -> ConfigError {
        ConfigError {
            path: self.path.to_string(),
            location: span.map(|s| self.locate(s.start)),
            message: message.into(),
        }
    }

    fn finite(&self, key: &str, v: &Spanned<f64>) -> Res<f64> {
        let x = *v.get_ref();
        if x.is_finite() {
            Ok(x)
        } else {
            Err(self.err(
                Some(v.span()),
                format!("{key}: value must be finite, got {x}"),
            ))
        }
    }

    fn nonneg(&self, key: &str, v: &Spanned<f64>) -> Res<f64> {
        let x = self.finite(key, v)?;
        if x < 0.0 {
            Err(self.err(Some(v.span()), format!("{key}: negative value {x}")))
        } else {
            Ok(x)
        }
    }

    fn positive(&self, key: &str, v: &Spanned<f64>) -> Res<f64> {
        let x = self.nonneg(key, v)?;
        if x == 0.0 {
            Err(self.err(Some(v.span()), format!("{key}: must be positive")))
        } else {
            Ok(x)
        }
    }

    fn count(&self, key: &str, v: &Spanned<i64>) -> Res<usize> {
        match usize::try_from(*v.get_ref()) {
            Ok(n) if n > 0 => Ok(n),
            _ => Err(self.err(
                Some(v.span()),
                format!("{key}: must be a positive integer, got {}", v.get_ref()),
            )),
        }
    }

    fn opt(
        &self,
        key: &str,
        v: &Option<Spanned<f64>>,
        check: fn(&Self, &str, &Spanned<f64>) -> Res<f64>,
    ) -> Res<Option<f64>> {
        v.as_ref().map(|s| check(self, key, s)).transpose()
    }

    fn model(&self, key: &str, v: &Option<Spanned<String>>) -> Res<Variant> {
        match v {
            None => Ok(Variant::Adiabatic),
            Some(s) => s
                .get_ref()
                .parse()
                .map_err(|e: activenet::Error| self.err(Some(s.span()), format!("{key}: {e}"))),
        }
    }

    fn node_label(&self, key: &str, span: Range<usize>, m: usize) -> Res<usize> {
        match key.parse::<usize>() {
            Ok(n) if (1..=m).contains(&n) => Ok(n),
            _ => Err(self.err(
                Some(span),
                format!("`{key}` is not a node of the lattice (1..={m})"),
            )),
        }
    }
}

fn link_key(key: &str) -> Option<(usize, usize)> {
    let (a, b) = key.split_once('-')?;
    Some((a.trim().parse().ok()?, b.trim().parse().ok()?))
}

fn neighbors(a: usize, b: usize, cols: usize) -> bool {
    let (ra, ca) = ((a - 1) / cols, (a - 1) % cols);
    let (rb, cb) = ((b - 1) / cols, (b - 1) % cols);
    ra.abs_diff(rb) + ca.abs_diff(cb) == 1
}

/// Parses config text. `force_strict` turns on strict checking regardless of
/// the file's own setting.
pub fn parse_config(text: &str, path: &str, force_strict: bool) -> Res<Loaded> {
    let ctx = Ctx { text, path };
    let raw: RawFile =
        toml::from_str(text).map_err(|e| ctx.err(e.span(), e.message().to_string()))?;
    let mut warnings = Vec::new();
    let mut config = match (&raw.lattice, &raw.route) {
        (Some(_), Some(r)) => {
            return Err(ctx.err(
                Some(r.span()),
                "a config holds either [lattice] or [route], not both",
            ));
        }
        (None, None) => return Err(ctx.err(None, "missing [lattice] or [route] section")),
        (Some(lat), None) => lattice_config(&ctx, lat, &raw, force_strict)?,
        (None, Some(route)) => {
            if let Some((key, span)) = raw
                .nodes
                .iter()
                .map(|(k, v)| (format!("nodes.{k}"), v.span()))
                .chain(
                    raw.ports
                        .iter()
                        .map(|(k, v)| (format!("ports.{k}"), v.span())),
                )
                .chain(
                    raw.links
                        .iter()
                        .map(|(k, v)| (format!("links.{k}"), v.span())),
                )
                .next()
            {
                return Err(ctx.err(
                    Some(span),
                    format!("[{key}] is not allowed with [route]; links are compiled"),
                ));
            }
            route_config(&ctx, route, force_strict, &mut warnings)?
        }
    };
    for (key, v) in &raw.baths {
        let id: BathId = key.parse().map_err(|e: activenet::Error| {
            ctx.err(Some(v.span()), format!("baths.\"{key}\": {e}"))
        })?;
        config
            .baths
            .insert(id, ctx.nonneg(&format!("baths.\"{key}\""), v)?);
    }
    if let Some(sweep) = &raw.sweep {
        if let Some(run) = &sweep.run {
            if !SWEEPABLE.contains(&run.get_ref().as_str()) {
                return Err(ctx.err(
                    Some(run.span()),
                    format!(
                        "sweep.run: `{}` cannot be swept (expected one of {})",
                        run.get_ref(),
                        SWEEPABLE.join(", ")
                    ),
                ));
            }
            config.sweep_run = Some(run.get_ref().clone());
        }
        for (key, v) in &sweep.params {
            let values = sweep_values(v.get_ref())
                .map_err(|m| ctx.err(Some(v.span()), format!("sweep.params.\"{key}\": {m}")))?;
            let mut probe = config.clone();
            apply_param(&mut probe, key, values[0]).map_err(|m| ctx.err(Some(v.span()), m))?;
            config.sweep.push(SweepParam {
                key: key.clone(),
                values,
            });
        }
    }
    Ok(Loaded { config, warnings })
}

/// Accepts `[v1, v2, ...]` or `{ from = a, to = b, steps = n }`.
pub fn sweep_values(v: &Value) -> std::result::Result<Vec<f64>, String> {
    let number = |x: &Value| match x {
        Value::Float(f) => Some(*f),
        Value::Integer(i) => Some(*i as f64),
        _ => None,
    };
    let values = match v {
        Value::Array(items) => items
            .iter()
            .map(|x| number(x).ok_or_else(|| format!("`{x}` is not a number")))
            .collect::<std::result::Result<Vec<_>, _>>()?,
        Value::Table(t) => {
            for k in t.keys() {
                if !["from", "to", "steps"].contains(&k.as_str()) {
                    return Err(format!("unknown field `{k}`, expected from, to, steps"));
                }
            }
            let get = |k: &str| {
                t.get(k)
                    .and_then(number)
                    .ok_or_else(|| format!("missing number `{k}`"))
            };
            let (from, to, steps) = (get("from")?, get("to")?, get("steps")?);
            if steps < 1.0 || steps.fract() != 0.0 {
                return Err(format!("steps must be a positive integer, got {steps}"));
            }
            linspace(from, to, steps as usize)
        }
        other => {
            return Err(format!(
                "expected an array or a from/to/steps table, got `{other}`"
            ))
        }
    };
    if values.is_empty() {
        return Err("no values".into());
    }
    if let Some(x) = values.iter().find(|x| !x.is_finite()) {
        return Err(format!("value {x} is not finite"));
    }
    Ok(values)
}

/// `steps` evenly spaced points including both ends (`from` alone if 1).
pub fn linspace(from: f64, to: f64, steps: usize) -> Vec<f64> {
    if steps == 1 {
        return vec![from];
    }
    (0..steps)
        .map(|k| from + (to - from) * k as f64 / (steps - 1) as f64)
        .collect()
}

fn lattice_config(
    ctx: &Ctx<'_>,
    lat: &RawLattice,
    raw: &RawFile,
    force_strict: bool,
) -> Res<Config> {
    let rows = ctx.count("lattice.rows", &lat.rows)?;
    let cols = ctx.count("lattice.cols", &lat.cols)?;
    let m = rows * cols;
    let mut spec = LatticeSpec::new(rows, cols);
    spec.default_node = NodeSpec {
        detuning: ctx
            .opt("lattice.detuning", &lat.detuning, Ctx::finite)?
            .unwrap_or(0.0),
        loss: ctx
            .opt("lattice.loss", &lat.loss, Ctx::nonneg)?
            .unwrap_or(0.0),
        loss_occupancy: ctx
            .opt("lattice.loss_occupancy", &lat.loss_occupancy, Ctx::nonneg)?
            .unwrap_or(0.0),
    };
    for (key, node) in &raw.nodes {
        let label = ctx.node_label(key, node.span(), m)?;
        let n = node.get_ref();
        let base = spec.default_node;
        let k = |f: &str| format!("nodes.{key}.{f}");
        spec.nodes.insert(
            label,
            NodeSpec {
                detuning: ctx
                    .opt(&k("detuning"), &n.detuning, Ctx::finite)?
                    .unwrap_or(base.detuning),
                loss: ctx
                    .opt(&k("loss"), &n.loss, Ctx::nonneg)?
                    .unwrap_or(base.loss),
                loss_occupancy: ctx
                    .opt(&k("loss_occupancy"), &n.loss_occupancy, Ctx::nonneg)?
                    .unwrap_or(base.loss_occupancy),
            },
        );
    }
    let mut ports: Vec<PortSpec> = Vec::new();
    for (key, port) in &raw.ports {
        let node = ctx.node_label(key, port.span(), m)?;
        let p = port.get_ref();
        let rate = ctx.positive(&format!("ports.{key}.rate"), &p.rate)?;
        let occupancy = ctx
            .opt(&format!("ports.{key}.occupancy"), &p.occupancy, Ctx::nonneg)?
            .unwrap_or(0.0);
        if ports.iter().any(|q| q.node == node) {
            return Err(ctx.err(Some(port.span()), format!("duplicate port at node {node}")));
        }
        ports.push(PortSpec {
            node,
            rate,
            occupancy,
        });
    }
    ports.sort_by_key(|p| p.node);
    spec.ports = ports;
    for (key, link) in &raw.links {
        spec.links.push(parse_link(ctx, key, link, rows, cols)?);
    }
    spec.links.sort_by_key(|l| (l.i.min(l.j), l.i.max(l.j)));
    for w in spec.links.windows(2) {
        if (w[0].i.min(w[0].j), w[0].i.max(w[0].j)) == (w[1].i.min(w[1].j), w[1].i.max(w[1].j)) {
            let span = raw.links.get(&w[1].label()).map(Spanned::span);
            return Err(ctx.err(span, format!("duplicate link {}-{}", w[1].i, w[1].j)));
        }
    }
    let mut config = Config::new(Source::Lattice(spec));
    config.model = ctx.model("lattice.model", &lat.model)?;
    config.strict = force_strict || lat.strict.unwrap_or(false);
    Ok(config)
}

fn parse_link(
    ctx: &Ctx<'_>,
    key: &str,
    link: &Spanned<RawLink>,
    rows: usize,
    cols: usize,
) -> Res<LinkSpec> {
    let span = link.span();
    let (a, b) = link_key(key).ok_or_else(|| {
        ctx.err(
            Some(span.clone()),
            format!("link key `{key}` must look like `i-j`"),
        )
    })?;
    let m = rows * cols;
    for n in [a, b] {
        if !(1..=m).contains(&n) {
            return Err(ctx.err(
                Some(span.clone()),
                format!("link {key}: node {n} does not exist"),
            ));
        }
    }
    if !neighbors(a, b, cols) {
        return Err(ctx.err(Some(span), format!("link {key}: not nearest neighbors")));
    }
    let l = link.get_ref();
    let k = |f: &str| format!("links.{key}.{f}");
    let kind = match &l.kind {
        None => LinkKind::Dissipative,
        Some(s) => s.get_ref().parse().map_err(|e: activenet::Error| {
            ctx.err(Some(s.span()), format!("{}: {e}", k("kind")))
        })?,
    };
    let kappa = ctx
        .opt(&k("kappa"), &l.kappa, Ctx::nonneg)?
        .unwrap_or(DEFAULT_KAPPA_LINK);
    let mut spec = match ctx.opt(&k("gamma"), &l.gamma, Ctx::nonneg)? {
        Some(gamma) => {
            if kappa == 0.0 {
                return Err(ctx.err(
                    Some(span),
                    format!("{}: a balanced link needs kappa > 0", k("gamma")),
                ));
            }
            LinkSpec::directed(a, b, kind, gamma, kappa)
        }
        None => LinkSpec::new(a, b, kind, kappa),
    };
    if let Some(g) = ctx.opt(&k("g"), &l.g, Ctx::nonneg)? {
        if l.g_i.is_some() || l.g_j.is_some() {
            return Err(ctx.err(
                l.g.as_ref().map(Spanned::span),
                format!("{}: give either g or g_i/g_j", k("g")),
            ));
        }
        spec.g_i = g;
        spec.g_j = g;
    }
    if let Some(g) = ctx.opt(&k("g_i"), &l.g_i, Ctx::nonneg)? {
        spec.g_i = g;
    }
    if let Some(g) = ctx.opt(&k("g_j"), &l.g_j, Ctx::nonneg)? {
        spec.g_j = g;
    }
    if let Some(h) = ctx.opt(&k("hop"), &l.hop, Ctx::nonneg)? {
        spec.hop = h;
    }
    if let Some(s) = &l.phase {
        let phase = ctx.finite(&k("phase"), s)?;
        if !(phase > -PI && phase <= PI) {
            return Err(ctx.err(
                Some(s.span()),
                format!("{}: {phase} outside (-pi, pi]", k("phase")),
            ));
        }
        spec.phase = phase;
    }
    if let Some(n) = ctx.opt(&k("occupancy"), &l.occupancy, Ctx::nonneg)? {
        spec.occupancy = n;
    }
    Ok(spec)
}

fn route_config(
    ctx: &Ctx<'_>,
    route: &Spanned<RawRoute>,
    force_strict: bool,
    warnings: &mut Vec<String>,
) -> Res<Config> {
    let r = route.get_ref();
    let style: RouteStyle = r.style.get_ref().parse().map_err(|e: activenet::Error| {
        ctx.err(Some(r.style.span()), format!("route.style: {e}"))
    })?;
    let dim =
        |key: &str, v: &Option<Spanned<i64>>| v.as_ref().map(|s| ctx.count(key, s)).transpose();
    let (n, rows, cols) = (
        dim("route.n", &r.n)?,
        dim("route.rows", &r.rows)?,
        dim("route.cols", &r.cols)?,
    );
    let (rows, cols) = match (n, rows, cols) {
        (Some(n), None, None) if style == RouteStyle::Chain => (1, n),
        (Some(n), None, None) => (n, n),
        (None, Some(rows), Some(cols)) => (rows, cols),
        (None, None, Some(cols)) if style == RouteStyle::Chain => (1, cols),
        _ => return Err(ctx.err(Some(route.span()), "route: give either n or rows and cols")),
    };
    let mut req = RouteRequest::new(rows, cols, style);
    if let Some(paths) = &r.paths {
        if style != RouteStyle::Custom {
            return Err(ctx.err(
                Some(paths.span()),
                "route.paths: only used with style = \"custom\"",
            ));
        }
        req.paths = paths
            .get_ref()
            .iter()
            .map(|p| p.iter().map(|&n| usize::try_from(n).unwrap_or(0)).collect())
            .collect();
    }
    if let Some(amp) = &r.amp {
        req.amp = match amp.get_ref() {
            Value::String(s) if s == "none" => AmpPolicy::None,
            Value::String(s) if s == "every-second-link" => AmpPolicy::EverySecondLink,
            Value::Array(items) => AmpPolicy::Explicit(
                items
                    .iter()
                    .map(|x| x.as_str().and_then(link_key))
                    .collect::<Option<Vec<_>>>()
                    .ok_or_else(|| ctx.err(Some(amp.span()), "route.amp: links must be strings like \"2-3\""))?,
            ),
            other => {
                return Err(ctx.err(
                    Some(amp.span()),
                    format!("route.amp: expected \"none\", \"every-second-link\" or a list of links, got `{other}`"),
                ))
            }
        };
    }
    let f = |key: &str, v: &Option<Spanned<f64>>| ctx.opt(&format!("route.{key}"), v, Ctx::nonneg);
    if let Some(v) = f("gamma_amp", &r.gamma_amp)? {
        req.gamma_amp = v;
    }
    req.gamma = f("gamma", &r.gamma)?;
    req.j = f("j", &r.j)?;
    req.j_amp = f("j_amp", &r.j_amp)?;
    if let Some(v) = ctx.opt("route.kappa", &r.kappa, Ctx::positive)? {
        req.kappa = v;
    }
    if let Some(v) = ctx.opt("route.kappa_link", &r.kappa_link, Ctx::positive)? {
        req.kappa_link = v;
    }
    if let Some(v) = f("eta", &r.eta)? {
        req.eta = v;
    }
    if let Some(v) = ctx.opt("route.delta", &r.delta, Ctx::finite)? {
        req.delta = v;
    }
    if let Some(s) = &r.off_path {
        req.off_path = s.get_ref().parse().map_err(|e: activenet::Error| {
            ctx.err(Some(s.span()), format!("route.off_path: {e}"))
        })?;
    }
    let strict = force_strict || r.strict.unwrap_or(false);
    if req.gamma_amp >= req.kappa {
        let msg = format!(
            "route.gamma_amp = {} violates the stability bound gamma_amp < kappa (kappa = {})",
            req.gamma_amp, req.kappa
        );
        if strict {
            return Err(ctx.err(r.gamma_amp.as_ref().map(Spanned::span), msg));
        }
        warnings.push(msg);
    }
    let mut config = Config::new(Source::Route(req));
    config.model = ctx.model("route.model", &r.model)?;
    config.strict = strict;
    Ok(config)
}

fn num(x: f64) -> String {
    format!("{x:?}")
}

/// Deterministic TOML rendering; `parse_config` of the result gives back an
/// equal [`Config`].
pub fn to_toml(config: &Config) -> String {
    let mut out = String::new();
    let mut line = |s: String| {
        out.push_str(&s);
        out.push('\n');
    };
    match &config.source {
        Source::Lattice(spec) => {
            line("[lattice]".into());
            line(format!("rows = {}", spec.rows));
            line(format!("cols = {}", spec.cols));
            line(format!("model = \"{}\"", config.model));
            line(format!("strict = {}", config.strict));
            line(format!("detuning = {}", num(spec.default_node.detuning)));
            line(format!("loss = {}", num(spec.default_node.loss)));
            line(format!(
                "loss_occupancy = {}",
                num(spec.default_node.loss_occupancy)
            ));
            for (label, n) in &spec.nodes {
                line(String::new());
                line(format!("[nodes.{label}]"));
                line(format!("detuning = {}", num(n.detuning)));
                line(format!("loss = {}", num(n.loss)));
                line(format!("loss_occupancy = {}", num(n.loss_occupancy)));
            }
            let mut ports = spec.ports.clone();
            ports.sort_by_key(|p| p.node);
            for p in &ports {
                line(String::new());
                line(format!("[ports.{}]", p.node));
                line(format!("rate = {}", num(p.rate)));
                line(format!("occupancy = {}", num(p.occupancy)));
            }
            let mut links = spec.links.clone();
            links.sort_by_key(|l| (l.i.min(l.j), l.i.max(l.j)));
            for l in &links {
                line(String::new());
                line(format!("[links.{}-{}]", l.i, l.j));
                line(format!("kind = \"{}\"", l.kind));
                line(format!("hop = {}", num(l.hop)));
                line(format!("phase = {}", num(l.phase)));
                line(format!("g_i = {}", num(l.g_i)));
                line(format!("g_j = {}", num(l.g_j)));
                line(format!("kappa = {}", num(l.kappa)));
                line(format!("occupancy = {}", num(l.occupancy)));
            }
        }
        Source::Route(req) => {
            line("[route]".into());
            line(format!("style = \"{}\"", req.style));
            line(format!("rows = {}", req.rows));
            line(format!("cols = {}", req.cols));
            line(format!("model = \"{}\"", config.model));
            line(format!("strict = {}", config.strict));
            if !req.paths.is_empty() {
                let paths: Vec<String> = req
                    .paths
                    .iter()
                    .map(|p| {
                        format!(
                            "[{}]",
                            p.iter()
                                .map(usize::to_string)
                                .collect::<Vec<_>>()
                                .join(", ")
                        )
                    })
                    .collect();
                line(format!("paths = [{}]", paths.join(", ")));
            }
            line(match &req.amp {
                AmpPolicy::None => "amp = \"none\"".into(),
                AmpPolicy::EverySecondLink => "amp = \"every-second-link\"".into(),
                AmpPolicy::Explicit(list) => format!(
                    "amp = [{}]",
                    list.iter()
                        .map(|(a, b)| format!("\"{a}-{b}\""))
                        .collect::<Vec<_>>()
                        .join(", ")
                ),
            });
            line(format!("gamma_amp = {}", num(req.gamma_amp)));
            for (key, v) in [("gamma", req.gamma), ("j", req.j), ("j_amp", req.j_amp)] {
                if let Some(v) = v {
                    line(format!("{key} = {}", num(v)));
                }
            }
            line(format!("kappa = {}", num(req.kappa)));
            line(format!("kappa_link = {}", num(req.kappa_link)));
            line(format!("eta = {}", num(req.eta)));
            line(format!("delta = {}", num(req.delta)));
            line(format!("off_path = \"{}\"", req.off_path));
        }
    }
    if !config.baths.is_empty() {
        line(String::new());
        line("[baths]".into());
        for (id, n) in &config.baths {
            line(format!("\"{id}\" = {}", num(*n)));
        }
    }
    if config.sweep_run.is_some() || !config.sweep.is_empty() {
        line(String::new());
        line("[sweep]".into());
        if let Some(run) = &config.sweep_run {
            line(format!("run = \"{run}\""));
        }
        if !config.sweep.is_empty() {
            line(String::new());
            line("[sweep.params]".into());
            for p in &config.sweep {
                let values: Vec<String> = p.values.iter().map(|v| num(*v)).collect();
                line(format!("\"{}\" = [{}]", p.key, values.join(", ")));
            }
        }
    }
    out
}

/// Sets one numeric parameter addressed by a dotted key such as
/// `route.gamma_amp`, `links.1-2.hop`, `nodes.3.detuning`, `ports.1.rate`
/// or `baths.link:1-2`.
pub fn apply_param(config: &mut Config, key: &str, value: f64) -> std::result::Result<(), String> {
    let unknown = || format!("unknown sweep parameter `{key}`");
    let parts: Vec<&str> = key.splitn(3, '.').collect();
    match (&mut config.source, parts.as_slice()) {
        (_, ["baths", id]) => {
            let id: BathId = id.parse().map_err(|_| unknown())?;
            config.baths.insert(id, value);
        }
        (Source::Route(req), ["route", field]) => match *field {
            "gamma_amp" => req.gamma_amp = value,
            "gamma" => req.gamma = Some(value),
            "j" => req.j = Some(value),
            "j_amp" => req.j_amp = Some(value),
            "kappa" => req.kappa = value,
            "kappa_link" => req.kappa_link = value,
            "eta" => req.eta = value,
            "delta" => req.delta = value,
            _ => return Err(unknown()),
        },
        (Source::Lattice(spec), ["lattice", field]) => match *field {
            "detuning" => spec.default_node.detuning = value,
            "loss" => spec.default_node.loss = value,
            "loss_occupancy" => spec.default_node.loss_occupancy = value,
            _ => return Err(unknown()),
        },
        (Source::Lattice(spec), ["nodes", label, field]) => {
            let label: usize = label.parse().map_err(|_| unknown())?;
            if !(1..=spec.node_count()).contains(&label) {
                return Err(format!(
                    "sweep parameter `{key}`: node {label} does not exist"
                ));
            }
            let base = spec.node_spec(label);
            let node = spec.nodes.entry(label).or_insert(base);
            match *field {
                "detuning" => node.detuning = value,
                "loss" => node.loss = value,
                "loss_occupancy" => node.loss_occupancy = value,
                _ => return Err(unknown()),
            }
        }
        (Source::Lattice(spec), ["ports", label, field]) => {
            let label: usize = label.parse().map_err(|_| unknown())?;
            let port = spec
                .ports
                .iter_mut()
                .find(|p| p.node == label)
                .ok_or_else(|| format!("sweep parameter `{key}`: no port at node {label}"))?;
            match *field {
                "rate" => port.rate = value,
                "occupancy" => port.occupancy = value,
                _ => return Err(unknown()),
            }
        }
        (Source::Lattice(spec), ["links", name, field]) => {
            let (a, b) = link_key(name).ok_or_else(unknown)?;
            let link = spec
                .links
                .iter_mut()
                .find(|l| (l.i, l.j) == (a, b) || (l.i, l.j) == (b, a))
                .ok_or_else(|| format!("sweep parameter `{key}`: no link {name}"))?;
            match *field {
                "hop" => link.hop = value,
                "phase" => link.phase = value,
                "g" => {
                    link.g_i = value;
                    link.g_j = value;
                }
                "g_i" => link.g_i = value,
                "g_j" => link.g_j = value,
                "kappa" => link.kappa = value,
                "occupancy" => link.occupancy = value,
                "gamma" => {
                    let g = (value * link.kappa).sqrt() / 2.0;
                    link.g_i = g;
                    link.g_j = g;
                    link.hop = value / 2.0;
                }
                _ => return Err(unknown()),
            }
        }
        _ => return Err(unknown()),
    }
    Ok(())
}
