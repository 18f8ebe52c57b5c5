use std::f64::consts::PI;
use std::path::Path;

use activenet::{
    grid_links, AmpPolicy, BathId, LatticeSpec, LinkKind, LinkSpec, NodeSpec, OffPath, PortSpec,
    RouteRequest, RouteStyle, Variant,
};
use activenet_cli::config::SweepParam;
use activenet_cli::{parse_config, to_toml, Config, Source};
use proptest::prelude::*;

fn value() -> impl Strategy<Value = f64> {
    prop_oneof![
        Just(0.0),
        0.0..10.0f64,
        1e-12..1e-6f64,
        1e3..1e9f64,
        Just(0.1),
        Just(1.0 / 3.0),
    ]
}

fn node_spec() -> impl Strategy<Value = NodeSpec> {
    (-5.0..5.0f64, value(), value()).prop_map(|(detuning, loss, loss_occupancy)| NodeSpec {
        detuning,
        loss,
        loss_occupancy,
    })
}

fn link(i: usize, j: usize) -> impl Strategy<Value = LinkSpec> {
    (
        any::<bool>(),
        any::<bool>(),
        value(),
        -PI + 1e-9..=PI,
        value(),
        value(),
        value(),
        value(),
    )
        .prop_map(move |(flip, amp, hop, phase, g_i, g_j, kappa, occupancy)| {
            let (i, j) = if flip { (j, i) } else { (i, j) };
            LinkSpec {
                i,
                j,
                kind: if amp {
                    LinkKind::Amplifying
                } else {
                    LinkKind::Dissipative
                },
                hop,
                phase,
                g_i,
                g_j,
                kappa,
                occupancy,
            }
        })
}

fn lattice() -> impl Strategy<Value = LatticeSpec> {
    (1usize..=3, 1usize..=4)
        .prop_filter("at least two nodes", |(r, c)| r * c >= 2)
        .prop_flat_map(|(rows, cols)| {
            let m = rows * cols;
            let links: Vec<_> = grid_links(rows, cols)
                .into_iter()
                .map(|(i, j)| prop::option::of(link(i, j)))
                .collect();
            (
                Just((rows, cols)),
                node_spec(),
                prop::collection::btree_map(1..=m, node_spec(), 0..=m),
                prop::collection::btree_map(1..=m, (1e-3..5.0f64, value()), 0..=m),
                links,
            )
        })
        .prop_map(|((rows, cols), default_node, nodes, ports, links)| {
            let mut spec = LatticeSpec::new(rows, cols);
            spec.default_node = default_node;
            spec.nodes = nodes;
            spec.ports = ports
                .into_iter()
                .map(|(node, (rate, occupancy))| PortSpec {
                    node,
                    rate,
                    occupancy,
                })
                .collect();
            spec.links = links.into_iter().flatten().collect();
            spec
        })
}

fn route() -> impl Strategy<Value = RouteRequest> {
    (
        prop::sample::select(vec![
            RouteStyle::Chain,
            RouteStyle::OneEdge,
            RouteStyle::BothEdges,
            RouteStyle::AllNodes,
            RouteStyle::Custom,
        ]),
        2usize..=8,
        prop_oneof![
            Just(AmpPolicy::None),
            Just(AmpPolicy::EverySecondLink),
            prop::collection::vec((1usize..20, 1usize..20), 1..4).prop_map(AmpPolicy::Explicit),
        ],
        (
            value(),
            prop::option::of(value()),
            prop::option::of(value()),
            prop::option::of(value()),
        ),
        (
            1e-3..10.0f64,
            1.0..1e3f64,
            value(),
            -2.0..2.0f64,
            any::<bool>(),
        ),
    )
        .prop_map(
            |(
                style,
                n,
                amp,
                (gamma_amp, gamma, j, j_amp),
                (kappa, kappa_link, eta, delta, dec),
            )| {
                let (rows, cols) = if style == RouteStyle::Chain {
                    (1, n)
                } else {
                    (n, n)
                };
                let mut req = RouteRequest::new(rows, cols, style);
                if style == RouteStyle::Custom {
                    req.paths = vec![
                        (1..=cols).collect(),
                        (1..=rows).map(|r| (r - 1) * cols + 1).collect(),
                    ];
                }
                RouteRequest {
                    amp,
                    gamma_amp,
                    gamma,
                    j,
                    j_amp,
                    kappa,
                    kappa_link,
                    eta,
                    delta,
                    off_path: if dec {
                        OffPath::Decoupled
                    } else {
                        OffPath::UniformDefault
                    },
                    ..req
                }
            },
        )
}

fn config() -> impl Strategy<Value = Config> {
    (
        prop_oneof![
            lattice().prop_map(Source::Lattice),
            route().prop_map(Source::Route)
        ],
        any::<bool>(),
        any::<bool>(),
        prop::collection::btree_map(
            prop_oneof![
                (1usize..30).prop_map(BathId::Port),
                (1usize..30).prop_map(BathId::Intrinsic),
                (1usize..30, 1usize..30).prop_map(|(a, b)| BathId::Link(a, b)),
            ],
            value(),
            0..4,
        ),
        prop::option::of(prop::sample::select(vec!["scatter", "noise", "map"])),
        prop::collection::vec(value(), 0..4),
    )
        .prop_map(|(source, full, strict, baths, run, values)| {
            let mut c = Config::new(source);
            c.model = if full {
                Variant::Full
            } else {
                Variant::Adiabatic
            };
            c.strict = strict;
            c.baths = baths;
            c.sweep_run = run.map(str::to_string);
            if !values.is_empty() {
                c.sweep = vec![SweepParam {
                    key: "baths.port:1".into(),
                    values,
                }];
            }
            c
        })
}

fn normalized(mut c: Config) -> Config {
    if let Source::Lattice(spec) = &mut c.source {
        spec.ports.sort_by_key(|p| p.node);
        spec.links.sort_by_key(|l| (l.i.min(l.j), l.i.max(l.j)));
    }
    c
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn serialized_configs_parse_back_field_by_field(c in config()) {
        let strict_route_violation = matches!(&c.source, Source::Route(r) if c.strict && r.gamma_amp >= r.kappa);
        let text = to_toml(&c);
        match parse_config(&text, "rt.toml", false) {
            Ok(loaded) => {
                prop_assert!(!strict_route_violation);
                prop_assert_eq!(loaded.config, normalized(c.clone()), "{}", text);
                prop_assert_eq!(to_toml(&normalized(c)), text);
            }
            Err(e) => prop_assert!(strict_route_violation, "{}\n{}", e, text),
        }
    }
}

#[test]
fn shipped_configs_round_trip() {
    let root = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut seen = 0;
    for entry in std::fs::read_dir(root).unwrap() {
        let path = entry.unwrap().path();
        let text = std::fs::read_to_string(&path).unwrap();
        let parsed = parse_config(&text, "c.toml", false).unwrap().config;
        let again = parse_config(&to_toml(&parsed), "c.toml", false)
            .unwrap()
            .config;
        assert_eq!(parsed, again, "{}", path.display());
        seen += 1;
    }
    assert!(seen >= 5);
}
