//! `efgame`: build presets, play and replay games, run the verification
//! suites, solve tiny games, and serve interactive sessions.
//!
//! Exit codes: 0 ok, 1 usage or input error, 2 verification failure,
//! 3 size cap overflow.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};
use efgame::constructions::{Caps, Construction, Mutations, Preset, PresetConfig, ProfileSpec};
use efgame::game::{parse_jsonl, Game, GameVariant, Player};
use efgame::strategies::{explore, play, AisAgent, IsoStrategy, RandomAis, ScriptedAis};
use efgame::trees::{LocalFamily, Tree, TreeDoc};
use efgame::verify::{run_suite, solve_game, solver, SolveCaps, SuiteConfig, SUITES};
use efgame::{CardinalProfile, Error, Mode, PartialFn};
use serde_json::{json, Value};

#[derive(Parser)]
#[command(name = "efgame", version, about = "Tree-approximated EF games over GF(2) group models")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Build a preset and write its parameter dump and summary.
    Build {
        #[command(flatten)]
        preset: PresetArgs,
        /// Output directory.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Play one game, or replay a recorded trace.
    Play {
        #[command(flatten)]
        preset: PresetArgs,
        #[command(flatten)]
        game: GameArgs,
        /// random, scripted:PATH or exhaustive.
        #[arg(long, default_value = "random")]
        ais: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Trace file; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Replays a trace written by `play` and checks its winner.
        #[arg(long)]
        replay: Option<PathBuf>,
        #[arg(long, default_value_t = 10_000)]
        move_limit: usize,
    },
    /// Run verification suites.
    Verify {
        /// A suite id or `all`.
        #[arg(long, default_value = "all")]
        suite: String,
        /// Smaller ranges for a smoke run.
        #[arg(long)]
        quick: bool,
        /// Clause deletions: h-gt-x, g-eq-h-eq, witness-vii, budget.
        #[arg(long)]
        mutate: Vec<String>,
        #[arg(long, default_value_t = 0x5eed)]
        seed: u64,
        #[arg(long)]
        sequential: bool,
        /// Report file (JSON); the text report always goes to stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Solve a tiny game and write a certificate trace.
    Solve {
        #[command(flatten)]
        preset: PresetArgs,
        #[command(flatten)]
        game: GameArgs,
        /// Search without the strategy hint.
        #[arg(long)]
        exact: bool,
        /// The built-in mismatched instance instead of a preset.
        #[arg(long)]
        adversarial: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Serve interactive sessions on localhost.
    Serve {
        #[arg(long, default_value_t = 8080)]
        port: u16,
    },
}

#[derive(Args, Clone, Default)]
struct PresetArgs {
    /// s1, s2, s3, s4 or a named preset such as s1-minimal.
    #[arg(long)]
    preset: Option<String>,
    /// A JSON preset config file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// `λ`, or a profile as comma-separated `μ_i` values ending in `λ`.
    #[arg(long)]
    lambda: Option<String>,
    #[arg(long)]
    max_u: Option<usize>,
    /// A tree file (JSON) or a parent list such as `-,0,0,1`.
    #[arg(long)]
    tree: Option<String>,
    /// Cap overrides, KEY=VAL.
    #[arg(long = "caps", value_parser = parse_cap)]
    caps: Vec<(String, usize)>,
}

#[derive(Args, Clone, Default)]
struct GameArgs {
    /// mu:N, one or star.
    #[arg(long)]
    variant: Option<String>,
    /// Which strategy plays ISO.
    #[arg(long)]
    iso: Option<String>,
}

fn parse_cap(s: &str) -> Result<(String, usize), String> {
    let (k, v) = s.split_once('=').ok_or("expected KEY=VAL")?;
    Ok((k.to_string(), v.parse().map_err(|_| format!("`{v}` is not a number"))?))
}

enum Fail {
    Usage(String),
    Verification(String),
    Cap(String),
}

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        match e {
            Error::SizeCap { .. } => Fail::Cap(e.to_string()),
            other => Fail::Usage(other.to_string()),
        }
    }
}

impl From<std::io::Error> for Fail {
    fn from(e: std::io::Error) -> Self {
        Fail::Usage(e.to_string())
    }
}

type Out<T> = Result<T, Fail>;

fn read(path: &Path) -> Out<String> {
    fs::read_to_string(path).map_err(|e| Fail::Usage(format!("{}: {e}", path.display())))
}

fn write_or_print(out: Option<&Path>, text: &str) -> Out<()> {
    match out {
        Some(p) => fs::write(p, text).map_err(|e| Fail::Usage(format!("{}: {e}", p.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn parse_tree(spec: &str) -> Out<Tree> {
    if Path::new(spec).exists() {
        let doc: TreeDoc = serde_json::from_str(&read(Path::new(spec))?).map_err(|e| Fail::Usage(e.to_string()))?;
        return Ok(Tree::from_doc(&doc)?);
    }
    let parents = spec
        .split(',')
        .map(|p| match p.trim() {
            "-" => Ok(None),
            n => n.parse().map(Some).map_err(|_| Fail::Usage(format!("bad tree `{spec}`: expected a file or `-,0,0,...`"))),
        })
        .collect::<Out<Vec<_>>>()?;
    Ok(Tree::from_parents(&parents)?)
}

fn parse_profile(spec: &str) -> Out<ProfileSpec> {
    let vals: Vec<u32> = spec
        .split(',')
        .map(|v| v.trim().parse().map_err(|_| Fail::Usage(format!("bad --lambda `{spec}`"))))
        .collect::<Out<_>>()?;
    Ok(match vals.as_slice() {
        [l] => ProfileSpec::Lambda(*l),
        _ => ProfileSpec::Profile(CardinalProfile::new(vals)?),
    })
}

/// The preset config and the variant it is played under by default.
fn resolve(a: &PresetArgs) -> Out<(PresetConfig, GameVariant)> {
    let mut config = match (&a.config, &a.preset) {
        (Some(path), _) => PresetConfig::from_json(&read(path)?)?,
        (None, Some(name)) if name.contains('-') => {
            efgame_session::presets::find(name)?.ok_or_else(|| Fail::Usage(format!("unknown preset `{name}`")))?.config
        }
        (None, Some(name)) => {
            let preset = Preset::parse(name)?;
            let profile = match &a.lambda {
                Some(l) => parse_profile(l)?,
                None => ProfileSpec::Lambda(2),
            };
            let lambda = profile.lambda();
            let tree = match &a.tree {
                Some(t) => parse_tree(t)?,
                None => Tree::from_parents(&[None])?,
            };
            let (family, tree_doc) = if preset.uses_tree() {
                (None, Some(tree.to_doc()))
            } else if a.tree.is_some() {
                (Some(LocalFamily::embed(&tree, lambda)?), None)
            } else {
                let zeros = PartialFn::from_pairs((0..lambda).map(|x| (x, 0)));
                (Some(LocalFamily::closure(lambda, [zeros])?), None)
            };
            let caps = if preset.uses_tree() { Caps { max_u: 1, ..Caps::default() } } else { Caps::default() };
            PresetConfig { preset, profile, family, tree: tree_doc, caps, mutations: Mutations::default() }
        }
        (None, None) => PresetConfig::s1_minimal(),
    };
    if let Some(u) = a.max_u {
        config.caps.max_u = u;
    }
    for (k, v) in &a.caps {
        config.caps.set(k, *v)?;
    }
    let lambda = config.profile.lambda();
    let variant = match config.preset {
        Preset::S2 => GameVariant::FixedBudget { mu: 1 },
        Preset::S4 => GameVariant::Star,
        _ => GameVariant::FixedBudget { mu: lambda },
    };
    Ok((config, variant))
}

fn variant_of(g: &GameArgs, default: GameVariant) -> Out<GameVariant> {
    Ok(match &g.variant {
        Some(v) => v.parse()?,
        None => default,
    })
}

fn strategy(g: &GameArgs, config: &PresetConfig, c: &Construction, tree: Arc<Tree>) -> Out<IsoStrategy> {
    let preset = match &g.iso {
        Some(p) => Preset::parse(p)?,
        None => config.preset,
    };
    Ok(IsoStrategy::for_preset(preset, c, tree)?)
}

fn cmd_build(preset: &PresetArgs, out: Option<&Path>) -> Out<()> {
    let (config, _) = resolve(preset)?;
    let c = config.build(Mode::default())?;
    let mut summary = c.summary();
    let per_sort: Vec<Value> = (0..c.param.num_sorts())
        .map(|s| json!({ "sort": c.param.sort_label(s), "generators": c.param.gen_count(s) }))
        .collect();
    summary["generatorsPerSort"] = json!(per_sort);
    let text = serde_json::to_string_pretty(&summary).expect("plain data");
    match out {
        Some(dir) => {
            fs::create_dir_all(dir)?;
            fs::write(dir.join("config.json"), serde_json::to_string_pretty(&config).expect("plain data"))?;
            fs::write(dir.join("parameter.json"), serde_json::to_string_pretty(&c.param.dump(true)).expect("plain data"))?;
            fs::write(dir.join("summary.json"), &text)?;
            eprintln!("wrote {}", dir.display());
        }
        None => println!("{text}"),
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn cmd_play(
    preset: &PresetArgs,
    g: &GameArgs,
    ais: &str,
    seed: u64,
    out: Option<&Path>,
    replay: Option<&Path>,
    move_limit: usize,
) -> Out<()> {
    if let Some(path) = replay {
        return cmd_replay(path);
    }
    let (config, default_variant) = resolve(preset)?;
    let variant = variant_of(g, default_variant)?;
    let c = config.build(Mode::default())?;
    let tree = Arc::new(config.game_tree()?);
    let mut iso = strategy(g, &config, &c, tree.clone())?;
    if ais == "exhaustive" {
        let r = explore(&c, tree, variant, Mode::default())?;
        write_or_print(out, &format!("{}\n", serde_json::to_string_pretty(&r).expect("plain data")))?;
        return if r.all_iso() {
            Ok(())
        } else {
            Err(Fail::Verification(format!("AIS won {} of {} plays", r.ais_wins, r.plays)))
        };
    }
    let mut agent: Box<dyn AisAgent> = match ais.split_once(':') {
        None if ais == "random" => Box::new(RandomAis::new(seed)),
        Some(("scripted", path)) => Box::new(ScriptedAis::new(&parse_jsonl(&read(Path::new(path))?)?.records)),
        _ => return Err(Fail::Usage(format!("unknown AIS `{ais}` (random, scripted:PATH or exhaustive)"))),
    };
    let header = json!({
        "config": config, "variant": variant.to_string(), "seed": seed, "ais": ais, "strategy": iso.header(),
    });
    let game = Game::new(c.m1.clone(), c.m2.clone(), tree, variant)?;
    let game = play(game, &mut iso, agent.as_mut(), move_limit)?;
    write_or_print(out, &game.to_jsonl(header))?;
    eprintln!("winner: {}", efgame::strategies::winner_name(&game));
    Ok(())
}

fn cmd_replay(path: &Path) -> Out<()> {
    let parsed = parse_jsonl(&read(path)?)?;
    let config: PresetConfig = serde_json::from_value(parsed.header["config"].clone())
        .map_err(|e| Fail::Usage(format!("trace header has no usable config: {e}")))?;
    let variant: GameVariant = parsed.header["variant"].as_str().unwrap_or("").parse()?;
    let c = config.build(Mode::default())?;
    let tree = Arc::new(config.game_tree()?);
    let game = Game::new(c.m1.clone(), c.m2.clone(), tree, variant)?
        .replay(&parsed.records)
        .map_err(|e| Fail::Verification(e.to_string()))?;
    if game.winner() != parsed.winner {
        return Err(Fail::Verification(format!("replay ends with {:?}, the trace says {:?}", game.winner(), parsed.winner)));
    }
    println!("replayed {} records; winner {}", parsed.records.len(), efgame::strategies::winner_name(&game));
    Ok(())
}

fn mutations(names: &[String]) -> Out<Mutations> {
    let mut m = Mutations::default();
    for n in names {
        match n.as_str() {
            "h-gt-x" => m.skip_h_gt_x = true,
            "g-eq-h-eq" => m.skip_g_eq_h_eq = true,
            "witness-vii" => m.skip_witness_vii = true,
            "budget" => m.skip_budget = true,
            _ => return Err(Fail::Usage(format!("unknown mutation `{n}`"))),
        }
    }
    Ok(m)
}

fn cmd_verify(suite: &str, quick: bool, mutate: &[String], seed: u64, sequential: bool, out: Option<&Path>) -> Out<()> {
    let base = if quick { SuiteConfig::quick() } else { SuiteConfig::default() };
    let cfg = SuiteConfig {
        seed,
        mode: if sequential { Mode::Sequential } else { Mode::Parallel },
        mutations: mutations(mutate)?,
        ..base
    };
    let names: Vec<&str> = match suite {
        "all" => SUITES.to_vec(),
        s if SUITES.contains(&s) => vec![s],
        s => return Err(Fail::Usage(format!("unknown suite `{s}`; known: {}", SUITES.join(", ")))),
    };
    let mut reports = Vec::new();
    for name in names {
        let r = run_suite(name, &cfg)?;
        println!("{r}");
        reports.push(r);
    }
    if let Some(p) = out {
        fs::write(p, serde_json::to_string_pretty(&reports).expect("plain data"))?;
    }
    let failed: Vec<&str> = reports.iter().filter(|r| !r.passed()).map(|r| r.suite.as_str()).collect();
    if failed.is_empty() {
        Ok(())
    } else {
        Err(Fail::Verification(format!("failing suites: {}", failed.join(", "))))
    }
}

fn cmd_solve(preset: &PresetArgs, g: &GameArgs, exact: bool, adversarial: bool, out: Option<&Path>) -> Out<()> {
    let caps = SolveCaps::default();
    let report = if adversarial {
        let (m1, m2, tree) = solver::adversarial_instance();
        let variant = variant_of(g, GameVariant::FixedBudget { mu: 1 })?;
        solve_game(&m1, &m2, tree, variant, &caps, None)?
    } else {
        let (config, default_variant) = resolve(preset)?;
        let variant = variant_of(g, default_variant)?;
        let c = config.build(Mode::default())?;
        let tree = Arc::new(config.game_tree()?);
        let hint = if exact { None } else { Some(strategy(g, &config, &c, tree.clone())?) };
        solve_game(&c.m1, &c.m2, tree, variant, &caps, hint.as_ref())?
    };
    println!(
        "winner: {} ({} positions, {}, {})",
        match report.winner {
            Player::Iso => "ISO",
            Player::Ais => "AIS",
        },
        report.positions,
        report.move_ordering,
        report.restriction
    );
    if let Some(p) = out {
        fs::write(p, &report.certificate)?;
    }
    Ok(())
}

fn cmd_serve(port: u16) -> Out<()> {
    let rt = tokio::runtime::Runtime::new()?;
    rt.block_on(async {
        let listener = efgame_session::bind(port).await?;
        eprintln!("serving on http://{}", listener.local_addr()?);
        efgame_session::serve(listener).await
    })?;
    Ok(())
}

fn run(cli: Cli) -> Out<()> {
    match cli.cmd {
        Cmd::Build { preset, out } => cmd_build(&preset, out.as_deref()),
        Cmd::Play { preset, game, ais, seed, out, replay, move_limit } => {
            cmd_play(&preset, &game, &ais, seed, out.as_deref(), replay.as_deref(), move_limit)
        }
        Cmd::Verify { suite, quick, mutate, seed, sequential, out } => {
            cmd_verify(&suite, quick, &mutate, seed, sequential, out.as_deref())
        }
        Cmd::Solve { preset, game, exact, adversarial, out } => cmd_solve(&preset, &game, exact, adversarial, out.as_deref()),
        Cmd::Serve { port } => cmd_serve(port),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Fail::Usage(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(1)
        }
        Err(Fail::Verification(m)) => {
            eprintln!("verification failed: {m}");
            ExitCode::from(2)
        }
        Err(Fail::Cap(m)) => {
            eprintln!("cap overflow: {m}");
            ExitCode::from(3)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parent_lists_and_profiles() {
        let t = parse_tree("-,0,0,1").unwrap_or_else(|_| panic!("tree"));
        assert_eq!(t.len(), 4);
        assert!(parse_tree("-,x").is_err());
        assert!(matches!(parse_profile("3"), Ok(ProfileSpec::Lambda(3))));
        assert!(matches!(parse_profile("0,2,4"), Ok(ProfileSpec::Profile(_))));
        assert!(parse_profile("0,,4").is_err());
    }

    #[test]
    fn cap_pairs() {
        assert_eq!(parse_cap("maxU=2").unwrap(), ("maxU".to_string(), 2));
        assert!(parse_cap("maxU").is_err());
        assert!(parse_cap("maxU=two").is_err());
    }

    #[test]
    fn mutation_names() {
        let m = mutations(&["budget".into(), "h-gt-x".into()]).unwrap_or_default();
        assert!(m.skip_budget && m.skip_h_gt_x && !m.skip_witness_vii);
        assert!(mutations(&["nope".into()]).is_err());
    }

    #[test]
    fn default_variants_follow_the_preset() {
        let args = PresetArgs { preset: Some("s4".into()), lambda: Some("3".into()), ..Default::default() };
        assert!(matches!(resolve(&args), Ok((_, GameVariant::Star))));
        let args = PresetArgs { preset: Some("s1".into()), lambda: Some("3".into()), ..Default::default() };
        assert!(matches!(resolve(&args), Ok((_, GameVariant::FixedBudget { mu: 3 }))));
    }
}
