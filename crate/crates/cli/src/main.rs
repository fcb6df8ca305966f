//! `omegacfg` command-line front end.
//!
//! Exit status: 0 when inclusion holds or prover wins, 1 when inclusion fails
//! or refuter wins, 2 on malformed input, 3 when a resource cap is hit and 4
//! on an internal error.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use omegacfg::automata::Nba;
use omegacfg::determinize::{determinize_with, DeterminizationReport, DeterminizeOptions};
use omegacfg::grammar::{lift_finite_game, Grammar, Owner};
use omegacfg::lsp::LspOptions;
use omegacfg::lvp::check_inclusion;
use omegacfg::strategy::{
    simulate, synthesize_dpa, Outcome, PlayTrace, SeededRandom, SimulationOptions, StrategyTable,
    Synthesis,
};
use omegacfg::{text, Error};

const SCHEMA: &str = include_str!("../../../docs/schema.json");

#[derive(Parser, Debug)]
#[command(name = "omegacfg", version, about = "Inclusion checks and games for ω-context-free grammars")]
struct RunConfig {
    /// Print the JSON schema of every report and exit.
    #[arg(long)]
    schema: bool,

    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Decide whether every word of the grammar is accepted by the automaton.
    Lvp {
        #[command(flatten)]
        io: Inputs,
        /// Also print the box pair behind a counterexample.
        #[arg(long)]
        witness: bool,
    },
    /// Solve the grammar game against the automaton.
    Lsp {
        #[command(flatten)]
        io: Inputs,
        #[command(flatten)]
        caps: Caps,
        /// Print the Safra tree of every DPA state.
        #[arg(long)]
        dpa_dump: bool,
    },
    /// Determinize a Büchi automaton into a parity automaton.
    Determinize {
        /// NBA input.
        #[arg(short = 'a', long)]
        automaton: PathBuf,
        /// Where to write the DPA; stdout when missing.
        #[arg(short = 'o', long)]
        output: Option<PathBuf>,
        #[arg(long, default_value_t = DeterminizeOptions::default().state_cap)]
        state_cap: usize,
        /// Print the Safra tree of every DPA state.
        #[arg(long)]
        dpa_dump: bool,
        #[arg(long)]
        json: bool,
    },
    /// Play the winning strategy against a seeded random opponent and emit the trace.
    Simulate {
        #[command(flatten)]
        io: Inputs,
        #[command(flatten)]
        caps: Caps,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = SimulationOptions::default().max_segments)]
        max_segments: usize,
        /// Derivation steps allowed inside one segment.
        #[arg(long, default_value_t = SimulationOptions::default().step_budget)]
        step_budget: usize,
    },
    /// Turn a finite-word game into an ω-game over `L(G)·hash^ω`.
    Lift {
        #[arg(short = 'g', long)]
        grammar: PathBuf,
        #[arg(short = 'a', long)]
        automaton: PathBuf,
        /// Output prefix; writes PREFIX.cfg and PREFIX.nba. Both go to stdout when missing.
        #[arg(short = 'o', long)]
        output: Option<PathBuf>,
    },
}

#[derive(Args, Debug)]
struct Inputs {
    #[arg(short = 'g', long)]
    grammar: PathBuf,
    #[arg(short = 'a', long)]
    automaton: PathBuf,
    /// Write the report here instead of stdout.
    #[arg(short = 'o', long)]
    output: Option<PathBuf>,
    /// Emit the report as JSON.
    #[arg(long)]
    json: bool,
}

#[derive(Args, Debug)]
struct Caps {
    #[arg(long, default_value_t = DeterminizeOptions::default().state_cap)]
    state_cap: usize,
    /// Most Kleene rounds of the formula system.
    #[arg(long, default_value_t = LspOptions::default().max_rounds)]
    max_rounds: usize,
}

/// Failure of a run, carrying its exit status.
#[derive(Debug, thiserror::Error)]
enum Failure {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Input { path: PathBuf, source: Error },
    #[error(transparent)]
    Core(#[from] Error),
    #[error("simulation: {0}")]
    Overrun(String),
}

impl Failure {
    fn status(&self) -> u8 {
        match self {
            Failure::Io { .. } | Failure::Input { .. } => 2,
            Failure::Core(Error::ResourceLimit { .. }) | Failure::Overrun(_) => 3,
            Failure::Core(Error::Invariant(_) | Error::Deadlock(_)) => 4,
            Failure::Core(_) => 2,
        }
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct DeterminizeStats {
    nba_states: usize,
    dpa_states: usize,
    max_priority: u32,
    trees: usize,
}

#[derive(Debug, Serialize, Deserialize)]
struct StrategyEntry {
    state: String,
    nonterminal: String,
    /// Clause index for prover, the chosen atoms `(priority, state, nonterminal)` for refuter.
    choice: String,
}

#[derive(Debug, Serialize, Deserialize)]
struct LspReport {
    winner: Owner,
    dpa_states: usize,
    max_priority: u32,
    rounds: usize,
    game_vertices: usize,
    strategy: Vec<StrategyEntry>,
}

#[derive(Debug, Serialize, Deserialize)]
struct SegmentReport {
    from_state: String,
    anchor: String,
    rules: Vec<String>,
    word: Vec<String>,
    to_state: String,
    priority: u32,
    target: String,
}

#[derive(Debug, Serialize, Deserialize)]
struct SimulationReport {
    seed: u64,
    winner: Owner,
    outcome: Outcome,
    window: usize,
    window_max: Option<u32>,
    window_winner: Owner,
    refuter_segments_terminated: bool,
    segments: Vec<SegmentReport>,
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|source| Failure::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn write(path: &Path, contents: &str) -> Result<(), Failure> {
    fs::write(path, contents).map_err(|source| Failure::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn parse_with<T>(path: &Path, f: impl Fn(&str) -> omegacfg::Result<T>) -> Result<T, Failure> {
    f(&read(path)?).map_err(|source| Failure::Input {
        path: path.to_path_buf(),
        source,
    })
}

fn load(io: &Inputs) -> Result<(Grammar, Nba), Failure> {
    Ok((
        parse_with(&io.grammar, text::parse_grammar)?,
        parse_with(&io.automaton, text::parse_nba)?,
    ))
}

fn emit(output: Option<&Path>, report: &str) -> Result<(), Failure> {
    match output {
        Some(p) => write(p, report),
        None => {
            print!("{report}");
            Ok(())
        }
    }
}

fn to_json<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("reports serialize");
    s.push('\n');
    s
}

fn verdict(ok: bool) -> u8 {
    if ok {
        0
    } else {
        1
    }
}

fn dump(rep: &DeterminizationReport) -> String {
    let mut s = String::new();
    for (q, line) in rep.state_dump.iter().enumerate() {
        s.push_str(&format!("{}: {}\n", rep.dpa.state_names()[q], line));
    }
    s
}

fn stats(rep: &DeterminizationReport) -> DeterminizeStats {
    DeterminizeStats {
        nba_states: rep.nba_states,
        dpa_states: rep.state_count,
        max_priority: rep.max_priority,
        trees: rep.tree_count,
    }
}

fn synthesize(g: &Grammar, a: &Nba, caps: &Caps) -> Result<(DeterminizationReport, Synthesis), Failure> {
    g.ensure_valid()?;
    g.ensure_game()?;
    omegacfg::automata::letter_map(g.terminals(), a.alphabet())?;
    let rep = determinize_with(a, DeterminizeOptions { state_cap: caps.state_cap })?;
    let syn = synthesize_dpa(g, &rep.dpa, LspOptions { max_rounds: caps.max_rounds })?;
    Ok((rep, syn))
}

fn strategy_entries(syn: &Synthesis) -> Vec<StrategyEntry> {
    let g = syn.grammar();
    let st = |q: usize| syn.dpa().state_names()[q].clone();
    match &syn.table {
        StrategyTable::Prover(t) => t
            .iter()
            .map(|(&(q, x), &k)| StrategyEntry {
                state: st(q),
                nonterminal: g.nonterminal_name(x).to_string(),
                choice: format!("clause {k}"),
            })
            .collect(),
        StrategyTable::Refuter(t) => t
            .iter()
            .map(|(&(q, x), atoms)| StrategyEntry {
                state: st(q),
                nonterminal: g.nonterminal_name(x).to_string(),
                choice: atoms
                    .iter()
                    .map(|a| format!("({},{},{})", a.prio, st(a.state as usize), g.nonterminal_name(a.nt as usize)))
                    .collect::<Vec<_>>()
                    .join(" "),
            })
            .collect(),
    }
}

fn simulation_report(syn: &Synthesis, t: &PlayTrace, seed: u64) -> SimulationReport {
    let g = syn.grammar();
    let d = syn.dpa();
    let st = |q: usize| d.state_names()[q].clone();
    SimulationReport {
        seed,
        winner: t.winner,
        outcome: t.outcome.clone(),
        window: t.window,
        window_max: t.window_max,
        window_winner: t.window_winner,
        refuter_segments_terminated: t.refuter_segments_terminated,
        segments: t
            .segments
            .iter()
            .map(|s| SegmentReport {
                from_state: st(s.anchor_state),
                anchor: g.nonterminal_name(s.anchor).to_string(),
                rules: s.rules.iter().map(|&r| g.render_rule(r)).collect(),
                word: s.emitted.iter().map(|&c| g.terminal_name(c).to_string()).collect(),
                to_state: st(s.state),
                priority: s.priority,
                target: g.nonterminal_name(s.target).to_string(),
            })
            .collect(),
    }
}

fn run(cmd: &Command) -> Result<u8, Failure> {
    match cmd {
        Command::Lvp { io, witness } => {
            let (g, a) = load(io)?;
            let v = check_inclusion(&g, &a)?;
            let report = v.report(&g, &a);
            let out = if io.json {
                to_json(&report)
            } else {
                let mut s = String::new();
                match &report.counterexample {
                    None => s.push_str("included\n"),
                    Some(c) => {
                        s.push_str("not included\n");
                        s.push_str(&format!("nonterminal: {}\n", c.nonterminal));
                        s.push_str(&format!("stem: {}\n", c.stem.join(" ")));
                        s.push_str(&format!("loop: {}\n", c.loop_word.join(" ")));
                        if *witness {
                            let c = v.counterexample.as_ref().expect("counterexample present");
                            s.push_str(&format!("stem box: {}\nloop box: {}\n", c.tau, c.rho));
                        }
                    }
                }
                s.push_str(&format!(
                    "evaluations: {}, boxes: {}\n",
                    report.stats.iterations, report.stats.boxes
                ));
                s
            };
            emit(io.output.as_deref(), &out)?;
            Ok(verdict(report.included))
        }
        Command::Lsp { io, caps, dpa_dump } => {
            let (g, a) = load(io)?;
            let (rep, syn) = synthesize(&g, &a, caps)?;
            let report = LspReport {
                winner: syn.winner,
                dpa_states: rep.state_count,
                max_priority: rep.max_priority,
                rounds: syn.system.final_round(),
                game_vertices: syn.game.vertices.len(),
                strategy: strategy_entries(&syn),
            };
            let out = if io.json {
                to_json(&report)
            } else {
                let mut s = format!("{} wins\n", report.winner);
                s.push_str(&format!(
                    "dpa states: {}, max priority: {}, rounds: {}, game vertices: {}\n",
                    report.dpa_states, report.max_priority, report.rounds, report.game_vertices
                ));
                for e in &report.strategy {
                    s.push_str(&format!("{} {}: {}\n", e.state, e.nonterminal, e.choice));
                }
                if *dpa_dump {
                    s.push_str(&dump(&rep));
                }
                s
            };
            emit(io.output.as_deref(), &out)?;
            Ok(verdict(report.winner == Owner::Prover))
        }
        Command::Determinize {
            automaton,
            output,
            state_cap,
            dpa_dump,
            json,
        } => {
            let a = parse_with(automaton, text::parse_nba)?;
            let rep = determinize_with(&a, DeterminizeOptions { state_cap: *state_cap })?;
            let dpa = text::write_dpa(&rep.dpa);
            let st = stats(&rep);
            let summary = if *json {
                to_json(&st)
            } else {
                format!(
                    "nba states: {}, dpa states: {}, max priority: {}, trees: {}\n",
                    st.nba_states, st.dpa_states, st.max_priority, st.trees
                )
            };
            match output {
                Some(p) => {
                    write(p, &dpa)?;
                    print!("{summary}");
                }
                None => {
                    print!("{dpa}");
                    eprint!("{summary}");
                }
            }
            if *dpa_dump {
                eprint!("{}", dump(&rep));
            }
            Ok(0)
        }
        Command::Simulate {
            io,
            caps,
            seed,
            max_segments,
            step_budget,
        } => {
            let (g, a) = load(io)?;
            let (_, syn) = synthesize(&g, &a, caps)?;
            let opts = SimulationOptions {
                max_segments: *max_segments,
                step_budget: *step_budget,
            };
            let trace = simulate(&syn, &mut SeededRandom::new(*seed), opts)?;
            // the trace is JSON either way
            emit(io.output.as_deref(), &to_json(&simulation_report(&syn, &trace, *seed)))?;
            if trace.outcome == Outcome::RefuterSegmentOverrun {
                return Err(Failure::Overrun(format!(
                    "a refuter segment exceeded the step budget of {step_budget}"
                )));
            }
            Ok(verdict(syn.winner == Owner::Prover))
        }
        Command::Lift {
            grammar,
            automaton,
            output,
        } => {
            let g = parse_with(grammar, text::parse_grammar)?;
            let a = parse_with(automaton, text::parse_nba)?;
            let (lg, la, names) = lift_finite_game(&g, &a)?;
            let (gt, at) = (text::write_grammar(&lg), text::write_nba(&la));
            match output {
                Some(prefix) => {
                    write(&prefix.with_extension("cfg"), &gt)?;
                    write(&prefix.with_extension("nba"), &at)?;
                    println!(
                        "end marker `{}`, start `{}`, tail `{}`, state `{}`",
                        names.end_marker, names.start, names.tail, names.state
                    );
                }
                None => print!("{gt}\n{at}"),
            }
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    let cfg = RunConfig::parse();
    if cfg.schema {
        print!("{SCHEMA}");
        return ExitCode::SUCCESS;
    }
    let Some(cmd) = cfg.command else {
        eprintln!("omegacfg: no command given; try --help");
        return ExitCode::from(2);
    };
    match run(&cmd) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("omegacfg: {e}");
            ExitCode::from(e.status())
        }
    }
}
