//! Command-line front end. `run` is the whole program minus process exit so
//! tests can drive it in-process.

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

use crate::analysis::{
    branching_condition, mixed_choice_states, strong_agreement_witness, strong_safety_witness,
};
use crate::automaton::ContractAutomaton;
use crate::cfsm::CommunicatingSystem;
use crate::io::{self, IoError};
use crate::oracle::{run_verify, GeneratorParams, Tally, VerifyParams};
use crate::product::product;
use crate::projection::project;
use crate::runtime::{
    classify_configurations, explore, is_convergent, is_deadlock_free, run_trace, Bound, Configuration,
    Semantics,
};
use crate::synthesis::{controlled_system, liable, mpc};

#[derive(Debug, Parser)]
#[command(name = "ca-choreo", version, about = "Contract automata to communicating machines")]
struct Cli {
    /// Absorb sends to the environment `-` instantly.
    #[arg(long, global = true)]
    env_mode: bool,
    /// Per-channel bound instead of the 1-buffer semantics.
    #[arg(long, global = true, value_name = "K", value_parser = clap::value_parser!(u64).range(1..))]
    k_bound: Option<u64>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    format: Format,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Text,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Product of contract automata.
    Compose {
        #[arg(required = true)]
        files: Vec<PathBuf>,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Most permissive strong controller.
    Mpc {
        input: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Controller plus sink transitions.
    Controlled {
        input: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Is every accepted word a strong agreement?
    Safety { input: PathBuf },
    /// Is some strong agreement accepted?
    Admits { input: PathBuf },
    /// Branching condition.
    Branching { input: PathBuf },
    /// Liable participants and transitions.
    Liable { input: PathBuf },
    /// Mixed-choice states.
    Mixed { input: PathBuf },
    /// Project to communicating machines.
    Translate {
        input: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Can every reachable configuration still reach a final one?
    Converge { system: PathBuf },
    /// Is no reachable configuration a deadlock?
    Deadlock { system: PathBuf },
    /// Fire a trace such as `AB!a,AB?a`.
    Simulate {
        system: PathBuf,
        #[arg(long)]
        trace: String,
    },
    /// Cross-check controller, projection and convergence on random principals.
    Verify {
        #[arg(long, value_parser = clap::value_parser!(u64).range(2..=4))]
        rank: u64,
        #[arg(long, value_parser = clap::value_parser!(u64).range(2..=5))]
        max_states: u64,
        #[arg(long, default_value_t = 2, value_parser = clap::value_parser!(u64).range(1..=4))]
        max_actions: u64,
        #[arg(long, default_value_t = 100)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        depth: Option<usize>,
    },
    /// Graphviz output for an automaton, controlled system or system file.
    Dot {
        input: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
        /// For system files: draw the reachability graph instead.
        #[arg(long)]
        reachability: bool,
    },
}

#[derive(Debug, Clone, Default, Serialize)]
struct Stats {
    states: usize,
    transitions: usize,
    configs: usize,
}

#[derive(Debug, Clone, Serialize)]
struct Report {
    verdict: &'static str,
    witnesses: Vec<Value>,
    stats: Stats,
}

/// Exit status and report of one command.
struct Outcome {
    code: i32,
    report: Report,
}

impl Outcome {
    fn new(holds: bool, yes: &'static str, no: &'static str, witnesses: Vec<Value>, stats: Stats) -> Self {
        Outcome {
            code: if holds { 0 } else { 1 },
            report: Report {
                verdict: if holds { yes } else { no },
                witnesses,
                stats,
            },
        }
    }

    fn ok(witnesses: Vec<Value>, stats: Stats) -> Self {
        Outcome::new(true, "ok", "ok", witnesses, stats)
    }
}

#[derive(Debug, thiserror::Error)]
enum CliError {
    #[error(transparent)]
    Io(#[from] IoError),
    #[error("{0}")]
    Other(String),
}

fn automaton_stats(a: &ContractAutomaton) -> Stats {
    Stats {
        states: a.num_states(),
        transitions: a.transitions().len(),
        configs: 0,
    }
}

fn system_stats(sys: &CommunicatingSystem, configs: usize) -> Stats {
    Stats {
        states: sys.machines().iter().map(|m| m.states().len()).sum(),
        transitions: sys.machines().iter().map(|m| m.transitions().len()).sum(),
        configs,
    }
}

fn one_based(names: &[String], set: impl IntoIterator<Item = usize>) -> (Vec<usize>, Vec<String>) {
    set.into_iter().map(|i| (i + 1, names[i].clone())).unzip()
}

fn describe(sys: &CommunicatingSystem, c: &Configuration) -> Value {
    json!({
        "control": sys.control_names(&c.control),
        "buffers": sys.describe_buffers(&c.buffers),
        "stable": c.is_stable(),
    })
}

fn write_file(path: &Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text).map_err(|e| {
        CliError::Io(IoError::Io {
            path: path.display().to_string(),
            source: e,
        })
    })
}

fn execute(cli: &Cli) -> Result<Outcome, CliError> {
    let sem = Semantics {
        bound: match cli.k_bound {
            Some(k) => Bound::PerChannel(k as usize),
            None => Bound::OneBuffer,
        },
        env_mode: cli.env_mode,
    };
    let runtime_err = |e: crate::runtime::RuntimeError| CliError::Other(e.to_string());
    Ok(match &cli.command {
        Command::Compose { files, output } => {
            let ops = files.iter().map(io::load_automaton).collect::<Result<Vec<_>, _>>()?;
            let p = product(&ops).map_err(|e| CliError::Other(e.to_string()))?;
            io::save_automaton(&p, output)?;
            Outcome::ok(vec![], automaton_stats(&p))
        }
        Command::Mpc { input, output } => {
            let k = mpc(&io::load_automaton(input)?);
            io::save_automaton(&k, output)?;
            Outcome::ok(vec![], automaton_stats(&k))
        }
        Command::Controlled { input, output } => {
            let cs = controlled_system(&io::load_automaton(input)?);
            write_file(output, &io::controlled_to_json(&cs))?;
            let witnesses = cs
                .sink_transitions()
                .iter()
                .map(|s| json!(format!("({}, {}, ⊥)", s.from, s.action)))
                .collect();
            Outcome::ok(witnesses, automaton_stats(cs.controller()))
        }
        Command::Safety { input } => {
            let a = io::load_automaton(input)?;
            let w = strong_safety_witness(&a);
            let witnesses = w.iter().map(|t| json!(t.to_string())).collect();
            Outcome::new(w.is_none(), "strongly-safe", "not-strongly-safe", witnesses, automaton_stats(&a))
        }
        Command::Admits { input } => {
            let a = io::load_automaton(input)?;
            let w = strong_agreement_witness(&a);
            let witnesses = w
                .iter()
                .map(|word| json!(word.iter().map(ToString::to_string).collect::<Vec<_>>().join("")))
                .collect();
            Outcome::new(w.is_some(), "admits-strong-agreement", "no-strong-agreement", witnesses, automaton_stats(&a))
        }
        Command::Branching { input } => {
            let a = io::load_automaton(input)?;
            let r = branching_condition(&a);
            let names = a.participant_names();
            let witnesses = r
                .witness
                .iter()
                .map(|w| {
                    let sender = w.action.sender().expect("branching witness is a match");
                    json!({
                        "enabled_at": w.enabled_at.to_string(),
                        "missing_at": w.missing_at.to_string(),
                        "action": w.action.to_string(),
                        "sender": sender + 1,
                        "sender_name": names[sender],
                        "sender_state": w.enabled_at.component(sender),
                    })
                })
                .collect();
            Outcome::new(r.holds, "holds", "fails", witnesses, automaton_stats(&a))
        }
        Command::Liable { input } => {
            let a = io::load_automaton(input)?;
            let l = liable(&controlled_system(&a));
            let (indices, names) = one_based(&a.participant_names(), l.participants.iter().copied());
            let mut witnesses = vec![json!({ "liable_participants": indices, "names": names })];
            witnesses.extend(l.transitions.iter().map(|t| json!({ "liable_transition": t.to_string() })));
            Outcome::ok(witnesses, automaton_stats(&a))
        }
        Command::Mixed { input } => {
            let a = io::load_automaton(input)?;
            let states = mixed_choice_states(&a);
            let witnesses = states.iter().map(|s| json!(s.to_string())).collect();
            Outcome::new(states.is_empty(), "no-mixed-choice", "mixed-choice", witnesses, automaton_stats(&a))
        }
        Command::Translate { input, output } => {
            let sys = project(&io::load_automaton(input)?);
            std::fs::create_dir_all(output).map_err(|e| {
                CliError::Io(IoError::Io {
                    path: output.display().to_string(),
                    source: e,
                })
            })?;
            io::save_system(&sys, output.join("system.json"))?;
            let mut witnesses = vec![json!("system.json")];
            for (p, m) in sys.machines().iter().enumerate() {
                let name = &sys.participants()[p];
                let file = format!("{name}.dot");
                write_file(&output.join(&file), &io::dot_machine(m, sys.participants(), name))?;
                witnesses.push(json!(file));
            }
            Outcome::ok(witnesses, system_stats(&sys, 0))
        }
        Command::Converge { system } => {
            let sys = io::load_system(system)?;
            let r = is_convergent(&sys, sem).map_err(runtime_err)?;
            let witnesses = r.counterexample.iter().map(|t| json!(sys.render_trace(t))).collect();
            Outcome::new(r.convergent, "convergent", "not-convergent", witnesses, system_stats(&sys, r.configurations))
        }
        Command::Deadlock { system } => {
            let sys = io::load_system(system)?;
            let r = is_deadlock_free(&sys, sem).map_err(runtime_err)?;
            let witnesses = r.counterexample.iter().map(|t| json!(sys.render_trace(t))).collect();
            Outcome::new(r.deadlock_free, "deadlock-free", "deadlock", witnesses, system_stats(&sys, r.configurations))
        }
        Command::Simulate { system, trace } => {
            let sys = io::load_system(system)?;
            let actions = io::parse_trace(trace, sys.participants()).map_err(|e| CliError::Other(e.to_string()))?;
            match run_trace(&sys, sem, &actions) {
                Ok(c) => Outcome::ok(vec![describe(&sys, &c)], system_stats(&sys, 0)),
                Err(stuck) => Outcome::new(
                    false,
                    "ok",
                    "stuck",
                    vec![json!({
                        "step": stuck.step,
                        "action": stuck.action,
                        "configuration": describe(&sys, &stuck.configuration),
                    })],
                    system_stats(&sys, 0),
                ),
            }
        }
        Command::Verify {
            rank,
            max_states,
            max_actions,
            trials,
            seed,
            depth,
        } => {
            let r = run_verify(&VerifyParams {
                generator: GeneratorParams {
                    rank: *rank as usize,
                    max_states: *max_states as usize,
                    max_actions: *max_actions as usize,
                },
                trials: *trials,
                seed: *seed,
                depth: *depth,
            });
            let tally = |t: &Tally| json!({ "pass": t.pass, "fail": t.fail, "skipped": t.skipped });
            let mut witnesses = vec![json!({
                "trials": r.trials,
                "language": tally(&r.language),
                "runs_replay": tally(&r.runs_replay),
                "executions_are_runs": tally(&r.executions_are_runs),
                "branching-convergence": tally(&r.branching_convergence),
                "liability_deadlock": tally(&r.liability_deadlock),
                "liability_doomed": tally(&r.liability_doomed),
            })];
            witnesses.extend(r.failures.iter().map(|f| json!(f)));
            let stats = Stats {
                states: r.product_states,
                transitions: r.product_transitions,
                configs: 0,
            };
            Outcome::new(r.is_clean(), "no-mismatch", "mismatch", witnesses, stats)
        }
        Command::Dot {
            input,
            output,
            reachability,
        } => {
            let text = std::fs::read_to_string(input).map_err(|e| {
                CliError::Io(IoError::Io {
                    path: input.display().to_string(),
                    source: e,
                })
            })?;
            let kind: Value = serde_json::from_str(&text).map_err(|e| {
                CliError::Io(IoError::Parse {
                    line: e.line(),
                    message: e.to_string(),
                })
            })?;
            let (dot, stats) = if kind.get("machines").is_some() {
                let sys = io::system_from_json(&text)?;
                if *reachability {
                    let g = explore(&sys, sem).map_err(runtime_err)?;
                    let classes = classify_configurations(&sys, &g);
                    (io::dot_reachability(&sys, &g, &classes), system_stats(&sys, g.nodes.len()))
                } else {
                    (io::dot_system(&sys), system_stats(&sys, 0))
                }
            } else if kind.get("controller").is_some() {
                let cs = io::controlled_from_json(&text)?;
                let stats = automaton_stats(cs.controller());
                (io::dot_controlled(&cs), stats)
            } else {
                let a = io::automaton_from_json(&text)?;
                (io::dot_automaton(&a), automaton_stats(&a))
            };
            write_file(output, &dot)?;
            Outcome::ok(vec![], stats)
        }
    })
}

fn render_text(r: &Report) -> String {
    let mut out = format!("verdict: {}\n", r.verdict);
    for w in &r.witnesses {
        match w {
            Value::String(s) => out.push_str(&format!("  {s}\n")),
            other => out.push_str(&format!("  {other}\n")),
        }
    }
    out.push_str(&format!(
        "stats: states={} transitions={} configs={}\n",
        r.stats.states, r.stats.transitions, r.stats.configs
    ));
    out
}

/// Parses `args` (program name first), runs the command and writes the
/// report. Returns the exit code: 0 holds, 1 refuted, 2 usage or input error.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let sink: &mut dyn Write = if e.use_stderr() { err } else { out };
            let _ = write!(sink, "{}", e.render());
            return code;
        }
    };
    match execute(&cli) {
        Ok(outcome) => {
            let text = match cli.format {
                Format::Json => {
                    let mut s = serde_json::to_string_pretty(&outcome.report).expect("report serializes");
                    s.push('\n');
                    s
                }
                Format::Text => render_text(&outcome.report),
            };
            let _ = out.write_all(text.as_bytes());
            outcome.code
        }
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            2
        }
    }
}

#[cfg(test)]
mod tests {
    use super::run;
    use serde_json::Value;
    use std::path::{Path, PathBuf};

    fn data(name: &str) -> PathBuf {
        Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/data").join(name)
    }

    /// Runs with text output; returns exit code, stdout and stderr.
    fn run_text(args: &[&str]) -> (i32, String, String) {
        let mut out = Vec::new();
        let mut err = Vec::new();
        let mut full = vec!["ca-choreo"];
        full.extend_from_slice(args);
        let code = run(full, &mut out, &mut err);
        (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
    }

    /// Runs in-process with `--format json`; returns exit code and report.
    fn run_json(args: &[&str]) -> (i32, Value) {
        let mut out = Vec::new();
        let mut err = Vec::new();
        let mut full = vec!["ca-choreo", "--format", "json"];
        full.extend_from_slice(args);
        let code = run(full, &mut out, &mut err);
        let v = serde_json::from_slice(&out).unwrap_or(Value::Null);
        (code, v)
    }

    fn s(p: &Path) -> &str {
        p.to_str().unwrap()
    }

    fn compose(dir: &Path, set: &str, parts: &[&str]) -> PathBuf {
        let out = dir.join(format!("{set}.json"));
        let files: Vec<PathBuf> = parts.iter().map(|p| data(&format!("{set}_{p}.json"))).collect();
        let mut args = vec!["compose"];
        args.extend(files.iter().map(|f| s(f)));
        args.extend(["-o", s(&out)]);
        let (code, _) = run_json(&args);
        assert_eq!(code, 0);
        out
    }

    #[test]
    fn toy_pipeline() {
        let dir = tempfile::tempdir().unwrap();
        let p = compose(dir.path(), "toy", &["alice", "bob", "carol"]);

        let (code, v) = run_json(&["safety", s(&p)]);
        assert_eq!(code, 1);
        assert_eq!(v["verdict"], "not-strongly-safe");

        let (code, v) = run_json(&["admits", s(&p)]);
        assert_eq!(code, 0);
        assert!(v["witnesses"].as_array().is_some_and(|w| !w.is_empty()));

        let (code, v) = run_json(&["liable", s(&p)]);
        assert_eq!(code, 0);
        assert_eq!(v["witnesses"][0]["liable_participants"], serde_json::json!([1, 3]));
        assert_eq!(v["witnesses"].as_array().unwrap().len(), 3);

        let k = dir.path().join("mpc.json");
        assert_eq!(run_json(&["mpc", s(&p), "-o", s(&k)]).0, 0);
        let (code, v) = run_json(&["safety", s(&k)]);
        assert_eq!((code, v["stats"]["states"].as_u64()), (0, Some(4)));

        let cs = dir.path().join("controlled.json");
        assert_eq!(run_json(&["controlled", s(&p), "-o", s(&cs)]).0, 0);
        let dot = dir.path().join("controlled.dot");
        assert_eq!(run_json(&["dot", s(&cs), "-o", s(&dot)]).0, 0);
        assert!(std::fs::read_to_string(&dot).unwrap().contains("digraph"));

        let sys = dir.path().join("sys");
        assert_eq!(run_json(&["translate", s(&k), "-o", s(&sys)]).0, 0);
        let (code, _) = run_json(&["converge", s(&sys.join("system.json"))]);
        assert_eq!(code, 0);
        assert!(sys.join("A.dot").exists());
    }

    #[test]
    fn gap_branching_witness() {
        let dir = tempfile::tempdir().unwrap();
        let p = compose(dir.path(), "gap", &["a", "b", "c"]);
        assert_eq!(run_json(&["branching", s(&p)]).0, 0);
        let k = dir.path().join("mpc.json");
        run_json(&["mpc", s(&p), "-o", s(&k)]);
        let (code, v) = run_json(&["branching", s(&k)]);
        assert_eq!(code, 1);
        let w = v["witnesses"][0].to_string();
        assert!(w.contains("(!a,?a,-)"), "{w}");
    }

    #[test]
    fn quad_counterexample() {
        let (code, v) = run_json(&["converge", s(&data("quad_system.json"))]);
        assert_eq!(code, 1);
        assert_eq!(v["witnesses"][0], "AC!a,AC?a,BC!a");
        let (code, _) = run_json(&["deadlock", s(&data("quad_system.json"))]);
        assert_eq!(code, 1);
    }

    #[test]
    fn relay_simulation() {
        let sys = data("relay_system.json");
        let (code, v) = run_json(&["simulate", s(&sys), "--trace", "AB!a,AB?a,CB!c,CB?c,BC!ok,BC?ok,CA!d"]);
        assert_eq!(code, 0);
        assert_eq!(v["witnesses"][0]["buffers"], serde_json::json!(["CA=d"]));
        let (code, v) = run_json(&["simulate", s(&sys), "--trace", "AB!a,AB!a"]);
        assert_eq!(code, 1);
        assert_eq!(v["witnesses"][0]["step"], 2);
        let (code, _) = run_json(&["simulate", s(&sys), "--trace", "AB!zz!"]);
        assert_eq!(code, 2);
    }

    #[test]
    fn semantics_flags() {
        let sys = data("quad_system.json");
        let (_, one) = run_json(&["converge", s(&sys)]);
        let (_, k1) = run_json(&["--k-bound", "1", "converge", s(&sys)]);
        assert!(k1["stats"]["configs"].as_u64() > one["stats"]["configs"].as_u64());
        assert_eq!(run_json(&["--k-bound", "0", "converge", s(&sys)]).0, 2);
    }

    #[test]
    fn environment_channels_need_env_mode() {
        let dir = tempfile::tempdir().unwrap();
        let p = compose(dir.path(), "toy", &["alice", "bob", "carol"]);
        let sys = dir.path().join("sys");
        run_json(&["translate", s(&p), "-o", s(&sys)]);
        let file = sys.join("system.json");
        assert_eq!(run_json(&["deadlock", s(&file)]).0, 2);
        let (code, v) = run_json(&["--env-mode", "deadlock", s(&file)]);
        assert!(code == 0 || code == 1, "{v}");
    }

    #[test]
    fn verify_small_batch() {
        let (code, v) = run_json(&["verify", "--rank", "2", "--max-states", "3", "--trials", "25", "--seed", "3"]);
        assert_eq!(code, 0, "{v}");
        assert_eq!(v["verdict"], "no-mismatch");
        assert_eq!(v["witnesses"][0]["trials"], 25);
        assert_eq!(run_json(&["verify", "--rank", "7", "--max-states", "3"]).0, 2);
    }

    #[test]
    fn exit_codes_and_text_output() {
        let (code, text, _) = run_text(&["converge", s(&data("quad_system.json"))]);
        assert_eq!(code, 1);
        assert!(text.starts_with("verdict: not-convergent"), "{text}");
        assert!(text.contains("AC!a,AC?a,BC!a"));

        assert_eq!(run_text(&["deadlock", s(&data("gap_system.json"))]).0, 0);

        let (code, _, err) = run_text(&["safety", s(&data("missing.json"))]);
        assert_eq!(code, 2);
        assert!(err.contains("missing.json"));

        let (code, text, _) = run_text(&["--help"]);
        assert_eq!(code, 0);
        assert!(text.contains("converge"));
        assert_eq!(run_text(&["no-such-command"]).0, 2);
    }

    #[test]
    fn malformed_input_is_an_error() {
        let dir = tempfile::tempdir().unwrap();
        let bad = dir.path().join("bad.json");
        std::fs::write(&bad, "{\n  \"rank\": 1,\n  \"states\": [[\"q0\"]],\n  oops\n}").unwrap();
        let mut out = Vec::new();
        let mut err = Vec::new();
        let code = run(["ca-choreo", "safety", s(&bad)], &mut out, &mut err);
        assert_eq!(code, 2);
        assert!(String::from_utf8(err).unwrap().contains("line 4"));
    }
}
