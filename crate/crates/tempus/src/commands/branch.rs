use std::path::PathBuf;

use clap::Args;
use serde::{Deserialize, Serialize};
use serde_json::json;
use tempus_core::branch::{
    causally_related, entropy_path_audit, global_arrow, mirror_verdict, observer_information,
    reference_graph, time_reverse_graph, validate_graph, BranchGraph, Causal, Orientation,
    EXACT_MIRROR_LIMIT,
};

use super::Subcommand;
use crate::config::Manifest;
use crate::error::{CliError, CliResult, Context};
use crate::output::{render, RunOutput, Table};

#[derive(Args, Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BranchParams {
    /// Graph JSON file [default: the built-in six-box reference graph]
    #[arg(long, value_name = "FILE")]
    pub graph: Option<PathBuf>,
    /// Causal query "A,B"
    #[arg(long)]
    pub query: Option<String>,
    /// Observer path as comma-separated node ids
    #[arg(long)]
    pub observer: Option<String>,
    /// Apply the time-reversal relabeling before answering
    #[arg(long)]
    pub reverse: Option<bool>,
    /// Cap on the number of driving paths audited [default: 100000]
    #[arg(long)]
    pub max_paths: Option<usize>,
}

fn ids(s: &str) -> Vec<&str> {
    s.split(',')
        .map(str::trim)
        .filter(|x| !x.is_empty())
        .collect()
}

fn causal_name(c: Causal) -> &'static str {
    match c {
        Causal::CauseOf => "cause_of",
        Causal::EffectOf => "effect_of",
        Causal::Unrelated => "unrelated",
    }
}

fn orientation_name(o: Orientation) -> &'static str {
    match o {
        Orientation::Forward => "forward",
        Orientation::Reversed => "reversed",
    }
}

impl Subcommand for BranchParams {
    const NAME: &'static str = "branch";

    fn run(self) -> CliResult<RunOutput> {
        let p = BranchParams {
            reverse: Some(self.reverse.unwrap_or(false)),
            max_paths: Some(self.max_paths.unwrap_or(100_000)),
            ..self
        };
        let mut graph: BranchGraph = match &p.graph {
            Some(path) => {
                let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
                serde_json::from_str(&text)
                    .map_err(|e| CliError::config("graph", format!("{}: {e}", path.display())))?
            }
            None => reference_graph(),
        };
        if p.reverse == Some(true) {
            graph = time_reverse_graph(&graph);
        }

        let mut table = Table::new(&["check", "result"]);
        let mut json = serde_json::Map::new();
        let validation = validate_graph(&graph);
        let violations: Vec<String> = validation
            .violations
            .iter()
            .map(|v| v.to_string())
            .collect();
        table.push(vec![
            "valid".into(),
            if violations.is_empty() {
                "yes".into()
            } else {
                format!("no: {}", violations.join("; "))
            },
        ]);
        json.insert("violations".into(), json!(violations));

        let arrow = global_arrow(&graph);
        table.push(vec![
            "global_arrow".into(),
            match &arrow {
                Ok(a) => format!(
                    "{} from {} (tag {})",
                    orientation_name(a.orientation),
                    a.source,
                    if a.tag_consistent {
                        "consistent"
                    } else {
                        "inconsistent"
                    }
                ),
                Err(e) => format!("none: {e}"),
            },
        ]);
        json.insert(
            "global_arrow".into(),
            match &arrow {
                Ok(a) => json!({"orientation": orientation_name(a.orientation), "source": a.source, "tag_consistent": a.tag_consistent}),
                Err(e) => json!({"error": e.to_string()}),
            },
        );

        let mirror = mirror_verdict(&graph);
        table.push(vec![
            "mirror_symmetric".into(),
            format!(
                "{} ({})",
                mirror.symmetric,
                if mirror.exact {
                    "exact".to_string()
                } else {
                    format!("heuristic, above {EXACT_MIRROR_LIMIT} nodes")
                }
            ),
        ]);
        json.insert(
            "mirror".into(),
            json!({"symmetric": mirror.symmetric, "exact": mirror.exact}),
        );

        match entropy_path_audit(&graph, p.max_paths.unwrap()) {
            Ok(a) => {
                table.push(vec![
                    "entropy_audit".into(),
                    format!(
                        "{} driving paths, {} violations{}",
                        a.paths,
                        a.violations,
                        if a.truncated { " (truncated)" } else { "" }
                    ),
                ]);
                json.insert(
                    "entropy_audit".into(),
                    json!({"paths": a.paths, "violations": a.violations, "truncated": a.truncated}),
                );
            }
            Err(e) => {
                table.push(vec!["entropy_audit".into(), format!("not run: {e}")]);
                json.insert("entropy_audit".into(), json!({"error": e.to_string()}));
            }
        }

        if let Some(q) = &p.query {
            let pair = ids(q);
            let [a, b] = pair[..] else {
                return Err(CliError::config(
                    "query",
                    format!("expected two node ids \"A,B\", got `{q}`"),
                ));
            };
            let rel = causally_related(&graph, a, b).context("causal query")?;
            table.push(vec![format!("{a} vs {b}"), causal_name(rel).into()]);
            json.insert(
                "query".into(),
                json!({"a": a, "b": b, "relation": causal_name(rel)}),
            );
        }
        if let Some(o) = &p.observer {
            let path = ids(o);
            let series = observer_information(&graph, &path).context("observer path")?;
            table.push(vec![
                "observer_information".into(),
                series
                    .iter()
                    .map(|c| c.to_string())
                    .collect::<Vec<_>>()
                    .join(" "),
            ]);
            json.insert("observer_information".into(), json!(series));
        }
        Ok(RunOutput {
            manifest: Manifest::new(Self::NAME, None, &p)?,
            report: render(&table),
            table,
            json: serde_json::Value::Object(json),
        })
    }
}
