//! Figure and table reproductions as CSV artifacts.

use std::path::{Path, PathBuf};
use std::str::FromStr;

use dcf_core::Scenario;

use crate::builtin;
use crate::commands::{evaluate_all, fig1_table, fig2_tables, table1_table, SimSettings};
use crate::error::CliError;
use crate::report::{write_csv, Provenance, Table};

pub const FIG2_POINTS: usize = 20;
pub const FIG2_RANGE: (f64, f64) = (10.0, 3300.0);

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Target {
    Fig1A,
    Fig1B,
    Fig2,
    Table1,
    All,
}

impl FromStr for Target {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "fig1a" => Ok(Target::Fig1A),
            "fig1b" => Ok(Target::Fig1B),
            "fig2" => Ok(Target::Fig2),
            "table1" => Ok(Target::Table1),
            "all" => Ok(Target::All),
            _ => Err(format!(
                "unknown target {s:?} (fig1A, fig1B, fig2, table1, all)"
            )),
        }
    }
}

/// A table together with the header block it is written with.
#[derive(Debug, Clone)]
pub struct Artifact {
    pub table: Table,
    pub provenance: Provenance,
}

impl Artifact {
    pub fn write(&self, dir: &Path) -> Result<PathBuf, CliError> {
        write_csv(dir, &self.table, &self.provenance)
    }
}

fn provenance(command: &str, settings: &SimSettings, scenarios: &[&Scenario]) -> Provenance {
    Provenance::new(command, Some(settings.seed), scenarios).with_note(settings.describe())
}

pub fn reproduce(target: Target, settings: &SimSettings) -> Result<Vec<Artifact>, CliError> {
    let wants = |t: Target| target == t || target == Target::All;
    let mut out = Vec::new();

    let needs_a = wants(Target::Fig1A) || wants(Target::Table1);
    let needs_b = wants(Target::Fig1B) || wants(Target::Table1);
    let (a, b) = (builtin::scenario_a(), builtin::scenario_b());
    let outcomes_a = if needs_a {
        evaluate_all(&a, Some(settings))?
    } else {
        Vec::new()
    };
    let outcomes_b = if needs_b {
        evaluate_all(&b, Some(settings))?
    } else {
        Vec::new()
    };

    if wants(Target::Fig1A) {
        out.push(Artifact {
            table: fig1_table("fig1A", &outcomes_a),
            provenance: provenance("reproduce fig1A", settings, &[&a]),
        });
    }
    if wants(Target::Fig1B) {
        out.push(Artifact {
            table: fig1_table("fig1B", &outcomes_b),
            provenance: provenance("reproduce fig1B", settings, &[&b])
                .with_note(builtin::SCENARIO_B_NOTE),
        });
    }
    if wants(Target::Fig2) {
        let lambdas = builtin::log_space(FIG2_RANGE.0, FIG2_RANGE.1, FIG2_POINTS);
        let scenarios: Vec<Scenario> = lambdas
            .iter()
            .map(|&l| builtin::slow_rate_sweep(l))
            .collect();
        let refs: Vec<&Scenario> = scenarios.iter().collect();
        for table in fig2_tables(&lambdas, Some(settings))? {
            out.push(Artifact {
                provenance: provenance(
                    &format!("reproduce fig2 ({})", table.name),
                    settings,
                    &refs,
                ),
                table,
            });
        }
    }
    if wants(Target::Table1) {
        out.push(Artifact {
            table: table1_table(&[("A", &outcomes_a), ("B", &outcomes_b)]),
            provenance: provenance("reproduce table1", settings, &[&a, &b])
                .with_note(builtin::SCENARIO_B_NOTE),
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn target_names() {
        assert_eq!("fig1A".parse(), Ok(Target::Fig1A));
        assert_eq!("TABLE1".parse(), Ok(Target::Table1));
        assert!("fig3".parse::<Target>().is_err());
    }

    #[test]
    fn fig1a_is_normalized() {
        let settings = SimSettings {
            duration: 5.0,
            reps: 2,
            ..SimSettings::default()
        };
        let arts = reproduce(Target::Fig1A, &settings).unwrap();
        assert_eq!(arts.len(), 1);
        let t = &arts[0].table;
        assert_eq!(t.rows.len(), 12);
        for col in ["normalized_sim", "normalized_model"] {
            assert!(t.numbers(col).iter().all(|v| (0.0..=1.0).contains(v)));
        }
    }
}
