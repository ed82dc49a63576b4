//! Configuration ingestion, command dispatch and report emission for
//! `ske-core`.

pub mod commands;
pub mod config;
pub mod report;

use std::path::PathBuf;

use serde_json::Value;
use ske_core::dfcheck::InitialSystemState;
use ske_core::{Execution, SkeError};

use commands::{execute, Context};
use config::{BranchSpec, Command, Format, Grid, OrderSpec, RunConfig, SweepParam};
use report::{Cell, Header, Report, Table};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("schema error: {0}")]
    Schema(String),
    #[error("i/o error: {0}")]
    Io(String),
    #[error(transparent)]
    Core(#[from] SkeError),
}

impl CliError {
    /// 1 schema or input, 2 capacity, 3 numerical singularity.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Core(SkeError::Capacity { .. }) => 2,
            CliError::Core(e) if e.is_singularity() => 3,
            _ => 1,
        }
    }
}

/// Command-line overrides layered on top of the config file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub command: Option<Command>,
    pub inner: Option<Command>,
    pub order: Option<OrderSpec>,
    pub branch: Option<BranchSpec>,
    pub format: Option<Format>,
    pub out: Option<PathBuf>,
    pub sweep: Option<String>,
}

/// A fully resolved run: what to compute and where the text goes.
#[derive(Debug, Clone)]
pub struct Invocation {
    pub config: RunConfig,
    pub command: Command,
    pub sweep: Option<(Command, Grid)>,
    pub format: Format,
    pub out: Option<PathBuf>,
    pub order: OrderSpec,
    pub branch: BranchSpec,
}

impl Invocation {
    pub fn resolve(config: RunConfig, o: Overrides) -> Result<Self, CliError> {
        let command = o.command.or(config.command).ok_or_else(|| {
            CliError::Schema("no command given on the command line or in the config".into())
        })?;
        let grid_text = o
            .sweep
            .clone()
            .or_else(|| config.sweep.as_ref().map(|s| s.grid.clone()));
        let sweep = match (command, grid_text) {
            (Command::Sweep, None) => {
                return Err(CliError::Schema(
                    "sweep needs --sweep or a sweep.grid entry".into(),
                ))
            }
            (Command::Sweep, Some(g)) => {
                let inner = o
                    .inner
                    .or(config.sweep.as_ref().map(|s| s.command))
                    .ok_or_else(|| CliError::Schema("sweep needs an inner command".into()))?;
                if inner == Command::Sweep {
                    return Err(CliError::Schema("sweep cannot nest".into()));
                }
                Some((inner, Grid::parse(&g)?))
            }
            (c, Some(g)) if o.sweep.is_some() => Some((c, Grid::parse(&g)?)),
            _ => None,
        };
        let output = config.output.clone();
        Ok(Self {
            command,
            sweep,
            format: o
                .format
                .or(output.as_ref().and_then(|x| x.format))
                .unwrap_or(Format::Json),
            out: o.out.or(output.and_then(|x| x.path)),
            order: o.order.or(config.order).unwrap_or(OrderSpec::Exact),
            branch: o.branch.or(config.branch).unwrap_or(BranchSpec::Plus),
            config,
        })
    }

    fn context(&self, model: ske_core::ModelConfig) -> Result<Context, CliError> {
        let initial = match &self.config.initial_state {
            Some(s) => s.to_state()?,
            None => InitialSystemState::MixedTripletExample,
        };
        Ok(Context {
            model,
            tol: self.config.tolerances,
            order: self.order.into(),
            branch: self.branch.into(),
            swap_branch: self.config.swap_branch,
            time: self.config.time,
            initial,
            fidelity_samples: self.config.fidelity.samples,
            fidelity_seed: self.config.fidelity.seed,
            fidelity_time: self.config.fidelity.time,
            df_occupations: self.config.df_check.occupations.clone(),
            exec: Execution::default(),
        })
    }

    pub fn header(&self) -> Result<Header, CliError> {
        let json = |v: Result<Value, serde_json::Error>| v.map_err(|e| CliError::Io(e.to_string()));
        let mut model = self.config.model.clone();
        model.max_dim = Some(self.config.model_config()?.max_dim);
        let mut settings = vec![
            ("order".to_string(), json(serde_json::to_value(self.order))?),
            (
                "branch".to_string(),
                json(serde_json::to_value(self.branch))?,
            ),
            (
                "swap_branch".to_string(),
                Value::from(self.config.swap_branch),
            ),
        ];
        if let Some((inner, grid)) = &self.sweep {
            settings.push(("sweep.command".into(), Value::String(inner.name().into())));
            settings.push((
                "sweep.parameter".into(),
                Value::String(grid.param.name().into()),
            ));
        }
        Ok(Header {
            tolerances: json(serde_json::to_value(self.config.tolerances))?,
            model: json(serde_json::to_value(&model))?,
            settings,
        })
    }

    pub fn report(&self) -> Result<Report, CliError> {
        let base = self.config.model_config()?;
        match &self.sweep {
            None => execute(self.command, &self.context(base)?),
            Some((inner, grid)) => {
                // grid points are independent; the first error in grid order wins
                let points = Execution::default().try_map(&grid.values, |&v| {
                    let mut model = base.clone();
                    match grid.param {
                        SweepParam::Lambda => model.lambda = v,
                        SweepParam::NMax => model.n_max = v as usize,
                    }
                    model.validate()?;
                    execute(*inner, &self.context(model)?)
                })?;
                Ok(merge_sweep(*inner, grid, points))
            }
        }
    }

    pub fn render(&self) -> Result<String, CliError> {
        let report = self.report()?;
        report::render(&report, &self.header()?, self.format)
    }
}

/// Concatenates per-point reports; every table gains a leading column with
/// the swept value and scalars become a `results` table.
fn merge_sweep(inner: Command, grid: &Grid, points: Vec<Report>) -> Report {
    let param = grid.param.name();
    let as_cell = |v: f64| match grid.param {
        SweepParam::Lambda => Cell::Float(v),
        SweepParam::NMax => Cell::Int(v as i64),
    };
    let mut out = Report::new("sweep");
    out.scalar("command", inner.name());
    out.scalar("parameter", param);
    out.scalar("points", grid.values.len());
    let mut results: Option<Table> = None;
    let mut tables: Vec<Table> = Vec::new();
    for (v, rep) in grid.values.iter().zip(points) {
        let res = results.get_or_insert_with(|| {
            let mut cols = vec![param];
            cols.extend(rep.scalars.iter().map(|(k, _)| k.as_str()));
            Table::new("results", &cols)
        });
        let mut row = vec![as_cell(*v)];
        row.extend(rep.scalars.iter().map(|(_, c)| c.clone()));
        res.push(row);
        for t in rep.tables {
            let idx = match tables.iter().position(|x| x.name == t.name) {
                Some(i) => i,
                None => {
                    let mut cols = vec![param];
                    cols.extend(t.columns.iter().map(|c| c.as_str()));
                    tables.push(Table::new(&t.name, &cols));
                    tables.len() - 1
                }
            };
            for row in t.rows {
                let mut r = vec![as_cell(*v)];
                r.extend(row);
                tables[idx].push(r);
            }
        }
    }
    out.tables.extend(results);
    out.tables.extend(tables);
    out
}

/// Resolves, computes and writes; returns the rendered text.
pub fn run(config: RunConfig, overrides: Overrides) -> Result<String, CliError> {
    let inv = Invocation::resolve(config, overrides)?;
    let text = inv.render()?;
    if let Some(path) = &inv.out {
        std::fs::write(path, &text)
            .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    }
    Ok(text)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config(extra: &str) -> RunConfig {
        RunConfig::from_json(&format!(
            r#"{{"model": {{"j": 1.0, "lambda": 0.05, "modes": [{{"omega": 1.0, "g": 1.0}}], "n_max": 1}}{extra}}}"#
        ))
        .unwrap()
    }

    #[test]
    fn exit_codes() {
        assert_eq!(CliError::Schema("x".into()).exit_code(), 1);
        assert_eq!(
            CliError::Core(SkeError::Capacity { dim: 10, cap: 5 }).exit_code(),
            2
        );
        let e = SkeError::SingularResolvent {
            nu: "(1,0)".into(),
            gap: 3e-12,
        };
        assert_eq!(CliError::Core(e).exit_code(), 3);
        assert_eq!(
            CliError::Core(SkeError::Unsupported("x".into())).exit_code(),
            1
        );
    }

    #[test]
    fn flags_override_config() {
        let cfg = config(r#", "command": "spectrum", "order": "order1""#);
        let inv = Invocation::resolve(
            cfg,
            Overrides {
                command: Some(Command::Gates),
                order: Some(OrderSpec::Exact),
                ..Default::default()
            },
        )
        .unwrap();
        assert_eq!(inv.command, Command::Gates);
        assert_eq!(inv.order, OrderSpec::Exact);
        assert_eq!(inv.format, Format::Json);
    }

    #[test]
    fn missing_command_is_a_schema_error() {
        let e = Invocation::resolve(config(""), Overrides::default()).unwrap_err();
        assert_eq!(e.exit_code(), 1);
    }

    #[test]
    fn sweep_merges_tables() {
        let inv = Invocation::resolve(
            config(""),
            Overrides {
                command: Some(Command::Sweep),
                inner: Some(Command::Spectrum),
                sweep: Some("lambda=0:0.1:3".into()),
                ..Default::default()
            },
        )
        .unwrap();
        let r = inv.report().unwrap();
        assert_eq!(r.table("results").unwrap().rows.len(), 3);
        let levels = r.table("levels").unwrap();
        assert_eq!(levels.rows.len(), 24);
        assert_eq!(levels.columns[0], "lambda");
    }
}
