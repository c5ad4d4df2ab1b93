//! Run configuration: TOML file, flag overrides, validation.

use std::path::{Path, PathBuf};

use appraise_core::evaluation::Task;
use appraise_core::models::ModelConfig;
use serde::{Deserialize, Serialize};

use crate::args::RunArgs;
use crate::exit::{Classify, Failure, Outcome};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub corpus: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub schema: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub embeddings: Option<PathBuf>,
    #[serde(default = "default_tasks")]
    pub tasks: Vec<String>,
    #[serde(default = "default_ten")]
    pub k: usize,
    #[serde(default = "default_ten")]
    pub repetitions: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub folds: Option<PathBuf>,
    #[serde(default = "default_output")]
    pub output: PathBuf,
    #[serde(default = "default_jobs")]
    pub jobs: usize,
    #[serde(default)]
    pub model: ModelConfig,
}

fn default_tasks() -> Vec<String> {
    vec!["all".into()]
}

fn default_ten() -> usize {
    10
}

fn default_output() -> PathBuf {
    PathBuf::from("runs")
}

fn default_jobs() -> usize {
    1
}

const PATH_KEYS: [&str; 4] = ["corpus", "schema", "embeddings", "folds"];

impl RunConfig {
    /// Builds the configuration from an optional file plus flag overrides.
    ///
    /// Relative paths inside the file are taken relative to the file.
    pub fn resolve(args: &RunArgs) -> Outcome<RunConfig> {
        let mut table = match &args.config {
            Some(path) => load_table(path)?,
            None => toml::Table::new(),
        };
        let mut set = |key: &str, value: toml::Value| set_key(&mut table, key, value);
        let path = |p: &Path| toml::Value::String(p.to_string_lossy().into_owned());
        if let Some(p) = &args.corpus {
            set("corpus", path(p))?;
        }
        if let Some(p) = &args.schema {
            set("schema", path(p))?;
        }
        if let Some(p) = &args.embeddings {
            set("embeddings", path(p))?;
        }
        if let Some(p) = &args.folds {
            set("folds", path(p))?;
        }
        if let Some(p) = &args.output {
            set("output", path(p))?;
        }
        if let Some(tasks) = &args.tasks {
            set(
                "tasks",
                toml::Value::Array(tasks.iter().map(|t| toml::Value::String(t.trim().to_string())).collect()),
            )?;
        }
        for (key, value) in [("k", args.k), ("repetitions", args.repetitions), ("jobs", args.jobs)] {
            if let Some(v) = value {
                set(key, toml::Value::Integer(v as i64))?;
            }
        }
        if let Some(seed) = args.seed {
            set("seed", toml::Value::Integer(seed as i64))?;
        }
        for item in &args.overrides {
            let (key, raw) = item
                .split_once('=')
                .ok_or_else(|| Failure::usage(format!("--set expects KEY=VALUE, got `{item}`")))?;
            set(key.trim(), parse_value(raw.trim()))?;
        }
        if !table.contains_key("corpus") {
            return Err(Failure::usage("no corpus given (use --corpus or `corpus = ...` in the config file)"));
        }
        let config: RunConfig = table.try_into().usage_err()?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Outcome {
        self.task_list()?;
        if self.k < 2 {
            return Err(Failure::usage(format!("k must be at least 2, got {}", self.k)));
        }
        if self.repetitions == 0 {
            return Err(Failure::usage("repetitions must be at least 1"));
        }
        if self.jobs == 0 {
            return Err(Failure::usage("jobs must be at least 1"));
        }
        self.model.validate().usage_err()
    }

    pub fn task_list(&self) -> Outcome<Vec<Task>> {
        let mut tasks = Vec::new();
        for name in &self.tasks {
            let parsed = Task::parse_list(name).ok_or_else(|| {
                Failure::usage(format!(
                    "unknown task `{name}`; expected one of all, multitask, {}",
                    Task::ALL.map(|t| t.name()).join(", ")
                ))
            })?;
            tasks.extend(parsed);
        }
        if tasks.is_empty() {
            return Err(Failure::usage("no tasks selected"));
        }
        tasks.sort();
        tasks.dedup();
        Ok(tasks)
    }

    /// The model hyperparameters with the run seed applied.
    pub fn model_config(&self) -> ModelConfig {
        self.model.with_seed(self.seed)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("run config serializes")
    }
}

fn load_table(path: &Path) -> Outcome<toml::Table> {
    let text = std::fs::read_to_string(path).data_context(format!("reading {}", path.display()))?;
    let mut table: toml::Table = text
        .parse()
        .map_err(|e| Failure::new(crate::exit::Kind::Usage, anyhow::Error::new(e).context(format!("parsing {}", path.display()))))?;
    let base = path.parent().unwrap_or(Path::new(""));
    for key in PATH_KEYS {
        if let Some(toml::Value::String(p)) = table.get_mut(key) {
            if Path::new(p).is_relative() {
                *p = base.join(&*p).to_string_lossy().into_owned();
            }
        }
    }
    Ok(table)
}

/// Parses a TOML value, falling back to a bare string.
fn parse_value(raw: &str) -> toml::Value {
    format!("v = {raw}")
        .parse::<toml::Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()))
}

fn set_key(table: &mut toml::Table, key: &str, value: toml::Value) -> Outcome {
    let mut parts: Vec<&str> = key.split('.').collect();
    let last = parts.pop().filter(|s| !s.is_empty()).ok_or_else(|| Failure::usage("empty configuration key"))?;
    let mut current = table;
    for part in parts {
        let entry = current
            .entry(part.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        current = entry
            .as_table_mut()
            .ok_or_else(|| Failure::usage(format!("`{part}` in `{key}` is not a table")))?;
    }
    current.insert(last.to_string(), value);
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn args() -> RunArgs {
        RunArgs {
            config: None,
            corpus: Some("c.tsv".into()),
            schema: None,
            embeddings: None,
            tasks: None,
            k: None,
            repetitions: None,
            seed: None,
            folds: None,
            output: None,
            jobs: None,
            overrides: Vec::new(),
        }
    }

    #[test]
    fn defaults() {
        let c = RunConfig::resolve(&args()).unwrap();
        assert_eq!((c.k, c.repetitions, c.seed, c.jobs), (10, 10, 0, 1));
        assert_eq!(c.task_list().unwrap().len(), 9);
        assert_eq!(c.model, ModelConfig::default());
    }

    #[test]
    fn overrides_reach_nested_keys() {
        let mut a = args();
        a.overrides = vec!["model.epochs=3".into(), "model.hidden=[8, 4]".into(), "tasks=[\"t2e\"]".into()];
        a.seed = Some(9);
        let c = RunConfig::resolve(&a).unwrap();
        assert_eq!(c.model.epochs, 3);
        assert_eq!(c.model.hidden, vec![8, 4]);
        assert_eq!(c.model_config().seed, 9);
        assert_eq!(c.task_list().unwrap(), vec![Task::T2E]);
    }

    #[test]
    fn rejects_unknown_keys_and_tasks() {
        let mut a = args();
        a.overrides = vec!["model.nope=1".into()];
        assert!(RunConfig::resolve(&a).is_err());
        let mut a = args();
        a.tasks = Some(vec!["t2x".into()]);
        assert_eq!(RunConfig::resolve(&a).unwrap_err().kind, crate::exit::Kind::Usage);
        let mut a = args();
        a.corpus = None;
        assert!(RunConfig::resolve(&a).is_err());
    }

    #[test]
    fn round_trips_through_toml() {
        let mut a = args();
        a.embeddings = Some("vec.txt".into());
        let c = RunConfig::resolve(&a).unwrap();
        let back: RunConfig = toml::from_str(&c.to_toml()).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn file_paths_are_relative_to_the_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.toml");
        std::fs::write(&path, "corpus = \"data/c.tsv\"\nk = 4\n[model]\nfilters = 8\n").unwrap();
        let mut a = args();
        a.corpus = None;
        a.config = Some(path);
        a.k = Some(5);
        let c = RunConfig::resolve(&a).unwrap();
        assert_eq!(c.corpus, dir.path().join("data/c.tsv"));
        assert_eq!(c.k, 5);
        assert_eq!(c.model.filters, 8);
    }
}
