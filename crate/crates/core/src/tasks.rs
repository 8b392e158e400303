//! Classification benchmarks: noisy static stimuli and three-element
//! perturbation/context sequences.

use std::collections::HashSet;
use std::fs;
use std::path::Path;
use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, LogNormal, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Integration step in seconds; durations below are converted with it.
pub const DEFAULT_DT: f64 = 0.01;
pub const DEFAULT_CHANNELS: usize = 24;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StimulusSource {
    FileIngested,
    Synthetic,
}

/// Nonnegative response rates, one row per stimulus.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct StimulusSet<T> {
    rates: Vec<Vec<T>>,
    n_inputs: usize,
    pub source: StimulusSource,
}

impl<T: Scalar> StimulusSet<T> {
    pub fn from_rows(rows: Vec<Vec<T>>, source: StimulusSource) -> Result<Self> {
        let n_inputs = rows.first().map_or(0, Vec::len);
        if rows.is_empty() || n_inputs == 0 {
            return Err(Error::config("stimuli", "stimulus set is empty"));
        }
        for (r, row) in rows.iter().enumerate() {
            if row.len() != n_inputs {
                return Err(Error::config(
                    "stimuli",
                    format!("row {r} has {} channels, expected {n_inputs}", row.len()),
                ));
            }
            if row.iter().any(|v| !v.is_finite() || *v < T::zero()) {
                return Err(Error::config("stimuli", format!("row {r} has a negative or non-finite rate")));
            }
        }
        Ok(Self {
            rates: rows,
            n_inputs,
            source,
        })
    }

    pub fn n_stimuli(&self) -> usize {
        self.rates.len()
    }

    pub fn n_inputs(&self) -> usize {
        self.n_inputs
    }

    pub fn rates(&self, id: usize) -> &[T] {
        &self.rates[id]
    }

    pub fn rows(&self) -> &[Vec<T>] {
        &self.rates
    }

    /// Writes the set as a comma-separated table with a header line.
    pub fn write_delimited(&self, path: &Path) -> Result<()> {
        let mut out = String::new();
        let header: Vec<String> = (0..self.n_inputs).map(|c| format!("ch{c}")).collect();
        out.push_str(&header.join(","));
        out.push('\n');
        for row in &self.rates {
            let cells: Vec<String> = row.iter().map(|v| format!("{v}")).collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        fs::write(path, out).map_err(|e| Error::io(path, e))
    }
}

/// Reads a delimited numeric table (comma, semicolon, tab or whitespace);
/// a non-numeric first line is taken as a header. Rows and columns in
/// errors are 1-based file coordinates.
pub fn load_stimulus_set<T: Scalar>(path: &Path, n_inputs: usize) -> Result<StimulusSet<T>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let ingest = |row: usize, column: usize, message: String| Error::Ingest {
        path: path.to_path_buf(),
        row,
        column,
        message,
    };
    let mut rows = Vec::new();
    let mut first_content = true;
    for (lineno, line) in text.lines().enumerate() {
        let row_no = lineno + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let cells = split_cells(trimmed);
        let is_header = first_content && cells.iter().any(|c| c.parse::<f64>().is_err());
        first_content = false;
        if is_header {
            continue;
        }
        if cells.len() != n_inputs {
            return Err(ingest(
                row_no,
                cells.len().min(n_inputs) + 1,
                format!("expected {n_inputs} columns, found {}", cells.len()),
            ));
        }
        let mut values = Vec::with_capacity(n_inputs);
        for (c, cell) in cells.iter().enumerate() {
            let v: f64 = cell
                .parse()
                .map_err(|_| ingest(row_no, c + 1, format!("non-numeric cell {cell:?}")))?;
            if !v.is_finite() {
                return Err(ingest(row_no, c + 1, format!("non-finite rate {cell:?}")));
            }
            if v < 0.0 {
                return Err(ingest(row_no, c + 1, format!("negative rate {v}")));
            }
            values.push(T::of(v));
        }
        rows.push(values);
    }
    if rows.is_empty() {
        return Err(ingest(0, 0, "no data rows".into()));
    }
    StimulusSet::from_rows(rows, StimulusSource::FileIngested)
}

fn split_cells(line: &str) -> Vec<&str> {
    let delim = [',', ';', '\t'].into_iter().find(|d| line.contains(*d));
    match delim {
        Some(d) => line.split(d).map(str::trim).collect(),
        None => line.split_whitespace().collect(),
    }
}

/// Surrogate rates: i.i.d. lognormal(0, 1), each channel divided by its
/// sample mean so every column averages exactly 1.
pub fn synth_stimulus_set<T: Scalar, R: Rng + ?Sized>(
    n_stimuli: usize,
    n_inputs: usize,
    log_sigma: f64,
    rng: &mut R,
) -> Result<StimulusSet<T>> {
    if n_stimuli == 0 {
        return Err(Error::config("n_pool", "need at least one stimulus"));
    }
    if n_inputs == 0 {
        return Err(Error::config("n_inputs", "need at least one channel"));
    }
    let law = LogNormal::new(0.0, log_sigma)
        .map_err(|_| Error::config("surrogate_log_sigma", "must be finite and nonnegative"))?;
    let raw: Vec<Vec<f64>> = (0..n_stimuli)
        .map(|_| (0..n_inputs).map(|_| law.sample(rng)).collect())
        .collect();
    let means: Vec<f64> = (0..n_inputs)
        .map(|c| raw.iter().map(|r| r[c]).sum::<f64>() / n_stimuli as f64)
        .collect();
    let rows = raw
        .into_iter()
        .map(|r| r.iter().zip(&means).map(|(v, m)| T::of(v / m)).collect())
        .collect();
    StimulusSet::from_rows(rows, StimulusSource::Synthetic)
}

/// `s_i = rate_i * (1 + sigma * xi_i)` with fresh standard-normal `xi_i`.
fn noisy_into<T: Scalar, R: Rng + ?Sized>(rates: &[T], sigma: T, rng: &mut R, out: &mut [T]) {
    for (o, &r) in out.iter_mut().zip(rates) {
        let xi: f64 = StandardNormal.sample(rng);
        *o = r * (T::one() + sigma * T::of(xi));
    }
}

pub fn steps_for(duration: f64, dt: f64) -> usize {
    (duration / dt).round() as usize
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct StaticTask<T> {
    #[serde(skip)]
    set: Option<Arc<StimulusSet<T>>>,
    pub stimulus_ids: Vec<usize>,
    pub labels: Vec<usize>,
    pub noise_sigma: T,
    pub duration_steps: usize,
    pub n_class: usize,
}

/// Picks `n_stimuli` distinct stimuli and labels each uniformly at random.
pub fn make_static_task<T: Scalar, R: Rng + ?Sized>(
    set: Arc<StimulusSet<T>>,
    n_stimuli: usize,
    n_class: usize,
    sigma: f64,
    duration_steps: usize,
    rng: &mut R,
) -> Result<StaticTask<T>> {
    if n_stimuli == 0 || n_stimuli > set.n_stimuli() {
        return Err(Error::config(
            "n_stimuli",
            format!("{n_stimuli} requested but the stimulus set has {}", set.n_stimuli()),
        ));
    }
    if n_class < 2 {
        return Err(Error::config("n_class", "static task needs at least 2 classes"));
    }
    if !(sigma >= 0.0 && sigma.is_finite()) {
        return Err(Error::config("sigma", "must be nonnegative"));
    }
    if duration_steps == 0 {
        return Err(Error::config("decision_time", "must span at least one step"));
    }
    let stimulus_ids = rand::seq::index::sample(rng, set.n_stimuli(), n_stimuli).into_vec();
    let labels = (0..n_stimuli).map(|_| rng.random_range(0..n_class)).collect();
    Ok(StaticTask {
        set: Some(set),
        stimulus_ids,
        labels,
        noise_sigma: T::of(sigma),
        duration_steps,
        n_class,
    })
}

impl<T: Scalar> StaticTask<T> {
    pub fn len(&self) -> usize {
        self.stimulus_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.stimulus_ids.is_empty()
    }

    fn set(&self) -> &StimulusSet<T> {
        self.set.as_deref().expect("task is bound to its stimulus set")
    }

    /// Noisy input for item `item` (index into `stimulus_ids`). The noise is
    /// fresh each call; `step` does not alter the law.
    pub fn sample_static_input<R: Rng + ?Sized>(&self, item: usize, _step: usize, rng: &mut R) -> Vec<T> {
        let rates = self.set().rates(self.stimulus_ids[item]);
        let mut out = vec![T::zero(); rates.len()];
        noisy_into(rates, self.noise_sigma, rng, &mut out);
        out
    }
}

/// Where a sequence came from.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub base_id: usize,
    pub base: [usize; 3],
    pub perturbed_position: usize,
    pub perturbation_variant: usize,
    /// 0 is the original context.
    pub context_variant: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct SequenceTask<T> {
    #[serde(skip)]
    set: Option<Arc<StimulusSet<T>>>,
    pub sequences: Vec<[usize; 3]>,
    pub labels: Vec<usize>,
    pub provenance: Vec<Provenance>,
    pub element_steps: usize,
    pub noise_sigma: T,
    pub n_class: usize,
}

/// Stimuli one base family consumes, all distinct within the family.
pub fn family_pool_size(n_class: usize) -> usize {
    3 + 3 * n_class + 3 * n_class * n_class.saturating_sub(1) * 2
}

/// Builds `3 * n_class^2 * n_base` sequences: per base, per position,
/// `n_class` perturbations with a random permutation of labels, and per
/// perturbation the original context plus `n_class - 1` fresh contexts,
/// each labelled with a class different from its perturbation's.
pub fn make_sequence_task<T: Scalar, R: Rng + ?Sized>(
    set: Arc<StimulusSet<T>>,
    n_base: usize,
    n_class: usize,
    sigma: f64,
    element_steps: usize,
    rng: &mut R,
) -> Result<SequenceTask<T>> {
    if n_base == 0 {
        return Err(Error::config("n_base", "must be at least 1"));
    }
    if n_class == 0 {
        return Err(Error::config("n_class", "must be at least 1"));
    }
    if element_steps == 0 {
        return Err(Error::config("element_time", "must span at least one step"));
    }
    if !(sigma >= 0.0 && sigma.is_finite()) {
        return Err(Error::config("sigma", "must be nonnegative"));
    }
    let need = family_pool_size(n_class);
    if need > set.n_stimuli() {
        return Err(Error::config(
            "n_class",
            format!(
                "stimulus pool exhausted: each base family needs {need} distinct stimuli, the set has {}",
                set.n_stimuli()
            ),
        ));
    }

    let total = 3 * n_class * n_class * n_base;
    let mut sequences = Vec::with_capacity(total);
    let mut labels = Vec::with_capacity(total);
    let mut provenance = Vec::with_capacity(total);
    for base_id in 0..n_base {
        let mut order: Vec<usize> = (0..set.n_stimuli()).collect();
        order.shuffle(rng);
        let mut fresh = order.into_iter();
        let mut draw = || fresh.next().expect("pool size checked above");
        let base = [draw(), draw(), draw()];
        for position in 0..3 {
            let mut perm: Vec<usize> = (0..n_class).collect();
            perm.shuffle(rng);
            for (variant, &label) in perm.iter().enumerate() {
                let mut seq = base;
                seq[position] = draw();
                sequences.push(seq);
                labels.push(label);
                provenance.push(Provenance {
                    base_id,
                    base,
                    perturbed_position: position,
                    perturbation_variant: variant,
                    context_variant: 0,
                });
                for context_variant in 1..n_class {
                    let mut ctx = seq;
                    for (p, slot) in ctx.iter_mut().enumerate() {
                        if p != position {
                            *slot = draw();
                        }
                    }
                    let shift = rng.random_range(1..n_class);
                    sequences.push(ctx);
                    labels.push((label + shift) % n_class);
                    provenance.push(Provenance {
                        base_id,
                        base,
                        perturbed_position: position,
                        perturbation_variant: variant,
                        context_variant,
                    });
                }
            }
        }
    }
    debug_assert_eq!(sequences.len(), total);
    Ok(SequenceTask {
        set: Some(set),
        sequences,
        labels,
        provenance,
        element_steps,
        noise_sigma: T::of(sigma),
        n_class,
    })
}

impl<T: Scalar> SequenceTask<T> {
    pub fn len(&self) -> usize {
        self.sequences.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sequences.is_empty()
    }

    pub fn total_steps(&self) -> usize {
        3 * self.element_steps
    }

    fn set(&self) -> &StimulusSet<T> {
        self.set.as_deref().expect("task is bound to its stimulus set")
    }

    /// Element `step / element_steps` of the sequence with multiplicative noise.
    pub fn sample_sequence_input<R: Rng + ?Sized>(
        &self,
        sequence_id: usize,
        step: usize,
        sigma: T,
        rng: &mut R,
    ) -> Result<Vec<T>> {
        if step >= self.total_steps() {
            return Err(Error::Dimension {
                context: "sequence step",
                expected: self.total_steps(),
                actual: step,
            });
        }
        let element = self.sequences[sequence_id][step / self.element_steps];
        let rates = self.set().rates(element);
        let mut out = vec![T::zero(); rates.len()];
        noisy_into(rates, sigma, rng, &mut out);
        Ok(out)
    }
}

/// A generated benchmark, either kind.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar", rename_all = "kebab-case", tag = "kind")]
pub enum Task<T> {
    Static(StaticTask<T>),
    Sequence(SequenceTask<T>),
}

impl<T: Scalar> Task<T> {
    pub fn n_items(&self) -> usize {
        match self {
            Task::Static(t) => t.len(),
            Task::Sequence(t) => t.len(),
        }
    }

    pub fn n_class(&self) -> usize {
        match self {
            Task::Static(t) => t.n_class,
            Task::Sequence(t) => t.n_class,
        }
    }

    pub fn label(&self, item: usize) -> usize {
        match self {
            Task::Static(t) => t.labels[item],
            Task::Sequence(t) => t.labels[item],
        }
    }

    pub fn total_steps(&self) -> usize {
        match self {
            Task::Static(t) => t.duration_steps,
            Task::Sequence(t) => t.total_steps(),
        }
    }

    pub fn n_inputs(&self) -> usize {
        match self {
            Task::Static(t) => t.set().n_inputs(),
            Task::Sequence(t) => t.set().n_inputs(),
        }
    }

    /// Draws an episode: a uniformly chosen item plus a private noise seed.
    pub fn draw_episode<R: Rng + ?Sized>(&self, rng: &mut R) -> Episode {
        let item = rng.random_range(0..self.n_items());
        Episode {
            item,
            label: self.label(item),
            total_steps: self.total_steps(),
            noise_seed: rng.random(),
        }
    }

    /// Calls `f` with the noisy input of every step of `episode`, in order.
    pub fn for_each_input(&self, episode: &Episode, buf: &mut [T], mut f: impl FnMut(usize, &[T])) {
        let mut rng = ChaCha8Rng::seed_from_u64(episode.noise_seed);
        for step in 0..episode.total_steps {
            let (rates, sigma) = match self {
                Task::Static(t) => (t.set().rates(t.stimulus_ids[episode.item]), t.noise_sigma),
                Task::Sequence(t) => {
                    let element = t.sequences[episode.item][step / t.element_steps];
                    (t.set().rates(element), t.noise_sigma)
                }
            };
            noisy_into(rates, sigma, &mut rng, buf);
            f(step, buf);
        }
    }

    /// Structured manifest of labels and provenance for audit.
    pub fn manifest(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("task serializes")
    }
}

/// A single presentation: which item, its label, and the noise substream.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Episode {
    pub item: usize,
    pub label: usize,
    pub total_steps: usize,
    pub noise_seed: u64,
}

impl Episode {
    /// Materializes the input sequence; replaying yields identical values.
    pub fn inputs<T: Scalar>(&self, task: &Task<T>) -> Vec<Vec<T>> {
        let mut buf = vec![T::zero(); task.n_inputs()];
        let mut out = Vec::with_capacity(self.total_steps);
        task.for_each_input(self, &mut buf, |_, s| out.push(s.to_vec()));
        out
    }
}

/// Labels must be distinct within each (base, position) group; used by tests
/// and by the harness when auditing an ingested manifest.
pub fn perturbation_labels_distinct<T: Scalar>(task: &SequenceTask<T>) -> bool {
    let mut groups: std::collections::BTreeMap<(usize, usize), HashSet<usize>> = Default::default();
    for (p, &l) in task.provenance.iter().zip(&task.labels) {
        if p.context_variant == 0 && !groups.entry((p.base_id, p.perturbed_position)).or_default().insert(l) {
            return false;
        }
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn pool(n: usize, seed: u64) -> Arc<StimulusSet<f64>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Arc::new(synth_stimulus_set(n, DEFAULT_CHANNELS, 1.0, &mut rng).unwrap())
    }

    fn write(contents: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(contents.as_bytes()).unwrap();
        f
    }

    fn table(rows: usize, cols: usize, header: bool) -> String {
        let mut s = String::new();
        if header {
            let h: Vec<String> = (0..cols).map(|c| format!("pn{c}")).collect();
            s += &h.join(",");
            s.push('\n');
        }
        for r in 0..rows {
            let cells: Vec<String> = (0..cols).map(|c| format!("{}", (r * cols + c) as f64 * 0.5)).collect();
            s += &cells.join(",");
            s.push('\n');
        }
        s
    }

    #[test]
    fn ingests_full_table_with_header() {
        let f = write(&table(110, 24, true));
        let set: StimulusSet<f64> = load_stimulus_set(f.path(), 24).unwrap();
        assert_eq!(set.n_stimuli(), 110);
        assert_eq!(set.source, StimulusSource::FileIngested);
        assert_eq!(set.rates(1)[0], 12.0);
    }

    #[test]
    fn ingests_single_row_whitespace() {
        let row: Vec<String> = (0..24).map(|c| c.to_string()).collect();
        let f = write(&row.join("  "));
        let set: StimulusSet<f32> = load_stimulus_set(f.path(), 24).unwrap();
        assert_eq!(set.n_stimuli(), 1);
    }

    #[test]
    fn wrong_width_names_expected_columns() {
        let f = write(&table(3, 23, false));
        let err = load_stimulus_set::<f64>(f.path(), 24).unwrap_err();
        let msg = err.to_string();
        assert!(matches!(err, Error::Ingest { row: 1, .. }), "{msg}");
        assert!(msg.contains("expected 24 columns"), "{msg}");
    }

    #[test]
    fn bad_cells_report_location() {
        let mut t = table(3, 24, true);
        t = t.replacen("24,", "oops,", 1);
        let f = write(&t);
        match load_stimulus_set::<f64>(f.path(), 24).unwrap_err() {
            Error::Ingest { row, column, .. } => assert_eq!((row, column), (4, 1)),
            e => panic!("{e}"),
        }
        let f = write(&table(2, 24, false).replacen("0.5", "-0.5", 1));
        match load_stimulus_set::<f64>(f.path(), 24).unwrap_err() {
            Error::Ingest { row, column, message, .. } => {
                assert_eq!((row, column), (1, 2));
                assert!(message.contains("negative"));
            }
            e => panic!("{e}"),
        }
    }

    #[test]
    fn synthetic_set_is_positive_and_reproducible() {
        let a = pool(110, 5);
        assert_eq!(a.n_stimuli(), 110);
        assert!(a.rows().iter().flatten().all(|&v| v > 0.0));
        assert_eq!(a, pool(110, 5));
        assert_ne!(a, pool(110, 6));
        let big = pool(1000, 7);
        for c in 0..24 {
            let mean = big.rows().iter().map(|r| r[c]).sum::<f64>() / 1000.0;
            assert!((mean - 1.0).abs() < 0.1);
        }
    }

    #[test]
    fn static_task_errors_and_single_entry() {
        let set = pool(10, 1);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(make_static_task(set.clone(), 11, 2, 0.3, 50, &mut rng).is_err());
        assert!(make_static_task(set.clone(), 5, 1, 0.3, 50, &mut rng).is_err());
        let t = make_static_task(set, 1, 2, 0.3, 50, &mut rng).unwrap();
        assert_eq!(t.len(), 1);
    }

    #[test]
    fn noiseless_static_input_is_exact_and_zero_rates_stay_zero() {
        let mut rows = vec![vec![1.0; 24]; 2];
        rows[1][3] = 0.0;
        let set = Arc::new(StimulusSet::from_rows(rows, StimulusSource::Synthetic).unwrap());
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut t = make_static_task(set, 2, 2, 0.0, 50, &mut rng).unwrap();
        t.stimulus_ids = vec![0, 1];
        for step in 0..10 {
            assert_eq!(t.sample_static_input(0, step, &mut rng), vec![1.0; 24]);
        }
        t.noise_sigma = 0.9;
        for step in 0..100 {
            assert_eq!(t.sample_static_input(1, step, &mut rng)[3], 0.0);
        }
    }

    #[test]
    fn sequence_count_formula_and_degenerate_case() {
        let set = pool(110, 2);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let t = make_sequence_task(set.clone(), 5, 2, 0.2, 10, &mut rng).unwrap();
        assert_eq!(t.len(), 60);
        let t1 = make_sequence_task(set, 1, 1, 0.2, 10, &mut rng).unwrap();
        assert_eq!(t1.len(), 3);
        assert!(t1.labels.iter().all(|&l| l == 0));
    }

    #[test]
    fn pool_exhaustion_is_a_config_error() {
        let set = pool(20, 3);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        // n_class = 3 needs 3 + 9 + 36 = 48 stimuli per family.
        assert!(matches!(
            make_sequence_task(set, 1, 3, 0.2, 10, &mut rng),
            Err(Error::Config { .. })
        ));
    }

    #[test]
    fn sequence_steps_select_elements() {
        let rows: Vec<Vec<f64>> = (0..30).map(|i| vec![i as f64 + 1.0; 24]).collect();
        let set = Arc::new(StimulusSet::from_rows(rows, StimulusSource::Synthetic).unwrap());
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let t = make_sequence_task(set, 1, 2, 0.0, 10, &mut rng).unwrap();
        let seq = t.sequences[0];
        for step in 0..30 {
            let s = t.sample_sequence_input(0, step, 0.0, &mut rng).unwrap();
            assert_eq!(s[0], seq[step / 10] as f64 + 1.0);
        }
        // the boundary of the first element sits at step 10
        let a = t.sample_sequence_input(0, 9, 0.0, &mut rng).unwrap();
        let b = t.sample_sequence_input(0, 10, 0.0, &mut rng).unwrap();
        assert_eq!(a[0], seq[0] as f64 + 1.0);
        assert_eq!(b[0], seq[1] as f64 + 1.0);
        assert!(t.sample_sequence_input(0, 30, 0.0, &mut rng).is_err());
    }

    #[test]
    fn episode_replay_is_exact() {
        let set = pool(40, 4);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let task = Task::Static(make_static_task(set, 20, 2, 0.3, 50, &mut rng).unwrap());
        let ep = task.draw_episode(&mut rng);
        assert_eq!(ep.inputs(&task), ep.inputs(&task));
        assert_eq!(ep.inputs(&task).len(), 50);
    }
}
