//! Grid evaluation over datasets, restorers and sampler settings.

use std::fmt::Write as _;
use std::time::Instant;

use rayon::prelude::*;

use crate::degradation::measure;
use crate::error::{Error, Result};
use crate::mask::{gen_task_mask, ColumnMask, MaskFamily, DEFAULT_TASK_CENTER_FRACTION};
use crate::metrics::{psnr, ssim};
use crate::numerics::ComplexImage;
use crate::restorer::{OracleRestorer, Restorer, ZeroFillRestorer};
use crate::sampler::{reconstruct, ReverseRunConfig};
use crate::schedule::ScheduleKind;

/// Which restorer reconstructs each slice. The oracle is built per slice
/// from that slice's ground truth.
#[derive(Clone, Copy)]
pub enum RestorerSource<'a> {
    Oracle,
    ZeroFill,
    Model(&'a dyn Restorer),
}

impl RestorerSource<'_> {
    pub fn name(&self) -> &'static str {
        match self {
            RestorerSource::Oracle => "oracle",
            RestorerSource::ZeroFill => "zerofill",
            RestorerSource::Model(r) => r.name(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TaskMaskKind {
    /// The family's own mask at the start step for the AF.
    Snapped,
    /// Centre block plus random columns, reseeded per slice as `seed + slice`.
    Random { center_fraction: f64, seed: u64 },
}

impl Default for TaskMaskKind {
    fn default() -> Self {
        TaskMaskKind::Random {
            center_fraction: DEFAULT_TASK_CENTER_FRACTION,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct EvalConfig<'a> {
    pub family: &'a MaskFamily,
    pub af: f64,
    pub mask: TaskMaskKind,
    pub use_spc: bool,
    pub use_dcc: bool,
    pub terminal_dc: bool,
    pub start_override: Option<usize>,
}

impl<'a> EvalConfig<'a> {
    pub fn new(family: &'a MaskFamily, af: f64, mask: TaskMaskKind) -> Self {
        Self {
            family,
            af,
            mask,
            use_spc: true,
            use_dcc: true,
            terminal_dc: true,
            start_override: None,
        }
    }

    pub fn schedule(&self) -> ScheduleKind {
        self.family.schedule().kind()
    }

    pub fn task_mask(&self, slice: usize) -> Result<ColumnMask> {
        match self.mask {
            TaskMaskKind::Snapped => Ok(self.family.snapped_task_mask(self.af)?.1),
            TaskMaskKind::Random { center_fraction, seed } => {
                gen_task_mask(self.family.width(), self.af, center_fraction, seed.wrapping_add(slice as u64))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalRow {
    /// Index into the config list passed to [`evaluate`].
    pub config: usize,
    pub slice: usize,
    pub af: f64,
    pub schedule: ScheduleKind,
    pub ssim: f64,
    pub psnr: f64,
    pub steps: usize,
    pub seconds: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Stat {
    pub mean: f64,
    /// Population standard deviation.
    pub std: f64,
}

impl Stat {
    pub fn of(values: &[f64]) -> Self {
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
        Self { mean, std: var.sqrt() }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub config: usize,
    pub af: f64,
    pub schedule: ScheduleKind,
    pub count: usize,
    pub ssim: Stat,
    pub psnr: Stat,
    pub steps: Stat,
    pub seconds: Stat,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct EvalReport {
    /// Ordered by config, then slice.
    pub rows: Vec<EvalRow>,
    pub summary: Vec<SummaryRow>,
}

pub const ROWS_HEADER: &str = "slice,af,schedule,ssim,psnr,steps,seconds";

pub fn row_csv_line(r: &EvalRow) -> String {
    format!("{},{},{},{:?},{:?},{},{:.6}", r.slice, r.af, r.schedule, r.ssim, r.psnr, r.steps, r.seconds)
}

/// Mean and std per config, in config order.
pub fn summarize(rows: &[EvalRow]) -> Vec<SummaryRow> {
    let mut configs: Vec<usize> = rows.iter().map(|r| r.config).collect();
    configs.sort_unstable();
    configs.dedup();
    configs
        .into_iter()
        .map(|c| {
            let group: Vec<&EvalRow> = rows.iter().filter(|r| r.config == c).collect();
            let col = |f: fn(&EvalRow) -> f64| Stat::of(&group.iter().map(|r| f(r)).collect::<Vec<_>>());
            SummaryRow {
                config: c,
                af: group[0].af,
                schedule: group[0].schedule,
                count: group.len(),
                ssim: col(|r| r.ssim),
                psnr: col(|r| r.psnr),
                steps: col(|r| r.steps as f64),
                seconds: col(|r| r.seconds),
            }
        })
        .collect()
}

impl EvalReport {
    pub fn from_rows(rows: Vec<EvalRow>) -> Self {
        let summary = summarize(&rows);
        Self { rows, summary }
    }

    pub fn rows_csv(&self) -> String {
        let mut out = format!("{ROWS_HEADER}\n");
        for r in &self.rows {
            out.push_str(&row_csv_line(r));
            out.push('\n');
        }
        out
    }

    /// `stat,config,af,schedule,count,ssim,psnr,steps,seconds` with one mean
    /// and one std row per config.
    pub fn summary_csv(&self) -> String {
        let mut out = String::from("stat,config,af,schedule,count,ssim,psnr,steps,seconds\n");
        for s in &self.summary {
            for (label, pick) in [("mean", (|st: &Stat| st.mean) as fn(&Stat) -> f64), ("std", |st: &Stat| st.std)] {
                let _ = writeln!(
                    out,
                    "{label},{},{},{},{},{:?},{:?},{:?},{:.6}",
                    s.config,
                    s.af,
                    s.schedule,
                    s.count,
                    pick(&s.ssim),
                    pick(&s.psnr),
                    pick(&s.steps),
                    pick(&s.seconds)
                );
            }
        }
        out
    }

    /// Per-config means for bar plots.
    pub fn bars_csv(&self) -> String {
        let mut out = String::from("config,af,schedule,ssim_mean,ssim_std,psnr_mean,psnr_std\n");
        for s in &self.summary {
            let _ = writeln!(
                out,
                "{},{},{},{:?},{:?},{:?},{:?}",
                s.config, s.af, s.schedule, s.ssim.mean, s.ssim.std, s.psnr.mean, s.psnr.std
            );
        }
        out
    }

    pub fn mean_psnr(&self, config: usize) -> Option<f64> {
        self.summary.iter().find(|s| s.config == config).map(|s| s.psnr.mean)
    }

    pub fn mean_ssim(&self, config: usize) -> Option<f64> {
        self.summary.iter().find(|s| s.config == config).map(|s| s.ssim.mean)
    }
}

fn evaluate_one(truth: &ComplexImage, slice: usize, source: RestorerSource<'_>, index: usize, cfg: &EvalConfig<'_>) -> Result<EvalRow> {
    let mask = cfg.task_mask(slice)?;
    let y = measure(truth, &mask)?;
    let run = ReverseRunConfig {
        use_spc: cfg.use_spc,
        use_dcc: cfg.use_dcc,
        terminal_dc: cfg.terminal_dc,
        start_override: cfg.start_override,
        ..ReverseRunConfig::new(&mask, cfg.family)
    };
    let started = Instant::now();
    let (x, trace) = match source {
        RestorerSource::Oracle => reconstruct(&y, &OracleRestorer::new(truth.clone()), &run)?,
        RestorerSource::ZeroFill => reconstruct(&y, &ZeroFillRestorer, &run)?,
        RestorerSource::Model(r) => reconstruct(&y, r, &run)?,
    };
    let seconds = started.elapsed().as_secs_f64();
    Ok(EvalRow {
        config: index,
        slice,
        af: cfg.af,
        schedule: cfg.schedule(),
        ssim: ssim(&x, truth)?,
        psnr: psnr(&x, truth)?,
        steps: trace.len(),
        seconds,
    })
}

/// Evaluates every config on every slice, handing rows to `on_row` in
/// (config, slice) order. Slices run in parallel on the current rayon pool in
/// chunks of the pool size, so with one thread each row is emitted as soon
/// as it is computed.
pub fn evaluate_with(
    dataset: &[ComplexImage],
    source: RestorerSource<'_>,
    configs: &[EvalConfig<'_>],
    mut on_row: impl FnMut(&EvalRow) -> Result<()>,
) -> Result<EvalReport> {
    if dataset.is_empty() {
        return Err(Error::InvalidInput("evaluation dataset is empty".into()));
    }
    if configs.is_empty() {
        return Err(Error::Config("no evaluation configs".into()));
    }
    let chunk = rayon::current_num_threads().max(1);
    let mut rows = Vec::with_capacity(dataset.len() * configs.len());
    for (index, cfg) in configs.iter().enumerate() {
        let slices: Vec<usize> = (0..dataset.len()).collect();
        for part in slices.chunks(chunk) {
            let done = part
                .par_iter()
                .map(|&s| evaluate_one(&dataset[s], s, source, index, cfg))
                .collect::<Result<Vec<_>>>()?;
            for row in done {
                on_row(&row)?;
                rows.push(row);
            }
        }
    }
    Ok(EvalReport::from_rows(rows))
}

pub fn evaluate(dataset: &[ComplexImage], source: RestorerSource<'_>, configs: &[EvalConfig<'_>]) -> Result<EvalReport> {
    evaluate_with(dataset, source, configs, |_| Ok(()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::PSNR_CAP;
    use crate::phantom::gen_dataset;
    use crate::schedule::ScheduleSpec;

    fn family(kind: ScheduleKind) -> MaskFamily {
        MaskFamily::build_default(ScheduleSpec::standard(kind), 32, 2).unwrap()
    }

    #[test]
    fn oracle_single_slice_is_exact() {
        let data = gen_dataset(1, 32, 4, 1, 0).unwrap();
        let fam = family(ScheduleKind::Log);
        let report = evaluate(&data, RestorerSource::Oracle, &[EvalConfig::new(&fam, 8.0, TaskMaskKind::Snapped)]).unwrap();
        assert_eq!(report.rows.len(), 1);
        assert!((report.rows[0].ssim - 1.0).abs() < 1e-12);
        assert_eq!(report.rows[0].psnr, PSNR_CAP);
    }

    #[test]
    fn zero_fill_below_oracle() {
        let data = gen_dataset(4, 32, 5, 2, 10).unwrap();
        let fam = family(ScheduleKind::Linear);
        let cfg = [EvalConfig::new(&fam, 8.0, TaskMaskKind::default())];
        let oracle = evaluate(&data, RestorerSource::Oracle, &cfg).unwrap();
        let zf = evaluate(&data, RestorerSource::ZeroFill, &cfg).unwrap();
        for (o, z) in oracle.rows.iter().zip(&zf.rows) {
            assert!(z.psnr < o.psnr, "slice {}", z.slice);
        }
    }

    #[test]
    fn grid_cardinality_order_and_summary() {
        let data = gen_dataset(3, 32, 4, 1, 20).unwrap();
        let (lin, log) = (family(ScheduleKind::Linear), family(ScheduleKind::Log));
        let mut cfgs = Vec::new();
        for af in [8.0, 16.0] {
            for fam in [&lin, &log] {
                cfgs.push(EvalConfig::new(fam, af, TaskMaskKind::default()));
            }
        }
        let mut streamed = Vec::new();
        let report = evaluate_with(&data, RestorerSource::ZeroFill, &cfgs, |r| {
            streamed.push((r.config, r.slice));
            Ok(())
        })
        .unwrap();
        assert_eq!(report.rows.len(), 12);
        let order: Vec<_> = report.rows.iter().map(|r| (r.config, r.slice)).collect();
        assert_eq!(streamed, order);
        assert!(order.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(report.summary.len(), 4);
        assert_eq!(report.rows_csv().lines().count(), 13);
        assert_eq!(report.summary_csv().lines().count(), 9);

        for s in &report.summary {
            let vals: Vec<f64> = report.rows.iter().filter(|r| r.config == s.config).map(|r| r.psnr).collect();
            let mean = vals.iter().sum::<f64>() / vals.len() as f64;
            let std = (vals.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / vals.len() as f64).sqrt();
            assert!((s.psnr.mean - mean).abs() < 1e-12);
            assert!((s.psnr.std - std).abs() < 1e-12);
        }
    }

    #[test]
    fn deterministic_except_timing() {
        let data = gen_dataset(2, 32, 4, 1, 30).unwrap();
        let fam = family(ScheduleKind::Log);
        let cfg = [EvalConfig::new(&fam, 4.0, TaskMaskKind::default())];
        let strip = |rep: EvalReport| rep.rows.into_iter().map(|r| (r.slice, r.ssim, r.psnr, r.steps)).collect::<Vec<_>>();
        let a = evaluate(&data, RestorerSource::ZeroFill, &cfg).unwrap();
        let b = evaluate(&data, RestorerSource::ZeroFill, &cfg).unwrap();
        assert_eq!(strip(a), strip(b));
    }

    #[test]
    fn empty_inputs_rejected() {
        let fam = family(ScheduleKind::Log);
        let cfg = [EvalConfig::new(&fam, 4.0, TaskMaskKind::Snapped)];
        assert!(evaluate(&[], RestorerSource::Oracle, &cfg).is_err());
        let data = gen_dataset(1, 32, 2, 0, 0).unwrap();
        assert!(evaluate(&data, RestorerSource::Oracle, &[]).is_err());
    }

    #[test]
    fn stat_of_known_values() {
        let s = Stat::of(&[1.0, 3.0]);
        assert_eq!((s.mean, s.std), (2.0, 1.0));
    }
}
