use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;

use super::config::{load_config, Resolver, Switch, List, SEED_ENV};
use super::manifest::RunManifest;
use super::*;
use crate::degradation::measure;
use crate::eval::{evaluate_with, row_csv_line, EvalConfig, RestorerSource, TaskMaskKind, ROWS_HEADER};
use crate::io::{
    read_dataset, read_image, read_mask, slice_file_name, write_family, write_image, write_mask, write_pgm,
    write_slices,
};
use crate::mask::{gen_task_mask, ColumnMask, MaskFamily, DEFAULT_TASK_CENTER_FRACTION};
use crate::metrics::{psnr, ssim};
use crate::numerics::{ifft2_centered, rel_l2_error, rel_l2_error_kspace, Complex64, ComplexImage};
use crate::phantom::{gen_phantom, PhantomSpec};
use crate::restorer::{
    ConvArch, ConvRestorer, ModelCheckpoint, OracleRestorer, Restorer, TrainConfig, TrainMetadata, TrainRun,
    Trainer, ZeroFillRestorer,
};
use crate::sampler::{ablate_start_point, reconstruct, ReverseRunConfig};
use crate::schedule::ScheduleSpec;

const DCC_TOLERANCE: f64 = 1e-12;
const ORACLE_TOLERANCE: f64 = 1e-10;
const LOSS_WINDOW: usize = 50;

pub(super) fn dispatch(command: Command) -> CliResult<()> {
    match command {
        Command::Phantom(a) => phantom(a),
        Command::Schedule(a) => schedule(a),
        Command::Mask(a) => mask(a),
        Command::Train(a) => train(a),
        Command::Recon(a) => recon(a),
        Command::Eval(a) => eval(a),
    }
}

fn resolver(common: &CommonArgs) -> CliResult<Resolver> {
    let file = match &common.config {
        Some(path) => load_config(path)?,
        None => BTreeMap::new(),
    };
    Ok(Resolver::new(file, std::env::var(SEED_ENV).ok()))
}

fn required(r: &mut Resolver, key: &str, flag: Option<String>) -> CliResult<String> {
    r.get_opt(key, flag)?
        .ok_or_else(|| CliError::Usage(format!("--{key} is required (flag or config key)")))
}

fn jobs(r: &mut Resolver, common: &CommonArgs) -> CliResult<usize> {
    let jobs = r.get("jobs", common.jobs, 1usize)?;
    if jobs == 0 {
        return Err(CliError::Usage("--jobs must be positive".into()));
    }
    Ok(jobs)
}

fn with_pool<T: Send>(jobs: usize, f: impl FnOnce() -> CliResult<T> + Send) -> CliResult<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| CliError::Usage(format!("cannot start {jobs} workers: {e}")))?;
    pool.install(f)
}

fn create_dir(path: &Path) -> CliResult<()> {
    fs::create_dir_all(path).map_err(|e| Error::io(path, e))?;
    Ok(())
}

/// Family parameters with their defaults (standard schedule, or the ones a
/// checkpoint was trained with).
#[derive(Debug, Clone, Copy)]
struct FamilySettings {
    schedule: ScheduleSpec,
    center_fraction: Option<f64>,
    seed: u64,
}

impl FamilySettings {
    fn standard() -> Self {
        Self {
            schedule: ScheduleSpec::standard(ScheduleKind::Log),
            center_fraction: None,
            seed: 0,
        }
    }

    fn from_metadata(m: &TrainMetadata) -> Self {
        Self {
            schedule: m.schedule,
            center_fraction: Some(m.family_center_fraction),
            seed: m.family_seed,
        }
    }

    fn resolve(self, r: &mut Resolver, a: &FamilyArgs) -> CliResult<Self> {
        let kind = r.get("kind", a.kind, self.schedule.kind())?;
        let steps = r.get("steps", a.steps, self.schedule.steps())?;
        let sr_min = r.get("sr-min", a.sr_min, self.schedule.sr_min())?;
        let seed = r.get("family-seed", a.family_seed, self.seed)?;
        let center_fraction = match r.get_opt("family-center-fraction", a.family_center_fraction)? {
            Some(cf) => Some(cf),
            None => self.center_fraction,
        };
        Ok(Self {
            schedule: ScheduleSpec::new(kind, steps, sr_min)?,
            center_fraction,
            seed,
        })
    }

    fn with_kind(self, kind: ScheduleKind) -> CliResult<Self> {
        Ok(Self {
            schedule: ScheduleSpec::new(kind, self.schedule.steps(), self.schedule.sr_min())?,
            ..self
        })
    }

    fn build(&self, width: usize) -> CliResult<MaskFamily> {
        let cf = self.center_fraction.unwrap_or(1.0 / width as f64);
        Ok(MaskFamily::build(self.schedule, width, cf, self.seed)?)
    }
}

fn phantom(a: PhantomArgs) -> CliResult<()> {
    let mut r = resolver(&a.common)?;
    let count = r.get("count", a.count, 200usize)?;
    let size = r.get("size", a.size, 64usize)?;
    let n_ellipses = r.get("n-ellipses", a.n_ellipses, 6usize)?;
    let phase_order = r.get("phase-order", a.phase_order, 2usize)?;
    let seed = r.seed(a.common.seed)?;
    let out = PathBuf::from(required(&mut r, "out", a.out)?);
    let pgm = r.switch("pgm", a.pgm, false)?;
    let jobs = jobs(&mut r, &a.common)?;
    let settings = r.finish()?;
    if count == 0 {
        return Err(CliError::Usage("--count must be positive".into()));
    }
    PhantomSpec::new(size, n_ellipses, seed, phase_order).validate()?;

    let mut manifest = RunManifest::start("phantom", settings);
    let images = with_pool(jobs, || {
        (0..count as u64)
            .into_par_iter()
            .map(|i| Ok(gen_phantom(&PhantomSpec::new(size, n_ellipses, seed.wrapping_add(i), phase_order))?))
            .collect::<CliResult<Vec<_>>>()
    })?;
    create_dir(&out)?;
    let names = write_slices(&out, &images)?;
    if pgm {
        for (i, img) in images.iter().enumerate() {
            let name = slice_file_name(i).replace(".cim", ".pgm");
            write_pgm(out.join(&name), img)?;
            manifest.outputs.push(name);
        }
    }
    manifest.files = names;
    manifest.finish(&out)?;
    println!("wrote {count} phantoms ({size}x{size}) to {}", out.display());
    Ok(())
}

fn schedule(a: ScheduleArgs) -> CliResult<()> {
    let mut r = resolver(&a.common)?;
    let fam = FamilySettings::standard().resolve(&mut r, &a.family)?;
    let width = r.get("width", a.width, 64usize)?;
    let af = r.get_opt("af", a.af)?;
    r.seed(a.common.seed)?;
    jobs(&mut r, &a.common)?;
    r.finish()?;
    let spec = fam.schedule;
    let start = match af {
        Some(af) if !(af >= 1.0) => {
            return Err(Error::Config(format!("acceleration factor must be >= 1, got {af}")).into());
        }
        Some(af) => Some(spec.locate_start_step(1.0 / af)?),
        None => None,
    };
    println!("t,sr,columns");
    for t in 0..=spec.steps() {
        println!("{t},{:.6},{}", spec.sampling_rate(t)?, spec.column_count(t, width)?);
    }
    if let Some(start) = start {
        println!("T' = {start}");
    }
    Ok(())
}

fn mask_image(mask: &ColumnMask) -> CliResult<ComplexImage> {
    let w = mask.width();
    Ok(ComplexImage::from_fn(w, w, |_, c| {
        Complex64::new(if mask.is_selected(c) { 1.0 } else { 0.0 }, 0.0)
    })?)
}

fn mask(a: MaskArgs) -> CliResult<()> {
    let mut r = resolver(&a.common)?;
    let fam = FamilySettings::standard().resolve(&mut r, &a.family)?;
    let width = r.get("width", a.width, 64usize)?;
    let af = r.get("af", a.af, 8.0f64)?;
    let cf = r.get("center-fraction", a.center_fraction, DEFAULT_TASK_CENTER_FRACTION)?;
    let seed = r.seed(a.common.seed)?;
    let write_fam = r.switch("family", a.write_family, false)?;
    let pgm = r.switch("pgm", a.pgm, false)?;
    let out = PathBuf::from(required(&mut r, "out", a.out)?);
    jobs(&mut r, &a.common)?;
    let mut manifest = RunManifest::start("mask", r.finish()?);

    let mask = gen_task_mask(width, af, cf, seed)?;
    create_dir(&out)?;
    write_mask(out.join("mask.kms"), &mask)?;
    manifest.outputs.push("mask.kms".into());
    let cols: Vec<String> = mask.selected_indices().iter().map(|c| c.to_string()).collect();
    println!("columns: {}", cols.join(" "));
    println!(
        "count={} sampling_rate={:.6} af={:.4} center_fraction={:.4}",
        mask.count(),
        mask.sampling_rate(),
        mask.accel_factor(),
        mask.center_fraction()
    );
    let start = fam.schedule.locate_start_step(mask.sampling_rate())?;
    println!("T' = {start}");
    if pgm {
        write_pgm(out.join("mask.pgm"), &mask_image(&mask)?)?;
        manifest.outputs.push("mask.pgm".into());
    }
    if write_fam {
        let family = fam.build(width)?;
        write_family(out.join("family.kfm"), &family)?;
        manifest.outputs.push("family.kfm".into());
        match family.snap(&mask)? {
            Some(t) => println!("mask equals family step {t}"),
            None => println!("mask is not a family member"),
        }
        println!("family mask at T' is contained in task mask: {}", family.mask(start)?.is_subset_of(&mask));
    }
    manifest.finish(&out)?;
    Ok(())
}

fn train(a: TrainArgs) -> CliResult<()> {
    let mut r = resolver(&a.common)?;
    let data = required(&mut r, "data", a.data)?;
    let fam = FamilySettings::standard().resolve(&mut r, &a.family)?;
    let defaults = TrainConfig::default();
    let config = TrainConfig {
        grad_steps: r.get("grad-steps", a.grad_steps, defaults.grad_steps)?,
        learning_rate: r.get("lr", a.lr, defaults.learning_rate)?,
        batch_size: r.get("batch-size", a.batch_size, defaults.batch_size)?,
        arch: ConvArch::new(
            r.get("channels", a.channels, defaults.arch.channels)?,
            r.get("depth", a.depth, defaults.arch.depth)?,
        )?,
        loss_norm: r.get("loss", a.loss, defaults.loss_norm)?,
        seed: r.seed(a.common.seed)?,
        ..defaults
    };
    let log_every = r.get("log-every", a.log_every, 100usize)?;
    let out = PathBuf::from(required(&mut r, "out", a.out)?);
    let jobs = jobs(&mut r, &a.common)?;
    let mut manifest = RunManifest::start("train", r.finish()?);

    let dataset = read_dataset(&data)?;
    let family = fam.build(dataset[0].width())?;
    create_dir(&out)?;
    let started = Instant::now();
    let result = with_pool(jobs, || {
        let mut trainer = Trainer::new(&dataset, &family, config.clone())?;
        for _ in 0..config.grad_steps {
            match trainer.step() {
                Ok(loss) => {
                    let step = trainer.steps_done();
                    if log_every > 0 && step % log_every == 0 {
                        eprintln!("step {step} loss {loss:.6}");
                    }
                }
                Err(e) => {
                    let run = TrainRun {
                        checkpoint: trainer.checkpoint(),
                        losses: trainer.losses().to_vec(),
                    };
                    return Ok((run, Some(e)));
                }
            }
        }
        let run = TrainRun {
            checkpoint: trainer.checkpoint(),
            losses: trainer.losses().to_vec(),
        };
        Ok((run, None))
    })?;
    let (run, failure) = result;
    run.write_loss_csv(out.join("loss.csv"))?;
    manifest.outputs.push("loss.csv".into());
    if let Some(e) = failure {
        run.checkpoint.save(out.join("model.ckp.diverged"))?;
        manifest.outputs.push("model.ckp.diverged".into());
        manifest.finish(&out)?;
        return Err(e.into());
    }
    run.checkpoint.save(out.join("model.ckp"))?;
    manifest.outputs.push("model.ckp".into());
    manifest.finish(&out)?;
    println!(
        "trained {} steps in {:.1}s on {} images",
        run.losses.len(),
        started.elapsed().as_secs_f64(),
        dataset.len()
    );
    if let Some((first, last)) = run.initial_and_final_loss(LOSS_WINDOW) {
        println!("loss: initial {first:.6} final {last:.6} (means over the first/last {LOSS_WINDOW} steps)");
    }
    Ok(())
}

enum LoadedRestorer {
    Oracle,
    ZeroFill,
    Model(Box<ModelCheckpoint>, ConvRestorer),
}

impl LoadedRestorer {
    fn resolve(r: &mut Resolver, a: &RestorerArgs) -> CliResult<Self> {
        let model = r.get_opt("model", a.model.clone())?;
        let oracle = r.switch("oracle", a.oracle, false)?;
        let zerofill = r.switch("zerofill", a.zerofill, false)?;
        match (model, oracle, zerofill) {
            (Some(path), false, false) => {
                let ckpt = ModelCheckpoint::load(&path)?;
                let restorer = ckpt.restorer()?;
                Ok(LoadedRestorer::Model(Box::new(ckpt), restorer))
            }
            (None, true, false) => Ok(LoadedRestorer::Oracle),
            (None, false, true) => Ok(LoadedRestorer::ZeroFill),
            _ => Err(CliError::Usage("choose exactly one of --model, --oracle, --zerofill".into())),
        }
    }

    fn family_defaults(&self) -> FamilySettings {
        match self {
            LoadedRestorer::Model(ckpt, _) => FamilySettings::from_metadata(&ckpt.metadata),
            _ => FamilySettings::standard(),
        }
    }

    fn warn_if_mismatched(&self, fam: &FamilySettings) {
        if let LoadedRestorer::Model(ckpt, _) = self {
            if ckpt.metadata.schedule != fam.schedule {
                eprintln!(
                    "warning: restorer was trained with the {} schedule (T={}, sr_min={})",
                    ckpt.metadata.schedule.kind(),
                    ckpt.metadata.schedule.steps(),
                    ckpt.metadata.schedule.sr_min()
                );
            }
        }
    }

    fn source(&self) -> RestorerSource<'_> {
        match self {
            LoadedRestorer::Oracle => RestorerSource::Oracle,
            LoadedRestorer::ZeroFill => RestorerSource::ZeroFill,
            LoadedRestorer::Model(_, r) => RestorerSource::Model(r),
        }
    }
}

struct SamplerSettings {
    dcc: bool,
    spc: bool,
    terminal_dc: bool,
    mask_kind: MaskKindArg,
    center_fraction: f64,
    sweep: Option<(StartRange, usize)>,
}

impl SamplerSettings {
    fn resolve(r: &mut Resolver, a: &SamplerArgs) -> CliResult<Self> {
        let dcc = r.get("dcc", a.dcc, Switch(true))?.0;
        let spc = r.get("spc", a.spc, Switch(true))?.0;
        let terminal_dc = r.get("terminal-dc", a.terminal_dc, Switch(true))?.0;
        let mask_kind = r.get("mask-kind", a.mask_kind, MaskKindArg::Random)?;
        let center_fraction = r.get("center-fraction", a.center_fraction, DEFAULT_TASK_CENTER_FRACTION)?;
        let sweep = match r.get_opt("sweep-start", a.sweep_start)? {
            Some(range) => Some((range, r.get("sweep-step", a.sweep_step, 1usize)?)),
            None => None,
        };
        Ok(Self {
            dcc,
            spc,
            terminal_dc,
            mask_kind,
            center_fraction,
            sweep,
        })
    }

    fn task_mask_kind(&self, seed: u64) -> TaskMaskKind {
        match self.mask_kind {
            MaskKindArg::Snapped => TaskMaskKind::Snapped,
            MaskKindArg::Random => TaskMaskKind::Random {
                center_fraction: self.center_fraction,
                seed,
            },
        }
    }
}

fn recon(a: ReconArgs) -> CliResult<()> {
    let mut r = resolver(&a.common)?;
    let input = required(&mut r, "input", a.input)?;
    let loaded = LoadedRestorer::resolve(&mut r, &a.restorer)?;
    let fam = loaded.family_defaults().resolve(&mut r, &a.family)?;
    let sampler = SamplerSettings::resolve(&mut r, &a.sampler)?;
    let mask_path = r.get_opt("mask", a.mask)?;
    let af = match mask_path {
        Some(_) => None,
        None => Some(r.get("af", a.af, 8.0f64)?),
    };
    let start = r.get_opt("start", a.start)?;
    let trajectory = r.switch("trajectory", a.trajectory, false)?;
    let verify = r.switch("verify", a.verify, false)?;
    let pgm = r.switch("pgm", a.pgm, false)?;
    let seed = r.seed(a.common.seed)?;
    let out = PathBuf::from(required(&mut r, "out", a.out)?);
    let jobs = jobs(&mut r, &a.common)?;
    let mut manifest = RunManifest::start("recon", r.finish()?);
    loaded.warn_if_mismatched(&fam);

    let truth = read_image(&input)?;
    let family = fam.build(truth.width())?;
    let mask = match (&mask_path, af) {
        (Some(path), _) => read_mask(path)?,
        (None, Some(af)) => EvalConfig::new(&family, af, sampler.task_mask_kind(seed)).task_mask(0)?,
        (None, None) => unreachable!("af is resolved whenever no mask file is given"),
    };
    let y = measure(&truth, &mask)?;
    let cfg = ReverseRunConfig {
        use_spc: sampler.spc,
        use_dcc: sampler.dcc,
        terminal_dc: sampler.terminal_dc,
        start_override: start,
        record_trajectory: trajectory,
        ..ReverseRunConfig::new(&mask, &family)
    };

    let oracle = OracleRestorer::new(truth.clone());
    let restorer: &dyn Restorer = match &loaded {
        LoadedRestorer::Oracle => &oracle,
        LoadedRestorer::ZeroFill => &ZeroFillRestorer,
        LoadedRestorer::Model(_, conv) => conv,
    };

    create_dir(&out)?;
    let started = Instant::now();
    let (x, trace) = with_pool(jobs, || Ok(reconstruct(&y, restorer, &cfg)?))?;
    let seconds = started.elapsed().as_secs_f64();
    for w in &trace.warnings {
        eprintln!("warning: {w}");
    }
    let zero_filled = ifft2_centered(&y)?;
    write_image(out.join("recon.cim"), &x)?;
    write_image(out.join("zerofill.cim"), &zero_filled)?;
    write_mask(out.join("mask.kms"), &mask)?;
    trace.write(&out)?;
    manifest.outputs.extend(["recon.cim", "zerofill.cim", "mask.kms", "trace.csv"].map(String::from));
    if trajectory {
        manifest.outputs.push(format!("{} snapshot_*.cim files", trace.snapshots.len()));
    }
    if pgm {
        for (name, img) in [("recon.pgm", &x), ("zerofill.pgm", &zero_filled), ("truth.pgm", &truth)] {
            write_pgm(out.join(name), img)?;
            manifest.outputs.push(name.into());
        }
    }

    let rel = rel_l2_error(&x, &truth)?;
    println!(
        "restorer={} start={} steps={} seconds={seconds:.3}",
        restorer.name(),
        trace.start,
        trace.len()
    );
    println!(
        "psnr={:.4} ssim={:.6} rel_l2_error={rel:.3e} zerofill_psnr={:.4}",
        psnr(&x, &truth)?,
        ssim(&x, &truth)?,
        psnr(&zero_filled, &truth)?
    );

    if let Some((range, step)) = sampler.sweep {
        let starts = range.starts(step, family.steps());
        let rows = with_pool(jobs, || Ok(ablate_start_point(&y, &truth, restorer, &cfg, &starts)?))?;
        let mut csv = String::from("start,psnr,ssim,steps\n");
        for row in &rows {
            csv.push_str(&format!("{},{:?},{:?},{}\n", row.start, row.psnr, row.ssim, row.steps));
        }
        let path = out.join("sweep.csv");
        fs::write(&path, csv).map_err(|e| Error::io(&path, e))?;
        manifest.outputs.push("sweep.csv".into());
        println!("sweep: {} starts written to sweep.csv", rows.len());
    }
    manifest.finish(&out)?;

    if verify {
        let mut failures = Vec::new();
        if cfg.use_dcc || cfg.terminal_dc {
            let err = rel_l2_error_kspace(&measure(&x, &mask)?, &y)?;
            println!("verify: measured-data error {err:.3e} (limit {DCC_TOLERANCE:e})");
            if !(err <= DCC_TOLERANCE) {
                failures.push(format!("measured-data error {err:.3e} exceeds {DCC_TOLERANCE:e}"));
            }
        }
        if matches!(loaded, LoadedRestorer::Oracle) && family.mask(trace.start)?.is_subset_of(&mask) {
            println!("verify: oracle recovery error {rel:.3e} (limit {ORACLE_TOLERANCE:e})");
            if !(rel <= ORACLE_TOLERANCE) {
                failures.push(format!("oracle recovery error {rel:.3e} exceeds {ORACLE_TOLERANCE:e}"));
            }
        }
        if !failures.is_empty() {
            return Err(CliError::Verify(failures.join("; ")));
        }
    }
    Ok(())
}

fn eval(a: EvalArgs) -> CliResult<()> {
    let mut r = resolver(&a.common)?;
    let data = required(&mut r, "data", a.data)?;
    let loaded = LoadedRestorer::resolve(&mut r, &a.restorer)?;
    let fam = loaded.family_defaults().resolve(&mut r, &a.family)?;
    let sampler = SamplerSettings::resolve(&mut r, &a.sampler)?;
    let afs = r.get("af", a.af, List(vec![8.0, 16.0]))?.0;
    let kinds = r.get("kinds", a.kinds, List(vec![ScheduleKind::Linear, ScheduleKind::Log]))?.0;
    let seed = r.seed(a.common.seed)?;
    let out = PathBuf::from(required(&mut r, "out", a.out)?);
    let jobs = jobs(&mut r, &a.common)?;
    let mut manifest = RunManifest::start("eval", r.finish()?);

    let dataset = read_dataset(&data)?;
    let width = dataset[0].width();
    let families = kinds
        .iter()
        .map(|&k| {
            let settings = fam.with_kind(k)?;
            loaded.warn_if_mismatched(&settings);
            settings.build(width)
        })
        .collect::<CliResult<Vec<_>>>()?;

    let mask_kind = sampler.task_mask_kind(seed);
    let mut configs = Vec::new();
    for &af in &afs {
        for family in &families {
            let base = EvalConfig {
                use_spc: sampler.spc,
                use_dcc: sampler.dcc,
                terminal_dc: sampler.terminal_dc,
                ..EvalConfig::new(family, af, mask_kind)
            };
            match sampler.sweep {
                Some((range, step)) => {
                    for s in range.starts(step, family.steps()) {
                        configs.push(EvalConfig {
                            start_override: Some(s),
                            ..base
                        });
                    }
                }
                None => configs.push(base),
            }
        }
    }
    if configs.is_empty() {
        return Err(CliError::Usage("the sweep range selects no valid start steps".into()));
    }

    create_dir(&out)?;
    let mut configs_csv = String::from("config,af,schedule,mask,dcc,spc,terminal_dc,start\n");
    for (i, c) in configs.iter().enumerate() {
        configs_csv.push_str(&format!(
            "{i},{},{},{},{},{},{},{}\n",
            c.af,
            c.schedule(),
            sampler.mask_kind,
            Switch(c.use_dcc),
            Switch(c.use_spc),
            Switch(c.terminal_dc),
            c.start_override.map_or(String::from("auto"), |s| s.to_string())
        ));
    }
    write_text(&out.join("configs.csv"), &configs_csv)?;

    let rows_path = out.join("eval.csv");
    let file = File::create(&rows_path).map_err(|e| Error::io(&rows_path, e))?;
    let mut rows_out = BufWriter::new(file);
    let io_err = |e| Error::io(&rows_path, e);
    writeln!(rows_out, "{ROWS_HEADER}").map_err(io_err)?;
    let source = loaded.source();
    let report = with_pool(jobs, || {
        Ok(evaluate_with(&dataset, source, &configs, |row| {
            writeln!(rows_out, "{}", row_csv_line(row)).map_err(io_err)?;
            rows_out.flush().map_err(io_err)?;
            Ok(())
        })?)
    })?;
    drop(rows_out);
    write_text(&out.join("summary.csv"), &report.summary_csv())?;
    write_text(&out.join("bars.csv"), &report.bars_csv())?;
    manifest.outputs.extend(["configs.csv", "eval.csv", "summary.csv", "bars.csv"].map(String::from));
    manifest.finish(&out)?;

    println!("config,af,schedule,n,ssim_mean,ssim_std,psnr_mean,psnr_std,steps_mean");
    for s in &report.summary {
        println!(
            "{},{},{},{},{:.4},{:.4},{:.3},{:.3},{:.1}",
            s.config, s.af, s.schedule, s.count, s.ssim.mean, s.ssim.std, s.psnr.mean, s.psnr.std, s.steps.mean
        );
    }
    Ok(())
}

fn write_text(path: &Path, text: &str) -> CliResult<()> {
    fs::write(path, text).map_err(|e| Error::io(path, e))?;
    Ok(())
}
