//! Cartesian column masks and nested degradation mask families.
//!
//! A mask selects whole k-space columns (phase-encode lines) and is broadcast
//! over every row. Column indices are in centered coordinates, so the DC
//! column is `width / 2`.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::schedule::ScheduleSpec;

/// fastMRI-style center fraction for 8x task masks.
pub const DEFAULT_TASK_CENTER_FRACTION: f64 = 0.04;

/// Number of fully sampled center columns for a fraction of `width`.
pub fn center_block_len(center_fraction: f64, width: usize) -> usize {
    // the epsilon keeps exact products such as (1/320)*320 from rounding up
    ((center_fraction * width as f64 - 1e-9).ceil() as usize).clamp(1, width)
}

/// Column indices ordered outward from the DC column: `c, c+1, c-1, c+2, ...`.
pub fn center_out_order(width: usize) -> Vec<usize> {
    let center = width / 2;
    let mut order = Vec::with_capacity(width);
    order.push(center);
    for d in 1..=width {
        if center + d < width {
            order.push(center + d);
        }
        if d <= center {
            order.push(center - d);
        }
        if order.len() == width {
            break;
        }
    }
    order
}

#[derive(Debug, Clone, PartialEq)]
pub struct ColumnMask {
    selected: Vec<bool>,
    center_fraction: f64,
    accel_factor: f64,
}

impl ColumnMask {
    /// Builds a mask from an explicit selection. The DC column must be selected.
    /// The center fraction is taken from the contiguous selected run around DC.
    pub fn from_selection(selected: Vec<bool>) -> Result<Self> {
        let width = selected.len();
        if width == 0 {
            return Err(Error::InvalidInput("mask width must be positive".into()));
        }
        if !selected[width / 2] {
            return Err(Error::Config(format!("DC column {} must be selected", width / 2)));
        }
        let count = selected.iter().filter(|&&s| s).count();
        let center = width / 2;
        let right = (center..width).take_while(|&c| selected[c]).count();
        let left = (0..center).rev().take_while(|&c| selected[c]).count();
        Ok(Self {
            center_fraction: (left + right) as f64 / width as f64,
            accel_factor: width as f64 / count as f64,
            selected,
        })
    }

    pub fn full(width: usize) -> Result<Self> {
        Self::from_selection(vec![true; width])
    }

    pub fn width(&self) -> usize {
        self.selected.len()
    }

    pub fn selected(&self) -> &[bool] {
        &self.selected
    }

    pub fn is_selected(&self, col: usize) -> bool {
        self.selected[col]
    }

    pub fn count(&self) -> usize {
        self.selected.iter().filter(|&&s| s).count()
    }

    pub fn sampling_rate(&self) -> f64 {
        self.count() as f64 / self.width() as f64
    }

    pub fn center_fraction(&self) -> f64 {
        self.center_fraction
    }

    pub fn accel_factor(&self) -> f64 {
        self.accel_factor
    }

    /// True when every column selected here is also selected in `other`.
    pub fn is_subset_of(&self, other: &ColumnMask) -> bool {
        self.width() == other.width() && self.selected.iter().zip(&other.selected).all(|(&a, &b)| !a || b)
    }

    pub fn selected_indices(&self) -> Vec<usize> {
        (0..self.width()).filter(|&c| self.selected[c]).collect()
    }
}

/// fastMRI-style random Cartesian mask: the center block of
/// `ceil(center_fraction * width)` columns plus uniformly random columns until
/// `round(width / af)` are selected.
pub fn gen_task_mask(width: usize, af: f64, center_fraction: f64, seed: u64) -> Result<ColumnMask> {
    if width == 0 {
        return Err(Error::InvalidInput("mask width must be positive".into()));
    }
    if !(af >= 1.0) || !af.is_finite() {
        return Err(Error::Config(format!("acceleration factor must be >= 1, got {af}")));
    }
    if !(center_fraction > 0.0 && center_fraction <= 1.0) {
        return Err(Error::Config(format!("center fraction must lie in (0, 1], got {center_fraction}")));
    }
    let target = ((width as f64 / af).round() as usize).max(1);
    let n_center = center_block_len(center_fraction, width);
    if target < n_center {
        return Err(Error::Config(format!(
            "target of {target} columns is smaller than the center block of {n_center}"
        )));
    }
    let order = center_out_order(width);
    let mut selected = vec![false; width];
    for &c in &order[..n_center] {
        selected[c] = true;
    }
    let mut rest = order[n_center..].to_vec();
    rest.sort_unstable();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rest.shuffle(&mut rng);
    for &c in &rest[..target - n_center] {
        selected[c] = true;
    }
    let mut mask = ColumnMask::from_selection(selected)?;
    mask.center_fraction = center_fraction;
    mask.accel_factor = af;
    Ok(mask)
}

/// Nested masks `M_0 ⊇ M_1 ⊇ ... ⊇ M_T`, each a prefix of one column priority list.
#[derive(Debug, Clone, PartialEq)]
pub struct MaskFamily {
    schedule: ScheduleSpec,
    width: usize,
    center_fraction: f64,
    seed: u64,
    priority: Vec<usize>,
    masks: Vec<ColumnMask>,
}

impl MaskFamily {
    /// Center block first in center-out order, then the remaining columns in
    /// seeded shuffled order. `M_t` keeps the first `max(1, round(SR_t * W))`.
    pub fn build(schedule: ScheduleSpec, width: usize, center_fraction: f64, seed: u64) -> Result<Self> {
        if width < 4 {
            return Err(Error::Config(format!("family width must be at least 4, got {width}")));
        }
        if !(center_fraction > 0.0 && center_fraction < 1.0) {
            return Err(Error::Config(format!("center fraction must lie in (0, 1), got {center_fraction}")));
        }
        let n_center = center_block_len(center_fraction, width);
        let min_budget = schedule.column_count(schedule.steps(), width)?;
        if n_center > min_budget {
            return Err(Error::Config(format!(
                "center block exceeds minimum budget ({n_center} > {min_budget} columns at t=T)"
            )));
        }

        let order = center_out_order(width);
        let mut priority = order[..n_center].to_vec();
        let mut rest = order[n_center..].to_vec();
        rest.sort_unstable();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rest.shuffle(&mut rng);
        priority.extend(rest);

        let masks = (0..=schedule.steps())
            .map(|t| {
                let count = schedule.column_count(t, width)?;
                let mut selected = vec![false; width];
                for &c in &priority[..count] {
                    selected[c] = true;
                }
                ColumnMask::from_selection(selected)
            })
            .collect::<Result<Vec<_>>>()?;

        Ok(Self {
            schedule,
            width,
            center_fraction,
            seed,
            priority,
            masks,
        })
    }

    /// Minimal center block: a single DC column.
    pub fn build_default(schedule: ScheduleSpec, width: usize, seed: u64) -> Result<Self> {
        Self::build(schedule, width, 1.0 / width as f64, seed)
    }

    /// Rebuilds a family from stored per-step selections, checking every
    /// family invariant.
    pub fn from_masks(schedule: ScheduleSpec, seed: u64, selections: Vec<Vec<bool>>) -> Result<Self> {
        if selections.len() != schedule.steps() + 1 {
            return Err(Error::shape(schedule.steps() + 1, selections.len()));
        }
        let width = selections[0].len();
        if width < 4 {
            return Err(Error::Config(format!("family width must be at least 4, got {width}")));
        }
        let masks = selections
            .into_iter()
            .map(ColumnMask::from_selection)
            .collect::<Result<Vec<_>>>()?;
        for (t, m) in masks.iter().enumerate() {
            if m.width() != width {
                return Err(Error::shape(width, m.width()));
            }
            let expected = schedule.column_count(t, width)?;
            if m.count() != expected {
                return Err(Error::Config(format!(
                    "mask at step {t} selects {} columns, schedule requires {expected}",
                    m.count()
                )));
            }
            if t > 0 && !m.is_subset_of(&masks[t - 1]) {
                return Err(Error::Config(format!("mask at step {t} is not nested in step {}", t - 1)));
            }
        }
        // columns ordered by how long they stay selected
        let mut last_step = vec![0usize; width];
        for (t, m) in masks.iter().enumerate() {
            for c in m.selected_indices() {
                last_step[c] = t;
            }
        }
        let mut priority: Vec<usize> = (0..width).collect();
        priority.sort_by_key(|&c| std::cmp::Reverse(last_step[c]));
        let center_fraction = masks[schedule.steps()].center_fraction();
        Ok(Self {
            schedule,
            width,
            center_fraction,
            seed,
            priority,
            masks,
        })
    }

    pub fn schedule(&self) -> &ScheduleSpec {
        &self.schedule
    }

    pub fn steps(&self) -> usize {
        self.schedule.steps()
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn center_fraction(&self) -> f64 {
        self.center_fraction
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn priority(&self) -> &[usize] {
        &self.priority
    }

    pub fn masks(&self) -> &[ColumnMask] {
        &self.masks
    }

    pub fn mask(&self, t: usize) -> Result<&ColumnMask> {
        self.masks.get(t).ok_or(Error::Index {
            index: t,
            max: self.steps(),
        })
    }

    /// First step whose mask equals `mask`, or `None`.
    pub fn snap(&self, mask: &ColumnMask) -> Result<Option<usize>> {
        if mask.width() != self.width {
            return Err(Error::shape(self.width, mask.width()));
        }
        Ok(self.masks.iter().position(|m| m.selected() == mask.selected()))
    }

    /// Start step for a task mask, located from its sampling rate.
    pub fn start_step_for(&self, mask: &ColumnMask) -> Result<usize> {
        if mask.width() != self.width {
            return Err(Error::shape(self.width, mask.width()));
        }
        self.schedule.locate_start_step(mask.sampling_rate())
    }

    /// Task mask taken from the family itself at the start step for `af`.
    pub fn snapped_task_mask(&self, af: f64) -> Result<(usize, ColumnMask)> {
        let t = self.schedule.locate_start_step(1.0 / af)?;
        let mut mask = self.masks[t].clone();
        mask.accel_factor = af;
        Ok((t, mask))
    }
}

pub fn build_mask_family(spec: ScheduleSpec, width: usize, center_fraction: f64, seed: u64) -> Result<MaskFamily> {
    MaskFamily::build(spec, width, center_fraction, seed)
}

pub fn snap_to_family(mask: &ColumnMask, family: &MaskFamily) -> Result<Option<usize>> {
    family.snap(mask)
}
