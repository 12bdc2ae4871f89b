use std::fmt;

/// Workload time extrapolated linearly from a per-image average.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Projection {
    pub n_images: usize,
    pub avg_per_image_s: f64,
    pub seconds: f64,
}

impl Projection {
    pub fn minutes(&self) -> f64 {
        self.seconds / 60.0
    }

    pub fn hours(&self) -> f64 {
        self.seconds / 3600.0
    }
}

impl fmt::Display for Projection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} images × {} s/image = {:.1} s ({:.1} min, {:.1} h)",
            self.n_images,
            self.avg_per_image_s,
            self.seconds,
            self.minutes(),
            self.hours()
        )
    }
}

pub fn project_cost(avg_per_image_s: f64, n_images: usize) -> Projection {
    Projection {
        n_images,
        avg_per_image_s,
        seconds: n_images as f64 * avg_per_image_s,
    }
}

/// Ratio of two projections next to a claimed efficiency factor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EfficiencyComparison {
    pub ratio: f64,
    pub claimed: f64,
}

impl EfficiencyComparison {
    pub fn new(baseline: &Projection, optimized: &Projection, claimed: f64) -> Self {
        Self {
            ratio: baseline.seconds / optimized.seconds,
            claimed,
        }
    }

    pub fn delta(&self) -> f64 {
        self.ratio - self.claimed
    }
}

impl fmt::Display for EfficiencyComparison {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "computed ratio {:.0}x vs claimed {:.0}x (delta {:+.1}x)",
            self.ratio,
            self.claimed,
            self.delta()
        )
    }
}

/// Efficiency factor quoted for the 2,500-image workload.
pub const CLAIMED_EFFICIENCY: f64 = 40.0;

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn clinic_workload() {
        let slow = project_cost(2.58, 2500);
        let fast = project_cost(0.06, 2500);
        assert!((slow.seconds - 6450.0).abs() < 1e-9);
        assert!((fast.seconds - 150.0).abs() < 1e-9);
        assert_eq!(format!("{:.1}", slow.hours()), "1.8");
        assert!((slow.hours() - 1.791_666_666).abs() < 1e-6);
        assert!(fast.minutes() < 3.0);
        let cmp = EfficiencyComparison::new(&slow, &fast, CLAIMED_EFFICIENCY);
        assert!((cmp.ratio - 43.0).abs() < 1e-9);
        assert!(cmp.to_string().contains("43x"));
        assert!(cmp.to_string().contains("+3.0x"));
    }

    #[test]
    fn zero_images() {
        assert_eq!(project_cost(2.0, 0).seconds, 0.0);
    }
}
