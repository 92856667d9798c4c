#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TemperatureSchedule {
    pub start: f64,
    pub end: f64,
    /// Fraction of training over which the temperature falls linearly.
    pub anneal_fraction: f64,
}

impl Default for TemperatureSchedule {
    fn default() -> Self {
        TemperatureSchedule { start: 5.0, end: 1.0, anneal_fraction: 0.5 }
    }
}

impl TemperatureSchedule {
    pub fn is_valid(&self) -> bool {
        self.end > 0.0 && self.start >= self.end && self.anneal_fraction >= 0.0
    }

    /// Temperature at `episode` out of `total` episodes.
    pub fn anneal(&self, episode: usize, total: usize) -> f64 {
        let span = self.anneal_fraction * total as f64;
        if span <= 0.0 || episode as f64 >= span {
            return self.end;
        }
        let frac = episode as f64 / span;
        self.start + (self.end - self.start) * frac
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn schedule_points() {
        let s = TemperatureSchedule::default();
        assert_eq!(s.anneal(0, 1000), 5.0);
        assert_eq!(s.anneal(500, 1000), 1.0);
        assert_eq!(s.anneal(900, 1000), 1.0);
        assert_eq!(s.anneal(125, 1000), 4.0);
        assert_eq!(s.anneal(250, 1000), 3.0);
    }

    #[test]
    fn monotone_non_increasing() {
        let s = TemperatureSchedule::default();
        let taus: Vec<f64> = (0..=200).map(|e| s.anneal(e, 200)).collect();
        assert!(taus.windows(2).all(|w| w[1] <= w[0]));
    }
}
