//! Reporting helpers for the acceptance run.

use std::fmt::Write;
use std::time::{Duration, Instant};

/// Decimal order of magnitude: `m` with `10^m <= |x| < 10^(m+1)`.
pub fn order_of_magnitude(x: f64) -> i32 {
    x.abs().log10().floor() as i32
}

/// One named sub-check with its measured detail.
#[derive(Debug, Clone)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

/// Outcome of one acceptance criterion.
#[derive(Debug, Default)]
pub struct Criterion {
    pub checks: Vec<Check>,
    pub elapsed: Duration,
    pub budget: Option<Duration>,
}

impl Criterion {
    pub fn check(&mut self, name: &str, pass: bool, detail: impl Into<String>) -> bool {
        self.checks.push(Check { name: name.into(), pass, detail: detail.into() });
        pass
    }

    pub fn pass(&self) -> bool {
        !self.checks.is_empty()
            && self.checks.iter().all(|c| c.pass)
            && self.budget.is_none_or(|b| self.elapsed <= b)
    }

    /// `criterion N: PASS|FAIL (t s / budget) - title`, then indented sub-checks.
    pub fn report(&self, number: usize, title: &str) -> String {
        let mut s = String::new();
        let budget = self.budget.map_or(String::new(), |b| format!(" / {:.0} s", b.as_secs_f64()));
        let _ = writeln!(
            s,
            "criterion {number}: {} ({:.2} s{budget}) - {title}",
            if self.pass() { "PASS" } else { "FAIL" },
            self.elapsed.as_secs_f64()
        );
        for c in &self.checks {
            let _ = writeln!(s, "    [{}] {}: {}", if c.pass { "ok" } else { "FAIL" }, c.name, c.detail);
        }
        if let Some(b) = self.budget {
            if self.elapsed > b {
                let _ = writeln!(s, "    [FAIL] runtime: {:.2} s exceeds {:.0} s", self.elapsed.as_secs_f64(), b.as_secs_f64());
            }
        }
        s
    }
}

/// Run `f` and time it; an error becomes a failed check.
pub fn run<E: std::fmt::Display>(budget: Option<Duration>, f: impl FnOnce(&mut Criterion) -> Result<(), E>) -> Criterion {
    let mut c = Criterion { budget, ..Default::default() };
    let start = Instant::now();
    if let Err(e) = f(&mut c) {
        c.check("error", false, e.to_string());
    }
    c.elapsed = start.elapsed();
    c
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn orders() {
        assert_eq!(order_of_magnitude(1.05e-2), -2);
        assert_eq!(order_of_magnitude(5.49e-2), -2);
        assert_eq!(order_of_magnitude(9.9e-4), -4);
        assert_eq!(order_of_magnitude(1e-3), -3);
        assert_eq!(order_of_magnitude(-3.0), 0);
    }

    #[test]
    fn verdicts() {
        let c = run::<String>(None, |c| {
            c.check("a", true, "");
            Ok(())
        });
        assert!(c.pass());
        assert!(c.report(1, "t").starts_with("criterion 1: PASS"));
        let c = run(None, |_| Err("boom"));
        assert!(!c.pass());
        assert!(c.report(2, "t").contains("[FAIL] error: boom"));
        let empty = run::<String>(None, |_| Ok(()));
        assert!(!empty.pass());
    }

    #[test]
    fn over_budget_fails() {
        let mut c = run::<String>(Some(Duration::ZERO), |c| {
            c.check("a", true, "");
            Ok(())
        });
        c.elapsed = Duration::from_millis(1);
        assert!(!c.pass());
    }
}
