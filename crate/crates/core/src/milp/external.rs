use std::path::Path;
use std::process::Command;
use std::sync::atomic::{AtomicUsize, Ordering};

use super::lp_format::{export_lp, import_solution};
use super::{MilpError, MilpModel, MilpSolution, SolveStatus};

static CALLS: AtomicUsize = AtomicUsize::new(0);

/// Marker line an external wrapper writes to report a proven-infeasible model.
pub const INFEASIBLE_MARKER: &str = "# status: infeasible";

pub(super) fn solve_external(exe: &Path, model: &MilpModel) -> Result<MilpSolution, MilpError> {
    let dir = std::env::temp_dir().join(format!(
        "fairmio-{}-{}",
        std::process::id(),
        CALLS.fetch_add(1, Ordering::Relaxed)
    ));
    std::fs::create_dir_all(&dir)?;
    let result = run(exe, model, &dir);
    let _ = std::fs::remove_dir_all(&dir);
    result
}

fn run(exe: &Path, model: &MilpModel, dir: &Path) -> Result<MilpSolution, MilpError> {
    let lp = dir.join("model.lp");
    let sol = dir.join("model.sol");
    export_lp(model, &lp)?;
    let status = Command::new(exe)
        .arg(&lp)
        .arg(&sol)
        .status()
        .map_err(|e| MilpError::External(format!("cannot run {}: {e}", exe.display())))?;
    if !status.success() {
        return Err(MilpError::External(format!("{} exited with {status}", exe.display())));
    }
    let text = std::fs::read_to_string(&sol)
        .map_err(|e| MilpError::External(format!("no solution file: {e}")))?;
    if text.lines().any(|l| l.trim() == INFEASIBLE_MARKER) {
        return Ok(MilpSolution {
            status: SolveStatus::Infeasible,
            values: Vec::new(),
            objective_value: None,
            best_bound: f64::NAN,
            nodes: 0,
            warm_start_objective: None,
        });
    }
    import_solution(model, &sol)
}
