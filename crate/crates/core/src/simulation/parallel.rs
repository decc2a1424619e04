use super::Execution;

/// `(0..len).map(task)` with results in index order whatever the schedule.
pub(crate) fn ordered_map<T, F>(len: usize, exec: Execution, task: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    match exec {
        #[cfg(feature = "parallel")]
        Execution::Parallel => {
            use rayon::prelude::*;
            (0..len).into_par_iter().map(task).collect()
        }
        #[cfg(not(feature = "parallel"))]
        Execution::Parallel => (0..len).map(task).collect(),
        Execution::Sequential => (0..len).map(task).collect(),
    }
}
