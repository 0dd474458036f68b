//! Gradient descent with Armijo backtracking over a flat parameter
//! vector, shared by the trainer and the convex linear-model solver.
//!
//! Three refinements keep the basic scheme usable on this crate's
//! objectives while preserving a monotone loss trace:
//!
//! - The backtracking starts from a spectral (Barzilai-Borwein) step
//!   computed from the last accepted move, rather than a fixed 1.0.
//!   Acceptance rules are unchanged, but the starting scale tracks
//!   local curvature, which removes the slow crawl of plain steepest
//!   descent through ill-conditioned valleys. The start is also floored
//!   at a multiple of the last accepted step: across a gradient
//!   discontinuity the spectral quotient collapses (its denominator
//!   sees the O(1) jump while its numerator scales with the step), and
//!   since backtracking only shrinks, an undersized start would feed on
//!   itself and pin the iteration at microscopic steps forever.
//! - Piecewise-smooth objectives (ReLU stacks) develop creases where
//!   the negative gradient of the current smooth piece ascends on the
//!   neighboring piece, jamming every backtracked step. When the sweep
//!   fails, the loop probes the gradient just across the crease and
//!   line-searches along the minimum-norm point of the segment between
//!   the two side gradients — a two-point model of the Clarke
//!   subdifferential whose negation descends on both pieces.
//! - Near a minimizer the per-step decrease drops below the
//!   floating-point resolution of the objective, so comparisons lose
//!   all signal. The loop then switches to a step ladder around the
//!   last step accepted while the sufficient-decrease test was still
//!   resolvable, keeping the candidate that shrinks the gradient norm
//!   the most: the gradient is the only signal still resolvable down
//!   here, and steps well above the certified scale are deliberately
//!   included because once the stiff curvature modes have converged the
//!   leftover gradient lives in weak modes whose useful step is far
//!   larger. In that regime the measured value can wobble upward by
//!   single ulps even though the true value falls, so the recorded
//!   trace is non-increasing up to the per-value rounding noise
//!   8·eps·(1+|f|) and exactly non-increasing while decreases are
//!   still resolvable.

use crate::error::Result;
use crate::scalar::Scalar;

/// Geometric line-search shrink factor.
pub const ARMIJO_SHRINK: f64 = 0.5;
/// Sufficient-decrease slope factor.
pub const ARMIJO_SLOPE: f64 = 1e-4;
/// Halvings below the certified step tried per below-floor iteration.
const FINE_SCAN: usize = 40;
/// Doublings above the certified step tried per below-floor iteration;
/// reaches the useful step of curvature modes ~1e7 times weaker than
/// the stiffest one.
const FINE_REACH: usize = 24;
/// Clamp range for the spectral starting step.
const BB_STEP_MIN: f64 = 1e-10;
const BB_STEP_MAX: f64 = 1e6;
/// Growth factor on the last accepted step when flooring the next
/// starting step.
const STEP_GROWTH: f64 = 4.0;
/// Ray parameter for the cross-crease gradient probe; small enough to
/// stay microscopic next to any accepted step, large enough to move the
/// iterate bitwise when the gradient is of ordinary size.
const CREASE_PROBE: f64 = 9.094947017729282e-13; // 2^-40

/// One recorded iteration: (iteration index, objective, gradient norm).
pub type TraceEntry<T> = (usize, T, T);

#[derive(Debug, Clone)]
pub struct DescentOutcome<T> {
    pub x: Vec<T>,
    pub value: T,
    pub grad_norm: T,
    pub iterations: usize,
    /// Gradient norm reached `grad_tol`; false means the iteration budget
    /// ran out or no numerically resolvable descent step remained.
    pub converged: bool,
    pub trace: Vec<TraceEntry<T>>,
}

/// Minimizes `fg` (value and gradient) from `x0` until the gradient norm
/// reaches `grad_tol` or `max_iter` steps were taken.
pub fn armijo_descent<T, FG>(
    fg: FG,
    x0: Vec<T>,
    grad_tol: T,
    max_iter: usize,
    record_trace: bool,
) -> Result<DescentOutcome<T>>
where
    T: Scalar,
    FG: Fn(&[T]) -> Result<(T, Vec<T>)>,
{
    let shrink = T::from_f64(ARMIJO_SHRINK);
    let slope = T::from_f64(ARMIJO_SLOPE);
    let min_step = T::from_f64(1e-18);

    let mut x = x0;
    let mut iterations = 0;
    let mut trace = Vec::new();
    let mut certified_step: Option<T> = None;
    let mut fine_hint: Option<T> = None;
    let mut last_step: Option<T> = None;
    let mut prev: Option<(Vec<T>, Vec<T>)> = None;

    loop {
        let (value, grad) = fg(&x)?;
        let gnorm2: T = grad.iter().map(|&g| g * g).sum();
        let gnorm = gnorm2.sqrt();
        if record_trace {
            trace.push((iterations, value, gnorm));
        }
        if gnorm <= grad_tol || iterations >= max_iter {
            return Ok(DescentOutcome {
                x,
                value,
                grad_norm: gnorm,
                iterations,
                converged: gnorm <= grad_tol,
                trace,
            });
        }

        // Spectral starting step from the last accepted move; positive
        // curvature along the move is required, otherwise fall back to 1.
        let bb_step = prev.as_ref().map_or(T::one(), |(px, pg)| {
            let mut sy = T::zero();
            let mut yy = T::zero();
            for i in 0..x.len() {
                let dx = x[i] - px[i];
                let dy = grad[i] - pg[i];
                sy = sy + dx * dy;
                yy = yy + dy * dy;
            }
            if sy > T::zero() && yy > T::zero() {
                (sy / yy).min(T::from_f64(BB_STEP_MAX)).max(T::from_f64(BB_STEP_MIN))
            } else {
                T::one()
            }
        });
        // Floor at a multiple of the last accepted step so the trial
        // step can grow back after the spectral quotient collapses at a
        // crease crossing; an oversized start only costs extra halvings.
        let start_step = match last_step {
            Some(s) => bb_step.max((s * T::from_f64(STEP_GROWTH)).min(T::from_f64(BB_STEP_MAX))),
            None => bb_step,
        };
        prev = Some((x.clone(), grad.clone()));

        let noise = T::from_f64(8.0) * T::epsilon() * (T::one() + value.abs());
        let ray_to = |s: T, from: &[T], dir: &[T]| -> Vec<T> {
            from.iter().zip(dir).map(|(&xi, &di)| xi - s * di).collect()
        };
        // Backtracking sweep from `from` along -dir with sufficient
        // decrease measured against dnorm2 = <grad, dir> (= ‖dir‖² for
        // dir = grad, and a lower bound on both pieces' descent rates for
        // the crease direction).
        let backtrack = |from: &[T],
                         dir: &[T],
                         dnorm2: T,
                         start: T,
                         certified: &mut Option<T>|
         -> Result<Option<(Vec<T>, T)>> {
            let mut step = start;
            loop {
                let cand = ray_to(step, from, dir);
                let (cv, cg) = fg(&cand)?;
                let required = slope * step * dnorm2;
                if cv <= value - required && (required >= noise || cv < value) {
                    // Remember the step for the below-floor phase only if
                    // it also contracted the gradient: with a spectral
                    // start, a step can satisfy sufficient decrease while
                    // amplifying the stiffest curvature mode, and reusing
                    // such a step where values can no longer arbitrate
                    // would cycle instead of converge.
                    let cg2: T = cg.iter().map(|&g| g * g).sum();
                    if required >= noise && cg2 <= gnorm2 {
                        *certified = Some(step);
                    }
                    return Ok(Some((cand, step)));
                }
                step = step * shrink;
                if step < min_step {
                    return Ok(None);
                }
            }
        };

        let mut moved = false;
        if let Some(s) = certified_step {
            if slope * s * gnorm2 < noise {
                // The predicted decrease is below the objective's rounding
                // floor, so sufficient-decrease comparisons carry no signal
                // and the measured value wobbles by an ulp between nearby
                // points. Scan a step ladder around the certified scale
                // and keep the candidate that shrinks the gradient norm
                // the most: the gradient is the only signal still
                // resolvable down here, and requiring strict contraction
                // rules out expansive moves that would otherwise let the
                // iterate orbit the minimizer on ulp-level wobble forever.
                // The value may still not rise past the wobble, which
                // would signal a genuine climb rather than rounding.
                let scan = |top: T, rounds: usize| -> Result<Option<(T, Vec<T>)>> {
                    let mut s_try = top;
                    let mut best: Option<(T, T, Vec<T>)> = None;
                    for _ in 0..rounds {
                        let cand = ray_to(s_try, &x, &grad);
                        let step = s_try;
                        s_try = s_try * shrink;
                        if cand == x {
                            // Rounds to no motion; smaller steps would too.
                            break;
                        }
                        let (cv, cg) = fg(&cand)?;
                        let cg2: T = cg.iter().map(|&g| g * g).sum();
                        if cv <= value + noise
                            && cg2 < gnorm2
                            && best.as_ref().is_none_or(|(b, _, _)| cg2 < *b)
                        {
                            best = Some((cg2, step, cand));
                        }
                    }
                    Ok(best.map(|(_, step, cand)| (step, cand)))
                };
                // Steady state: a short window around the last accepted
                // fine step. Full ladder only when the window misses;
                // steps above the certified scale are part of it because
                // once the stiff modes have converged the leftover
                // gradient lives in weak modes wanting far larger steps.
                let mut hit = match fine_hint {
                    Some(h) => scan(h / shrink / shrink, 5)?,
                    None => None,
                };
                if hit.is_none() {
                    let mut top = s;
                    for _ in 0..FINE_REACH {
                        top = top / shrink;
                    }
                    hit = scan(top, FINE_REACH + FINE_SCAN)?;
                }
                if let Some((step, cand)) = hit {
                    fine_hint = Some(step);
                    x = cand;
                    moved = true;
                }
            }
        }

        if !moved {
            if let Some((next, s)) = backtrack(&x, &grad, gnorm2, start_step, &mut certified_step)? {
                x = next;
                last_step = Some(s);
                moved = true;
            }
        }

        if !moved {
            // Every step along -grad failed: on a piecewise-smooth
            // objective the iterate is pinned against a crease where the
            // neighboring piece ascends along -grad. Take the gradient a
            // microscopic ray step across, and descend along the
            // minimum-norm point of the segment between both gradients,
            // which makes progress on either side of the crease.
            let probe = ray_to(T::from_f64(CREASE_PROBE), &x, &grad);
            if probe != x {
                let (_, g2) = fg(&probe)?;
                let mut diff2 = T::zero();
                let mut gdiff = T::zero();
                for i in 0..grad.len() {
                    let d = grad[i] - g2[i];
                    diff2 = diff2 + d * d;
                    gdiff = gdiff + grad[i] * d;
                }
                if diff2 > T::zero() {
                    let t = (gdiff / diff2).max(T::zero()).min(T::one());
                    let dir: Vec<T> = grad
                        .iter()
                        .zip(&g2)
                        .map(|(&a, &b)| (T::one() - t) * a + t * b)
                        .collect();
                    let dnorm2: T = grad.iter().zip(&dir).map(|(&a, &d)| a * d).sum();
                    if dnorm2 > T::zero() {
                        let mut unused = None;
                        if let Some((next, s)) = backtrack(&x, &dir, dnorm2, start_step, &mut unused)?
                        {
                            x = next;
                            last_step = Some(s);
                            moved = true;
                        }
                    }
                }
            }
        }

        if !moved {
            // No resolvable descent step left; stop where we stand.
            return Ok(DescentOutcome {
                x,
                value,
                grad_norm: gnorm,
                iterations,
                converged: false,
                trace,
            });
        }
        iterations += 1;
    }
}
