//! Cross-checks the hand-written moment systems against an independent model:
//! the closed-loop linear Gaussian system on (x, p, G_x, G_p), whose
//! covariance obeys dΣ/dt = FΣ + ΣFᵀ + Q.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use filtered_feedback::analytics;
use filtered_feedback::moments::{self, MomentSystem};
use filtered_feedback::protocol::{ProtocolKind, ProtocolParams};

struct ClosedLoop {
    f: DMatrix<f64>,
    q: DMatrix<f64>,
    /// Filter dimension per channel.
    n: usize,
    tap: usize,
}

fn filter_matrices(kind: ProtocolKind, g: f64, o: f64) -> (DMatrix<f64>, Vec<f64>) {
    match kind {
        ProtocolKind::LowPass1 => (DMatrix::from_row_slice(1, 1, &[-g]), vec![g]),
        ProtocolKind::LowPass2 => (DMatrix::from_row_slice(2, 2, &[-g, 0.0, o, -o]), vec![g, 0.0]),
        ProtocolKind::LowPass3 => (
            DMatrix::from_row_slice(3, 3, &[-g, 0.0, 0.0, o, -o, 0.0, 0.0, o, -o]),
            vec![g, 0.0, 0.0],
        ),
        ProtocolKind::BandPass => (DMatrix::from_row_slice(2, 2, &[-g, -o, o, -g]), vec![g, 0.0]),
    }
}

/// Coordinates: 0 = x, 1 = p, 2..2+n = G_x, 2+n..2+2n = G_p.
fn closed_loop(p: &ProtocolParams) -> ClosedLoop {
    let (l, w, g) = (p.lambda, p.omega, p.gamma);
    let o = p.big_omega.unwrap_or(0.0);
    let (m, b) = filter_matrices(p.kind, g, o);
    let n = b.len();
    let tap = match p.kind {
        ProtocolKind::LowPass1 | ProtocolKind::BandPass => 0,
        ProtocolKind::LowPass2 => 1,
        ProtocolKind::LowPass3 => 2,
    };
    let d = 2 + 2 * n;
    let (gx, gp) = (2, 2 + n);
    let mut f = DMatrix::zeros(d, d);
    f[(0, 1)] = w;
    f[(0, gp + tap)] = -w;
    f[(1, 0)] = -w;
    f[(1, gx + tap)] = w;
    for i in 0..n {
        for j in 0..n {
            f[(gx + i, gx + j)] = m[(i, j)];
            f[(gp + i, gp + j)] = m[(i, j)];
        }
        f[(gx + i, 0)] = b[i];
        f[(gp + i, 1)] = b[i];
    }
    let mut q = DMatrix::zeros(d, d);
    q[(0, 0)] = l;
    q[(1, 1)] = l;
    for i in 0..n {
        for j in 0..n {
            q[(gx + i, gx + j)] = b[i] * b[j] / (4.0 * l);
            q[(gp + i, gp + j)] = b[i] * b[j] / (4.0 * l);
        }
    }
    ClosedLoop { f, q, n, tap }
}

fn lyapunov(f: &DMatrix<f64>, q: &DMatrix<f64>) -> DMatrix<f64> {
    let d = f.nrows();
    let eye = DMatrix::<f64>::identity(d, d);
    let k = eye.kronecker(f) + f.kronecker(&eye);
    let rhs = -DVector::from_column_slice(q.as_slice());
    let x = k.lu().solve(&rhs).expect("Lyapunov operator is invertible");
    let s = DMatrix::from_column_slice(d, d, x.as_slice());
    (&s + s.transpose()) * 0.5
}

/// Steady energy in units of ħω and the spectral abscissa of the closed loop.
///
/// Low-pass cascades have a neutral mode (shifting x and every G_x by the same
/// constant moves the trap with the particle); it is removed by passing to
/// coordinates relative to the tapped component.
fn oracle(p: &ProtocolParams) -> (f64, f64) {
    let cl = closed_loop(p);
    let d = cl.f.nrows();
    let (gx, gp) = (2, 2 + cl.n);
    if p.kind == ProtocolKind::BandPass {
        let s = lyapunov(&cl.f, &cl.q);
        let t = cl.tap;
        let e = 0.5
            * (s[(0, 0)] - 2.0 * s[(0, gx + t)] + s[(gx + t, gx + t)] + s[(1, 1)] - 2.0 * s[(1, gp + t)]
                + s[(gp + t, gp + t)]);
        let abscissa = cl.f.complex_eigenvalues().iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max);
        return (e, abscissa);
    }
    let mut t = DMatrix::<f64>::identity(d, d);
    for (q_idx, g0) in [(0, gx), (1, gp)] {
        let tap = g0 + cl.tap;
        t[(q_idx, tap)] -= 1.0;
        for i in 0..cl.n {
            t[(g0 + i, tap)] -= 1.0;
        }
    }
    let keep: Vec<usize> = (0..d).filter(|&i| i != gx + cl.tap && i != gp + cl.tap).collect();
    let mut sel = DMatrix::zeros(keep.len(), d);
    for (r, &c) in keep.iter().enumerate() {
        sel[(r, c)] = 1.0;
    }
    let f_red = &sel * &t * &cl.f * sel.transpose();
    let q_red = &sel * &t * &cl.q * t.transpose() * sel.transpose();
    let s = lyapunov(&f_red, &q_red);
    let abscissa = f_red.complex_eigenvalues().iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max);
    // x and p keep their positions 0 and 1 after dropping the taps.
    (0.5 * (s[(0, 0)] + s[(1, 1)]), abscissa)
}

fn draw(rng: &mut ChaCha8Rng, kind: ProtocolKind) -> ProtocolParams {
    let mut u = || 10f64.powf(rng.random_range(-1.0..1.0));
    let (l, w, g, o) = (u(), u(), u(), u());
    ProtocolParams::new(kind, l, w, g, kind.needs_big_omega().then_some(o)).unwrap()
}

#[test]
fn steady_energies_match_closed_loop_covariance() {
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    for kind in ProtocolKind::ALL {
        let mut compared = 0;
        for _ in 0..200 {
            let p = draw(&mut rng, kind);
            let (e_oracle, abscissa) = oracle(&p);
            if abscissa > -1e-6 {
                continue;
            }
            let ss = moments::steady_state(&moments::build(&p).unwrap()).unwrap();
            let rel = ((ss.energy_over_hw - e_oracle) / e_oracle).abs();
            assert!(rel < 1e-8, "{kind} {p:?}: moments {} vs oracle {e_oracle}", ss.energy_over_hw);
            compared += 1;
        }
        assert!(compared >= 50, "{kind}: only {compared} stable draws");
    }
}

#[test]
fn moment_stability_matches_closed_loop_stability() {
    let mut rng = ChaCha8Rng::seed_from_u64(202);
    let mut disagreements = 0;
    let mut checked = 0;
    for kind in [ProtocolKind::LowPass2, ProtocolKind::LowPass3, ProtocolKind::BandPass] {
        for _ in 0..300 {
            let p = draw(&mut rng, kind);
            let (_, abscissa) = oracle(&p);
            if abscissa.abs() < 1e-6 {
                continue;
            }
            let ss = moments::steady_state(&moments::build(&p).unwrap()).unwrap();
            checked += 1;
            if ss.stable != (abscissa < 0.0) {
                disagreements += 1;
            }
            // Moment eigenvalues are pairwise sums of closed-loop ones.
            assert!(
                (ss.spectral_abscissa() - 2.0 * abscissa).abs() < 1e-6 * (1.0 + abscissa.abs()),
                "{kind} {p:?}: {} vs 2×{abscissa}",
                ss.spectral_abscissa()
            );
        }
    }
    assert_eq!(disagreements, 0, "of {checked}");
}

/// A linear functional over the complex coordinates (0 = quantum, k = G_k).
type Combo = Vec<(usize, f64)>;

fn x_of(c: &Combo, n: usize) -> DVector<f64> {
    let mut v = DVector::zeros(2 + 2 * n);
    for &(j, w) in c {
        v[if j == 0 { 0 } else { 1 + j }] += w;
    }
    v
}

fn p_of(c: &Combo, n: usize) -> DVector<f64> {
    let mut v = DVector::zeros(2 + 2 * n);
    for &(j, w) in c {
        v[if j == 0 { 1 } else { 1 + n + j }] += w;
    }
    v
}

#[derive(Clone)]
enum Label {
    /// `½ (⟨U_x²⟩ + ⟨U_p²⟩)`.
    Energy(Combo),
    /// `⟨U_x V_x⟩ + ⟨U_p V_p⟩`.
    Sym(Combo, Combo),
    /// `⟨U_x V_p⟩ − ⟨U_p V_x⟩`.
    Cross(Combo, Combo),
    /// `−(⟨U_x V_p⟩ − ⟨U_p V_x⟩)`.
    NegCross(Combo, Combo),
}

fn eval(label: &Label, s: &DMatrix<f64>, n: usize) -> f64 {
    let quad = |a: DVector<f64>, b: DVector<f64>| (a.transpose() * s * b)[(0, 0)];
    match label {
        Label::Energy(u) => 0.5 * (quad(x_of(u, n), x_of(u, n)) + quad(p_of(u, n), p_of(u, n))),
        Label::Sym(u, v) => quad(x_of(u, n), x_of(v, n)) + quad(p_of(u, n), p_of(v, n)),
        Label::Cross(u, v) => quad(x_of(u, n), p_of(v, n)) - quad(p_of(u, n), x_of(v, n)),
        Label::NegCross(u, v) => -(quad(x_of(u, n), p_of(v, n)) - quad(p_of(u, n), x_of(v, n))),
    }
}

fn diff(a: usize, b: usize) -> Combo {
    vec![(a, 1.0), (b, -1.0)]
}

fn single(a: usize) -> Combo {
    vec![(a, 1.0)]
}

fn labels_for(kind: ProtocolKind) -> Vec<Label> {
    use Label::*;
    match kind {
        ProtocolKind::LowPass1 => vec![Energy(diff(0, 1))],
        ProtocolKind::LowPass2 => vec![
            Energy(diff(0, 2)),
            Sym(diff(0, 2), diff(1, 2)),
            Sym(diff(1, 2), diff(1, 2)),
            Cross(diff(0, 2), diff(1, 2)),
        ],
        ProtocolKind::LowPass3 => vec![
            Energy(diff(0, 3)),
            Sym(diff(0, 3), diff(2, 3)),
            NegCross(diff(0, 3), diff(2, 3)),
            Sym(diff(2, 3), diff(2, 3)),
            Sym(diff(0, 3), diff(1, 2)),
            NegCross(diff(0, 3), diff(1, 2)),
            Sym(diff(1, 2), diff(2, 3)),
            NegCross(diff(2, 3), diff(1, 2)),
            Sym(diff(1, 2), diff(1, 2)),
        ],
        ProtocolKind::BandPass => vec![
            Energy(diff(0, 1)),
            Sym(diff(0, 1), single(2)),
            Cross(diff(0, 1), single(2)),
            Sym(single(2), single(2)),
            Sym(diff(0, 1), single(1)),
            Cross(diff(0, 1), single(1)),
            Sym(single(1), single(2)),
            Cross(single(2), single(1)),
            Sym(single(1), single(1)),
        ],
    }
}

/// Random covariance invariant under phase-space rotations of every
/// (x-like, p-like) pair, built from a Hermitian positive matrix.
fn rotation_invariant_cov(rng: &mut ChaCha8Rng, n: usize) -> DMatrix<f64> {
    let k = n + 1;
    let mut re = DMatrix::<f64>::zeros(k, k);
    let mut im = DMatrix::<f64>::zeros(k, k);
    let b_re = DMatrix::<f64>::from_fn(k, k, |_, _| rng.random_range(-1.0..1.0));
    let b_im = DMatrix::<f64>::from_fn(k, k, |_, _| rng.random_range(-1.0..1.0));
    // H = B B† + I
    for a in 0..k {
        for c in 0..k {
            let mut sr = if a == c { 1.0 } else { 0.0 };
            let mut si = 0.0;
            for m in 0..k {
                sr += b_re[(a, m)] * b_re[(c, m)] + b_im[(a, m)] * b_im[(c, m)];
                si += b_im[(a, m)] * b_re[(c, m)] - b_re[(a, m)] * b_im[(c, m)];
            }
            re[(a, c)] = sr;
            im[(a, c)] = si;
        }
    }
    let xi = |j: usize| if j == 0 { 0 } else { 1 + j };
    let pi = |j: usize| if j == 0 { 1 } else { 1 + n + j };
    let mut s = DMatrix::zeros(2 + 2 * n, 2 + 2 * n);
    for a in 0..k {
        for c in 0..k {
            s[(xi(a), xi(c))] = re[(a, c)] / 2.0;
            s[(pi(a), pi(c))] = re[(a, c)] / 2.0;
            s[(xi(a), pi(c))] = im[(a, c)] / 2.0;
            s[(pi(a), xi(c))] = -im[(a, c)] / 2.0;
        }
    }
    s
}

fn check_transcription(sys: &MomentSystem, p: &ProtocolParams, rng: &mut ChaCha8Rng) {
    let cl = closed_loop(p);
    let labels = labels_for(p.kind);
    assert_eq!(labels.len(), sys.dim());
    for _ in 0..5 {
        let s = rotation_invariant_cov(rng, cl.n);
        let ds = &cl.f * &s + &s * cl.f.transpose() + &cl.q;
        let x: Vec<f64> = labels.iter().map(|l| eval(l, &s, cl.n)).collect();
        let dx_true: Vec<f64> = labels.iter().map(|l| eval(l, &ds, cl.n)).collect();
        let dx_sys = sys.rate(&x);
        let scale = dx_true.iter().fold(1.0_f64, |m, v| m.max(v.abs()));
        for (i, (a, b)) in dx_sys.iter().zip(&dx_true).enumerate() {
            assert!(
                (a - b).abs() < 1e-10 * scale,
                "{} row {} ({}): system {a} vs dynamics {b}",
                p.kind,
                i + 1,
                sys.labels()[i]
            );
        }
    }
}

#[test]
fn transcribed_systems_reproduce_covariance_dynamics() {
    let mut rng = ChaCha8Rng::seed_from_u64(303);
    for kind in ProtocolKind::ALL {
        for _ in 0..20 {
            let p = draw(&mut rng, kind);
            let sys = moments::build(&p).unwrap();
            check_transcription(&sys, &p, &mut rng);
        }
    }
}

#[test]
fn closed_forms_match_oracle_at_reference_points() {
    let pts = [
        (ProtocolKind::LowPass2, 1.0, 1.0, 2.0, Some(2.0), 0.78125),
        (ProtocolKind::BandPass, 1.0, 1.0, 1.0, Some(0.5), 0.765625),
        (ProtocolKind::LowPass1, 1.0, 1.0, 2.0, None, 0.5),
    ];
    for (kind, l, w, g, o, expected) in pts {
        let p = ProtocolParams::new(kind, l, w, g, o).unwrap();
        let (e, _) = oracle(&p);
        assert!((e - expected).abs() < 1e-12, "{kind}: {e}");
        assert!((analytics::energy(&p).unwrap().energy_over_hw - expected).abs() < 1e-13);
    }
}
