//! Diagonalization, product-state labelling and transition classification.
//!
//! Eigenstates of the joint Hamiltonian are labelled by their dominant
//! overlap with decoupled product states `|transmon m> x |spin s>`, where
//! the transmon levels are computed with the spin-dependent junction term
//! switched off and the spin states diagonalize the Zeeman block. The
//! squared overlap of the assigned product state doubles as a confidence:
//! near hybridization points it drops towards 1/2 and the competing label
//! is reported alongside.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use thiserror::Error;

use crate::circuit::{build_joint_hamiltonian, BasisSpec, CircuitParams, ModelError};

/// Errors raised by the spectral routines.
#[derive(Debug, Error)]
pub enum SpectrumError {
    /// Parameter or assembly failure underneath.
    #[error(transparent)]
    Model(#[from] ModelError),
    /// The matrix was empty or not square.
    #[error("expected a square non-empty matrix, got {rows} x {cols}")]
    BadShape { rows: usize, cols: usize },
    /// An eigenpair failed the residual bound; the matrix is likely not
    /// Hermitian or contains non-finite entries.
    #[error("eigenpair residual {residual:.3e} exceeds {bound:.3e}")]
    ResidualTooLarge { residual: f64, bound: f64 },
    /// A state index was out of range for the solution.
    #[error("state index {index} out of range for {len} states")]
    StateOutOfRange { index: usize, len: usize },
}

/// Spin component of a product-state label.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Spin {
    /// Lower Zeeman level.
    Down,
    /// Upper Zeeman level.
    Up,
}

impl Spin {
    /// Short lowercase name, `"down"` or `"up"`.
    pub fn name(self) -> &'static str {
        match self {
            Spin::Down => "down",
            Spin::Up => "up",
        }
    }
}

impl std::fmt::Display for Spin {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Product-state label of one eigenstate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StateLabel {
    /// Transmon excitation number of the dominant product state.
    pub transmon_index: usize,
    /// Spin component of the dominant product state.
    pub spin: Spin,
    /// Squared overlap with that product state, in `[0, 1]`.
    pub confidence: f64,
    /// Runner-up label, reported when the assignment is ambiguous
    /// (confidence below 0.55).
    pub alternate: Option<(usize, Spin)>,
}

impl StateLabel {
    /// True when the dominant overlap does not clearly win.
    pub fn is_ambiguous(&self) -> bool {
        self.confidence < 0.55
    }
}

/// Lowest part of the spectrum with labelled eigenstates.
#[derive(Debug, Clone)]
pub struct EigenSolution {
    /// Eigenvalues in ascending order (GHz).
    pub energies: Vec<f64>,
    /// Matching eigenvectors as columns, orthonormal, with the largest
    /// component of each rotated to the positive real axis.
    pub states: DMatrix<Complex64>,
    /// Product-state labels, one per column of `states`.
    pub labels: Vec<StateLabel>,
}

impl EigenSolution {
    /// Number of retained states.
    pub fn len(&self) -> usize {
        self.energies.len()
    }

    /// True when no states were retained.
    pub fn is_empty(&self) -> bool {
        self.energies.is_empty()
    }

    /// Index of the lowest state labelled `(transmon_index, spin)`.
    pub fn find(&self, transmon_index: usize, spin: Spin) -> Option<usize> {
        self.labels.iter().position(|l| l.transmon_index == transmon_index && l.spin == spin)
    }

    /// Transition frequency `E_to - E_from` in GHz.
    pub fn frequency(&self, from: usize, to: usize) -> Option<f64> {
        Some(self.energies.get(to)? - self.energies.get(from)?)
    }
}

/// Returns the `k` lowest eigenpairs of a Hermitian matrix.
///
/// Eigenvalues are ascending; eigenvectors are orthonormal and
/// phase-fixed. Every returned pair satisfies
/// `|H v - e v| <= 1e-8 |H|_F`, otherwise an error is raised.
pub fn diagonalize(
    h: &DMatrix<Complex64>,
    k: usize,
) -> Result<(Vec<f64>, DMatrix<Complex64>), SpectrumError> {
    if h.nrows() == 0 || h.nrows() != h.ncols() {
        return Err(SpectrumError::BadShape { rows: h.nrows(), cols: h.ncols() });
    }
    let dim = h.nrows();
    let keep = k.min(dim);

    let eig = h.clone().symmetric_eigen();
    let mut order: Vec<usize> = (0..dim).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));

    let mut energies = Vec::with_capacity(keep);
    let mut states = DMatrix::<Complex64>::zeros(dim, keep);
    for (col, &src) in order.iter().take(keep).enumerate() {
        energies.push(eig.eigenvalues[src]);
        let mut v: DVector<Complex64> = eig.eigenvectors.column(src).into_owned();
        fix_phase(&mut v);
        states.set_column(col, &v);
    }

    let h_norm = h.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    let bound = 1e-8 * h_norm.max(1.0);
    for (col, &energy) in energies.iter().enumerate().take(keep) {
        let v = states.column(col);
        let residual = (h * v - v * Complex64::new(energy, 0.0)).norm();
        if residual.is_nan() || residual > bound {
            return Err(SpectrumError::ResidualTooLarge { residual, bound });
        }
    }
    Ok((energies, states))
}

/// Rotates the vector so its largest-magnitude component is real positive.
fn fix_phase(v: &mut DVector<Complex64>) {
    let mut best = 0usize;
    let mut best_norm = 0.0f64;
    for (i, z) in v.iter().enumerate() {
        let n = z.norm_sqr();
        if n > best_norm {
            best_norm = n;
            best = i;
        }
    }
    if best_norm > 0.0 {
        let phase = v[best] / v[best].norm();
        let rot = phase.conj();
        for z in v.iter_mut() {
            *z *= rot;
        }
    }
}

/// Diagonalizes the joint Hamiltonian of a circuit and labels the states.
pub fn solve_circuit(
    params: &CircuitParams,
    basis: &BasisSpec,
    k: usize,
) -> Result<EigenSolution, SpectrumError> {
    let h = build_joint_hamiltonian(params, basis)?;
    let (energies, states) = diagonalize(&h, k)?;
    let labels = label_states(&states, params, basis)?;
    Ok(EigenSolution { energies, states, labels })
}

/// Labels eigenstates by maximal overlap with decoupled product states.
///
/// Labels are assigned greedily over descending squared overlap so that no
/// two states share one. Enough transmon levels are considered to cover
/// all requested states with margin.
pub fn label_states(
    states: &DMatrix<Complex64>,
    params: &CircuitParams,
    basis: &BasisSpec,
) -> Result<Vec<StateLabel>, SpectrumError> {
    let dim = basis.dim()?;
    if states.nrows() != dim {
        return Err(SpectrumError::BadShape { rows: states.nrows(), cols: states.ncols() });
    }
    let k = states.ncols();
    if k == 0 {
        return Ok(Vec::new());
    }

    // Transmon levels with the spin-dependent term off, in the same gauge.
    let n_transmon = (k / 2 + 3).min(basis.charge_dim());
    let transmon = transmon_levels(params, basis, n_transmon)?;
    let spin_basis = spin_pair(&params.zeeman);

    // Squared overlaps of every eigenstate with every product state.
    let n_labels = 2 * n_transmon;
    let mut overlap = vec![vec![0.0f64; n_labels]; k];
    for (label, row) in product_labels(n_transmon).iter().enumerate() {
        let (m, spin) = *row;
        let spinor = match spin {
            Spin::Up => spin_basis.0,
            Spin::Down => spin_basis.1,
        };
        for (col, over) in overlap.iter_mut().enumerate() {
            let mut amp = Complex64::new(0.0, 0.0);
            for (i, t) in transmon.column(m).iter().enumerate() {
                // <product| state> = sum_i conj(t_i s_c) psi_(2i+c)
                amp += t.conj()
                    * (spinor[0].conj() * states[(2 * i, col)]
                        + spinor[1].conj() * states[(2 * i + 1, col)]);
            }
            over[label] = amp.norm_sqr();
        }
    }

    // Greedy one-to-one assignment over descending overlap.
    let mut pairs: Vec<(usize, usize, f64)> = Vec::with_capacity(k * n_labels);
    for (col, over) in overlap.iter().enumerate() {
        for (label, &o) in over.iter().enumerate() {
            pairs.push((col, label, o));
        }
    }
    pairs.sort_by(|a, b| b.2.total_cmp(&a.2).then(a.0.cmp(&b.0)).then(a.1.cmp(&b.1)));

    let rows = product_labels(n_transmon);
    let mut assigned: Vec<Option<(usize, f64)>> = vec![None; k];
    let mut used = vec![false; n_labels];
    let mut remaining = k;
    for (col, label, o) in pairs {
        if remaining == 0 {
            break;
        }
        if assigned[col].is_none() && !used[label] {
            assigned[col] = Some((label, o));
            used[label] = true;
            remaining -= 1;
        }
    }

    let labels = assigned
        .iter()
        .enumerate()
        .map(|(col, slot)| {
            let (label, confidence) = slot.expect("every state receives a label");
            let (transmon_index, spin) = rows[label];
            let alternate = if confidence < 0.55 {
                overlap[col]
                    .iter()
                    .enumerate()
                    .filter(|&(l, _)| l != label)
                    .max_by(|a, b| a.1.total_cmp(b.1))
                    .map(|(l, _)| rows[l])
            } else {
                None
            };
            StateLabel { transmon_index, spin, confidence, alternate }
        })
        .collect();
    Ok(labels)
}

/// Product labels in the fixed order `(0,down),(0,up),(1,down),...`.
fn product_labels(n_transmon: usize) -> Vec<(usize, Spin)> {
    (0..n_transmon).flat_map(|m| [(m, Spin::Down), (m, Spin::Up)]).collect()
}

/// Lowest transmon eigenvectors of the spin-independent circuit part.
fn transmon_levels(
    params: &CircuitParams,
    basis: &BasisSpec,
    k: usize,
) -> Result<DMatrix<Complex64>, SpectrumError> {
    let spinless =
        CircuitParams { e_so: 0.0, zeeman: crate::circuit::ZeemanField::zero(), ..*params };
    let h = build_joint_hamiltonian(&spinless, basis)?;
    // With the spin sector fully decoupled the joint matrix is block
    // diagonal; extract the charge-space block from the spin-up rows.
    let n = basis.charge_dim();
    let mut hc = DMatrix::<Complex64>::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            hc[(i, j)] = h[(2 * i, 2 * j)];
        }
    }
    let (_, states) = diagonalize(&hc, k)?;
    Ok(states)
}

/// Zeeman eigenspinors `(up, down)` for labelling.
///
/// At zero field the Zeeman block vanishes and any orthonormal pair is an
/// eigenbasis; the junction spin-flip axis is used so labels stay
/// deterministic.
fn spin_pair(zeeman: &crate::circuit::ZeemanField) -> ([Complex64; 2], [Complex64; 2]) {
    if zeeman.magnitude > 0.0 {
        let (half_sin, half_cos) = (0.5 * zeeman.theta).sin_cos();
        (
            [Complex64::new(half_cos, 0.0), Complex64::new(half_sin, 0.0)],
            [Complex64::new(-half_sin, 0.0), Complex64::new(half_cos, 0.0)],
        )
    } else {
        let r = std::f64::consts::FRAC_1_SQRT_2;
        (
            [Complex64::new(r, 0.0), Complex64::new(r, 0.0)],
            [Complex64::new(r, 0.0), Complex64::new(-r, 0.0)],
        )
    }
}

/// Physical character of a transition between two labelled states.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TransitionKind {
    /// Transmon excitation by `steps` with the spin unchanged.
    Transmon { steps: usize },
    /// Spin flip at fixed transmon index.
    SpinFlip,
    /// Transmon excitation together with a spin raise.
    DoubleExcitation { steps: usize },
    /// Transmon excitation against a spin lowering (or vice versa).
    Swap { steps: usize },
    /// No quantum number changed; only possible between distinct states
    /// when labelling is ambiguous.
    Identity,
}

impl TransitionKind {
    /// Canonical lowercase tag used in serialized output.
    pub fn tag(&self) -> String {
        match self {
            TransitionKind::Transmon { steps: 1 } => "transmon".into(),
            TransitionKind::Transmon { steps } => format!("transmon_{steps}"),
            TransitionKind::SpinFlip => "spin_flip".into(),
            TransitionKind::DoubleExcitation { steps: 1 } => "double_excitation".into(),
            TransitionKind::DoubleExcitation { steps } => format!("double_excitation_{steps}"),
            TransitionKind::Swap { steps: 1 } => "swap".into(),
            TransitionKind::Swap { steps } => format!("swap_{steps}"),
            TransitionKind::Identity => "identity".into(),
        }
    }
}

/// One classified transition out of a reference state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Transition {
    /// Index of the initial state in the solution.
    pub from: usize,
    /// Index of the final state in the solution.
    pub to: usize,
    /// Label of the initial state.
    pub from_label: (usize, Spin),
    /// Label of the final state.
    pub to_label: (usize, Spin),
    /// `E_to - E_from` in GHz.
    pub frequency: f64,
    /// Classified character.
    pub kind: TransitionKind,
    /// Smaller of the two endpoint confidences.
    pub confidence: f64,
}

/// Classifies all transitions out of `from` towards higher-index states.
pub fn transitions(
    solution: &EigenSolution,
    from: usize,
) -> Result<Vec<Transition>, SpectrumError> {
    let len = solution.len();
    if from >= len {
        return Err(SpectrumError::StateOutOfRange { index: from, len });
    }
    let lf = solution.labels[from];
    let mut out = Vec::with_capacity(len.saturating_sub(from + 1));
    for to in from + 1..len {
        let lt = solution.labels[to];
        out.push(Transition {
            from,
            to,
            from_label: (lf.transmon_index, lf.spin),
            to_label: (lt.transmon_index, lt.spin),
            frequency: solution.energies[to] - solution.energies[from],
            kind: classify((lf.transmon_index, lf.spin), (lt.transmon_index, lt.spin)),
            confidence: lf.confidence.min(lt.confidence),
        });
    }
    Ok(out)
}

/// Classifies a transition from its endpoint labels.
pub fn classify(from: (usize, Spin), to: (usize, Spin)) -> TransitionKind {
    let steps = to.0.abs_diff(from.0);
    match (steps, from.1, to.1) {
        (0, a, b) if a == b => TransitionKind::Identity,
        (0, _, _) => TransitionKind::SpinFlip,
        (s, a, b) if a == b => TransitionKind::Transmon { steps: s },
        (s, Spin::Down, Spin::Up) if to.0 > from.0 => TransitionKind::DoubleExcitation { steps: s },
        (s, Spin::Up, Spin::Down) if to.0 < from.0 => TransitionKind::DoubleExcitation { steps: s },
        (s, _, _) => TransitionKind::Swap { steps: s },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::{Gauge, ZeemanField};
    use approx::assert_abs_diff_eq;

    fn demo_params() -> CircuitParams {
        CircuitParams::reference_device()
            .with_zeeman(ZeemanField { magnitude: 4.0, theta: 0.62 })
            .with_phi_ext(1.0)
    }

    #[test]
    fn eigenvectors_are_orthonormal_and_accurate() {
        let basis = BasisSpec { n_charge: 20, gauge: Gauge::FluxOnDot };
        let h = build_joint_hamiltonian(&demo_params(), &basis).unwrap();
        let (energies, states) = diagonalize(&h, 10).unwrap();
        assert!(energies.windows(2).all(|w| w[0] <= w[1]));
        let gram = states.adjoint() * &states;
        for i in 0..gram.nrows() {
            for j in 0..gram.ncols() {
                let expect = if i == j { 1.0 } else { 0.0 };
                assert_abs_diff_eq!(gram[(i, j)].norm(), expect, epsilon = 1e-10);
            }
        }
    }

    #[test]
    fn phase_fixing_makes_largest_component_real() {
        let basis = BasisSpec { n_charge: 12, gauge: Gauge::FluxOnDot };
        let h = build_joint_hamiltonian(&demo_params(), &basis).unwrap();
        let (_, states) = diagonalize(&h, 6).unwrap();
        for col in 0..states.ncols() {
            let v = states.column(col);
            let largest = v.iter().max_by(|a, b| a.norm_sqr().total_cmp(&b.norm_sqr())).unwrap();
            assert!(largest.im.abs() < 1e-12 && largest.re > 0.0);
        }
    }

    #[test]
    fn decoupled_spectrum_gets_unit_confidence_labels() {
        // Without the spin-dependent term the eigenstates are exact
        // products, so every label should be unambiguous.
        let params = CircuitParams { e_so: 0.0, ..CircuitParams::reference_device() }
            .with_zeeman(ZeemanField { magnitude: 2.0, theta: 0.3 });
        let basis = BasisSpec::default();
        let sol = solve_circuit(&params, &basis, 6).unwrap();
        for label in &sol.labels {
            assert!(label.confidence > 1.0 - 1e-9, "confidence {}", label.confidence);
            assert!(label.alternate.is_none());
        }
        // Ground pair: spin down then spin up, one transmon quantum apart.
        assert_eq!((sol.labels[0].transmon_index, sol.labels[0].spin), (0, Spin::Down));
        assert_eq!((sol.labels[1].transmon_index, sol.labels[1].spin), (0, Spin::Up));
        assert_abs_diff_eq!(sol.energies[1] - sol.energies[0], 2.0, epsilon = 1e-9);
    }

    #[test]
    fn labels_partition_states_one_to_one() {
        let basis = BasisSpec::default();
        let sol = solve_circuit(&demo_params(), &basis, 8).unwrap();
        let mut seen = std::collections::HashSet::new();
        for l in &sol.labels {
            assert!(seen.insert((l.transmon_index, l.spin)), "duplicate label {l:?}");
            assert!((0.0..=1.0 + 1e-12).contains(&l.confidence));
        }
    }

    #[test]
    fn transition_classification_covers_the_canonical_set() {
        assert_eq!(
            classify((0, Spin::Down), (1, Spin::Down)),
            TransitionKind::Transmon { steps: 1 }
        );
        assert_eq!(classify((0, Spin::Down), (0, Spin::Up)), TransitionKind::SpinFlip);
        assert_eq!(
            classify((0, Spin::Down), (1, Spin::Up)),
            TransitionKind::DoubleExcitation { steps: 1 }
        );
        assert_eq!(classify((0, Spin::Up), (1, Spin::Down)), TransitionKind::Swap { steps: 1 });
        assert_eq!(
            classify((0, Spin::Down), (2, Spin::Down)),
            TransitionKind::Transmon { steps: 2 }
        );
    }

    #[test]
    fn out_of_range_state_is_rejected() {
        let basis = BasisSpec { n_charge: 10, gauge: Gauge::FluxOnDot };
        let sol = solve_circuit(&demo_params(), &basis, 4).unwrap();
        assert!(matches!(transitions(&sol, 4), Err(SpectrumError::StateOutOfRange { .. })));
    }
}
