#pragma once

// Leading-order Computational Singular Perturbation diagnostics at a single
// state: the CSP basis is approximated by the right/left eigenvectors of the
// Jacobian, from which mode amplitudes and the amplitude participation (API),
// timescale participation (TPI) and pointer indices follow.
//
// Complex conjugate modes are reported through real parts. Before any index is
// evaluated each mode is rotated (alpha -> c alpha, beta -> beta / c with
// |c| = 1) so that its amplitude f = beta . g is real and non-negative; for
// real modes this is the usual sign flip.

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <limits>
#include <numeric>
#include <optional>
#include <string>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include "seinsrd/model.hpp"

namespace seinsrd {

using Complex = std::complex<double>;
using ComplexVector6 = Eigen::Matrix<Complex, 6, 1>;
using ComplexMatrix6 = Eigen::Matrix<Complex, 6, 6>;
using ModeByTransition = Eigen::Matrix<double, 6, 10>;

enum class ModeClass { explosive, dissipative, neutral };

inline const char* to_string(ModeClass c) {
    switch (c) {
        case ModeClass::explosive: return "explosive";
        case ModeClass::dissipative: return "dissipative";
        case ModeClass::neutral: return "neutral";
    }
    return "neutral";
}

struct CspOptions {
    double eps_explosive = 1e-10;         ///< 1/day; |Re(lambda)| below this is neutral
    double condition_threshold = 1e10;    ///< right-eigenvector matrix condition number limit
};

struct EigenAnalysis {
    ComplexVector6 eigenvalues = ComplexVector6::Zero();
    ComplexMatrix6 right = ComplexMatrix6::Identity();  ///< column n is alpha_n
    ComplexMatrix6 left = ComplexMatrix6::Identity();   ///< row n is beta^n
    std::array<double, 6> timescales{};                 ///< days, 1/|lambda|, ascending
    std::array<ModeClass, 6> classification{};
    double condition_number = 1.0;
    double biorthonormality_error = 0.0;  ///< max |beta^i . alpha_j - delta_ij|
    bool degenerate = false;

    std::size_t explosive_count() const {
        return static_cast<std::size_t>(
            std::count(classification.begin(), classification.end(), ModeClass::explosive));
    }

    /// Explosive mode with the smallest timescale; the first of a conjugate pair.
    std::optional<std::size_t> fastest_explosive() const {
        for (std::size_t n = 0; n < 6; ++n)
            if (classification[n] == ModeClass::explosive) return n;
        return std::nullopt;
    }

    bool is_complex(std::size_t n) const { return eigenvalues[n].imag() != 0.0; }
};

/// Eigen-decomposition of a real 6x6 Jacobian with biorthonormal left vectors.
inline EigenAnalysis eigen_decompose(const Matrix6& jac, const CspOptions& opt = {}) {
    if (!jac.allFinite()) throw std::invalid_argument("Jacobian must be finite");
    Eigen::EigenSolver<Matrix6> solver(jac, true);
    if (solver.info() != Eigen::Success) throw std::runtime_error("eigen-decomposition did not converge");
    const ComplexVector6 lambda = solver.eigenvalues();
    const ComplexMatrix6 vectors = solver.eigenvectors();

    std::array<std::size_t, 6> order{};
    std::iota(order.begin(), order.end(), 0);
    auto tau_of = [](Complex l) {
        const double m = std::abs(l);
        return m > 0.0 ? 1.0 / m : std::numeric_limits<double>::infinity();
    };
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        const double ta = tau_of(lambda[a]);
        const double tb = tau_of(lambda[b]);
        if (ta != tb) return ta < tb;
        if (lambda[a].real() != lambda[b].real()) return lambda[a].real() > lambda[b].real();
        return lambda[a].imag() > lambda[b].imag();
    });

    EigenAnalysis out;
    for (std::size_t n = 0; n < 6; ++n) {
        out.eigenvalues[n] = lambda[order[n]];
        ComplexVector6 v = vectors.col(order[n]);
        // Deterministic phase: largest component real and positive.
        Eigen::Index imax = 0;
        v.cwiseAbs().maxCoeff(&imax);
        if (std::abs(v[imax]) > 0.0) v *= std::abs(v[imax]) / v[imax];
        out.right.col(n) = v;
    }
    // Exact conjugate symmetry within each complex pair.
    for (std::size_t n = 0; n + 1 < 6; ++n) {
        if (out.eigenvalues[n].imag() > 0.0 && out.eigenvalues[n + 1] == std::conj(out.eigenvalues[n])) {
            out.right.col(n + 1) = out.right.col(n).conjugate();
            ++n;
        }
    }
    for (std::size_t n = 0; n < 6; ++n) {
        out.timescales[n] = tau_of(out.eigenvalues[n]);
        const double re = out.eigenvalues[n].real();
        out.classification[n] = re > opt.eps_explosive    ? ModeClass::explosive
                                : re < -opt.eps_explosive ? ModeClass::dissipative
                                                          : ModeClass::neutral;
    }

    Eigen::JacobiSVD<Eigen::MatrixXcd> svd(out.right);
    const auto& sv = svd.singularValues();
    const double smin = sv[sv.size() - 1];
    out.condition_number = smin > 0.0 ? sv[0] / smin : std::numeric_limits<double>::infinity();
    out.degenerate = !(out.condition_number <= opt.condition_threshold);
    if (std::isfinite(out.condition_number)) {
        out.left = out.right.fullPivLu().inverse();
        out.biorthonormality_error = (out.left * out.right - ComplexMatrix6::Identity()).cwiseAbs().maxCoeff();
    } else {
        out.left.setConstant(Complex(std::numeric_limits<double>::quiet_NaN(), 0.0));
        out.biorthonormality_error = std::numeric_limits<double>::infinity();
    }
    return out;
}

/// Rotates every mode so that f^n = beta^n . g is real and non-negative.
inline void orient_modes(EigenAnalysis& a, const Vector6& g) {
    const ComplexVector6 f = a.left * g.cast<Complex>();
    for (std::size_t n = 0; n < 6; ++n) {
        const double mag = std::abs(f[n]);
        if (!(mag > 0.0)) continue;
        Complex c = f[n] / mag;
        if (!a.is_complex(n)) c = Complex(f[n].real() < 0.0 ? -1.0 : 1.0, 0.0);
        a.right.col(n) *= c;
        a.left.row(n) /= c;
    }
}

/// Per mode and transition: (beta^n . S_k) R^k, real part.
inline ModeByTransition amplitude_terms(const EigenAnalysis& a, const RateVector& rates,
                                        const StoichiometricMatrix& stoich) {
    const Eigen::Matrix<Complex, 6, 10> projected = a.left * stoich.cast<Complex>();
    ModeByTransition out;
    for (std::size_t n = 0; n < 6; ++n)
        for (std::size_t k = 0; k < kNumTransitions; ++k) out(n, k) = (projected(n, k) * rates.values[k]).real();
    return out;
}

/// f^n = sum_k (beta^n . S_k) R^k.
inline std::array<double, 6> mode_amplitudes(const EigenAnalysis& a, const RateVector& rates,
                                             const StoichiometricMatrix& stoich) {
    if (a.degenerate) throw std::domain_error("mode amplitudes undefined for a degenerate analysis");
    const ModeByTransition terms = amplitude_terms(a, rates, stoich);
    std::array<double, 6> f{};
    for (std::size_t n = 0; n < 6; ++n) f[n] = terms.row(n).sum();
    return f;
}

/// Row-normalized index plus a per-mode flag telling whether the row had a nonzero denominator.
struct ParticipationIndex {
    ModeByTransition values = ModeByTransition::Zero();
    std::array<bool, 6> active{};
};

namespace detail {

inline ParticipationIndex normalize_rows(const ModeByTransition& raw) {
    ParticipationIndex out;
    for (std::size_t n = 0; n < 6; ++n) {
        const double denom = raw.row(n).cwiseAbs().sum();
        out.active[n] = denom > 0.0 && std::isfinite(denom);
        if (out.active[n]) out.values.row(n) = raw.row(n) / denom;
    }
    return out;
}

}  // namespace detail

/// Amplitude participation index P^n_k.
inline ParticipationIndex compute_api(const EigenAnalysis& a, const RateVector& rates,
                                      const StoichiometricMatrix& stoich) {
    return detail::normalize_rows(amplitude_terms(a, rates, stoich));
}

struct TimescaleParticipation {
    ParticipationIndex index;            ///< J^n_k
    ModeByTransition contributions;      ///< c^n_k = Re(beta^n grad(S_k R^k) alpha_n); rows sum to Re(lambda_n)
};

inline TimescaleParticipation compute_tpi(const EigenAnalysis& a, const TransitionGradients& gradients) {
    if (a.degenerate) throw std::domain_error("TPI undefined for a degenerate analysis");
    TimescaleParticipation out;
    for (std::size_t k = 0; k < kNumTransitions; ++k) {
        const ComplexMatrix6 projected = a.left * gradients[k].cast<Complex>() * a.right;
        for (std::size_t n = 0; n < 6; ++n) out.contributions(n, k) = projected(n, n).real();
    }
    out.index = detail::normalize_rows(out.contributions);
    return out;
}

/// Pointer D(m, i) = Re(alpha^i_m beta^m_i); each row sums to one.
inline Matrix6 compute_pointer(const EigenAnalysis& a) {
    if (a.degenerate) throw std::domain_error("pointer undefined for a degenerate analysis");
    Matrix6 d;
    for (std::size_t m = 0; m < 6; ++m)
        for (std::size_t i = 0; i < 6; ++i) d(m, i) = (a.right(i, m) * a.left(m, i)).real();
    return d;
}

struct CspDiagnostics {
    bool reliable = false;  ///< false when the eigen-analysis was degenerate; indices are then zero
    std::array<double, 6> amplitudes{};
    ParticipationIndex api;
    TimescaleParticipation tpi{};
    Matrix6 pointer = Matrix6::Zero();
};

struct PointAnalysis {
    EigenAnalysis eigen;
    CspDiagnostics diagnostics;
};

/// Indices for an already decomposed (and possibly rescaled) analysis; orients modes first.
inline CspDiagnostics compute_diagnostics(EigenAnalysis& a, const StateVector& y, const ModelParams& p) {
    CspDiagnostics d;
    d.tpi.contributions.setZero();
    if (a.degenerate) return d;
    const RateVector rates = compute_rates(y, p);
    const StoichiometricMatrix stoich = stoichiometry(p.ss);
    orient_modes(a, stoich * rates.to_vector());
    d.reliable = true;
    d.amplitudes = mode_amplitudes(a, rates, stoich);
    d.api = compute_api(a, rates, stoich);
    d.tpi = compute_tpi(a, transition_gradients(y, p));
    d.pointer = compute_pointer(a);
    return d;
}

inline PointAnalysis analyze_point(const StateVector& y, const ModelParams& p, const CspOptions& opt = {}) {
    PointAnalysis out;
    out.eigen = eigen_decompose(jacobian(y, p), opt);
    out.diagnostics = compute_diagnostics(out.eigen, y, p);
    return out;
}

}  // namespace seinsrd
