#pragma once

// SEInsRD compartmental model: state, parameters, the ten transition rates,
// stoichiometry, vector field and analytic Jacobian.

#include <array>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace seinsrd {

inline constexpr std::size_t kNumCompartments = 6;
inline constexpr std::size_t kNumTransitions = 10;

using Vector6 = Eigen::Matrix<double, 6, 1>;
using Matrix6 = Eigen::Matrix<double, 6, 6>;
using StoichiometricMatrix = Eigen::Matrix<double, 6, 10>;

/// Compartment order used by every vector and matrix in the library.
enum class Compartment : std::size_t { sp = 0, ep, insp, issp, rp, idp };

inline constexpr std::array<const char*, kNumCompartments> kCompartmentNames = {
    "sp", "ep", "insp", "issp", "rp", "idp"};

/// Population of each compartment (persons, real-valued).
struct StateVector {
    double sp = 0.0;    ///< susceptible
    double ep = 0.0;    ///< exposed, not yet infectious
    double insp = 0.0;  ///< infected, normal symptoms
    double issp = 0.0;  ///< infected, severe symptoms
    double rp = 0.0;    ///< recovered
    double idp = 0.0;   ///< deceased from infection

    Vector6 to_vector() const { return (Vector6() << sp, ep, insp, issp, rp, idp).finished(); }

    static StateVector from_vector(const Vector6& v) {
        return StateVector{v[0], v[1], v[2], v[3], v[4], v[5]};
    }

    double total() const { return sp + ep + insp + issp + rp + idp; }
    double active() const { return insp + issp; }

    bool operator==(const StateVector&) const = default;
};

/// Time derivative of a StateVector (persons/day).
struct StateDerivative {
    Vector6 values = Vector6::Zero();

    double operator[](Compartment c) const { return values[static_cast<std::size_t>(c)]; }
    double sum() const { return values.sum(); }
};

struct ModelParams {
    double beta_insp = 0.0;  ///< transmission ratio of normally infected (1/day)
    double beta_issp = 0.0;  ///< transmission ratio of severely infected (1/day)
    double aincp = 5.1;      ///< average incubation period (days)
    double aip = 14.0;       ///< average infectious period (days)
    double mu_insp = 0.0;    ///< fatality ratio, normal branch (1/day)
    double mu_issp = 0.0;    ///< fatality ratio, severe branch (1/day)
    double mu_tp = 0.0;      ///< physiological death ratio (1/day)
    double ss = 0.0;         ///< fraction of infections that are severe
    double tp = 1.0;         ///< total population (persons)

    bool operator==(const ModelParams&) const = default;
};

/// Transition rates R1..R10 (persons/day); `values[k]` holds R(k+1).
struct RateVector {
    std::array<double, kNumTransitions> values{};

    /// 1-based access matching the path numbering R1..R10.
    double path(std::size_t id) const { return values.at(id - 1); }

    Eigen::Matrix<double, 10, 1> to_vector() const {
        return Eigen::Map<const Eigen::Matrix<double, 10, 1>>(values.data());
    }
};

inline std::string transition_name(std::size_t index) { return "R" + std::to_string(index + 1); }

inline void validate(const ModelParams& p) {
    const std::array<double, 9> all = {p.beta_insp, p.beta_issp, p.aincp, p.aip, p.mu_insp,
                                       p.mu_issp,   p.mu_tp,     p.ss,    p.tp};
    for (double v : all) {
        if (!std::isfinite(v)) throw std::invalid_argument("model parameters must be finite");
        if (v < 0.0) throw std::invalid_argument("model parameters must be non-negative");
    }
    if (p.ss > 1.0) throw std::invalid_argument("ss must lie in [0, 1]");
    if (p.aincp <= 0.0) throw std::invalid_argument("aincp must be positive");
    if (p.aip <= 0.0) throw std::invalid_argument("aip must be positive");
    if (p.tp <= 0.0) throw std::invalid_argument("tp must be positive");
}

inline void validate(const StateVector& s) {
    if (!s.to_vector().allFinite()) throw std::invalid_argument("state must be finite");
}

/// Column k is the direction transition R(k+1) moves the state in.
inline StoichiometricMatrix stoichiometry(double ss) {
    StoichiometricMatrix s = StoichiometricMatrix::Zero();
    // R1, R2: infection SP -> EP
    s(0, 0) = -1.0; s(1, 0) = 1.0;
    s(0, 1) = -1.0; s(1, 1) = 1.0;
    // R3: physiological death of SP
    s(0, 2) = -1.0;
    // R4: EP -> INSP / ISSP split by ss
    s(1, 3) = -1.0; s(2, 3) = 1.0 - ss; s(3, 3) = ss;
    // R5: physiological death of EP
    s(1, 4) = -1.0;
    // R6, R7: recovery
    s(2, 5) = -1.0; s(4, 5) = 1.0;
    s(3, 6) = -1.0; s(4, 6) = 1.0;
    // R8, R9: infection deaths
    s(2, 7) = -1.0; s(5, 7) = 1.0;
    s(3, 8) = -1.0; s(5, 8) = 1.0;
    // R10: physiological death of RP
    s(4, 9) = -1.0;
    return s;
}

/// Rates R1..R10 for any floating-point scalar; `y` is in compartment order.
template <class T>
std::array<T, kNumTransitions> rates_of(const std::array<T, kNumCompartments>& y, const ModelParams& p) {
    const T beta_n = T(p.beta_insp) / T(p.tp);
    const T beta_s = T(p.beta_issp) / T(p.tp);
    const T& sp = y[0];
    const T& ep = y[1];
    const T& insp = y[2];
    const T& issp = y[3];
    const T& rp = y[4];
    return {beta_n * insp * sp,
            beta_s * issp * sp,
            T(p.mu_tp) * sp,
            ep / T(p.aincp),
            T(p.mu_tp) * ep,
            insp / T(p.aip),
            issp / T(p.aip),
            T(p.mu_insp) * insp,
            T(p.mu_issp) * issp,
            T(p.mu_tp) * rp};
}

/// S * R evaluated in scalar type T.
template <class T>
std::array<T, kNumCompartments> vector_field_of(const std::array<T, kNumCompartments>& y, const ModelParams& p) {
    const auto r = rates_of(y, p);
    const StoichiometricMatrix s = stoichiometry(p.ss);
    std::array<T, kNumCompartments> g{};
    for (std::size_t i = 0; i < kNumCompartments; ++i)
        for (std::size_t k = 0; k < kNumTransitions; ++k)
            if (s(i, k) != 0.0) g[i] += T(s(i, k)) * r[k];
    return g;
}

inline RateVector compute_rates(const StateVector& y, const ModelParams& p) {
    validate(y);
    validate(p);
    return RateVector{rates_of<double>({y.sp, y.ep, y.insp, y.issp, y.rp, y.idp}, p)};
}

inline StateDerivative vector_field(const StateVector& y, const ModelParams& p) {
    const RateVector r = compute_rates(y, p);
    return StateDerivative{stoichiometry(p.ss) * r.to_vector()};
}

/// Gradient of every rate with respect to the state: row k is dR(k+1)/dy.
inline Eigen::Matrix<double, 10, 6> rate_gradients(const StateVector& y, const ModelParams& p) {
    validate(y);
    validate(p);
    const double beta_n = p.beta_insp / p.tp;
    const double beta_s = p.beta_issp / p.tp;
    Eigen::Matrix<double, 10, 6> g = Eigen::Matrix<double, 10, 6>::Zero();
    g(0, 0) = beta_n * y.insp; g(0, 2) = beta_n * y.sp;
    g(1, 0) = beta_s * y.issp; g(1, 3) = beta_s * y.sp;
    g(2, 0) = p.mu_tp;
    g(3, 1) = 1.0 / p.aincp;
    g(4, 1) = p.mu_tp;
    g(5, 2) = 1.0 / p.aip;
    g(6, 3) = 1.0 / p.aip;
    g(7, 2) = p.mu_insp;
    g(8, 3) = p.mu_issp;
    g(9, 4) = p.mu_tp;
    return g;
}

/// The per-transition Jacobian terms grad(S_k R^k) = S_k (dR^k/dy)^T; they sum to the Jacobian.
using TransitionGradients = std::array<Matrix6, kNumTransitions>;

inline TransitionGradients transition_gradients(const StateVector& y, const ModelParams& p) {
    const auto g = rate_gradients(y, p);
    const auto s = stoichiometry(p.ss);
    TransitionGradients out;
    for (std::size_t k = 0; k < kNumTransitions; ++k) out[k] = s.col(k) * g.row(k);
    return out;
}

/// Analytic Jacobian of the vector field (1/day), written out entry by entry.
inline Matrix6 jacobian(const StateVector& y, const ModelParams& p) {
    validate(y);
    validate(p);
    const double bn = p.beta_insp / p.tp;
    const double bs = p.beta_issp / p.tp;
    const double sigma = 1.0 / p.aincp;
    const double gamma = 1.0 / p.aip;
    const double force = bn * y.insp + bs * y.issp;

    Matrix6 j = Matrix6::Zero();
    // d(SP)/dt = -R1 - R2 - R3
    j(0, 0) = -force - p.mu_tp;
    j(0, 2) = -bn * y.sp;
    j(0, 3) = -bs * y.sp;
    // d(EP)/dt = R1 + R2 - R4 - R5
    j(1, 0) = force;
    j(1, 1) = -sigma - p.mu_tp;
    j(1, 2) = bn * y.sp;
    j(1, 3) = bs * y.sp;
    // d(INSP)/dt = (1-ss) R4 - R6 - R8
    j(2, 1) = (1.0 - p.ss) * sigma;
    j(2, 2) = -gamma - p.mu_insp;
    // d(ISSP)/dt = ss R4 - R7 - R9
    j(3, 1) = p.ss * sigma;
    j(3, 3) = -gamma - p.mu_issp;
    // d(RP)/dt = R6 + R7 - R10
    j(4, 2) = gamma;
    j(4, 3) = gamma;
    j(4, 4) = -p.mu_tp;
    // d(IDP)/dt = R8 + R9
    j(5, 2) = p.mu_insp;
    j(5, 3) = p.mu_issp;
    return j;
}

/// |sum(dy/dt) + mu_tp (SP + EP + RP)|; zero up to roundoff for a consistent derivative.
inline double equilibration_residual(const StateVector& y, const StateDerivative& dydt,
                                     const ModelParams& p) {
    validate(y);
    validate(p);
    if (!dydt.values.allFinite()) throw std::invalid_argument("derivative must be finite");
    return std::abs(dydt.sum() + p.mu_tp * (y.sp + y.ep + y.rp));
}

}  // namespace seinsrd
