#pragma once

// Adaptive Dormand-Prince integration of the SEInsRD system, sampled on a
// daily grid through the solver's dense output.

#include <algorithm>
#include <array>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include <boost/numeric/odeint.hpp>

#include "seinsrd/date.hpp"
#include "seinsrd/errors.hpp"
#include "seinsrd/model.hpp"

namespace seinsrd {

struct Tolerances {
    double rel = 1e-8;
    double abs = 1e-3;  ///< persons

    /// rel 1e-8, abs 1e-10 * tp.
    static Tolerances defaults(double tp) { return Tolerances{1e-8, 1e-10 * tp}; }
};

/// Daily samples of one model run. `times[i] == i`; derivatives are exact at the stored states.
struct Trajectory {
    Date t0{};
    std::vector<double> times;
    std::vector<StateVector> states;
    std::vector<StateDerivative> derivatives;

    std::size_t size() const { return states.size(); }
    bool empty() const { return states.empty(); }
};

namespace detail {

using OdeState = std::array<double, kNumCompartments>;

inline StateVector to_state(const OdeState& x) { return StateVector{x[0], x[1], x[2], x[3], x[4], x[5]}; }

}  // namespace detail

/// Integrates from `init` over [0, horizon_days] and samples every whole day.
inline Trajectory integrate(const ModelParams& params, const StateVector& init, double horizon_days,
                            const Tolerances& tol, Date t0 = {}) {
    namespace odeint = boost::numeric::odeint;
    validate(params);
    validate(init);
    if (!(horizon_days >= 1.0) || !std::isfinite(horizon_days))
        throw std::invalid_argument("horizon_days must be at least 1 day");
    if (!(tol.rel > 0.0) || !(tol.abs > 0.0)) throw std::invalid_argument("tolerances must be positive");
    const Vector6 y0 = init.to_vector();
    if ((y0.array() < 0.0).any()) throw std::invalid_argument("initial state must be non-negative");
    if (init.total() > params.tp * (1.0 + 1e-12))
        throw std::invalid_argument("initial populations exceed tp");

    const StoichiometricMatrix stoich = stoichiometry(params.ss);
    double last_time = 0.0;
    auto system = [&](const detail::OdeState& x, detail::OdeState& dxdt, double t) {
        last_time = t;
        const RateVector r = compute_rates(detail::to_state(x), params);
        const Vector6 g = stoich * r.to_vector();
        if (!g.allFinite()) throw NumericalError("non-finite vector field at t = " + std::to_string(t), t);
        std::copy(g.data(), g.data() + kNumCompartments, dxdt.begin());
    };

    const auto last_day = static_cast<std::size_t>(std::floor(horizon_days));
    std::vector<double> grid(last_day + 1);
    for (std::size_t i = 0; i <= last_day; ++i) grid[i] = static_cast<double>(i);

    Trajectory traj;
    traj.t0 = t0;
    traj.times.reserve(grid.size());
    traj.states.reserve(grid.size());
    traj.derivatives.reserve(grid.size());

    auto observer = [&](const detail::OdeState& x, double t) {
        StateVector s = detail::to_state(x);
        Vector6 v = s.to_vector();
        if (!v.allFinite()) throw NumericalError("non-finite state at t = " + std::to_string(t), t);
        for (Eigen::Index i = 0; i < v.size(); ++i) {
            if (v[i] < -tol.abs)
                throw NumericalError("negative undershoot in " + std::string(kCompartmentNames[i]) +
                                         " at t = " + std::to_string(t),
                                     t);
            v[i] = std::max(v[i], 0.0);
        }
        s = StateVector::from_vector(v);
        traj.times.push_back(t);
        traj.states.push_back(s);
        traj.derivatives.push_back(vector_field(s, params));
    };

    detail::OdeState x;
    std::copy(y0.data(), y0.data() + kNumCompartments, x.begin());
    auto stepper = odeint::make_dense_output(tol.abs, tol.rel, odeint::runge_kutta_dopri5<detail::OdeState>());
    try {
        odeint::integrate_times(stepper, system, x, grid.begin(), grid.end(), 0.01, observer,
                                odeint::max_step_checker(200000));
    } catch (const odeint::odeint_error& e) {
        throw NumericalError("step-size underflow at t = " + std::to_string(last_time) + ": " + e.what(),
                             last_time);
    }
    return traj;
}

inline Trajectory integrate(const ModelParams& params, const StateVector& init, double horizon_days) {
    return integrate(params, init, horizon_days, Tolerances::defaults(params.tp));
}

/// INSP + ISSP per day.
inline std::vector<double> active_cases(const Trajectory& traj) {
    std::vector<double> out;
    out.reserve(traj.size());
    for (const auto& s : traj.states) out.push_back(s.active());
    return out;
}

}  // namespace seinsrd
