// Simulates a seeded outbreak, then prints its timescale events and the
// transitions driving the fastest explosive mode.

#include <cstdio>

#include "seinsrd/analyzer.hpp"

int main() {
    using namespace seinsrd;

    ModelParams p;
    p.beta_insp = 0.4;
    p.beta_issp = 0.6;
    p.mu_insp = 0.001;
    p.mu_issp = 0.01;
    p.mu_tp = 3.5e-5;
    p.ss = 0.1;
    p.tp = 1e7;

    const StateVector init{p.tp - 1200.0, 1000.0, 180.0, 20.0, 0.0, 0.0};
    const Trajectory t = integrate(p, init, 200.0, Tolerances::defaults(p.tp));
    const OutbreakAnalysis a = analyze_outbreak(t, p);
    const OutbreakEvents& ev = a.events;

    auto show = [](const char* label, const std::optional<std::size_t>& d) {
        if (d) std::printf("%-28s day %zu\n", label, *d);
        else std::printf("%-28s none\n", label);
    };
    show("coalescence", ev.coalescence_day);
    show("explosive modes disappear", ev.disappearance_day);
    show("active-case inflection", ev.inflection_day_numeric);
    if (ev.tau_explosive_start && ev.tau_explosive_end)
        std::printf("explosive tau                %.2f d -> %.2f d\n", *ev.tau_explosive_start, *ev.tau_explosive_end);

    for (const PathRanking& r : ev.path_rankings) {
        std::printf("\nday %zu, tau %.2f d\n", r.day, r.tau_days);
        for (std::size_t i = 0; i < 4 && i < r.entries.size(); ++i)
            std::printf("  %-4s %+7.2f%%\n", transition_name(r.entries[i].transition).c_str(), r.entries[i].percent);
    }
    return 0;
}
