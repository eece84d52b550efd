// Compares the OpenMP kernels against the serial reference implementation on
// the three heaviest work loops: Brownian flux estimation, stationary
// sampling, and the density bootstrap. The outputs must match bit-for-bit;
// the table reports wall times and speedup.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <numbers>

#include "stabilyze/measure.hpp"
#include "stabilyze/parallel.hpp"
#include "stabilyze/rng.hpp"
#include "stabilyze/verifier.hpp"

using namespace stabilyze;

namespace {

double now() {
    return std::chrono::duration<double>(
               std::chrono::steady_clock::now().time_since_epoch())
        .count();
}

void row(const char* name, double serial_s, double parallel_s, bool identical) {
    std::printf("%-22s %10.3fs %10.3fs %8.2fx   %s\n", name, serial_s, parallel_s,
                serial_s / parallel_s, identical ? "identical" : "MISMATCH");
}

}  // namespace

int main() {
    std::printf("threads: %d\n", thread_budget());
    std::printf("%-22s %11s %11s %9s\n", "kernel", "serial", "parallel", "speedup");

    {
        const PiecewisePhi absval{0.0, [](double x) { return std::abs(x); },
                                  [](double) { return 0.0; }, 2.0};
        double t0 = now();
        const auto ser = check_dynkin(absval, 0.0, 1.0, 1e-3, 20000, 42, 1e6, true);
        double t1 = now();
        const auto par = check_dynkin(absval, 0.0, 1.0, 1e-3, 20000, 42, 1e6, false);
        double t2 = now();
        row("dynkin flux", t1 - t0, t2 - t1,
            ser.flux == par.flux && ser.ci_half == par.ci_half);
    }

    {
        DynamicsModel model;  // n = 1, dz = z² dt + dB
        SimConfig cfg;
        cfg.dt_max = 2e-3;
        cfg.T = 500;
        cfg.seed = 7;
        cfg.path_count = 16;
        double t0 = now();
        const auto ser = stationary_samples(model, {1.0, 0.5}, cfg, 10.0, 0.1, true);
        double t1 = now();
        const auto par = stationary_samples(model, {1.0, 0.5}, cfg, 10.0, 0.1, false);
        double t2 = now();
        row("stationary sampling", t1 - t0, t2 - t1, ser.z == par.z);
    }

    {
        using std::numbers::pi;
        SampleSet set;
        set.z.resize(500000);
        for (size_t i = 0; i < set.z.size(); ++i) {
            const double u = uniform01(13, 0, i), v = uniform01(13, 1, i);
            set.z[i] = std::polar(std::sqrt(25.0 + 75.0 * u), -pi + 2 * pi * v);
        }
        double t0 = now();
        const auto ser = density_annulus(set, 1, 5, 10, 8, 16, 21, 200, true);
        double t1 = now();
        const auto par = density_annulus(set, 1, 5, 10, 8, 16, 21, 200, false);
        double t2 = now();
        row("density bootstrap", t1 - t0, t2 - t1,
            ser.to_json().dump() == par.to_json().dump());
    }
    return 0;
}
