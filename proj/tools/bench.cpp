// Compares the OpenMP trial loop against the serial reference path and
// verifies the two produce identical results.

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <cstring>

#include "dexperts/harness.hpp"

using namespace dexperts;

namespace {

double seconds_since(std::chrono::steady_clock::time_point start) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

bool identical(const ExperimentResult& a, const ExperimentResult& b) {
    if (a.mean_avg_regret != b.mean_avg_regret) return false;
    if (a.merged_ledger.total_words != b.merged_ledger.total_words) return false;
    for (std::size_t t = 0; t < a.trials.size(); ++t)
        if (a.trials[t].selections != b.trials[t].selections) return false;
    return true;
}

}  // namespace

int main(int argc, char** argv) {
    ExperimentConfig cfg;
    cfg.protocol = "dewa-s";
    cfg.n = 100;
    cfg.s = 50;
    cfg.T = 2000;
    cfg.b_e = 4;
    cfg.trials = 16;
    cfg.seed = 7;
    for (int a = 1; a + 1 < argc; a += 2) {
        if (!std::strcmp(argv[a], "--trials")) cfg.trials = std::atoi(argv[a + 1]);
        else if (!std::strcmp(argv[a], "--T")) cfg.T = std::atoll(argv[a + 1]);
        else if (!std::strcmp(argv[a], "--protocol")) cfg.protocol = argv[a + 1];
    }

    auto t0 = std::chrono::steady_clock::now();
    const auto serial = run_experiment(cfg, false);
    const double serial_s = seconds_since(t0);

    t0 = std::chrono::steady_clock::now();
    const auto parallel = run_experiment(cfg, true);
    const double parallel_s = seconds_since(t0);

    std::printf("protocol=%s T=%lld trials=%d\n", cfg.protocol.c_str(), cfg.T, cfg.trials);
    std::printf("serial:   %.3f s\n", serial_s);
    std::printf("parallel: %.3f s  (speedup %.2fx)\n", parallel_s, serial_s / parallel_s);
    if (!identical(serial, parallel)) {
        std::printf("MISMATCH: serial and parallel results differ\n");
        return 1;
    }
    std::printf("results identical\n");
    return 0;
}
