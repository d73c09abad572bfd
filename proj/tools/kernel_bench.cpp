// Wall-clock comparison of the OpenMP batch kernels against the serial host
// references, with a bit-equality verdict.  This measures real host time on
// this machine, unlike the simulator's modeled device cycles.

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <cstdio>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "pimhe/bfv.hpp"
#include "pimhe/pimsim.hpp"
#include "pimhe/prng.hpp"

using namespace pimhe;

namespace {

double ms_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
}

bool same_ciphertext(const Ciphertext& a, const Ciphertext& b) {
    if (a.comps.size() != b.comps.size() || a.mul_count != b.mul_count) return false;
    for (std::size_t i = 0; i < a.comps.size(); ++i)
        if (!(a.comps[i] == b.comps[i])) return false;
    return true;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"OpenMP kernel vs serial reference wall-clock comparison"};
    std::string mode = "add";
    int security = 27;
    std::uint64_t items = 512;
    std::uint64_t seed = 1;
    int repeats = 3;
    app.add_option("--mode", mode, "add | mul")->check(CLI::IsMember({"add", "mul"}));
    app.add_option("--security", security)->check(CLI::IsMember({27, 54, 109}));
    app.add_option("--items", items, "batch size");
    app.add_option("--seed", seed);
    app.add_option("--repeats", repeats, "timing repetitions (best of)");
    CLI11_PARSE(app, argc, argv);

    const bool is_mul = mode == "mul";
    const HeParams params = make_params(security);
    const PimConfig cfg;
    const KeyPair keys = keygen(params, seed);
    Prng rng(seed ^ 0x6B65726E);

    std::printf("mode=%s security=%d n=%d items=%llu\n", mode.c_str(), security, params.ring->n,
                static_cast<unsigned long long>(items));
    const std::size_t pool = static_cast<std::size_t>(std::min<std::uint64_t>(items, 64));
    std::vector<Ciphertext> ca, cb;
    for (std::size_t i = 0; i < pool; ++i) {
        ca.push_back(encrypt(params, keys.pk, encode_scalar(params, rng.below(params.t)), seed + 2 * i));
        cb.push_back(encrypt(params, keys.pk, encode_scalar(params, rng.below(params.t)), seed + 2 * i + 1));
    }
    std::vector<Ciphertext> lhs, rhs;
    for (std::uint64_t i = 0; i < items; ++i) {
        lhs.push_back(ca[i % pool]);
        rhs.push_back(cb[i % pool]);
    }

    double kernel_ms = 1e300, serial_ms = 1e300;
    std::vector<Ciphertext> kernel_out, serial_out;
    for (int r = 0; r < repeats; ++r) {
        auto t0 = std::chrono::steady_clock::now();
        auto [out, report] = is_mul ? run_vector_mul_kernel(params, lhs, rhs, cfg)
                                    : run_vector_add_kernel(params, lhs, rhs, cfg);
        kernel_ms = std::min(kernel_ms, ms_since(t0));
        kernel_out = std::move(out);

        t0 = std::chrono::steady_clock::now();
        serial_out = is_mul ? reference_vector_mul(params, lhs, rhs)
                            : reference_vector_add(params, lhs, rhs);
        serial_ms = std::min(serial_ms, ms_since(t0));
    }

    bool equal = kernel_out.size() == serial_out.size();
    for (std::size_t i = 0; equal && i < kernel_out.size(); ++i)
        equal = same_ciphertext(kernel_out[i], serial_out[i]);

    std::printf("parallel kernel: %10.3f ms\n", kernel_ms);
    std::printf("serial reference: %9.3f ms\n", serial_ms);
    std::printf("speedup: %.2fx\n", kernel_ms > 0 ? serial_ms / kernel_ms : 0.0);
    std::printf("results identical: %s\n", equal ? "yes" : "NO");
    return equal ? 0 : 1;
}
